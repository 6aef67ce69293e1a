use crate::graph::{ArcId, Scenario};
use crate::milp::{Extension, MilpModel, Row, Sense, VarId, Variable};

use super::{finish, run_generation, vital, DesignStatus, Generator, Master, NetworkDesign, SeparationMethod,
            SolveOptions, SolveStats, SurvivableError, SurvivableProblem};
use crate::milp::{self, SolveStatus};

/// Columns and rows of one scenario: a flow of value |T| avoiding the failed
/// arcs (or using them only where protected). New columns are numbered from
/// `first_var`.
fn scenario_block(
    prob: &SurvivableProblem,
    master: &Master,
    first_var: usize,
    failed: &[ArcId],
    tag: usize,
) -> Extension {
    let aug = &prob.aug;
    // No arc of an acyclic flow of value |T| carries more than |T|.
    let nt = prob.n_terminals() as u32;
    let mut vars = Vec::new();
    let x: Vec<VarId> = aug
        .arcs()
        .iter()
        .enumerate()
        .map(|(a, arc)| {
            let dead = failed.binary_search(&a).is_ok() && master.p.is_none();
            let ub = if dead { 0.0 } else { arc.capacity.min(nt) as f64 };
            vars.push(Variable::continuous(format!("x{tag}_{a}"), 0.0, ub));
            VarId(first_var + a)
        })
        .collect();
    let mut rows = Vec::new();
    for v in 0..aug.n_nodes() {
        if v == aug.root() || v == aug.sink() {
            continue;
        }
        let mut coeffs = Vec::new();
        for (a, arc) in aug.arcs().iter().enumerate() {
            if arc.head == v {
                coeffs.push((x[a], 1.0));
            } else if arc.tail == v {
                coeffs.push((x[a], -1.0));
            }
        }
        if !coeffs.is_empty() {
            rows.push(Row::new(format!("cons{tag}_{v}"), coeffs, Sense::Eq, 0.0));
        }
    }
    rows.push(Row::new(
        format!("demand{tag}"),
        aug.fictive_arcs().map(|a| (x[a], 1.0)).collect(),
        Sense::Eq,
        prob.n_terminals() as f64,
    ));
    for (a, arc) in aug.arcs().iter().enumerate() {
        let u = arc.capacity.min(nt) as f64;
        rows.push(Row::new(
            format!("cap{tag}_{a}"),
            vec![(x[a], 1.0), (master.y[a], -u)],
            Sense::Le,
            0.0,
        ));
        if let Some(p) = &master.p {
            if failed.binary_search(&a).is_ok() {
                rows.push(Row::new(
                    format!("prot{tag}_{a}"),
                    vec![(x[a], 1.0), (p[a], -u)],
                    Sense::Le,
                    0.0,
                ));
            }
        }
    }
    Extension { vars, rows }
}

struct FlowGen {
    method: SeparationMethod,
    scenarios: Vec<Scenario>,
}

impl Generator for FlowGen {
    fn formulation(&self) -> &'static str {
        "flow"
    }

    fn separate(
        &mut self,
        prob: &SurvivableProblem,
        master: &Master,
        model: &MilpModel,
        sel: &[bool],
        prot: &[bool],
    ) -> Result<(u64, Extension), SurvivableError> {
        let worst = vital(prob, sel, prot, self.method)?;
        if worst.residual >= prob.n_terminals() as u64 {
            return Ok((worst.residual, Extension::default()));
        }
        if self.scenarios.contains(&worst.scenario) {
            return Err(SurvivableError::Internal(format!(
                "scenario {:?} regenerated",
                worst.scenario.failed
            )));
        }
        let ext = scenario_block(prob, master, model.n_vars(), &worst.scenario.failed, self.scenarios.len());
        self.scenarios.push(worst.scenario);
        Ok((worst.residual, ext))
    }
}

pub fn solve_flow(prob: &SurvivableProblem, options: &SolveOptions) -> Result<NetworkDesign, SurvivableError> {
    let mut master = Master::build(prob, options.use_vis);
    let block = scenario_block(prob, &master, master.model.n_vars(), &[], 0);
    master.model.vars.extend(block.vars);
    master.model.rows.extend(block.rows);
    let mut gen = FlowGen {
        method: options.separation,
        scenarios: vec![Scenario::default()],
    };
    run_generation(prob, master, &mut gen, options)
}

/// The failure-free problem as a single flow model (no generation).
pub fn solve_crsn(prob: &SurvivableProblem, options: &SolveOptions) -> Result<NetworkDesign, SurvivableError> {
    let plain = SurvivableProblem {
        aug: prob.aug.clone(),
        k: 0,
        k_prot: 0,
    };
    let mut master = Master::build(&plain, options.use_vis);
    let block = scenario_block(&plain, &master, master.model.n_vars(), &[], 0);
    master.model.vars.extend(block.vars);
    master.model.rows.extend(block.rows);
    let sol = milp::solve(&master.model, &options.milp)?;
    let status = match sol.status {
        SolveStatus::Optimal => DesignStatus::Optimal,
        SolveStatus::Infeasible => return Err(SurvivableError::Infeasible),
        SolveStatus::BudgetExceeded if sol.has_incumbent() => DesignStatus::BudgetExceeded,
        SolveStatus::BudgetExceeded => return Err(SurvivableError::BudgetExceeded),
        SolveStatus::Unbounded => return Err(SurvivableError::Internal("unbounded master".into())),
    };
    let (sel, prot) = master.decode(&sol.values);
    finish(
        &plain,
        &sel,
        &prot,
        status,
        SolveStats {
            generated: 0,
            node_count: sol.node_count,
            lp_count: sol.lp_count,
            trace: Vec::new(),
        },
    )
}
