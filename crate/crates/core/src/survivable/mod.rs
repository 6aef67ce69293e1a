//! k-survivable capacitated rooted Steiner networks.
//!
//! Three exact formulations share one master (binary `y` per arc, optional
//! binary `p` per initial arc) and differ in what the lazy-constraint hook
//! adds at an integral incumbent:
//!
//! * cut-set: the violated cut row after the worst `k` deletions,
//! * flow: a new failure scenario with its own flow columns,
//! * bilevel: the cut read off an extreme point of the attacker's problem.

mod bilevel;
mod cutset;
mod flow;
mod separation;
mod trace;
mod valid_inequalities;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{self, ArcId, AugmentedInstance, Instance, OracleError};
use crate::milp::{
    self, Candidate, Extension, LazyConstraints, MilpError, MilpModel, Row, Sense, SolveConfig, SolveStatus, VarId,
    Variable,
};

pub use bilevel::{enhance_cut, solve_bilevel, solve_lower_level, ExtremePointCut, LowerLevel};
pub use cutset::solve_cutset;
pub use flow::{solve_crsn, solve_flow};
pub use separation::{separation_mip_cut, SeparationCut};
pub use trace::{write_trace, TraceRecord};
pub use valid_inequalities::valid_inequalities;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurvivableError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("no design survives the failure budget")]
    Infeasible,
    #[error("solve budget exhausted without a feasible design")]
    BudgetExceeded,
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// A design problem: the augmented instance, `k` failures and `k_prot`
/// protectable arcs.
#[derive(Debug, Clone)]
pub struct SurvivableProblem {
    pub aug: AugmentedInstance,
    pub k: usize,
    pub k_prot: usize,
}

impl SurvivableProblem {
    pub fn new(inst: &Instance, k: usize, k_prot: usize) -> Result<Self, SurvivableError> {
        let n_arcs = inst.arcs().len();
        if k >= 1 && k + 1 > n_arcs {
            return Err(SurvivableError::InvalidProblem(format!(
                "k = {k} needs at least k + 1 arcs, instance has {n_arcs}"
            )));
        }
        if inst.terminals().is_empty() {
            return Err(SurvivableError::InvalidProblem("no terminals".into()));
        }
        Ok(SurvivableProblem {
            aug: graph::augment_with_sink(inst),
            k,
            k_prot,
        })
    }

    pub fn n_terminals(&self) -> usize {
        self.aug.n_terminals()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparationMethod {
    Enumerate,
    Mip,
    Auto,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub use_vis: bool,
    /// Cut-set only: constant worst-case loss `kU` on uniform-capacity instances.
    pub uniform_capacity: bool,
    pub separation: SeparationMethod,
    /// Bilevel only: lift the incumbent before extracting the cut.
    pub use_enhancement: bool,
    /// Re-solve the master from scratch after each generation round instead of
    /// adding rows inside the branch-and-bound.
    pub full_resolve: bool,
    pub milp: SolveConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            use_vis: false,
            uniform_capacity: false,
            separation: SeparationMethod::Auto,
            use_enhancement: false,
            full_resolve: false,
            milp: SolveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignStatus {
    Optimal,
    /// Feasible but not proven optimal.
    BudgetExceeded,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Rows, scenarios or cuts generated.
    pub generated: usize,
    pub node_count: usize,
    pub lp_count: usize,
    pub trace: Vec<TraceRecord>,
}

/// Selected and protected arcs of a survivable network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDesign {
    /// Selected arc ids, initial and fictive, sorted.
    pub selected: Vec<ArcId>,
    /// Protected initial arcs, sorted.
    pub protected: Vec<ArcId>,
    pub cost: f64,
    /// Passed the exhaustive failure oracle.
    pub certified: bool,
    pub status: DesignStatus,
    pub stats: SolveStats,
}

impl NetworkDesign {
    pub fn selected_mask(&self, aug: &AugmentedInstance) -> Vec<bool> {
        aug.mask(&self.selected)
    }

    pub fn protected_mask(&self, aug: &AugmentedInstance) -> Vec<bool> {
        aug.mask(&self.protected)
    }
}

/// The shared master problem.
#[derive(Debug, Clone)]
pub(crate) struct Master {
    pub model: MilpModel,
    /// One per arc of the augmented instance; fictive ones fixed to 1.
    pub y: Vec<VarId>,
    /// One per initial arc when protection is allowed.
    pub p: Option<Vec<VarId>>,
}

impl Master {
    pub fn build(prob: &SurvivableProblem, use_vis: bool) -> Master {
        let aug = &prob.aug;
        let mut model = MilpModel::new();
        let y: Vec<VarId> = aug
            .arcs()
            .iter()
            .enumerate()
            .map(|(a, _)| {
                let mut v = Variable::binary(format!("y{a}"));
                if aug.is_fictive(a) {
                    v.lb = 1.0;
                }
                model.add_var(v)
            })
            .collect();
        let p = (prob.k_prot > 0).then(|| {
            let p: Vec<VarId> = aug
                .initial_arcs()
                .map(|a| model.add_var(Variable::binary(format!("p{a}"))))
                .collect();
            for a in aug.initial_arcs() {
                model.add_row(Row::new(format!("prot_sel{a}"), vec![(p[a], 1.0), (y[a], -1.0)], Sense::Le, 0.0));
            }
            model.add_row(Row::new(
                "prot_budget",
                p.iter().map(|&v| (v, 1.0)).collect(),
                Sense::Le,
                prob.k_prot as f64,
            ));
            p
        });
        model.set_objective(aug.initial_arcs().map(|a| (y[a], aug.arcs()[a].cost)).collect());
        let mut master = Master { model, y, p };
        if use_vis {
            for row in valid_inequalities::rows_for(prob, &master.y) {
                master.model.add_row(row);
            }
        }
        master
    }

    pub fn decode(&self, values: &[f64]) -> (Vec<bool>, Vec<bool>) {
        let sel: Vec<bool> = self.y.iter().map(|v| values[v.0] > 0.5).collect();
        let mut prot = vec![false; sel.len()];
        if let Some(p) = &self.p {
            for (a, v) in p.iter().enumerate() {
                prot[a] = values[v.0] > 0.5;
            }
        }
        (sel, prot)
    }

    /// `Σ_{S\C} u y + Σ_C u p ≥ |T|` (the `p` part only with protection),
    /// with coefficients clipped to the right-hand side.
    pub fn cut_row(&self, aug: &AugmentedInstance, name: String, cutset: &[ArcId], deleted: &[ArcId], rhs: f64) -> Row {
        let mut coeffs = Vec::new();
        for &a in cutset {
            let u = aug.arcs()[a].capacity as f64;
            if deleted.binary_search(&a).is_ok() {
                if let Some(p) = &self.p {
                    coeffs.push((p[a], u));
                }
            } else {
                coeffs.push((self.y[a], u));
            }
        }
        clip_covering(Row::new(name, coeffs, Sense::Ge, rhs))
    }
}

/// In `Σ a_j z_j ≥ b` over binaries with `a ≥ 0`, any `a_j > b` can be
/// lowered to `b` without losing an integer point.
pub(crate) fn clip_covering(mut row: Row) -> Row {
    debug_assert_eq!(row.sense, Sense::Ge);
    let cap = row.rhs.max(0.0);
    for (_, a) in &mut row.coeffs {
        *a = a.min(cap);
    }
    row
}

/// What a formulation does at an integral incumbent.
pub(crate) trait Generator {
    fn formulation(&self) -> &'static str;

    /// Returns the separation value and the extension; an empty extension
    /// certifies the incumbent.
    fn separate(
        &mut self,
        prob: &SurvivableProblem,
        master: &Master,
        model: &MilpModel,
        sel: &[bool],
        prot: &[bool],
    ) -> Result<(u64, Extension), SurvivableError>;

    /// Strengthening at a fractional master point; empty by default.
    fn separate_fractional(
        &mut self,
        _prob: &SurvivableProblem,
        _master: &Master,
        _model: &MilpModel,
        _values: &[f64],
    ) -> Result<Extension, SurvivableError> {
        Ok(Extension::default())
    }
}

/// Fixed-point scale for max flows over fractional capacities.
const FRACTIONAL_SCALE: f64 = 1e6;

/// The worst `k`-deletion at a fractional `(ŷ, p̂)`, with capacities
/// `min(u, |T|)·ŷ` (a failed arc keeps `min(u, |T|)·p̂`). Returned only when
/// the flow left is clearly below |T|.
pub(crate) fn fractional_scenario(
    prob: &SurvivableProblem,
    master: &Master,
    values: &[f64],
) -> Option<(Vec<ArcId>, graph::CutCertificate)> {
    let aug = &prob.aug;
    let nt = prob.n_terminals();
    let scaled = |a: ArcId, v: f64| {
        let u = aug.arcs()[a].capacity.min(nt as u32) as f64;
        (u * v.clamp(0.0, 1.0) * FRACTIONAL_SCALE).round() as u64
    };
    let cap: Vec<u64> = (0..aug.arcs().len()).map(|a| scaled(a, values[master.y[a].0])).collect();
    let cap_failed: Vec<u64> = (0..aug.arcs().len())
        .map(|a| match &master.p {
            Some(p) if a < p.len() => scaled(a, values[p[a].0]),
            _ => 0,
        })
        .collect();
    let cand: Vec<ArcId> = aug.initial_arcs().filter(|&a| cap[a] > cap_failed[a]).collect();
    if graph::binomial(cand.len(), prob.k.min(cand.len())) > graph::DEFAULT_ENUMERATION_BUDGET {
        return None;
    }
    let (failed, value, cut) = graph::weakest_scenario(aug, &cap, &cap_failed, &cand, prob.k);
    let short = nt as f64 * FRACTIONAL_SCALE - value as f64;
    (short > 1e-3 * FRACTIONAL_SCALE).then_some((failed, cut))
}

struct Hook<'a, G: Generator> {
    prob: &'a SurvivableProblem,
    master: &'a Master,
    gen: &'a mut G,
    trace: Vec<TraceRecord>,
    generated: usize,
    error: Option<SurvivableError>,
}

impl<G: Generator> LazyConstraints for Hook<'_, G> {
    fn separate(&mut self, model: &MilpModel, cand: Candidate<'_>) -> Result<Extension, MilpError> {
        let (sel, prot) = self.master.decode(cand.values);
        match self.gen.separate(self.prob, self.master, model, &sel, &prot) {
            Ok((value, ext)) => {
                let added = if ext.is_empty() { 0 } else { 1 };
                self.generated += added;
                self.trace.push(TraceRecord {
                    formulation: self.gen.formulation().to_string(),
                    iteration: self.trace.len(),
                    incumbent_cost: cand.objective,
                    separation_value: value,
                    rows_added: ext.rows.len(),
                    columns_added: ext.vars.len(),
                });
                Ok(ext)
            }
            Err(e) => {
                let msg = e.to_string();
                self.error = Some(e);
                Err(MilpError::Callback(msg))
            }
        }
    }

    fn separate_fractional(&mut self, model: &MilpModel, point: Candidate<'_>) -> Result<Extension, MilpError> {
        self.gen
            .separate_fractional(self.prob, self.master, model, point.values)
            .map_err(|e| {
                let msg = e.to_string();
                self.error = Some(e);
                MilpError::Callback(msg)
            })
    }
}

/// Runs the master with `gen` as lazy generator and certifies the result.
pub(crate) fn run_generation<G: Generator>(
    prob: &SurvivableProblem,
    master: Master,
    gen: &mut G,
    options: &SolveOptions,
) -> Result<NetworkDesign, SurvivableError> {
    if prob.k_prot == 0 {
        let all = prob.aug.full_selection();
        let none = vec![false; all.len()];
        if !graph::check_feasibility(&prob.aug, &all, &none, prob.k as i64)?.feasible {
            return Err(SurvivableError::Infeasible);
        }
    }
    let mut hook = Hook {
        prob,
        master: &master,
        gen,
        trace: Vec::new(),
        generated: 0,
        error: None,
    };
    let mut node_count = 0;
    let mut lp_count = 0;
    let solution = if options.full_resolve {
        let mut model = master.model.clone();
        loop {
            let sol = milp::solve(&model, &options.milp)?;
            node_count += sol.node_count;
            lp_count += sol.lp_count;
            if sol.status != SolveStatus::Optimal {
                break sol;
            }
            let cand = Candidate {
                values: &sol.values,
                objective: sol.objective_value,
            };
            let ext = hook.separate(&model, cand).map_err(|e| hook.error.take().unwrap_or(e.into()))?;
            if ext.is_empty() {
                break sol;
            }
            model.vars.extend(ext.vars);
            model.rows.extend(ext.rows);
        }
    } else {
        let res = milp::solve_with_callback(&master.model, &options.milp, Some(&mut hook));
        let sol = match res {
            Ok(sol) => sol,
            Err(e) => return Err(hook.error.take().unwrap_or(e.into())),
        };
        node_count = sol.node_count;
        lp_count = sol.lp_count;
        sol
    };
    let status = match solution.status {
        SolveStatus::Optimal => DesignStatus::Optimal,
        SolveStatus::Infeasible => return Err(SurvivableError::Infeasible),
        SolveStatus::BudgetExceeded if solution.has_incumbent() => DesignStatus::BudgetExceeded,
        SolveStatus::BudgetExceeded => return Err(SurvivableError::BudgetExceeded),
        SolveStatus::Unbounded => return Err(SurvivableError::Internal("unbounded master".into())),
    };
    let (sel, prot) = master.decode(&solution.values);
    finish(prob, &sel, &prot, status, SolveStats {
        generated: hook.generated,
        node_count,
        lp_count,
        trace: hook.trace,
    })
}

pub(crate) fn finish(
    prob: &SurvivableProblem,
    sel: &[bool],
    prot: &[bool],
    status: DesignStatus,
    stats: SolveStats,
) -> Result<NetworkDesign, SurvivableError> {
    let aug = &prob.aug;
    let selected: Vec<ArcId> = (0..sel.len()).filter(|&a| sel[a]).collect();
    let protected: Vec<ArcId> = (0..prot.len()).filter(|&a| prot[a] && sel[a]).collect();
    let check = graph::check_feasibility(aug, sel, prot, prob.k as i64)?;
    if !check.feasible {
        return Err(SurvivableError::Internal(format!(
            "accepted design fails scenario {:?} (residual {})",
            check.witness, check.residual
        )));
    }
    let cost = aug.initial_arcs().filter(|&a| sel[a]).map(|a| aug.arcs()[a].cost).sum();
    Ok(NetworkDesign {
        selected,
        protected,
        cost,
        certified: true,
        status,
        stats,
    })
}

/// Worst-case search used by the cut-set and flow generators.
pub(crate) fn vital(
    prob: &SurvivableProblem,
    sel: &[bool],
    prot: &[bool],
    method: SeparationMethod,
) -> Result<graph::VitalArcs, SurvivableError> {
    let budget = match method {
        SeparationMethod::Enumerate => u64::MAX,
        SeparationMethod::Mip => 0,
        SeparationMethod::Auto => graph::DEFAULT_ENUMERATION_BUDGET,
    };
    Ok(graph::most_vital_arcs_with_budget(&prob.aug, sel, prot, prob.k as i64, budget)?)
}
