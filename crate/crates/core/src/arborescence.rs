//! Capacitated Steiner arborescences and their robustness against a single
//! arc failure.
//!
//! All seven models share the polyhedron built by [`build_t_polyhedron`]:
//! integer flows `x` counting the terminals routed through each arc, binary
//! selections `y`, conservation, in-degree at most one and `x <= u y`.

use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::{ArcId, Instance};
use crate::milp::{self, MilpError, MilpModel, Row, Sense, SolveConfig, SolveStatus, VarId, Variable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArborescenceError {
    #[error("instance has no terminals")]
    NoTerminals,
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("model is infeasible")]
    Infeasible,
    #[error("solve budget exhausted before optimality")]
    BudgetExceeded,
    #[error("arc {0} has capacity below |T|; root reattachment needs an uncapacitated instance")]
    Capacitated(ArcId),
    #[error("not an arborescence: {0}")]
    NotArborescence(String),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArborescenceObjective {
    Cost,
    WorstRobustness,
    BalancedRobustness,
}

/// An objective plus optional bounds on the other two quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArborescenceModelSpec {
    pub objective: ArborescenceObjective,
    pub bound_r: Option<u32>,
    pub bound_c: Option<f64>,
    pub bound_br: Option<u32>,
}

impl ArborescenceModelSpec {
    pub fn new(objective: ArborescenceObjective) -> Self {
        ArborescenceModelSpec {
            objective,
            bound_r: None,
            bound_c: None,
            bound_br: None,
        }
    }

    /// CStA.
    pub fn csta() -> Self {
        Self::new(ArborescenceObjective::Cost)
    }

    /// CStA_bounded-robust.
    pub fn csta_bounded_robust(r: u32) -> Self {
        Self::csta().with_bound_r(r)
    }

    /// RCStA.
    pub fn rcsta() -> Self {
        Self::new(ArborescenceObjective::WorstRobustness)
    }

    /// RCStA_bounded-cost.
    pub fn rcsta_bounded_cost(c: f64) -> Self {
        Self::rcsta().with_bound_c(c)
    }

    /// CStA_bounded-balanced_robust.
    pub fn csta_bounded_balanced_robust(br: u32) -> Self {
        Self::csta().with_bound_br(br)
    }

    /// BRCStA.
    pub fn brcsta() -> Self {
        Self::new(ArborescenceObjective::BalancedRobustness)
    }

    /// BRCStA_bounded-robust-cost.
    pub fn brcsta_bounded_robust_cost(r: u32, c: f64) -> Self {
        Self::brcsta().with_bound_r(r).with_bound_c(c)
    }

    pub fn with_bound_r(mut self, r: u32) -> Self {
        self.bound_r = Some(r);
        self
    }

    pub fn with_bound_c(mut self, c: f64) -> Self {
        self.bound_c = Some(c);
        self
    }

    pub fn with_bound_br(mut self, br: u32) -> Self {
        self.bound_br = Some(br);
        self
    }

    pub fn validate(&self) -> Result<(), ArborescenceError> {
        use ArborescenceObjective::*;
        let clash = match self.objective {
            Cost => self.bound_c.is_some(),
            WorstRobustness => self.bound_r.is_some(),
            BalancedRobustness => self.bound_br.is_some(),
        };
        if clash {
            return Err(ArborescenceError::InvalidSpec(format!(
                "{:?} objective cannot also be bounded",
                self.objective
            )));
        }
        if let Some(c) = self.bound_c {
            if !c.is_finite() || c < 0.0 {
                return Err(ArborescenceError::InvalidSpec(format!("bad cost bound {c}")));
            }
        }
        Ok(())
    }
}

/// The model over the polyhedron together with the handles of its variables.
#[derive(Debug, Clone)]
pub struct TPolyhedron {
    pub model: MilpModel,
    /// Indexed by arc id.
    pub x: Vec<VarId>,
    pub y: Vec<VarId>,
}

pub fn build_t_polyhedron(inst: &Instance) -> Result<TPolyhedron, ArborescenceError> {
    let nt = inst.terminals().len();
    if nt == 0 {
        return Err(ArborescenceError::NoTerminals);
    }
    let mut model = MilpModel::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (a, arc) in inst.arcs().iter().enumerate() {
        let cap = arc.capacity.min(nt as u32) as f64;
        x.push(model.add_var(Variable::integer(format!("x{a}"), 0.0, cap)));
        y.push(model.add_var(Variable::binary(format!("y{a}"))));
    }
    for v in 0..inst.n_nodes() {
        let mut coeffs: Vec<(VarId, f64)> = inst.out_arcs(v).map(|a| (x[a], 1.0)).collect();
        coeffs.extend(inst.in_arcs(v).map(|a| (x[a], -1.0)));
        let rhs = if v == inst.root() {
            nt as f64
        } else if inst.is_terminal(v) {
            -1.0
        } else {
            0.0
        };
        if coeffs.is_empty() && rhs == 0.0 {
            continue;
        }
        model.add_row(Row::new(format!("flow{v}"), coeffs, Sense::Eq, rhs));
        if v != inst.root() {
            let indeg: Vec<(VarId, f64)> = inst.in_arcs(v).map(|a| (y[a], 1.0)).collect();
            if indeg.len() > 1 {
                model.add_row(Row::new(format!("indeg{v}"), indeg, Sense::Le, 1.0));
            }
        }
    }
    for (a, arc) in inst.arcs().iter().enumerate() {
        // u is capped at |T|: no arc ever carries more.
        let cap = arc.capacity.min(nt as u32) as f64;
        model.add_row(Row::new(
            format!("cap{a}"),
            vec![(x[a], 1.0), (y[a], -cap)],
            Sense::Le,
            0.0,
        ));
    }
    Ok(TPolyhedron { model, x, y })
}

/// A selected arborescence with the number of terminals routed through each arc.
#[derive(Debug, Clone, PartialEq)]
pub struct Arborescence {
    /// Selected arc ids, sorted.
    pub arcs: Vec<ArcId>,
    /// Terminal count through each arc of the instance (0 when unselected).
    pub x: Vec<u32>,
    pub cost: f64,
    pub worst_robustness: u32,
    pub balanced_robustness: u32,
}

impl Arborescence {
    /// Builds the arborescence induced by `arcs`, computing `x` as subtree
    /// terminal counts.
    pub fn from_arcs(inst: &Instance, arcs: &[ArcId]) -> Result<Self, ArborescenceError> {
        let n = inst.n_nodes();
        let mut parent_arc: Vec<Option<ArcId>> = vec![None; n];
        let mut children: Vec<Vec<ArcId>> = vec![Vec::new(); n];
        let mut sorted = arcs.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &a in &sorted {
            let arc = inst
                .arcs()
                .get(a)
                .ok_or_else(|| ArborescenceError::NotArborescence(format!("unknown arc {a}")))?;
            if parent_arc[arc.head].replace(a).is_some() {
                return Err(ArborescenceError::NotArborescence(format!(
                    "node {} has in-degree > 1",
                    arc.head
                )));
            }
            children[arc.tail].push(a);
        }
        // BFS order from the root; anything not reached is a cycle or a detached piece.
        let mut order = vec![inst.root()];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            i += 1;
            for &a in &children[v] {
                order.push(inst.arcs()[a].head);
            }
        }
        if order.len() != sorted.len() + 1 {
            return Err(ArborescenceError::NotArborescence(
                "selected arcs are not all reachable from the root".into(),
            ));
        }
        let mut below = vec![0u32; n];
        for &v in order.iter().rev() {
            if inst.is_terminal(v) {
                below[v] += 1;
            }
            if let Some(a) = parent_arc[v] {
                let t = inst.arcs()[a].tail;
                below[t] += below[v];
            }
        }
        for &t in inst.terminals() {
            if !order.contains(&t) {
                return Err(ArborescenceError::NotArborescence(format!(
                    "terminal {t} is not reached"
                )));
            }
        }
        let mut x = vec![0u32; inst.arcs().len()];
        for &a in &sorted {
            x[a] = below[inst.arcs()[a].head];
            if x[a] > inst.arcs()[a].capacity {
                return Err(ArborescenceError::NotArborescence(format!(
                    "arc {a} carries {} terminals over capacity {}",
                    x[a],
                    inst.arcs()[a].capacity
                )));
            }
        }
        let cost = sorted.iter().map(|&a| inst.arcs()[a].cost).sum();
        let (worst_robustness, balanced_robustness) = robustness_of(inst, &sorted, &x);
        Ok(Arborescence {
            arcs: sorted,
            x,
            cost,
            worst_robustness,
            balanced_robustness,
        })
    }
}

fn robustness_of(inst: &Instance, arcs: &[ArcId], x: &[u32]) -> (u32, u32) {
    let mut node_max = vec![0u32; inst.n_nodes()];
    for &a in arcs {
        let t = inst.arcs()[a].tail;
        node_max[t] = node_max[t].max(x[a]);
    }
    (node_max[inst.root()], node_max.iter().sum())
}

pub fn solve_model(inst: &Instance, spec: &ArborescenceModelSpec) -> Result<Arborescence, ArborescenceError> {
    solve_model_with(inst, spec, &SolveConfig::default())
}

pub fn solve_model_with(
    inst: &Instance,
    spec: &ArborescenceModelSpec,
    config: &SolveConfig,
) -> Result<Arborescence, ArborescenceError> {
    spec.validate()?;
    let TPolyhedron { mut model, x, y } = build_t_polyhedron(inst)?;
    let nt = inst.terminals().len() as f64;
    let root = inst.root();

    // Both rows below hold for some optimum of every model: an arc with y = 1
    // and x = 0 can be dropped without changing any of the three quantities
    // except lowering the cost.
    for a in 0..inst.arcs().len() {
        model.add_row(Row::new(format!("used{a}"), vec![(x[a], 1.0), (y[a], -1.0)], Sense::Ge, 0.0));
    }
    for &t in inst.terminals() {
        let coeffs: Vec<(VarId, f64)> = inst.in_arcs(t).map(|a| (y[a], 1.0)).collect();
        model.add_row(Row::new(format!("reach{t}"), coeffs, Sense::Ge, 1.0));
    }

    let cost_terms: Vec<(VarId, f64)> = inst
        .arcs()
        .iter()
        .enumerate()
        .map(|(a, arc)| (y[a], arc.cost))
        .collect();

    let mut objective = Vec::new();
    match spec.objective {
        ArborescenceObjective::Cost => objective = cost_terms.clone(),
        ArborescenceObjective::WorstRobustness => {
            let z = model.add_var(Variable::integer("z", 0.0, nt));
            for a in inst.out_arcs(root) {
                model.add_row(Row::new(format!("worst{a}"), vec![(z, 1.0), (x[a], -1.0)], Sense::Ge, 0.0));
            }
            objective.push((z, 1.0));
        }
        ArborescenceObjective::BalancedRobustness => {}
    }
    if spec.objective == ArborescenceObjective::BalancedRobustness || spec.bound_br.is_some() {
        let mut sum = Vec::new();
        for v in 0..inst.n_nodes() {
            if inst.out_arcs(v).next().is_none() {
                continue;
            }
            let z = model.add_var(Variable::integer(format!("zb{v}"), 0.0, nt));
            for a in inst.out_arcs(v) {
                model.add_row(Row::new(format!("bal{a}"), vec![(z, 1.0), (x[a], -1.0)], Sense::Ge, 0.0));
            }
            sum.push((z, 1.0));
        }
        match spec.bound_br {
            Some(br) => model.add_row(Row::new("bound_br", sum, Sense::Le, br as f64)),
            None => objective = sum,
        }
    }
    if let Some(r) = spec.bound_r {
        for a in inst.out_arcs(root) {
            model.add_row(Row::new(format!("bound_r{a}"), vec![(x[a], 1.0)], Sense::Le, r as f64));
        }
    }
    if let Some(c) = spec.bound_c {
        model.add_row(Row::new("bound_c", cost_terms, Sense::Le, c + config.feas_tol));
    }
    model.set_objective(objective);

    let sol = milp::solve(&model, config)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(ArborescenceError::Infeasible),
        SolveStatus::BudgetExceeded => return Err(ArborescenceError::BudgetExceeded),
        SolveStatus::Unbounded => return Err(MilpError::Numerical("unbounded arborescence model".into()).into()),
    }
    // Keep positive-flow arcs hanging from the root; detached flow cycles and
    // idle arcs are dropped.
    let positive: Vec<ArcId> = (0..inst.arcs().len())
        .filter(|&a| sol.value(y[a]) > 0.5 && sol.value(x[a]) > 0.5)
        .collect();
    let mut out: Vec<Vec<ArcId>> = vec![Vec::new(); inst.n_nodes()];
    for &a in &positive {
        out[inst.arcs()[a].tail].push(a);
    }
    let mut keep = Vec::new();
    let mut queue = VecDeque::from([root]);
    let mut seen = vec![false; inst.n_nodes()];
    seen[root] = true;
    while let Some(v) = queue.pop_front() {
        for &a in &out[v] {
            let h = inst.arcs()[a].head;
            if !seen[h] {
                seen[h] = true;
                keep.push(a);
                queue.push_back(h);
            }
        }
    }
    let arb = Arborescence::from_arcs(inst, &keep)?;
    for &a in &arb.arcs {
        debug_assert_eq!(arb.x[a] as f64, sol.value(x[a]).round(), "flow of arc {a}");
    }
    Ok(arb)
}

/// Largest number of terminals cut off by deleting one arc of `arb`.
pub fn evaluate_worst_case(inst: &Instance, arb: &Arborescence) -> u32 {
    // Flow never increases away from the root, so the maximum sits on a root arc.
    for &a in &arb.arcs {
        let head = inst.arcs()[a].head;
        for &b in &arb.arcs {
            if inst.arcs()[b].tail == head {
                assert!(arb.x[a] >= arb.x[b], "flow increases along {a} -> {b}");
            }
        }
    }
    let max_any = arb.arcs.iter().map(|&a| arb.x[a]).max().unwrap_or(0);
    let max_root = arb
        .arcs
        .iter()
        .filter(|&&a| inst.arcs()[a].tail == inst.root())
        .map(|&a| arb.x[a])
        .max()
        .unwrap_or(0);
    assert_eq!(max_any, max_root, "worst arc is not a root arc");
    max_any
}

/// Reattaches every arborescence node adjacent to the root directly to it.
/// Only meaningful without capacity constraints.
pub fn normalize_root_attach(inst: &Instance, arb: &Arborescence) -> Result<Arborescence, ArborescenceError> {
    let nt = inst.terminals().len() as u32;
    if let Some(a) = inst.arcs().iter().position(|arc| arc.capacity < nt) {
        return Err(ArborescenceError::Capacitated(a));
    }
    let root = inst.root();
    let mut in_arc: Vec<Option<ArcId>> = vec![None; inst.n_nodes()];
    for &a in &arb.arcs {
        in_arc[inst.arcs()[a].head] = Some(a);
    }
    for v in 0..inst.n_nodes() {
        let Some(current) = in_arc[v] else { continue };
        if inst.arcs()[current].tail == root {
            continue;
        }
        if let Some(direct) = inst.out_arcs(root).find(|&a| inst.arcs()[a].head == v) {
            in_arc[v] = Some(direct);
        }
    }
    let arcs: Vec<ArcId> = in_arc.into_iter().flatten().collect();
    Arborescence::from_arcs(inst, &arcs)
}

/// The metric table for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub c_star: f64,
    pub r_star: u32,
    pub c_r_star: f64,
    pub delta_crob: f64,
    pub br_star: u32,
    pub r_br_star: u32,
    pub c_br_star: f64,
    pub delta_cbrob: f64,
    /// `(gap, R_gap)`: best worst-case robustness with cost ≤ (1+gap)·C*.
    pub r_gap: Vec<(f64, u32)>,
}

fn rel(c: f64, base: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        (c - base) / base
    }
}

pub fn robustness_report(inst: &Instance, rel_gaps: &[f64]) -> Result<RobustnessReport, ArborescenceError> {
    robustness_report_with(inst, rel_gaps, &SolveConfig::default())
}

pub fn robustness_report_with(
    inst: &Instance,
    rel_gaps: &[f64],
    config: &SolveConfig,
) -> Result<RobustnessReport, ArborescenceError> {
    type Spec = ArborescenceModelSpec;
    let c_star = solve_model_with(inst, &Spec::csta(), config)?.cost;
    let r_star = solve_model_with(inst, &Spec::rcsta(), config)?.worst_robustness;
    let c_r_star = solve_model_with(inst, &Spec::csta_bounded_robust(r_star), config)?.cost;
    let br = solve_model_with(inst, &Spec::brcsta(), config)?;
    let br_star = br.balanced_robustness;
    let r_br_star = evaluate_worst_case(inst, &br);
    let c_br_star = solve_model_with(inst, &Spec::csta_bounded_balanced_robust(br_star), config)?.cost;
    let mut r_gap = Vec::new();
    for &g in rel_gaps {
        let arb = solve_model_with(inst, &Spec::rcsta_bounded_cost((1.0 + g) * c_star), config)?;
        r_gap.push((g, arb.worst_robustness));
    }
    Ok(RobustnessReport {
        c_star,
        r_star,
        c_r_star,
        delta_crob: rel(c_r_star, c_star),
        br_star,
        r_br_star,
        c_br_star,
        delta_cbrob: rel(c_br_star, c_star),
        r_gap,
    })
}
