//! The attacker–defender decomposition.
//!
//! The lower level picks at most `k` failing arcs `b` and a dual min-cut
//! `(λ, μ, γ)`; `l` linearizes `b·γ`. Its optimal extreme point yields the
//! master cut `Σ u λ̂ y + Σ u γ̂ p ≥ |T| − Σ u γ̂ + Σ u l̂`.

use crate::graph::{ArcId, AugmentedInstance, NodeId, Scenario};
use crate::milp::{self, Extension, MilpModel, Row, Sense, SolveConfig, SolveStatus, VarId, Variable};

use super::{run_generation, Generator, Master, NetworkDesign, SolveOptions, SurvivableError, SurvivableProblem};

/// A 0/1 extreme point of the lower level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremePointCut {
    pub lambda: Vec<bool>,
    pub gamma: Vec<bool>,
    pub l: Vec<bool>,
    /// The failing arcs `b`.
    pub scenario: Scenario,
    /// Nodes with `μ = 1`.
    pub side_root: Vec<NodeId>,
}

impl ExtremePointCut {
    /// `g(y, λ̂, γ̂, l̂)`, plus the protection term when `p` is given.
    pub fn g(&self, aug: &AugmentedInstance, y: &[f64], p: Option<&[f64]>) -> f64 {
        let mut total = 0.0;
        for (a, arc) in aug.arcs().iter().enumerate() {
            let u = arc.capacity as f64;
            if self.lambda[a] {
                total += u * y[a];
            }
            if self.gamma[a] {
                total += u;
                if let Some(p) = p {
                    total += u * p.get(a).copied().unwrap_or(0.0);
                }
            }
            if self.l[a] {
                total -= u;
            }
        }
        total
    }

    pub(crate) fn row(&self, master: &Master, aug: &AugmentedInstance, n_terminals: usize, name: String) -> Row {
        let mut coeffs = Vec::new();
        let mut rhs = n_terminals as f64;
        for (a, arc) in aug.arcs().iter().enumerate() {
            let u = arc.capacity as f64;
            if self.lambda[a] {
                coeffs.push((master.y[a], u));
            }
            if self.gamma[a] {
                rhs -= u;
                if let Some(p) = &master.p {
                    if a < p.len() {
                        coeffs.push((p[a], u));
                    }
                }
            }
            if self.l[a] {
                rhs += u;
            }
        }
        super::clip_covering(Row::new(name, coeffs, Sense::Ge, rhs))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerLevel {
    /// Optimal value: the worst-case residual capacity.
    pub value: u64,
    pub point: ExtremePointCut,
    /// True when the relaxed `μ` came out fractional and had to be re-solved binary.
    pub mu_fallback: bool,
}

fn lower_level_model(
    aug: &AugmentedInstance,
    selected: &[bool],
    protected: &[bool],
    k: usize,
    mu_binary: bool,
) -> (MilpModel, Vec<VarId>, Vec<Option<VarId>>) {
    let mut m = MilpModel::new();
    let mu: Vec<VarId> = (0..aug.n_nodes())
        .map(|i| {
            let (lb, ub) = if i == aug.root() {
                (1.0, 1.0)
            } else if i == aug.sink() {
                (0.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            let kind = if mu_binary { Variable::integer(format!("mu{i}"), lb, ub) } else { Variable::continuous(format!("mu{i}"), lb, ub) };
            m.add_var(kind)
        })
        .collect();
    let mut objective = Vec::new();
    let mut b_of = vec![None; aug.arcs().len()];
    let mut budget = Vec::new();
    for (a, arc) in aug.arcs().iter().enumerate() {
        let u = arc.capacity as f64;
        let lam = m.add_var(Variable::continuous(format!("lambda{a}"), 0.0, 1.0));
        let gam = m.add_var(Variable::continuous(format!("gamma{a}"), 0.0, 1.0));
        m.add_row(Row::new(
            format!("dual{a}"),
            vec![(lam, 1.0), (gam, 1.0), (mu[arc.tail], -1.0), (mu[arc.head], 1.0)],
            Sense::Ge,
            0.0,
        ));
        if selected[a] {
            objective.push((lam, u));
        }
        objective.push((gam, u));
        // Failures only make sense on selected, unprotected initial arcs.
        if !aug.is_fictive(a) && selected[a] && !protected[a] {
            let b = m.add_var(Variable::binary(format!("b{a}")));
            let l = m.add_var(Variable::continuous(format!("l{a}"), 0.0, 1.0));
            m.add_row(Row::new(format!("l_gamma{a}"), vec![(l, 1.0), (gam, -1.0)], Sense::Le, 0.0));
            m.add_row(Row::new(format!("l_b{a}"), vec![(l, 1.0), (b, -1.0)], Sense::Le, 0.0));
            m.add_row(Row::new(
                format!("l_both{a}"),
                vec![(l, 1.0), (gam, -1.0), (b, -1.0)],
                Sense::Ge,
                -1.0,
            ));
            objective.push((l, -u));
            budget.push((b, 1.0));
            b_of[a] = Some(b);
        }
    }
    if !budget.is_empty() {
        m.add_row(Row::new("failures", budget, Sense::Le, k as f64));
    }
    m.set_objective(objective);
    (m, mu, b_of)
}

/// Solves the lower level at `(ŷ, p̂)` and returns its canonical extreme point:
/// every cut arc that does not fail carries `λ = 1`, every failing one
/// `γ = l = 1`.
pub fn solve_lower_level(
    aug: &AugmentedInstance,
    selected: &[bool],
    protected: &[bool],
    k: usize,
) -> Result<LowerLevel, SurvivableError> {
    let mut mu_fallback = false;
    let (sol, mu, b_of) = loop {
        let (model, mu, b_of) = lower_level_model(aug, selected, protected, k, mu_fallback);
        let sol = milp::solve(&model, &SolveConfig::default())?;
        if sol.status != SolveStatus::Optimal {
            return Err(SurvivableError::Internal(format!("lower level ended {:?}", sol.status)));
        }
        let integral = mu.iter().all(|&v| {
            let x = sol.value(v);
            (x - x.round()).abs() <= 1e-6
        });
        if integral || mu_fallback {
            break (sol, mu, b_of);
        }
        mu_fallback = true;
    };
    let side: Vec<bool> = mu.iter().map(|&v| sol.value(v) > 0.5).collect();
    let n = aug.arcs().len();
    let mut failed: Vec<ArcId> = Vec::new();
    let (mut lambda, mut gamma, mut l) = (vec![false; n], vec![false; n], vec![false; n]);
    let mut value = 0u64;
    for (a, arc) in aug.arcs().iter().enumerate() {
        let fails = b_of[a].is_some_and(|b| sol.value(b) > 0.5);
        if fails {
            failed.push(a);
        }
        if side[arc.tail] && !side[arc.head] {
            if fails {
                gamma[a] = true;
                l[a] = true;
            } else {
                lambda[a] = true;
                if selected[a] {
                    value += arc.capacity as u64;
                }
            }
        }
    }
    if (value as f64 - sol.objective_value).abs() > 1e-6 {
        return Err(SurvivableError::Internal(format!(
            "lower level optimum {} differs from its canonical point {value}",
            sol.objective_value
        )));
    }
    Ok(LowerLevel {
        value,
        point: ExtremePointCut {
            lambda,
            gamma,
            l,
            scenario: Scenario { failed },
            side_root: (0..side.len()).filter(|&v| side[v]).collect(),
        },
        mu_fallback,
    })
}

/// Finds a non-valid cut of the support graph with fewest surviving arcs and
/// raises `ŷ` to 1 on every arc outside it.
pub fn enhance_cut(
    aug: &AugmentedInstance,
    selected: &[bool],
    protected: &[bool],
    k: usize,
) -> Result<Vec<bool>, SurvivableError> {
    let mut m = MilpModel::new();
    let mu: Vec<VarId> = (0..aug.n_nodes())
        .map(|i| {
            let mut v = Variable::binary(format!("mu{i}"));
            if i == aug.root() {
                v.lb = 1.0;
            } else if i == aug.sink() {
                v.ub = 0.0;
            }
            m.add_var(v)
        })
        .collect();
    let mut lam = Vec::new();
    let mut gam = Vec::new();
    let mut capacity_left = Vec::new();
    let mut failures = Vec::new();
    for (a, arc) in aug.arcs().iter().enumerate() {
        let u = arc.capacity as f64;
        let l = m.add_var(Variable::binary(format!("lambda{a}")));
        let mut g = Variable::binary(format!("gamma{a}"));
        if aug.is_fictive(a) {
            g.ub = 0.0;
        }
        let g = m.add_var(g);
        m.add_row(Row::new(
            format!("dual{a}"),
            vec![(l, 1.0), (g, 1.0), (mu[arc.tail], -1.0), (mu[arc.head], 1.0)],
            Sense::Ge,
            0.0,
        ));
        if selected[a] {
            capacity_left.push((l, u));
            if protected[a] {
                capacity_left.push((g, u));
            }
        }
        failures.push((g, 1.0));
        lam.push(l);
        gam.push(g);
    }
    m.add_row(Row::new("non_valid", capacity_left, Sense::Le, aug.n_terminals() as f64 - 1.0));
    m.add_row(Row::new("failures", failures, Sense::Le, k as f64));
    m.set_objective(lam.iter().map(|&v| (v, 1.0)).collect());
    let sol = milp::solve(&m, &SolveConfig::default())?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(SurvivableError::Internal(
                "enhancement found no non-valid cut: the incumbent was feasible".into(),
            ))
        }
        s => return Err(SurvivableError::Internal(format!("enhancement MIP ended {s:?}"))),
    }
    let mut lifted = selected.to_vec();
    for a in aug.initial_arcs() {
        if sol.value(lam[a]) < 0.5 && sol.value(gam[a]) < 0.5 {
            lifted[a] = true;
        }
    }
    Ok(lifted)
}

struct BilevelGen {
    enhance: bool,
}

impl Generator for BilevelGen {
    fn formulation(&self) -> &'static str {
        "bilevel"
    }

    fn separate(
        &mut self,
        prob: &SurvivableProblem,
        master: &Master,
        model: &MilpModel,
        sel: &[bool],
        prot: &[bool],
    ) -> Result<(u64, Extension), SurvivableError> {
        let aug = &prob.aug;
        let nt = prob.n_terminals();
        let ll = solve_lower_level(aug, sel, prot, prob.k)?;
        if ll.value >= nt as u64 {
            return Ok((ll.value, Extension::default()));
        }
        let point = if self.enhance {
            let lifted = enhance_cut(aug, sel, prot, prob.k)?;
            let again = solve_lower_level(aug, &lifted, prot, prob.k)?;
            if again.value >= nt as u64 {
                return Err(SurvivableError::Internal("lifted incumbent became feasible".into()));
            }
            again.point
        } else {
            ll.point
        };
        let y: Vec<f64> = sel.iter().map(|&s| s as u8 as f64).collect();
        let p: Vec<f64> = prot.iter().map(|&s| s as u8 as f64).collect();
        let g = point.g(aug, &y, master.p.as_ref().map(|_| &p[..]));
        if g > nt as f64 - 1.0 + 1e-9 {
            return Err(SurvivableError::Internal(format!("extreme-point cut does not cut off the incumbent (g = {g})")));
        }
        let row = point.row(master, aug, nt, format!("ep{}", model.rows.len()));
        Ok((ll.value, Extension::rows(vec![row])))
    }
}

pub fn solve_bilevel(prob: &SurvivableProblem, options: &SolveOptions) -> Result<NetworkDesign, SurvivableError> {
    let master = Master::build(prob, options.use_vis);
    let mut gen = BilevelGen {
        enhance: options.use_enhancement,
    };
    run_generation(prob, master, &mut gen, options)
}
