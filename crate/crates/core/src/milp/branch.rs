//! Best-bound branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::simplex::{run_lp, Factor, LpData, LpStatus, WarmStart};
use super::{MilpError, MilpModel, MilpSolution, Row, SolveConfig, SolveStatus, VarKind, Variable};

/// An integral LP solution offered to the lazy-constraint hook.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub values: &'a [f64],
    pub objective: f64,
}

/// Columns and rows produced by a lazy-constraint hook. Rows may reference the
/// new columns as `VarId(model.n_vars() + i)`.
#[derive(Debug, Clone, Default)]
pub struct Extension {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
}

impl Extension {
    pub fn rows(rows: Vec<Row>) -> Self {
        Extension {
            vars: Vec::new(),
            rows,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.rows.is_empty()
    }
}

/// Called at every integral incumbent candidate. Returning an empty
/// [`Extension`] accepts the candidate; otherwise the returned rows (and
/// columns) must cut it off.
pub trait LazyConstraints {
    fn separate(&mut self, model: &MilpModel, candidate: Candidate<'_>) -> Result<Extension, MilpError>;

    /// Optional strengthening at a fractional LP optimum. Whatever is returned
    /// must be valid for every integer point the lazy hook would accept; rows
    /// that the point violates by less than [`MIN_CUT_VIOLATION`] are ignored.
    fn separate_fractional(&mut self, _model: &MilpModel, _point: Candidate<'_>) -> Result<Extension, MilpError> {
        Ok(Extension::default())
    }
}

pub const MIN_CUT_VIOLATION: f64 = 1e-4;

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    changes: Vec<(usize, f64, f64)>,
    warm: Option<Rc<WarmStart>>,
    /// Branching that created the node: variable, up-branch, distance moved.
    origin: Option<(usize, bool, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is the one with the
    // smallest bound, then the deepest, then the oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

fn objective_is_integral(model: &MilpModel) -> bool {
    let is_int = |x: f64| (x - x.round()).abs() < 1e-9;
    is_int(model.obj_offset)
        && model
            .objective
            .iter()
            .all(|&(v, c)| c == 0.0 || (model.vars[v.0].kind != VarKind::Continuous && is_int(c)))
}

/// Per-variable average bound gain per unit of rounding, down and up.
#[derive(Default)]
struct Pseudocosts {
    down: Vec<(f64, u32)>,
    up: Vec<(f64, u32)>,
}

impl Pseudocosts {
    fn record(&mut self, j: usize, up: bool, dist: f64, gain: f64) {
        let table = if up { &mut self.up } else { &mut self.down };
        if table.len() <= j {
            table.resize(j + 1, (0.0, 0));
        }
        let e = &mut table[j];
        e.0 += gain.max(0.0) / dist.max(1e-9);
        e.1 += 1;
    }

    fn mean(table: &[(f64, u32)]) -> f64 {
        let (s, n) = table
            .iter()
            .filter(|e| e.1 > 0)
            .fold((0.0, 0), |(s, n), e| (s + e.0 / e.1 as f64, n + 1));
        if n == 0 {
            1.0
        } else {
            s / n as f64
        }
    }

    fn estimate(table: &[(f64, u32)], j: usize, fallback: f64) -> f64 {
        match table.get(j) {
            Some(&(s, n)) if n > 0 => s / n as f64,
            _ => fallback,
        }
    }

    /// The fractional integer variable with the best product score; plain
    /// fractionality until any gain has been observed.
    fn select(&self, model: &MilpModel, x: &[f64], int_tol: f64) -> Option<usize> {
        let (md, mu) = (Self::mean(&self.down), Self::mean(&self.up));
        let mut best: Option<(usize, f64)> = None;
        for (j, v) in model.vars.iter().enumerate() {
            if !v.is_integral() {
                continue;
            }
            let f = x[j] - x[j].floor();
            if f.min(1.0 - f) <= int_tol {
                continue;
            }
            let d = Self::estimate(&self.down, j, md) * f;
            let u = Self::estimate(&self.up, j, mu) * (1.0 - f);
            let score = d.max(1e-6) * u.max(1e-6);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }
}

pub fn solve(model: &MilpModel, config: &SolveConfig) -> Result<MilpSolution, MilpError> {
    solve_with_callback(model, config, None)
}

pub fn solve_with_callback(
    model: &MilpModel,
    config: &SolveConfig,
    mut callback: Option<&mut dyn LazyConstraints>,
) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let start = Instant::now();
    let mut model = model.clone();
    let mut obj_integral = objective_is_integral(&model);
    let tie = |v: f64| 1e-9 * v.abs().max(1.0);
    let prunes = |bound: f64, inc: f64, integral: bool| -> bool {
        if integral {
            (bound - 1e-6).ceil() >= inc - 1e-6
        } else {
            bound >= inc - tie(inc)
        }
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
        changes: Vec::new(),
        warm: None,
        origin: None,
    });
    let mut pseudo = Pseudocosts::default();
    let mut next_id = 1;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut node_count = 0;
    let mut lp_count = 0;
    let mut rows_added = 0;
    let mut vars_added = 0;
    let mut max_gap: f64 = 0.0;
    let mut budget_hit = false;
    // Inverse of the last branched node's basis; its first child usually
    // comes straight off the heap and skips refactoring.
    let mut last_factor: Option<(Rc<WarmStart>, Factor)> = None;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if prunes(node.bound, *inc, obj_integral) {
                // best-first: every remaining node is at least as bad
                heap.clear();
                break;
            }
        }
        let over_time = config.time_budget.is_some_and(|b| start.elapsed() >= b);
        let over_nodes = config.node_budget.is_some_and(|b| node_count >= b);
        if over_time || over_nodes {
            heap.push(node);
            budget_hit = true;
            break;
        }
        node_count += 1;

        let mut warm = node.warm.clone();
        let mut cut_rounds = 0;
        let round_limit = if node.depth == 0 { config.root_cut_rounds } else { config.node_cut_rounds };
        loop {
            let mut lb: Vec<f64> = model.vars.iter().map(|v| v.lb).collect();
            let mut ub: Vec<f64> = model.vars.iter().map(|v| v.ub).collect();
            for &(j, l, u) in &node.changes {
                lb[j] = l;
                ub[j] = u;
            }
            let data = LpData::from_model(&model, &lb, &ub);
            let factor = match (&warm, &last_factor) {
                (Some(w), Some((fw, f))) if Rc::ptr_eq(w, fw) => Some(f),
                _ => None,
            };
            let mut res = run_lp(&data, warm.as_deref(), factor)?;
            lp_count += 1;
            match res.status {
                LpStatus::Infeasible => break,
                LpStatus::Unbounded => {
                    return Ok(MilpSolution {
                        status: SolveStatus::Unbounded,
                        values: Vec::new(),
                        objective_value: f64::NEG_INFINITY,
                        best_bound: f64::NEG_INFINITY,
                        proven: true,
                        node_count,
                        lp_count,
                        lazy_rows_added: rows_added,
                        lazy_vars_added: vars_added,
                        max_duality_gap: max_gap,
                    })
                }
                LpStatus::Optimal => {}
            }
            max_gap = max_gap.max((res.objective - res.dual_bound).abs());
            let bound = res.objective + model.obj_offset;
            if cut_rounds == 0 {
                if let Some((j, up, dist)) = node.origin {
                    pseudo.record(j, up, dist, bound - node.bound);
                }
            }
            if let Some((inc, _)) = &incumbent {
                if prunes(bound, *inc, obj_integral) {
                    break;
                }
            }
            if let Some(j) = pseudo.select(&model, &res.x, config.int_tol) {
                if cut_rounds < round_limit {
                    if let Some(cb) = callback.as_deref_mut() {
                        cut_rounds += 1;
                        let mut ext = cb.separate_fractional(
                            &model,
                            Candidate {
                                values: &res.x,
                                objective: bound,
                            },
                        )?;
                        if ext.vars.is_empty() {
                            ext.rows.retain(|r| r.violation(&res.x) > MIN_CUT_VIOLATION);
                        }
                        if !ext.is_empty() {
                            vars_added += ext.vars.len();
                            rows_added += ext.rows.len();
                            model.vars.extend(ext.vars);
                            model.rows.extend(ext.rows);
                            model.validate()?;
                            obj_integral = objective_is_integral(&model);
                            warm = Some(Rc::new(res.basis));
                            continue;
                        }
                    }
                }
                let xj = res.x[j];
                let basis = Rc::new(res.basis);
                last_factor = Some((basis.clone(), std::mem::take(&mut res.factor)));
                let f = xj - xj.floor();
                for (l, u, up, dist) in [(lb[j], xj.floor(), false, f), (xj.ceil(), ub[j], true, 1.0 - f)] {
                    let mut changes = node.changes.clone();
                    changes.push((j, l, u));
                    heap.push(Node {
                        bound,
                        depth: node.depth + 1,
                        id: next_id,
                        changes,
                        warm: Some(basis.clone()),
                        origin: Some((j, up, dist)),
                    });
                    next_id += 1;
                }
                break;
            }

            let mut values = res.x;
            for (j, v) in model.vars.iter().enumerate() {
                if v.is_integral() {
                    values[j] = values[j].round();
                }
            }
            let objective = model.objective_value(&values);
            if let Some(cb) = callback.as_deref_mut() {
                let ext = cb.separate(
                    &model,
                    Candidate {
                        values: &values,
                        objective,
                    },
                )?;
                if !ext.is_empty() {
                    let fixed_check = !ext.vars.is_empty();
                    if !fixed_check {
                        let worst = ext
                            .rows
                            .iter()
                            .map(|r| r.violation(&values))
                            .fold(0.0, f64::max);
                        if worst <= config.feas_tol {
                            return Err(MilpError::CallbackNotCutting(worst));
                        }
                    }
                    let n_old = model.vars.len();
                    vars_added += ext.vars.len();
                    rows_added += ext.rows.len();
                    model.vars.extend(ext.vars);
                    model.rows.extend(ext.rows);
                    model.validate()?;
                    obj_integral = objective_is_integral(&model);
                    if fixed_check {
                        ensure_cut_off(&model, &values[..n_old])?;
                        lp_count += 1;
                    }
                    warm = Some(Rc::new(res.basis));
                    continue;
                }
            }
            if incumbent
                .as_ref()
                .is_none_or(|(inc, _)| objective < inc - tie(*inc))
            {
                incumbent = Some((objective, values));
            }
            break;
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let (status, values, objective_value) = match incumbent {
        Some((obj, vals)) => (
            if budget_hit {
                SolveStatus::BudgetExceeded
            } else {
                SolveStatus::Optimal
            },
            vals,
            obj,
        ),
        None => (
            if budget_hit {
                SolveStatus::BudgetExceeded
            } else {
                SolveStatus::Infeasible
            },
            Vec::new(),
            f64::INFINITY,
        ),
    };
    Ok(MilpSolution {
        status,
        values,
        best_bound: if budget_hit {
            open_bound.min(objective_value)
        } else {
            objective_value
        },
        objective_value,
        proven: !budget_hit,
        node_count,
        lp_count,
        lazy_rows_added: rows_added,
        lazy_vars_added: vars_added,
        max_duality_gap: max_gap,
    })
}

/// With the integer part of the rejected candidate fixed, the extended model
/// must be LP-infeasible.
fn ensure_cut_off(model: &MilpModel, old_values: &[f64]) -> Result<(), MilpError> {
    let mut lb: Vec<f64> = model.vars.iter().map(|v| v.lb).collect();
    let mut ub: Vec<f64> = model.vars.iter().map(|v| v.ub).collect();
    for (j, &x) in old_values.iter().enumerate() {
        if model.vars[j].is_integral() {
            lb[j] = x;
            ub[j] = x;
        }
    }
    let data = LpData::from_model(model, &lb, &ub);
    match run_lp(&data, None, None)?.status {
        LpStatus::Infeasible => Ok(()),
        _ => Err(MilpError::CallbackNotCutting(0.0)),
    }
}
