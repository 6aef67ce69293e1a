//! A small mixed-integer linear programming kernel: model builder, a
//! bounded-variable primal simplex, and best-bound branch-and-bound with a
//! lazy-constraint hook used by the constraint-generation solvers.

mod branch;
mod lp_format;
mod simplex;

use std::time::Duration;

use thiserror::Error;

pub use branch::{solve, solve_with_callback, Candidate, Extension, LazyConstraints, MIN_CUT_VIOLATION};
pub use lp_format::write_lp;
pub use simplex::solve_lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

impl Variable {
    pub fn continuous(name: impl Into<String>, lb: f64, ub: f64) -> Self {
        Variable {
            name: name.into(),
            kind: VarKind::Continuous,
            lb,
            ub,
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Variable {
            name: name.into(),
            kind: VarKind::Binary,
            lb: 0.0,
            ub: 1.0,
        }
    }

    pub fn integer(name: impl Into<String>, lb: f64, ub: f64) -> Self {
        Variable {
            name: name.into(),
            kind: VarKind::Integer,
            lb,
            ub,
        }
    }

    pub fn is_integral(&self) -> bool {
        self.kind != VarKind::Continuous
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(name: impl Into<String>, coeffs: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Row {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        }
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("variable {0} has lb > ub")]
    EmptyDomain(String),
    #[error("integer variable {0} needs finite bounds")]
    UnboundedInteger(String),
    #[error("row {row} references undeclared variable {var}")]
    UnknownVariable { row: String, var: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("lazy constraint callback returned rows not violated by the candidate (max violation {0})")]
    CallbackNotCutting(f64),
    #[error("lazy constraint callback failed: {0}")]
    Callback(String),
    #[error("simplex failed: {0}")]
    Numerical(String),
}

/// Minimization model with bounded integer variables and linear rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective: Vec<(VarId, f64)>,
    pub obj_offset: f64,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, v: Variable) -> VarId {
        self.vars.push(v);
        VarId(self.vars.len() - 1)
    }

    pub fn add_row(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn set_objective(&mut self, coeffs: Vec<(VarId, f64)>) {
        self.objective = coeffs;
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.obj_offset
            + self
                .objective
                .iter()
                .map(|&(v, c)| c * values[v.0])
                .sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        for v in &self.vars {
            if v.lb > v.ub || v.lb.is_nan() || v.ub.is_nan() {
                return Err(MilpError::EmptyDomain(v.name.clone()));
            }
            if v.is_integral() && !(v.lb.is_finite() && v.ub.is_finite()) {
                return Err(MilpError::UnboundedInteger(v.name.clone()));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(MilpError::NonFinite(r.name.clone()));
            }
            for &(v, a) in &r.coeffs {
                if v.0 >= self.vars.len() {
                    return Err(MilpError::UnknownVariable {
                        row: r.name.clone(),
                        var: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(MilpError::NonFinite(r.name.clone()));
                }
            }
        }
        for &(v, c) in &self.objective {
            if v.0 >= self.vars.len() {
                return Err(MilpError::UnknownVariable {
                    row: "objective".into(),
                    var: v.0,
                });
            }
            if !c.is_finite() {
                return Err(MilpError::NonFinite("objective".into()));
            }
        }
        Ok(())
    }

    /// Copy with every integer variable relaxed to continuous.
    pub fn relaxed(&self) -> MilpModel {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.kind = VarKind::Continuous;
        }
        m
    }

    /// Checks rows, bounds and integrality of `values`.
    pub fn is_feasible(&self, values: &[f64], feas_tol: f64, int_tol: f64) -> bool {
        self.vars.iter().zip(values).all(|(v, &x)| {
            x >= v.lb - feas_tol
                && x <= v.ub + feas_tol
                && (!v.is_integral() || (x - x.round()).abs() <= int_tol)
        }) && self.rows.iter().all(|r| r.violation(values) <= feas_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    BudgetExceeded,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub feas_tol: f64,
    pub int_tol: f64,
    pub time_budget: Option<Duration>,
    pub node_budget: Option<usize>,
    /// Rounds of fractional separation at the root and at every other node.
    pub root_cut_rounds: usize,
    pub node_cut_rounds: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            feas_tol: 1e-6,
            int_tol: 1e-6,
            time_budget: None,
            node_budget: None,
            root_cut_rounds: 50,
            node_cut_rounds: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// One value per variable of the final model (lazy columns included).
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Lower bound proven at exit.
    pub best_bound: f64,
    /// False when the budget ran out before optimality was proven.
    pub proven: bool,
    pub node_count: usize,
    pub lp_count: usize,
    pub lazy_rows_added: usize,
    pub lazy_vars_added: usize,
    /// Largest |primal − dual bound| seen at any optimal simplex exit.
    pub max_duality_gap: f64,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal)
            || (self.status == SolveStatus::BudgetExceeded && !self.values.is_empty())
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }
}
