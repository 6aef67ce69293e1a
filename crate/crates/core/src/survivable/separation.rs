//! The cut-based separation MIP: a cut of the selected network together with
//! at most `k` deletions inside it, minimizing the remaining capacity.

use crate::graph::{self, AugmentedInstance, CutCertificate};
use crate::milp::{self, MilpModel, Row, Sense, SolveConfig, SolveStatus, VarId, Variable};

use super::SurvivableError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationCut {
    pub cut: CutCertificate,
    pub residual: u64,
}

pub fn separation_mip_cut(
    aug: &AugmentedInstance,
    selected: &[bool],
    protected: &[bool],
    k: usize,
) -> Result<SeparationCut, SurvivableError> {
    let mut model = MilpModel::new();
    let v: Vec<VarId> = (0..aug.n_nodes())
        .map(|i| {
            let mut var = Variable::binary(format!("v{i}"));
            if i == aug.root() {
                var.lb = 1.0;
            } else if i == aug.sink() {
                var.ub = 0.0;
            }
            model.add_var(var)
        })
        .collect();
    let mut objective = Vec::new();
    let mut deletions = Vec::new();
    let mut d_of = vec![None; aug.arcs().len()];
    // Unselected arcs have zero capacity and never constrain the cut.
    for (a, arc) in aug.arcs().iter().enumerate() {
        if !selected[a] {
            continue;
        }
        let s = model.add_var(Variable::binary(format!("s{a}")));
        objective.push((s, arc.capacity as f64));
        let mut coeffs = vec![(s, 1.0), (v[arc.tail], -1.0), (v[arc.head], 1.0)];
        if !aug.is_fictive(a) && !protected[a] {
            let d = model.add_var(Variable::binary(format!("d{a}")));
            coeffs.push((d, 1.0));
            deletions.push((d, 1.0));
            d_of[a] = Some(d);
        }
        model.add_row(Row::new(format!("cut{a}"), coeffs, Sense::Ge, 0.0));
    }
    if !deletions.is_empty() {
        model.add_row(Row::new("budget", deletions, Sense::Le, k as f64));
    }
    model.set_objective(objective);
    let sol = milp::solve(&model, &SolveConfig::default())?;
    if sol.status != SolveStatus::Optimal {
        return Err(SurvivableError::Internal(format!("separation MIP ended {:?}", sol.status)));
    }
    let side: Vec<bool> = v.iter().map(|&x| sol.value(x) > 0.5).collect();
    let deleted: Vec<usize> = (0..aug.arcs().len())
        .filter(|&a| d_of[a].is_some_and(|d| sol.value(d) > 0.5))
        .collect();
    let cap = aug.selected_capacities(selected);
    let cut = graph::cut_from_side(aug, &side, &cap, &deleted);
    let residual = cut.residual_capacity;
    if (residual as f64 - sol.objective_value).abs() > 1e-6 {
        return Err(SurvivableError::Internal(format!(
            "separation MIP value {} disagrees with its cut residual {residual}",
            sol.objective_value
        )));
    }
    Ok(SeparationCut { cut, residual })
}
