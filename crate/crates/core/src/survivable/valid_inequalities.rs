use std::collections::BTreeSet;

use crate::milp::{Row, Sense, VarId};

use super::SurvivableProblem;

/// Valid inequalities over the master layout: `y` of arc `a` is `VarId(a)`
/// for every arc of the augmented instance, and with protection `p` of
/// initial arc `a` is `VarId(n_arcs + a)`.
///
/// Each row holds for every inclusion-minimal feasible design, so adding them
/// keeps at least one optimum.
pub fn valid_inequalities(prob: &SurvivableProblem) -> Vec<Row> {
    let y: Vec<VarId> = (0..prob.aug.arcs().len()).map(VarId).collect();
    rows_for(prob, &y)
}

pub(crate) fn rows_for(prob: &SurvivableProblem, y: &[VarId]) -> Vec<Row> {
    let inst = prob.aug.base();
    let root = inst.root();
    let k = prob.k as f64;
    let mut rows = Vec::new();
    let sum = |arcs: &mut dyn Iterator<Item = usize>| -> Vec<(VarId, f64)> { arcs.map(|a| (y[a], 1.0)).collect() };

    let degree_lb = if prob.k_prot == 0 { k + 1.0 } else { 1.0 };
    for &t in inst.terminals() {
        rows.push(Row::new(format!("vi_term{t}"), sum(&mut inst.in_arcs(t)), Sense::Ge, degree_lb));
    }
    rows.push(Row::new("vi_root", sum(&mut inst.out_arcs(root)), Sense::Ge, degree_lb));

    // Steiner nodes pass flow through: something in needs something out and
    // vice versa.
    for j in 0..inst.n_nodes() {
        if j == root || inst.is_terminal(j) {
            continue;
        }
        for a in inst.in_arcs(j) {
            let mut coeffs = vec![(y[a], 1.0)];
            coeffs.extend(inst.out_arcs(j).map(|b| (y[b], -1.0)));
            rows.push(Row::new(format!("vi_in{a}"), coeffs, Sense::Le, 0.0));
        }
        for b in inst.out_arcs(j) {
            let mut coeffs = vec![(y[b], 1.0)];
            coeffs.extend(inst.in_arcs(j).map(|a| (y[a], -1.0)));
            rows.push(Row::new(format!("vi_out{b}"), coeffs, Sense::Le, 0.0));
        }
    }

    if prob.k_prot == 0 {
        // A terminal needs k+1 distinct in-neighbours; those that are Steiner
        // nodes bring at least two selected incident arcs each.
        for &t in inst.terminals() {
            let tails: Vec<usize> = inst.in_arcs(t).map(|a| inst.arcs()[a].tail).collect();
            let distinct: BTreeSet<usize> = tails.iter().copied().collect();
            if distinct.len() != tails.len() {
                continue;
            }
            let mut neighbours = BTreeSet::new();
            neighbours.extend(inst.in_arcs(t).map(|a| inst.arcs()[a].tail));
            neighbours.extend(inst.out_arcs(t).map(|a| inst.arcs()[a].head));
            let others = neighbours
                .iter()
                .filter(|&&v| v == root || inst.is_terminal(v))
                .count();
            let need = 2.0 * (k + 1.0 - others as f64);
            if need <= 0.0 {
                continue;
            }
            let mut coeffs = Vec::new();
            for &j in neighbours.iter().filter(|&&v| v != root && !inst.is_terminal(v)) {
                coeffs.extend(inst.in_arcs(j).map(|a| (y[a], 1.0)));
                coeffs.extend(inst.out_arcs(j).map(|a| (y[a], 1.0)));
            }
            rows.push(Row::new(format!("vi_nbr{t}"), coeffs, Sense::Ge, need));
        }
    } else {
        // Vertices without a protected arc need k+1 arcs. One protected arc
        // can exempt its terminal head and, once, the root.
        let nt = inst.terminals().len();
        let exempt = (prob.k_prot.min(nt) + 1) as f64;
        let mut coeffs = Vec::new();
        for &t in inst.terminals() {
            coeffs.extend(inst.in_arcs(t).map(|a| (y[a], 1.0)));
        }
        coeffs.extend(inst.out_arcs(root).map(|a| (y[a], 1.0)));
        let rhs = (nt as f64 + 1.0 - exempt) * (k + 1.0) + exempt;
        rows.push(Row::new("vi_protected_degree", coeffs, Sense::Ge, rhs));
    }
    rows
}
