//! Independent oracles shared by the integration tests. None of them call the
//! library's flow or MILP code.
#![allow(dead_code)]

use survnet::graph::{ArcId, AugmentedInstance, Instance};
use survnet::instance_gen::{generate_random, GenConfig};

/// Every root side of an r–s cut: `r` in, `s` out, any subset of the rest.
pub fn root_sides(aug: &AugmentedInstance) -> Vec<Vec<bool>> {
    let (r, s, n) = (aug.root(), aug.sink(), aug.n_nodes());
    let free: Vec<usize> = (0..n).filter(|&v| v != r && v != s).collect();
    assert!(free.len() <= 20, "cut enumeration is exponential");
    (0u32..1 << free.len())
        .map(|bits| {
            let mut side = vec![false; n];
            side[r] = true;
            for (i, &v) in free.iter().enumerate() {
                side[v] = bits >> i & 1 == 1;
            }
            side
        })
        .collect()
}

pub fn cut_arcs(aug: &AugmentedInstance, side: &[bool]) -> Vec<ArcId> {
    aug.arcs()
        .iter()
        .enumerate()
        .filter(|(_, a)| side[a.tail] && !side[a.head])
        .map(|(i, _)| i)
        .collect()
}

/// Minimum r–s cut capacity by exhaustive enumeration.
pub fn min_cut_by_enumeration(aug: &AugmentedInstance, cap: &[u64]) -> u64 {
    root_sides(aug)
        .iter()
        .map(|side| cut_arcs(aug, side).iter().map(|&a| cap[a]).sum())
        .min()
        .unwrap()
}

/// Worst max flow after deleting at most `k` unprotected selected initial
/// arcs: min over cuts of the cut capacity minus its `k` largest deletable
/// capacities (max-flow/min-cut applied per scenario, then the two minima
/// swapped).
pub fn worst_residual_by_cuts(aug: &AugmentedInstance, selected: &[bool], protected: &[bool], k: usize) -> u64 {
    root_sides(aug)
        .iter()
        .map(|side| {
            let cut = cut_arcs(aug, side);
            let total: u64 = cut.iter().filter(|&&a| selected[a]).map(|&a| aug.arcs()[a].capacity as u64).sum();
            let mut deletable: Vec<u64> = cut
                .iter()
                .filter(|&&a| selected[a] && !protected[a] && !aug.is_fictive(a))
                .map(|&a| aug.arcs()[a].capacity as u64)
                .collect();
            deletable.sort_unstable_by(|a, b| b.cmp(a));
            total - deletable.iter().take(k).sum::<u64>()
        })
        .min()
        .unwrap()
}

/// Precomputed cuts over bitmasks of initial arcs, for subset enumeration.
pub struct CutTable {
    /// (initial arcs in the cut as a bitmask, fictive arcs crossing)
    cuts: Vec<(u32, u64)>,
    caps: Vec<u64>,
    pub n_terminals: u64,
}

impl CutTable {
    pub fn new(aug: &AugmentedInstance) -> Self {
        assert!(aug.n_initial() <= 32);
        let mut cuts: Vec<(u32, u64)> = root_sides(aug)
            .iter()
            .map(|side| {
                let mut mask = 0u32;
                let mut fict = 0;
                for a in cut_arcs(aug, side) {
                    if aug.is_fictive(a) {
                        fict += 1;
                    } else {
                        mask |= 1 << a;
                    }
                }
                (mask, fict)
            })
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        CutTable {
            cuts,
            caps: aug.initial_arcs().map(|a| aug.arcs()[a].capacity as u64).collect(),
            n_terminals: aug.n_terminals() as u64,
        }
    }

    pub fn worst_residual(&self, sel: u32, prot: u32, k: usize) -> u64 {
        let mut best = u64::MAX;
        let mut buf = Vec::new();
        for &(mask, fict) in &self.cuts {
            let live = mask & sel;
            let mut total = fict;
            buf.clear();
            let mut bits = live;
            while bits != 0 {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                total += self.caps[a];
                if prot >> a & 1 == 0 {
                    buf.push(self.caps[a]);
                }
            }
            if buf.len() > k {
                buf.sort_unstable_by(|a, b| b.cmp(a));
            }
            let lost: u64 = buf.iter().take(k).sum();
            best = best.min(total - lost);
            if best < self.n_terminals {
                break;
            }
        }
        best
    }

    pub fn feasible(&self, sel: u32, prot: u32, k: usize) -> bool {
        self.worst_residual(sel, prot, k) >= self.n_terminals
    }
}

/// Cheapest `(selected, protected)` over all subsets of initial arcs and all
/// protected subsets of size at most `kprot`.
pub fn brute_force_design(aug: &AugmentedInstance, k: usize, kprot: usize) -> Option<(f64, u32, u32)> {
    let m = aug.n_initial();
    assert!(m <= 20);
    let table = CutTable::new(aug);
    let costs: Vec<f64> = aug.initial_arcs().map(|a| aug.arcs()[a].cost).collect();
    let mut best: Option<(f64, u32, u32)> = None;
    for sel in 0u32..1 << m {
        let cost: f64 = (0..m).filter(|a| sel >> a & 1 == 1).map(|a| costs[a]).sum();
        if best.is_some_and(|(c, _, _)| cost >= c - 1e-9) {
            continue;
        }
        // protection only ever helps, so use as much of it as allowed
        let arcs: Vec<usize> = (0..m).filter(|a| sel >> a & 1 == 1).collect();
        let size = kprot.min(arcs.len());
        let mut found = None;
        for_each_subset(&arcs, size, &mut |prot| {
            if found.is_none() && table.feasible(sel, prot, k) {
                found = Some(prot);
            }
        });
        if let Some(prot) = found {
            best = Some((cost, sel, prot));
        }
    }
    best
}

/// Calls `f` with the bitmask of every `size`-subset of `items`.
pub fn for_each_subset(items: &[usize], size: usize, f: &mut dyn FnMut(u32)) {
    fn rec(items: &[usize], size: usize, acc: u32, f: &mut dyn FnMut(u32)) {
        if size == 0 {
            f(acc);
            return;
        }
        for i in 0..items.len() {
            if items.len() - i < size {
                break;
            }
            rec(&items[i + 1..], size - 1, acc | 1 << items[i], f);
        }
    }
    rec(items, size, 0, f)
}

pub fn mask_of(aug: &AugmentedInstance, bits: u32, with_fictive: bool) -> Vec<bool> {
    (0..aug.arcs().len())
        .map(|a| if aug.is_fictive(a) { with_fictive } else { bits >> a & 1 == 1 })
        .collect()
}

/// Arc-disjoint path packing by exhaustive search: the largest number of
/// r→t paths in `arcs` that share no arc.
pub fn path_packing(inst: &Instance, arcs: &[ArcId], t: usize) -> usize {
    fn paths(inst: &Instance, arcs: &[ArcId], v: usize, t: usize, seen: &mut Vec<bool>, cur: &mut Vec<ArcId>, out: &mut Vec<u32>) {
        if v == t {
            out.push(cur.iter().fold(0u32, |m, &a| m | 1 << a));
            return;
        }
        for &a in arcs {
            let arc = &inst.arcs()[a];
            if arc.tail == v && !seen[arc.head] {
                seen[arc.head] = true;
                cur.push(a);
                paths(inst, arcs, arc.head, t, seen, cur, out);
                cur.pop();
                seen[arc.head] = false;
            }
        }
    }
    let mut all = Vec::new();
    let mut seen = vec![false; inst.n_nodes()];
    seen[inst.root()] = true;
    paths(inst, arcs, inst.root(), t, &mut seen, &mut Vec::new(), &mut all);
    fn pack(all: &[u32], used: u32, from: usize) -> usize {
        let mut best = 0;
        for i in from..all.len() {
            if all[i] & used == 0 {
                best = best.max(1 + pack(all, used | all[i], i + 1));
            }
        }
        best
    }
    pack(&all, 0, 0)
}

/// Terminals cut off from the root when arc `removed` fails, for every arc
/// of `arcs`; returns the maximum.
pub fn worst_single_failure(inst: &Instance, arcs: &[ArcId]) -> u32 {
    arcs.iter()
        .map(|&removed| {
            let mut reached = vec![false; inst.n_nodes()];
            reached[inst.root()] = true;
            let mut stack = vec![inst.root()];
            while let Some(v) = stack.pop() {
                for &a in arcs {
                    let arc = &inst.arcs()[a];
                    if a != removed && arc.tail == v && !reached[arc.head] {
                        reached[arc.head] = true;
                        stack.push(arc.head);
                    }
                }
            }
            inst.terminals().iter().filter(|&&t| !reached[t]).count() as u32
        })
        .max()
        .unwrap_or(0)
}

/// Whether `d` splits into `m` groups of sum `b`.
pub fn three_partition_yes(m: usize, b: u32, d: &[u32]) -> bool {
    fn rec(d: &[u32], i: usize, groups: &mut [u32], b: u32) -> bool {
        if i == d.len() {
            return groups.iter().all(|&g| g == b);
        }
        for j in 0..groups.len() {
            // groups with equal load are interchangeable
            if groups[..j].contains(&groups[j]) {
                continue;
            }
            if groups[j] + d[i] <= b {
                groups[j] += d[i];
                if rec(d, i + 1, groups, b) {
                    return true;
                }
                groups[j] -= d[i];
            }
        }
        false
    }
    let mut sorted = d.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    rec(&sorted, 0, &mut vec![0; m], b)
}

/// All multisets `d` with `3m` entries strictly between B/4 and B/2 summing to mB.
pub fn three_partition_instances(m: usize, b: u32) -> Vec<Vec<u32>> {
    let sizes: Vec<u32> = (1..b).filter(|&x| 4 * x > b && 2 * x < b).collect();
    let mut out = Vec::new();
    fn rec(sizes: &[u32], from: usize, left: usize, sum: u32, target: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            if sum == target {
                out.push(cur.clone());
            }
            return;
        }
        for i in from..sizes.len() {
            cur.push(sizes[i]);
            rec(sizes, i, left - 1, sum + sizes[i], target, cur, out);
            cur.pop();
        }
    }
    rec(&sizes, 0, 3 * m, 0, m as u32 * b, &mut Vec::new(), &mut out);
    out
}

/// Seeded random instances that survive `max_k` failures with every arc selected.
pub fn random_instances(count: usize, nodes: usize, terminals: usize, arcs: usize, max_k: usize, first_seed: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    let mut seed = first_seed;
    while out.len() < count {
        let cfg = GenConfig {
            max_k,
            ..GenConfig::new(nodes, terminals, arcs, seed)
        };
        if let Ok(inst) = generate_random(&cfg) {
            out.push(inst);
        }
        seed += 1;
        assert!(seed < first_seed + 10 * count as u64 + 100, "generator keeps failing");
    }
    out
}

/// Small deterministic generator for test data that needs no instance.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn coin(&mut self, p_num: u64, p_den: u64) -> bool {
        self.below(p_den) < p_num
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum of a bounded LP `min c·x, rows, lb ≤ x ≤ ub` over its basic
/// feasible solutions: every choice of `n` tight constraints among the rows
/// and the bounds. `None` when no vertex is feasible.
pub fn lp_by_vertices(c: &[f64], rows: &[(Vec<f64>, survnet::milp::Sense, f64)], lb: &[f64], ub: &[f64]) -> Option<f64> {
    use survnet::milp::Sense;
    let n = c.len();
    let mut planes: Vec<(Vec<f64>, f64)> = rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lb[j]));
        planes.push((e, ub[j]));
    }
    let feasible = |x: &[f64]| {
        (0..n).all(|j| x[j] >= lb[j] - 1e-7 && x[j] <= ub[j] + 1e-7)
            && rows.iter().all(|(a, s, b)| {
                let v: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
                match s {
                    Sense::Le => v <= b + 1e-7,
                    Sense::Ge => v >= b - 1e-7,
                    Sense::Eq => (v - b).abs() <= 1e-7,
                }
            })
    };
    let ids: Vec<usize> = (0..planes.len()).collect();
    let mut best: Option<f64> = None;
    let mut visit = |mask: u32| {
        let chosen: Vec<usize> = (0..planes.len()).filter(|i| mask >> i & 1 == 1).collect();
        let a = chosen.iter().map(|&i| planes[i].0.clone()).collect();
        let b = chosen.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if feasible(&x) {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |bv: f64| bv.min(v)));
            }
        }
    };
    for_each_subset(&ids, n, &mut visit);
    best
}

/// The complete cut-set model written out row by row: `y` of arc `a` is
/// `VarId(a)`, `p` of initial arc `a` is `VarId(n_arcs + a)`. One covering row
/// per root side and per deletion set of size `min(k, |cut|)`, coefficients
/// clipped at |T|.
pub fn explicit_cutset_model(aug: &AugmentedInstance, k: usize, kprot: usize) -> survnet::milp::MilpModel {
    use std::collections::BTreeSet;
    use survnet::milp::{MilpModel, Row, Sense, VarId, Variable};
    let n_arcs = aug.arcs().len();
    assert!(n_arcs <= 32);
    let nt = aug.n_terminals() as f64;
    let mut m = MilpModel::new();
    for a in 0..n_arcs {
        let mut v = Variable::binary(format!("y{a}"));
        if aug.is_fictive(a) {
            v.lb = 1.0;
        }
        m.add_var(v);
    }
    if kprot > 0 {
        for a in aug.initial_arcs() {
            m.add_var(Variable::binary(format!("p{a}")));
            m.add_row(Row::new(format!("ps{a}"), vec![(VarId(n_arcs + a), 1.0), (VarId(a), -1.0)], Sense::Le, 0.0));
        }
        let budget = aug.initial_arcs().map(|a| (VarId(n_arcs + a), 1.0)).collect();
        m.add_row(Row::new("pb", budget, Sense::Le, kprot as f64));
    }
    let mut seen: BTreeSet<Vec<(usize, u64)>> = BTreeSet::new();
    for side in root_sides(aug) {
        let cut = cut_arcs(aug, &side);
        let initial: Vec<usize> = cut.iter().copied().filter(|&a| !aug.is_fictive(a)).collect();
        let mut emit = |deleted: u32| {
            let mut coeffs: Vec<(usize, u64)> = Vec::new();
            for &a in &cut {
                let u = (aug.arcs()[a].capacity as f64).min(nt) as u64;
                if deleted >> a & 1 == 1 {
                    if kprot > 0 {
                        coeffs.push((n_arcs + a, u));
                    }
                } else {
                    coeffs.push((a, u));
                }
            }
            coeffs.sort_unstable();
            if seen.insert(coeffs.clone()) {
                let row = coeffs.into_iter().map(|(v, u)| (VarId(v), u as f64)).collect();
                m.add_row(Row::new("cut", row, Sense::Ge, nt));
            }
        };
        for_each_subset(&initial, k.min(initial.len()), &mut emit);
    }
    m.set_objective(aug.initial_arcs().map(|a| (VarId(a), aug.arcs()[a].cost)).collect());
    m
}
