//! Bounded-variable primal simplex with the basis inverse kept in product
//! form (a file of sparse eta columns, rebuilt periodically).
//!
//! Rows are turned into equalities `a·x + s = b` with one slack per row whose
//! bounds encode the sense (`<=`: s ≥ 0, `>=`: s ≤ 0, `=`: s = 0). Phase 1
//! minimizes the sum of bound violations of the basic variables; phase 2 the
//! true objective. Dantzig pricing switches to Bland's rule after a streak of
//! degenerate pivots. A warm start that is dual feasible but primal infeasible
//! (a branching child) first runs the dual simplex with bound flipping.

use super::{MilpError, MilpModel, MilpSolution, Sense, SolveStatus};

const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 200;
const DEGENERATE_STREAK: usize = 50;

/// Column-oriented LP in equality form (slacks implicit).
#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub n: usize,
    pub m: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    /// The same entries by row.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    /// Bounds for the `n` structurals followed by the `m` slacks.
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LpData {
    pub fn from_model(model: &MilpModel, lb: &[f64], ub: &[f64]) -> Self {
        let n = model.vars.len();
        let m = model.rows.len();
        let mut cols = vec![Vec::new(); n];
        let mut lbs = lb.to_vec();
        let mut ubs = ub.to_vec();
        let mut rhs = Vec::with_capacity(m);
        for (i, r) in model.rows.iter().enumerate() {
            for &(v, a) in &r.coeffs {
                if a != 0.0 {
                    cols[v.0].push((i, a));
                }
            }
            rhs.push(r.rhs);
            let (sl, su) = match r.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lbs.push(sl);
            ubs.push(su);
        }
        // merge duplicate entries of the same row in a column
        for c in &mut cols {
            c.sort_by_key(|e| e.0);
            c.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        let mut cost = vec![0.0; n];
        for &(v, c) in &model.objective {
            cost[v.0] += c;
        }
        let mut rows = vec![Vec::new(); m];
        for (j, c) in cols.iter().enumerate() {
            for &(i, a) in c {
                rows[i].push((j, a));
            }
        }
        LpData {
            n,
            m,
            cols,
            rows,
            cost,
            lb: lbs,
            ub: ubs,
            rhs,
        }
    }
}

/// Variable reference that survives rows/columns being appended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BasisVar {
    Structural(usize),
    Slack(usize),
}

/// Basis snapshot for warm starts.
#[derive(Debug, Clone, Default)]
pub(crate) struct WarmStart {
    pub basic: Vec<BasisVar>,
    pub at_upper: Vec<BasisVar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual_bound: f64,
    pub basis: WarmStart,
    pub factor: Factor,
}

/// The basis inverse at exit, reusable by a child that only changes bounds.
#[derive(Debug, Clone, Default)]
pub(crate) struct Factor {
    n: usize,
    m: usize,
    basis: Vec<usize>,
    etas: Vec<Eta>,
    since_refactor: usize,
}

/// Elementary transformation replacing unit column `row` by `(pivot, entries)`.
#[derive(Debug, Clone)]
struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

impl Eta {
    fn from_dense(row: usize, alpha: &[f64]) -> Self {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != row && v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        Eta {
            row,
            pivot: alpha[row],
            entries,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VStat {
    Basic,
    Lower,
    Upper,
    Zero,
}

struct Simplex<'a> {
    d: &'a LpData,
    basis: Vec<usize>,
    stat: Vec<VStat>,
    x: Vec<f64>,
    etas: Vec<Eta>,
    since_refactor: usize,
}

fn nonbasic_status(lb: f64, ub: f64, prefer_upper: bool) -> VStat {
    if prefer_upper && ub.is_finite() {
        VStat::Upper
    } else if lb.is_finite() {
        VStat::Lower
    } else if ub.is_finite() {
        VStat::Upper
    } else {
        VStat::Zero
    }
}

impl<'a> Simplex<'a> {
    fn new(d: &'a LpData, warm: Option<&WarmStart>, factor: Option<&Factor>) -> Self {
        let total = d.n + d.m;
        let mut s = Simplex {
            d,
            basis: Vec::new(),
            stat: vec![VStat::Lower; total],
            x: vec![0.0; total],
            etas: Vec::new(),
            since_refactor: 0,
        };
        if let Some(w) = warm {
            if s.load_warm(w, factor) {
                return s;
            }
        }
        s.load_slack_basis();
        s
    }

    fn index(&self, v: BasisVar) -> Option<usize> {
        match v {
            BasisVar::Structural(j) if j < self.d.n => Some(j),
            BasisVar::Slack(i) if i < self.d.m => Some(self.d.n + i),
            _ => None,
        }
    }

    fn to_basis_var(&self, j: usize) -> BasisVar {
        if j < self.d.n {
            BasisVar::Structural(j)
        } else {
            BasisVar::Slack(j - self.d.n)
        }
    }

    fn set_nonbasic_values(&mut self, upper: &[bool]) {
        for j in 0..self.d.n + self.d.m {
            if self.stat[j] == VStat::Basic {
                continue;
            }
            let st = nonbasic_status(self.d.lb[j], self.d.ub[j], upper[j]);
            self.stat[j] = st;
            self.x[j] = match st {
                VStat::Lower => self.d.lb[j],
                VStat::Upper => self.d.ub[j],
                _ => 0.0,
            };
        }
    }

    fn load_slack_basis(&mut self) {
        let (n, m) = (self.d.n, self.d.m);
        self.basis = (n..n + m).collect();
        self.stat = vec![VStat::Lower; n + m];
        for j in n..n + m {
            self.stat[j] = VStat::Basic;
        }
        self.set_nonbasic_values(&vec![false; n + m]);
        self.etas.clear();
        self.since_refactor = 0;
        self.recompute_basics();
    }

    fn load_warm(&mut self, w: &WarmStart, factor: Option<&Factor>) -> bool {
        let (n, m) = (self.d.n, self.d.m);
        let total = n + m;
        let mut is_basic = vec![false; total];
        let mut basis = Vec::with_capacity(m);
        for &bv in &w.basic {
            if let Some(j) = self.index(bv) {
                if !is_basic[j] {
                    is_basic[j] = true;
                    basis.push(j);
                }
            }
        }
        // rows appended since the snapshot start with their slack basic
        let mut covered = vec![false; m];
        for &j in &basis {
            if j >= n {
                covered[j - n] = true;
            }
        }
        if basis.len() < m {
            for i in 0..m {
                if basis.len() >= m {
                    break;
                }
                let j = n + i;
                if !is_basic[j] {
                    is_basic[j] = true;
                    basis.push(j);
                }
            }
        }
        if basis.len() != m {
            return false;
        }
        let mut upper = vec![false; total];
        for &bv in &w.at_upper {
            if let Some(j) = self.index(bv) {
                upper[j] = true;
            }
        }
        self.basis = basis;
        self.stat = vec![VStat::Lower; total];
        for &j in &self.basis {
            self.stat[j] = VStat::Basic;
        }
        self.set_nonbasic_values(&upper);
        match factor {
            Some(f) if f.n == n && f.m == m && f.basis == self.basis => {
                self.etas = f.etas.clone();
                self.since_refactor = f.since_refactor;
            }
            _ => {
                if !self.refactor() {
                    return false;
                }
            }
        }
        self.recompute_basics();
        true
    }

    fn col(&self, j: usize) -> ColIter<'_> {
        if j < self.d.n {
            ColIter::Sparse(self.d.cols[j].iter())
        } else {
            ColIter::Unit(Some(j - self.d.n))
        }
    }

    /// Rebuilds the eta file from the basic columns. Basic slacks keep their
    /// own rows; structurals go sparsest first, each pivoting on a free row
    /// with a large entry and few competing columns.
    fn refactor(&mut self) -> bool {
        let (n, m) = (self.d.n, self.d.m);
        self.since_refactor = 0;
        self.etas.clear();
        let mut new_basis = vec![usize::MAX; m];
        let mut structs = Vec::new();
        for &j in &self.basis {
            if j >= n {
                new_basis[j - n] = j;
            } else {
                structs.push(j);
            }
        }
        let mut row_count = vec![0usize; m];
        for &j in &structs {
            for &(i, _) in &self.d.cols[j] {
                if new_basis[i] == usize::MAX {
                    row_count[i] += 1;
                }
            }
        }
        let free_nnz = |j: usize| self.d.cols[j].iter().filter(|&&(i, _)| new_basis[i] == usize::MAX).count();
        structs.sort_by_cached_key(|&j| (free_nnz(j), j));
        let mut alpha = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut touched: Vec<usize> = Vec::new();
        for &j in &structs {
            for &(i, a) in &self.d.cols[j] {
                alpha[i] = a;
                mark[i] = true;
                touched.push(i);
            }
            // sparse B⁻¹ a_j, recording the fill
            for e in &self.etas {
                let vr = alpha[e.row];
                if vr == 0.0 {
                    continue;
                }
                let vr = vr / e.pivot;
                alpha[e.row] = vr;
                for &(i, a) in &e.entries {
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                    alpha[i] -= a * vr;
                }
            }
            let biggest = touched
                .iter()
                .filter(|&&i| new_basis[i] == usize::MAX)
                .map(|&i| alpha[i].abs())
                .fold(0.0, f64::max);
            if biggest < 1e-9 {
                return false;
            }
            let r = touched
                .iter()
                .copied()
                .filter(|&i| new_basis[i] == usize::MAX && alpha[i].abs() >= 0.1 * biggest)
                .min_by(|&a, &b| {
                    row_count[a]
                        .cmp(&row_count[b])
                        .then(alpha[b].abs().total_cmp(&alpha[a].abs()))
                        .then(a.cmp(&b))
                })
                .expect("the largest entry qualifies");
            new_basis[r] = j;
            for &(i, _) in &self.d.cols[j] {
                if row_count[i] > 0 {
                    row_count[i] -= 1;
                }
            }
            touched.sort_unstable();
            let entries = touched
                .iter()
                .filter(|&&i| i != r && alpha[i] != 0.0)
                .map(|&i| (i, alpha[i]))
                .collect();
            self.etas.push(Eta {
                row: r,
                pivot: alpha[r],
                entries,
            });
            for &i in &touched {
                alpha[i] = 0.0;
                mark[i] = false;
            }
            touched.clear();
        }
        self.basis = new_basis;
        true
    }

    /// `B⁻¹ v` in place.
    fn apply_etas(&self, v: &mut [f64]) {
        for e in &self.etas {
            let vr = v[e.row];
            if vr == 0.0 {
                continue;
            }
            let vr = vr / e.pivot;
            v[e.row] = vr;
            for &(i, a) in &e.entries {
                v[i] -= a * vr;
            }
        }
    }

    fn recompute_basics(&mut self) {
        let (n, m) = (self.d.n, self.d.m);
        let mut r = self.d.rhs.clone();
        for j in 0..n + m {
            if self.stat[j] == VStat::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (i, a) in self.col(j) {
                r[i] -= a * xj;
            }
        }
        self.apply_etas(&mut r);
        for p in 0..m {
            self.x[self.basis[p]] = r[p];
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut alpha = vec![0.0; self.d.m];
        for (i, a) in self.col(j) {
            alpha[i] = a;
        }
        self.apply_etas(&mut alpha);
        alpha
    }

    /// `cb B⁻¹`, applying the etas in reverse.
    fn duals(&self, cb: &[f64]) -> Vec<f64> {
        let mut pi = cb.to_vec();
        for e in self.etas.iter().rev() {
            let mut v = pi[e.row];
            for &(i, a) in &e.entries {
                v -= pi[i] * a;
            }
            pi[e.row] = v / e.pivot;
        }
        pi
    }

    fn reduced_cost(&self, j: usize, cj: f64, pi: &[f64]) -> f64 {
        cj - self.col(j).map(|(i, a)| pi[i] * a).sum::<f64>()
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        self.etas.push(Eta::from_dense(r, alpha));
        self.since_refactor += 1;
    }

    /// Dual simplex from a dual feasible basis (typically the parent's optimum
    /// after a bound change). Returns `Some(Infeasible)` on a proof of primal
    /// infeasibility and `None` once primal feasible or when dual feasibility
    /// is lost; the primal loop then finishes.
    fn dual_phase(&mut self, max_iter: usize) -> Result<(Option<LpStatus>, usize), MilpError> {
        let (n, m) = (self.d.n, self.d.m);
        let mut d = vec![0.0; n + m];
        let mut acc = vec![0.0; n + m];
        let mut mark = vec![false; n + m];
        let mut fresh = false;
        // Dual steepest-edge weights ‖e_p B⁻¹‖², started at 1 and reset when
        // a refactor reorders the basis.
        let mut w = vec![1.0; m];
        for iter in 0..max_iter {
            if self.since_refactor >= REFACTOR_EVERY {
                if !self.refactor() {
                    return Err(MilpError::Numerical("singular basis during refactor".into()));
                }
                self.recompute_basics();
                fresh = false;
                w.fill(1.0);
            }
            // leaving row: largest weighted bound violation
            let mut leave: Option<(usize, f64, f64)> = None; // (pos, target, score)
            for p in 0..m {
                let j = self.basis[p];
                let x = self.x[j];
                let (viol, target) = if x < self.d.lb[j] - PRIMAL_TOL {
                    (self.d.lb[j] - x, self.d.lb[j])
                } else if x > self.d.ub[j] + PRIMAL_TOL {
                    (x - self.d.ub[j], self.d.ub[j])
                } else {
                    continue;
                };
                let score = viol * viol / w[p];
                if leave.is_none_or(|(_, _, v)| score > v) {
                    leave = Some((p, target, score));
                }
            }
            let Some((r, target, _)) = leave else {
                return Ok((None, iter));
            };
            // reduced costs are recomputed after a refactor and updated otherwise
            let pi = if fresh {
                None
            } else {
                let cb: Vec<f64> = self.basis.iter().map(|&j| if j < n { self.d.cost[j] } else { 0.0 }).collect();
                fresh = true;
                Some(self.duals(&cb))
            };
            for j in 0..n + m {
                let Some(pi) = &pi else { break };
                if self.stat[j] == VStat::Basic {
                    continue;
                }
                let cj = if j < n { self.d.cost[j] } else { 0.0 };
                d[j] = self.reduced_cost(j, cj, pi);
                let infeasible = match self.stat[j] {
                    _ if self.d.lb[j] == self.d.ub[j] => false,
                    VStat::Lower => d[j] < -DUAL_TOL,
                    VStat::Upper => d[j] > DUAL_TOL,
                    VStat::Zero => d[j].abs() > DUAL_TOL,
                    VStat::Basic => false,
                };
                if infeasible {
                    return Ok((None, iter));
                }
            }
            let mut unit = vec![0.0; m];
            unit[r] = 1.0;
            let rho = self.duals(&unit);
            // x_r must rise (towards lb) or fall (towards ub)
            let rise = self.x[self.basis[r]] < target;
            // pivot row ρ·A over the nonbasics, accumulated row by row
            let mut touched: Vec<usize> = Vec::new();
            for (i, &ri) in rho.iter().enumerate() {
                if ri == 0.0 {
                    continue;
                }
                for &(j, a) in &self.d.rows[i] {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += ri * a;
                }
                let j = n + i;
                mark[j] = true;
                touched.push(j);
                acc[j] = ri;
            }
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(touched.len());
            for &j in &touched {
                if self.stat[j] != VStat::Basic && acc[j] != 0.0 {
                    row.push((j, acc[j]));
                }
                acc[j] = 0.0;
                mark[j] = false;
            }
            let mut cands: Vec<(f64, usize, f64)> = Vec::new(); // (ratio, j, alpha_rj)
            for &(j, a) in &row {
                let st = self.stat[j];
                if a.abs() <= PIVOT_TOL || self.d.lb[j] == self.d.ub[j] {
                    continue;
                }
                // x_r moves by -a per unit increase of x_j
                let up_ok = matches!(st, VStat::Lower | VStat::Zero);
                let down_ok = matches!(st, VStat::Upper | VStat::Zero);
                let eligible = if rise { (a < 0.0 && up_ok) || (a > 0.0 && down_ok) } else { (a > 0.0 && up_ok) || (a < 0.0 && down_ok) };
                if eligible {
                    cands.push((d[j].abs() / a.abs(), j, a));
                }
            }
            cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.2.abs().total_cmp(&x.2.abs())));
            // Bound-flipping ratio test: boxed candidates whose breakpoint
            // leaves the violation positive flip to their other bound.
            let mut slope = (self.x[self.basis[r]] - target).abs();
            let mut flips = Vec::new();
            let mut enter = None;
            for &(_, j, a) in &cands {
                let range = self.d.ub[j] - self.d.lb[j];
                if range.is_finite() && slope - a.abs() * range > PRIMAL_TOL {
                    slope -= a.abs() * range;
                    flips.push(j);
                } else {
                    enter = Some(j);
                    break;
                }
            }
            let Some(q) = enter else {
                return Ok((Some(LpStatus::Infeasible), iter));
            };
            if !flips.is_empty() {
                let mut delta = vec![0.0; m];
                for &j in &flips {
                    let (to, st) = if self.stat[j] == VStat::Lower { (self.d.ub[j], VStat::Upper) } else { (self.d.lb[j], VStat::Lower) };
                    let dx = to - self.x[j];
                    self.x[j] = to;
                    self.stat[j] = st;
                    for (i, a) in self.col(j) {
                        delta[i] += a * dx;
                    }
                }
                self.apply_etas(&mut delta);
                for p in 0..m {
                    let j = self.basis[p];
                    self.x[j] -= delta[p];
                }
            }
            let alpha = self.ftran(q);
            if alpha[r].abs() <= PIVOT_TOL {
                return Ok((None, iter));
            }
            let mut tau = rho.clone();
            self.apply_etas(&mut tau);
            let (ar, wr) = (alpha[r], w[r]);
            for p in 0..m {
                if p == r || alpha[p] == 0.0 {
                    continue;
                }
                let ratio = alpha[p] / ar;
                w[p] = (w[p] - 2.0 * ratio * tau[p] + ratio * ratio * wr).max(ratio * ratio * wr).max(1e-6);
            }
            w[r] = (wr / (ar * ar)).max(1e-6);
            let leaving = self.basis[r];
            let step = (self.x[leaving] - target) / alpha[r];
            self.x[q] += step;
            for p in 0..m {
                if alpha[p] != 0.0 {
                    let j = self.basis[p];
                    self.x[j] -= alpha[p] * step;
                }
            }
            self.x[leaving] = target;
            self.stat[leaving] = if target == self.d.lb[leaving] { VStat::Lower } else { VStat::Upper };
            self.stat[q] = VStat::Basic;
            self.basis[r] = q;
            self.pivot(r, &alpha);
            let theta = d[q] / alpha[r];
            for &(j, a) in &row {
                d[j] -= theta * a;
            }
            d[q] = 0.0;
            d[leaving] = -theta;
        }
        Ok((None, max_iter))
    }

    fn run(&mut self) -> Result<(LpStatus, usize), MilpError> {
        let (n, m) = (self.d.n, self.d.m);
        let total = n + m;
        let max_iter = 20 * (total + m) + 5_000;
        let (status, dual_iters) = self.dual_phase(max_iter / 2)?;
        if let Some(status) = status {
            return Ok((status, dual_iters));
        }
        let mut degenerate = 0usize;
        let mut cb = vec![0.0; m];
        for iter in dual_iters..max_iter {
            if self.since_refactor >= REFACTOR_EVERY {
                if !self.refactor() {
                    return Err(MilpError::Numerical("singular basis during refactor".into()));
                }
                self.recompute_basics();
            }
            let mut phase1 = false;
            for p in 0..m {
                let j = self.basis[p];
                let x = self.x[j];
                cb[p] = if x < self.d.lb[j] - PRIMAL_TOL {
                    phase1 = true;
                    -1.0
                } else if x > self.d.ub[j] + PRIMAL_TOL {
                    phase1 = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !phase1 {
                for p in 0..m {
                    let j = self.basis[p];
                    cb[p] = if j < n { self.d.cost[j] } else { 0.0 };
                }
            }
            let pi = self.duals(&cb);
            let bland = degenerate >= DEGENERATE_STREAK;

            // pricing
            let mut enter: Option<(usize, f64, f64)> = None; // (j, dir, |d|)
            for j in 0..total {
                let st = self.stat[j];
                if st == VStat::Basic || self.d.lb[j] == self.d.ub[j] {
                    continue;
                }
                let cj = if !phase1 && j < n { self.d.cost[j] } else { 0.0 };
                let dj = self.reduced_cost(j, cj, &pi);
                let dir = match st {
                    VStat::Lower if dj < -DUAL_TOL => 1.0,
                    VStat::Upper if dj > DUAL_TOL => -1.0,
                    VStat::Zero if dj.abs() > DUAL_TOL => -dj.signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir, dj.abs()));
                    break;
                }
                if enter.is_none_or(|(_, _, best)| dj.abs() > best) {
                    enter = Some((j, dir, dj.abs()));
                }
            }
            let Some((q, dir, _)) = enter else {
                return Ok((
                    if phase1 {
                        LpStatus::Infeasible
                    } else {
                        LpStatus::Optimal
                    },
                    iter,
                ));
            };

            let alpha = self.ftran(q);
            // ratio test
            let mut theta = f64::INFINITY;
            let mut leave: Option<(usize, f64, f64)> = None; // (pos, bound value, |alpha|)
            for p in 0..m {
                let a = alpha[p];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[p];
                let x = self.x[j];
                let rate = -dir * a;
                let (lb, ub) = (self.d.lb[j], self.d.ub[j]);
                let (limit, target) = if rate < 0.0 {
                    if x > ub + PRIMAL_TOL {
                        ((x - ub) / -rate, ub)
                    } else if x < lb - PRIMAL_TOL || lb == f64::NEG_INFINITY {
                        continue;
                    } else {
                        (((x - lb) / -rate).max(0.0), lb)
                    }
                } else if x < lb - PRIMAL_TOL {
                    ((lb - x) / rate, lb)
                } else if x > ub + PRIMAL_TOL || ub == f64::INFINITY {
                    continue;
                } else {
                    (((ub - x) / rate).max(0.0), ub)
                };
                let replace = match leave {
                    None => true,
                    Some((lp, _, la)) => {
                        limit < theta - 1e-12
                            || (limit <= theta + 1e-12
                                && if bland {
                                    self.basis[p] < self.basis[lp]
                                } else {
                                    a.abs() > la
                                })
                    }
                };
                if replace {
                    theta = theta.min(limit);
                    leave = Some((p, target, a.abs()));
                }
            }
            let span = self.d.ub[q] - self.d.lb[q];
            let flip = span.is_finite() && span <= theta;
            if flip {
                theta = span;
            }
            if theta.is_infinite() {
                if phase1 {
                    return Err(MilpError::Numerical("unbounded phase-1 ray".into()));
                }
                return Ok((LpStatus::Unbounded, iter));
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            // update values
            self.x[q] += dir * theta;
            for p in 0..m {
                let a = alpha[p];
                if a != 0.0 {
                    let j = self.basis[p];
                    self.x[j] -= dir * theta * a;
                }
            }
            if flip {
                self.stat[q] = if dir > 0.0 { VStat::Upper } else { VStat::Lower };
                self.x[q] = if dir > 0.0 { self.d.ub[q] } else { self.d.lb[q] };
                continue;
            }
            let (r, target, _) = leave.expect("finite ratio has a leaving row");
            let jl = self.basis[r];
            self.x[jl] = target;
            self.stat[jl] = if target == self.d.lb[jl] {
                VStat::Lower
            } else {
                VStat::Upper
            };
            self.stat[q] = VStat::Basic;
            self.basis[r] = q;
            self.pivot(r, &alpha);
        }
        Err(MilpError::Numerical("iteration limit".into()))
    }

    fn snapshot(&self) -> WarmStart {
        WarmStart {
            basic: self.basis.iter().map(|&j| self.to_basis_var(j)).collect(),
            at_upper: (0..self.d.n + self.d.m)
                .filter(|&j| self.stat[j] == VStat::Upper)
                .map(|j| self.to_basis_var(j))
                .collect(),
        }
    }

    /// Lagrangian dual bound `π·b + Σ_j min_{l≤z≤u} d_j z` at the current basis.
    fn dual_bound(&self) -> f64 {
        let (n, m) = (self.d.n, self.d.m);
        let cb: Vec<f64> = self
            .basis
            .iter()
            .map(|&j| if j < n { self.d.cost[j] } else { 0.0 })
            .collect();
        let pi = self.duals(&cb);
        let mut bound: f64 = pi.iter().zip(&self.d.rhs).map(|(p, b)| p * b).sum();
        for j in 0..n + m {
            let cj = if j < n { self.d.cost[j] } else { 0.0 };
            let dj = self.reduced_cost(j, cj, &pi);
            let term = if dj.abs() <= DUAL_TOL {
                dj * self.x[j]
            } else if dj > 0.0 {
                dj * self.d.lb[j]
            } else {
                dj * self.d.ub[j]
            };
            bound += term;
        }
        bound
    }
}

enum ColIter<'a> {
    Sparse(std::slice::Iter<'a, (usize, f64)>),
    Unit(Option<usize>),
}

impl Iterator for ColIter<'_> {
    type Item = (usize, f64);
    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColIter::Sparse(it) => it.next().copied(),
            ColIter::Unit(i) => i.take().map(|i| (i, 1.0)),
        }
    }
}

pub(crate) fn run_lp(data: &LpData, warm: Option<&WarmStart>, factor: Option<&Factor>) -> Result<LpResult, MilpError> {
    let mut s = Simplex::new(data, warm, factor);
    let (status, _) = match s.run() {
        Ok(r) => r,
        // a cold restart occasionally recovers from a bad warm basis
        Err(_) if warm.is_some() => {
            s = Simplex::new(data, None, None);
            s.run()?
        }
        Err(e) => return Err(e),
    };
    let x = s.x[..data.n].to_vec();
    let objective = x.iter().zip(&data.cost).map(|(a, b)| a * b).sum();
    let dual_bound = if status == LpStatus::Optimal {
        s.dual_bound()
    } else {
        f64::NAN
    };
    Ok(LpResult {
        status,
        x,
        objective,
        dual_bound,
        basis: s.snapshot(),
        factor: Factor {
            n: data.n,
            m: data.m,
            since_refactor: s.since_refactor,
            basis: std::mem::take(&mut s.basis),
            etas: std::mem::take(&mut s.etas),
        },
    })
}

/// Solves the continuous relaxation of `model`.
pub fn solve_lp(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let lb: Vec<f64> = model.vars.iter().map(|v| v.lb).collect();
    let ub: Vec<f64> = model.vars.iter().map(|v| v.ub).collect();
    let data = LpData::from_model(model, &lb, &ub);
    let res = run_lp(&data, None, None)?;
    let status = match res.status {
        LpStatus::Optimal => SolveStatus::Optimal,
        LpStatus::Infeasible => SolveStatus::Infeasible,
        LpStatus::Unbounded => SolveStatus::Unbounded,
    };
    let objective_value = res.objective + model.obj_offset;
    let gap = if status == SolveStatus::Optimal {
        (res.objective - res.dual_bound).abs()
    } else {
        0.0
    };
    Ok(MilpSolution {
        status,
        values: if status == SolveStatus::Optimal {
            res.x
        } else {
            Vec::new()
        },
        objective_value,
        best_bound: if status == SolveStatus::Optimal {
            objective_value
        } else {
            f64::NAN
        },
        proven: true,
        node_count: 0,
        lp_count: 1,
        lazy_rows_added: 0,
        lazy_vars_added: 0,
        max_duality_gap: gap,
    })
}
