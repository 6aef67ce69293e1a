//! Rooted capacitated digraphs, the fictive-sink augmentation, an integral
//! max-flow engine, and the exhaustive failure oracle.
//!
//! Every solver in this crate talks about arcs by their stable index into
//! [`AugmentedInstance::arcs`]: the first `base.arcs.len()` indices are the
//! initial arcs, followed by one fictive arc per terminal in terminal order.

use std::collections::VecDeque;

use thiserror::Error;

pub type NodeId = usize;
pub type ArcId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("root {0} is not a node")]
    RootOutOfRange(NodeId),
    #[error("terminal {0} is not a node")]
    TerminalOutOfRange(NodeId),
    #[error("root {0} is listed as a terminal")]
    RootIsTerminal(NodeId),
    #[error("arc {0} references a node out of range")]
    ArcOutOfRange(ArcId),
    #[error("arc {0} enters the root")]
    ArcIntoRoot(ArcId),
    #[error("arc {0} is a self-loop")]
    SelfLoop(ArcId),
    #[error("arc {0} has zero capacity")]
    ZeroCapacity(ArcId),
    #[error("arc {0} has a negative or non-finite cost")]
    BadCost(ArcId),
    #[error("coordinates given for {given} nodes, expected {expected}")]
    CoordinateCount { given: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    pub capacity: u32,
    pub cost: f64,
}

/// A rooted capacitated digraph with a terminal set.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n_nodes: usize,
    arcs: Vec<Arc>,
    root: NodeId,
    terminals: Vec<NodeId>,
    coords: Option<Vec<(f64, f64)>>,
}

impl Instance {
    pub fn new(
        n_nodes: usize,
        arcs: Vec<Arc>,
        root: NodeId,
        terminals: Vec<NodeId>,
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<Self, InstanceError> {
        if root >= n_nodes {
            return Err(InstanceError::RootOutOfRange(root));
        }
        let mut terminals = terminals;
        terminals.sort_unstable();
        terminals.dedup();
        for &t in &terminals {
            if t >= n_nodes {
                return Err(InstanceError::TerminalOutOfRange(t));
            }
            if t == root {
                return Err(InstanceError::RootIsTerminal(t));
            }
        }
        for (id, a) in arcs.iter().enumerate() {
            if a.tail >= n_nodes || a.head >= n_nodes {
                return Err(InstanceError::ArcOutOfRange(id));
            }
            if a.head == root {
                return Err(InstanceError::ArcIntoRoot(id));
            }
            if a.tail == a.head {
                return Err(InstanceError::SelfLoop(id));
            }
            if a.capacity == 0 {
                return Err(InstanceError::ZeroCapacity(id));
            }
            if !a.cost.is_finite() || a.cost < 0.0 {
                return Err(InstanceError::BadCost(id));
            }
        }
        if let Some(c) = &coords {
            if c.len() != n_nodes {
                return Err(InstanceError::CoordinateCount {
                    given: c.len(),
                    expected: n_nodes,
                });
            }
        }
        Ok(Instance {
            n_nodes,
            arcs,
            root,
            terminals,
            coords,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Terminals, sorted ascending.
    pub fn terminals(&self) -> &[NodeId] {
        &self.terminals
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    pub fn is_terminal(&self, v: NodeId) -> bool {
        self.terminals.binary_search(&v).is_ok()
    }

    pub fn out_arcs(&self, v: NodeId) -> impl Iterator<Item = ArcId> + '_ {
        self.arcs
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.tail == v)
            .map(|(i, _)| i)
    }

    pub fn in_arcs(&self, v: NodeId) -> impl Iterator<Item = ArcId> + '_ {
        self.arcs
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.head == v)
            .map(|(i, _)| i)
    }

    /// True when every arc has the same capacity.
    pub fn uniform_capacity(&self) -> Option<u32> {
        let first = self.arcs.first()?.capacity;
        self.arcs
            .iter()
            .all(|a| a.capacity == first)
            .then_some(first)
    }
}

/// The instance plus a fictive sink fed by one unit arc per terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedInstance {
    base: Instance,
    sink: NodeId,
    arcs: Vec<Arc>,
}

pub fn augment_with_sink(inst: &Instance) -> AugmentedInstance {
    let sink = inst.n_nodes();
    let mut arcs = inst.arcs().to_vec();
    arcs.extend(inst.terminals().iter().map(|&t| Arc {
        tail: t,
        head: sink,
        capacity: 1,
        cost: 0.0,
    }));
    AugmentedInstance {
        base: inst.clone(),
        sink,
        arcs,
    }
}

impl AugmentedInstance {
    pub fn base(&self) -> &Instance {
        &self.base
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn root(&self) -> NodeId {
        self.base.root()
    }

    pub fn n_nodes(&self) -> usize {
        self.base.n_nodes() + 1
    }

    pub fn n_terminals(&self) -> usize {
        self.base.terminals().len()
    }

    /// Initial arcs followed by fictive arcs.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn n_initial(&self) -> usize {
        self.base.arcs().len()
    }

    pub fn initial_arcs(&self) -> std::ops::Range<ArcId> {
        0..self.n_initial()
    }

    pub fn fictive_arcs(&self) -> std::ops::Range<ArcId> {
        self.n_initial()..self.arcs.len()
    }

    pub fn is_fictive(&self, a: ArcId) -> bool {
        a >= self.n_initial()
    }

    /// Fictive arc of the `i`-th terminal (terminal order).
    pub fn fictive_arc_of(&self, terminal: NodeId) -> Option<ArcId> {
        self.base
            .terminals()
            .binary_search(&terminal)
            .ok()
            .map(|i| self.n_initial() + i)
    }

    /// Capacity vector `u(a)·[a ∈ selected]`.
    pub fn selected_capacities(&self, selected: &[bool]) -> Vec<u64> {
        self.arcs
            .iter()
            .zip(selected)
            .map(|(a, &s)| if s { a.capacity as u64 } else { 0 })
            .collect()
    }

    pub fn full_selection(&self) -> Vec<bool> {
        vec![true; self.arcs.len()]
    }

    /// Membership vector of a list of arc ids.
    pub fn mask(&self, ids: &[ArcId]) -> Vec<bool> {
        let mut m = vec![false; self.arcs.len()];
        for &a in ids {
            m[a] = true;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowAssignment {
    pub flow: Vec<u64>,
    pub value: u64,
}

/// An r–s cut together with an optional set of deleted arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutCertificate {
    /// Nodes on the root side, sorted.
    pub side_root: Vec<NodeId>,
    /// Arcs leaving the root side (entering the sink side), sorted.
    pub cutset: Vec<ArcId>,
    /// Deleted arcs of the cutset, sorted.
    pub deleted: Vec<ArcId>,
    pub residual_capacity: u64,
}

impl CutCertificate {
    fn from_side(arcs: &[Arc], in_root_side: &[bool], cap: &[u64], deleted: &[ArcId]) -> Self {
        let side_root = (0..in_root_side.len())
            .filter(|&v| in_root_side[v])
            .collect();
        let cutset: Vec<ArcId> = arcs
            .iter()
            .enumerate()
            .filter(|(_, a)| in_root_side[a.tail] && !in_root_side[a.head])
            .map(|(i, _)| i)
            .collect();
        let deleted: Vec<ArcId> = deleted
            .iter()
            .copied()
            .filter(|d| cutset.binary_search(d).is_ok())
            .collect();
        let residual_capacity = cutset
            .iter()
            .filter(|a| deleted.binary_search(a).is_err())
            .map(|&a| cap[a])
            .sum();
        CutCertificate {
            side_root,
            cutset,
            deleted,
            residual_capacity,
        }
    }
}

/// A set of simultaneously failing initial arcs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Scenario {
    pub failed: Vec<ArcId>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("failure budget k must be non-negative, got {0}")]
    NegativeK(i64),
    #[error("separation fallback failed: {0}")]
    Separation(String),
}

/// Dinic's algorithm on an explicit residual network.
#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    n: usize,
    head: Vec<usize>,
    cap: Vec<u64>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub(crate) fn new(n: usize) -> Self {
        FlowNetwork {
            n,
            head: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Adds an arc and its reverse; returns the forward edge index.
    pub(crate) fn add_arc(&mut self, from: usize, to: usize, cap: u64) -> usize {
        let e = self.head.len();
        self.head.push(to);
        self.cap.push(cap);
        self.adj[from].push(e);
        self.head.push(from);
        self.cap.push(0);
        self.adj[to].push(e + 1);
        e
    }

    /// Flow currently routed on forward edge `e`.
    pub(crate) fn flow_on(&self, e: usize) -> u64 {
        self.cap[e ^ 1]
    }

    fn bfs_levels(&self, s: usize, t: usize, level: &mut [i64]) -> bool {
        level.fill(-1);
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                let w = self.head[e];
                if self.cap[e] > 0 && level[w] < 0 {
                    level[w] = level[v] + 1;
                    q.push_back(w);
                }
            }
        }
        level[t] >= 0
    }

    fn dfs_push(&mut self, v: usize, t: usize, pushed: u64, level: &[i64], it: &mut [usize]) -> u64 {
        if v == t {
            return pushed;
        }
        while it[v] < self.adj[v].len() {
            let e = self.adj[v][it[v]];
            let w = self.head[e];
            if self.cap[e] > 0 && level[w] == level[v] + 1 {
                let d = self.dfs_push(w, t, pushed.min(self.cap[e]), level, it);
                if d > 0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            it[v] += 1;
        }
        0
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        if s == t {
            return 0;
        }
        let mut total = 0;
        let mut level = vec![-1; self.n];
        let mut it = vec![0; self.n];
        while self.bfs_levels(s, t, &mut level) {
            it.fill(0);
            loop {
                let f = self.dfs_push(s, t, u64::MAX, &level, &mut it);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Nodes reachable from `s` in the residual network.
    pub(crate) fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                let w = self.head[e];
                if self.cap[e] > 0 && !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        seen
    }

    /// Nodes from which `t` is reachable in the residual network.
    pub(crate) fn residual_coreachable(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        seen[t] = true;
        let mut q = VecDeque::from([t]);
        while let Some(w) = q.pop_front() {
            for &e in &self.adj[w] {
                let x = self.head[e];
                if self.cap[e ^ 1] > 0 && !seen[x] {
                    seen[x] = true;
                    q.push_back(x);
                }
            }
        }
        seen
    }
}

fn build_network(aug: &AugmentedInstance, cap: &[u64]) -> (FlowNetwork, Vec<usize>) {
    let mut net = FlowNetwork::new(aug.n_nodes());
    let edges = aug
        .arcs()
        .iter()
        .zip(cap)
        .map(|(a, &c)| net.add_arc(a.tail, a.head, c))
        .collect();
    (net, edges)
}

/// Integral maximum r→s flow under the capacity vector `cap` (indexed by arc id).
pub fn max_flow(aug: &AugmentedInstance, cap: &[u64]) -> FlowAssignment {
    assert_eq!(cap.len(), aug.arcs().len(), "capacity vector length");
    let (mut net, edges) = build_network(aug, cap);
    let value = net.max_flow(aug.root(), aug.sink());
    FlowAssignment {
        flow: edges.iter().map(|&e| net.flow_on(e)).collect(),
        value,
    }
}

/// Minimum r–s cut; the root side is the residual-reachable set after a max flow.
pub fn min_cut(aug: &AugmentedInstance, cap: &[u64]) -> CutCertificate {
    assert_eq!(cap.len(), aug.arcs().len(), "capacity vector length");
    let (mut net, _) = build_network(aug, cap);
    net.max_flow(aug.root(), aug.sink());
    let side = net.residual_reachable(aug.root());
    CutCertificate::from_side(aug.arcs(), &side, cap, &[])
}

/// The minimum cuts closest to the root and closest to the sink (equal when
/// the minimum cut is unique).
pub fn extreme_min_cuts(aug: &AugmentedInstance, cap: &[u64]) -> (CutCertificate, CutCertificate) {
    assert_eq!(cap.len(), aug.arcs().len(), "capacity vector length");
    let (mut net, _) = build_network(aug, cap);
    net.max_flow(aug.root(), aug.sink());
    let near_root = net.residual_reachable(aug.root());
    let near_sink: Vec<bool> = net.residual_coreachable(aug.sink()).iter().map(|&b| !b).collect();
    (
        CutCertificate::from_side(aug.arcs(), &near_root, cap, &[]),
        CutCertificate::from_side(aug.arcs(), &near_sink, cap, &[]),
    )
}

/// Cut certificate for an explicit root-side membership vector.
pub fn cut_from_side(
    aug: &AugmentedInstance,
    in_root_side: &[bool],
    cap: &[u64],
    deleted: &[ArcId],
) -> CutCertificate {
    let mut deleted = deleted.to_vec();
    deleted.sort_unstable();
    CutCertificate::from_side(aug.arcs(), in_root_side, cap, &deleted)
}

/// Subsets at or below this size are enumerated by [`most_vital_arcs`].
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 200_000;

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Result of the worst-case deletion search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VitalArcs {
    pub scenario: Scenario,
    /// Max r→s flow left after the scenario.
    pub residual: u64,
    /// Minimum cut after the scenario, with the deleted arcs it contains.
    pub cut: CutCertificate,
}

fn candidates(aug: &AugmentedInstance, selected: &[bool], protected: &[bool]) -> Vec<ArcId> {
    aug.initial_arcs()
        .filter(|&a| selected[a] && !protected[a])
        .collect()
}

/// Lexicographic walk over all `k`-subsets of `0..n`.
pub(crate) struct Combinations {
    idx: Vec<usize>,
    n: usize,
    first: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            idx: (0..k).collect(),
            n,
            first: true,
        }
    }

    pub(crate) fn next_combo(&mut self) -> Option<&[usize]> {
        let k = self.idx.len();
        if self.first {
            self.first = false;
            return (k <= self.n).then_some(&self.idx[..]);
        }
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx[..]);
            }
        }
        None
    }
}

/// Enumerates every deletion set of size `min(k, |candidates|)` and keeps the
/// one leaving the smallest max flow (first in lexicographic order on ties).
pub fn most_vital_arcs_enumerate(
    aug: &AugmentedInstance,
    selected: &[bool],
    protected: &[bool],
    k: usize,
) -> VitalArcs {
    let cand = candidates(aug, selected, protected);
    let kk = k.min(cand.len());
    let base_cap = aug.selected_capacities(selected);
    let mut best: Option<(u64, Vec<ArcId>)> = None;
    let mut cap = base_cap.clone();
    let mut combos = Combinations::new(cand.len(), kk);
    while let Some(c) = combos.next_combo() {
        let del: Vec<ArcId> = c.iter().map(|&i| cand[i]).collect();
        for &a in &del {
            cap[a] = 0;
        }
        let (mut net, _) = build_network(aug, &cap);
        let v = net.max_flow(aug.root(), aug.sink());
        for &a in &del {
            cap[a] = base_cap[a];
        }
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, del));
            if v == 0 {
                break;
            }
        }
    }
    let (residual, failed) = best.expect("at least one combination");
    let mut cap = base_cap;
    for &a in &failed {
        cap[a] = 0;
    }
    let mut cut = min_cut(aug, &cap);
    // Report the deletions inside the cut against the undeleted capacities.
    let sel_cap = aug.selected_capacities(selected);
    cut.deleted = failed
        .iter()
        .copied()
        .filter(|a| cut.cutset.binary_search(a).is_ok())
        .collect();
    debug_assert_eq!(
        cut.cutset
            .iter()
            .filter(|a| cut.deleted.binary_search(a).is_err())
            .map(|&a| sel_cap[a])
            .sum::<u64>(),
        residual
    );
    VitalArcs {
        scenario: Scenario { failed },
        residual,
        cut,
    }
}

/// Like [`most_vital_arcs_enumerate`] on explicit capacities: each candidate
/// arc drops from `cap[a]` to `cap_failed[a]` when it fails. Returns the
/// deletion set, the flow left and the minimum cut closest to the root.
pub(crate) fn weakest_scenario(
    aug: &AugmentedInstance,
    cap: &[u64],
    cap_failed: &[u64],
    cand: &[ArcId],
    k: usize,
) -> (Vec<ArcId>, u64, CutCertificate) {
    let kk = k.min(cand.len());
    let mut work = cap.to_vec();
    let mut best: Option<(u64, Vec<ArcId>)> = None;
    let mut combos = Combinations::new(cand.len(), kk);
    while let Some(c) = combos.next_combo() {
        for &i in c {
            work[cand[i]] = cap_failed[cand[i]];
        }
        let (mut net, _) = build_network(aug, &work);
        let v = net.max_flow(aug.root(), aug.sink());
        for &i in c {
            work[cand[i]] = cap[cand[i]];
        }
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, c.iter().map(|&i| cand[i]).collect()));
        }
    }
    let (value, failed) = best.expect("at least one combination");
    for &a in &failed {
        work[a] = cap_failed[a];
    }
    let mut cut = min_cut(aug, &work);
    cut.deleted = failed.iter().copied().filter(|a| cut.cutset.binary_search(a).is_ok()).collect();
    (failed, value, cut)
}

/// The `k` unprotected selected initial arcs whose joint removal minimizes the
/// max r→s flow. Enumerates when `C(candidates, k) <= budget`, otherwise
/// solves the cut-based separation MIP.
pub fn most_vital_arcs_with_budget(
    aug: &AugmentedInstance,
    selected: &[bool],
    protected: &[bool],
    k: i64,
    budget: u64,
) -> Result<VitalArcs, OracleError> {
    if k < 0 {
        return Err(OracleError::NegativeK(k));
    }
    let k = k as usize;
    let n_cand = candidates(aug, selected, protected).len();
    if binomial(n_cand, k.min(n_cand)) <= budget {
        return Ok(most_vital_arcs_enumerate(aug, selected, protected, k));
    }
    let sep = crate::survivable::separation_mip_cut(aug, selected, protected, k)
        .map_err(|e| OracleError::Separation(e.to_string()))?;
    let mut failed = sep.cut.deleted.clone();
    failed.sort_unstable();
    Ok(VitalArcs {
        scenario: Scenario { failed },
        residual: sep.residual,
        cut: sep.cut,
    })
}

pub fn most_vital_arcs(
    aug: &AugmentedInstance,
    selected: &[bool],
    protected: &[bool],
    k: i64,
) -> Result<VitalArcs, OracleError> {
    most_vital_arcs_with_budget(aug, selected, protected, k, DEFAULT_ENUMERATION_BUDGET)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Worst-case residual flow.
    pub residual: u64,
    /// A violating scenario when infeasible.
    pub witness: Option<Scenario>,
}

/// True iff every deletion of at most `k` unprotected selected initial arcs
/// leaves an r→s flow of at least |T|.
pub fn check_feasibility(
    aug: &AugmentedInstance,
    selected: &[bool],
    protected: &[bool],
    k: i64,
) -> Result<Feasibility, OracleError> {
    let vital = most_vital_arcs(aug, selected, protected, k)?;
    let feasible = vital.residual >= aug.n_terminals() as u64;
    Ok(Feasibility {
        feasible,
        residual: vital.residual,
        witness: (!feasible).then_some(vital.scenario),
    })
}

/// Number of arc-disjoint r→t paths using selected initial arcs.
pub fn count_arc_disjoint_paths(aug: &AugmentedInstance, selected: &[bool], t: NodeId) -> u64 {
    let mut net = FlowNetwork::new(aug.n_nodes());
    for a in aug.initial_arcs() {
        if selected[a] {
            let arc = &aug.arcs()[a];
            net.add_arc(arc.tail, arc.head, 1);
        }
    }
    net.max_flow(aug.root(), t)
}
