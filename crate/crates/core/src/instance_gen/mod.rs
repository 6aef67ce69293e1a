//! Random geometric instances, the 3-Partition reduction graph, and the text
//! instance format.

mod format;

use std::collections::{BTreeSet, VecDeque};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{self, Arc, Instance, InstanceError};

pub use format::{format_instance, parse_instance, read_instance, write_instance, FormatError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("no instance survives k = {k} after {attempts} attempts (last residual {residual} < |T| = {terminals})")]
    RetriesExhausted {
        attempts: usize,
        k: usize,
        residual: u64,
        terminals: usize,
    },
    #[error("invalid 3-Partition instance: {0}")]
    InvalidThreePartition(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_nodes: usize,
    pub n_terminals: usize,
    pub target_arc_count: usize,
    pub seed: u64,
    pub plane_size: f64,
    /// Largest failure budget the instance must survive with every arc selected.
    pub max_k: usize,
    /// Emit one arc per nearest-neighbour pair instead of both directions.
    pub one_directional: bool,
    pub max_attempts: usize,
}

impl GenConfig {
    pub fn new(n_nodes: usize, n_terminals: usize, target_arc_count: usize, seed: u64) -> Self {
        GenConfig {
            n_nodes,
            n_terminals,
            target_arc_count,
            seed,
            plane_size: 100.0,
            max_k: 2,
            one_directional: false,
            max_attempts: 200,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidConfig(m.to_string()));
        if self.n_terminals == 0 || self.n_terminals >= self.n_nodes {
            return bad("need 1 <= terminals < nodes");
        }
        if !(self.plane_size.is_finite() && self.plane_size > 0.0) {
            return bad("plane size must be positive");
        }
        if self.target_arc_count < self.n_nodes - 1 {
            return bad("too few arcs to reach every node");
        }
        if self.max_attempts == 0 {
            return bad("need at least one attempt");
        }
        Ok(())
    }
}

/// Rounds to 6 decimals so costs survive the text format bit for bit.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn capacity_levels(nt: usize) -> [u32; 4] {
    // ⌈f·|T|⌉ in exact integer arithmetic for f = 0.8, 0.6, 0.4, 0.2.
    [8, 6, 4, 2].map(|f| (f * nt as u32).div_ceil(10))
}

fn attempt(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Result<Instance, GenError> {
    let n = cfg.n_nodes;
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen::<f64>() * cfg.plane_size, rng.gen::<f64>() * cfg.plane_size))
        .collect();
    let root = 0;
    let mut terminals: Vec<usize> = sample(rng, n - 1, cfg.n_terminals).into_iter().map(|i| i + 1).collect();
    terminals.sort_unstable();
    let dist = |a: usize, b: usize| ((coords[a].0 - coords[b].0).powi(2) + (coords[a].1 - coords[b].1).powi(2)).sqrt();

    // Round-robin nearest-neighbour picks: root first (with extra picks so it
    // can survive `max_k` failures), then terminals, then Steiner nodes.
    let mut order = vec![root];
    order.extend(terminals.iter().copied());
    order.extend((1..n).filter(|v| terminals.binary_search(v).is_err()));
    let by_distance: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut others: Vec<usize> = (0..n).filter(|&w| w != v).collect();
            others.sort_by(|&a, &b| dist(v, a).total_cmp(&dist(v, b)).then(a.cmp(&b)));
            others
        })
        .collect();
    let arcs_of_pair = |a: usize, b: usize| if a == root || b == root || cfg.one_directional { 1 } else { 2 };
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut picked: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut arc_count = 0;
    let mut round = 0;
    loop {
        let mut progress = false;
        for &v in &order {
            let picks = if v == root && round == 0 { cfg.max_k + 2 } else { 1 };
            for _ in 0..picks {
                let next = by_distance[v]
                    .iter()
                    .copied()
                    .find(|&w| !pairs.contains(&(v.min(w), v.max(w))));
                let Some(w) = next else { break };
                let add = arcs_of_pair(v, w);
                if arc_count + add > cfg.target_arc_count {
                    break;
                }
                pairs.insert((v.min(w), v.max(w)));
                picked[v].push(w);
                arc_count += add;
                progress = true;
            }
        }
        round += 1;
        if !progress || arc_count >= cfg.target_arc_count {
            break;
        }
    }

    // Directions: away from the root; otherwise both, or from the picker.
    let mut directed: Vec<(usize, usize)> = Vec::new();
    for v in 0..n {
        for &w in &picked[v] {
            if w == root {
                directed.push((root, v));
            } else if v == root || cfg.one_directional {
                directed.push((v, w));
            } else {
                directed.push((v, w));
                directed.push((w, v));
            }
        }
    }
    directed.sort_unstable();

    let mut hops = vec![usize::MAX; n];
    hops[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &(a, b) in &directed {
            if a == v && hops[b] == usize::MAX {
                hops[b] = hops[v] + 1;
                queue.push_back(b);
            }
        }
    }
    let nt = terminals.len();
    let levels = capacity_levels(nt);
    let arcs: Vec<Arc> = directed
        .iter()
        .map(|&(a, b)| {
            let near = hops[a] <= 2 && hops[b] <= 2;
            let capacity = if near { levels[rng.gen_range(0..2)] } else { levels[rng.gen_range(0..4)] };
            let cost = round6(dist(a, b) * (1.0 + capacity as f64 / nt as f64));
            Arc {
                tail: a,
                head: b,
                capacity,
                cost,
            }
        })
        .collect();
    Ok(Instance::new(n, arcs, root, terminals, Some(coords))?)
}

/// A random instance on which selecting every arc survives `cfg.max_k` failures.
pub fn generate_random(cfg: &GenConfig) -> Result<Instance, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut last = 0;
    for _ in 0..cfg.max_attempts {
        let inst = attempt(cfg, &mut rng)?;
        if cfg.max_k + 1 > inst.arcs().len() {
            continue;
        }
        let aug = graph::augment_with_sink(&inst);
        let all = aug.full_selection();
        let none = vec![false; all.len()];
        let check = graph::check_feasibility(&aug, &all, &none, cfg.max_k as i64)
            .map_err(|e| GenError::InvalidConfig(e.to_string()))?;
        if check.feasible {
            return Ok(inst);
        }
        last = check.residual;
    }
    Err(GenError::RetriesExhausted {
        attempts: cfg.max_attempts,
        k: cfg.max_k,
        residual: last,
        terminals: cfg.n_terminals,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreePartitionInstance {
    pub m: usize,
    pub b: u32,
    pub d: Vec<u32>,
}

impl ThreePartitionInstance {
    pub fn new(m: usize, b: u32, d: Vec<u32>) -> Result<Self, GenError> {
        let bad = |msg: String| Err(GenError::InvalidThreePartition(msg));
        if m == 0 {
            return bad("m must be positive".into());
        }
        if d.len() != 3 * m {
            return bad(format!("expected {} sizes, got {}", 3 * m, d.len()));
        }
        let total: u64 = d.iter().map(|&x| x as u64).sum();
        if total != m as u64 * b as u64 {
            return bad(format!("sizes sum to {total}, expected m·B = {}", m as u64 * b as u64));
        }
        if let Some(&x) = d.iter().find(|&&x| !(4 * x > b && 2 * x < b)) {
            return bad(format!("size {x} is not strictly between B/4 and B/2"));
        }
        Ok(ThreePartitionInstance { m, b, d })
    }

    /// Parses `"m,B:d1,d2,..."`.
    pub fn parse(s: &str) -> Result<Self, GenError> {
        let bad = || GenError::InvalidThreePartition(format!("expected \"m,B:d1,...\", got {s:?}"));
        let (head, tail) = s.split_once(':').ok_or_else(bad)?;
        let (m, b) = head.split_once(',').ok_or_else(bad)?;
        let m = m.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        let d = tail
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<Vec<u32>, _>>()?;
        Self::new(m, b, d)
    }
}

/// The reduction graph: root `0`, `v_j = j` for `j in 1..=m`,
/// `w_i = m + i` for `i in 1..=3m`, then `d_i − 1` pendant nodes per `w_i`.
/// Every non-root node is a terminal, capacities are |T| and costs 1.
/// Returns the instance and β = B + 1.
pub fn generate_3partition_graph(tp: &ThreePartitionInstance) -> Result<(Instance, u32), GenError> {
    let tp = ThreePartitionInstance::new(tp.m, tp.b, tp.d.clone())?;
    let m = tp.m;
    let n = 1 + m + m * tp.b as usize;
    let u = (n - 1) as u32;
    let mut arcs = Vec::new();
    let mut edge = |a: usize, b: usize, both: bool| {
        let arc = |tail, head| Arc {
            tail,
            head,
            capacity: u,
            cost: 1.0,
        };
        arcs.push(arc(a, b));
        if both {
            arcs.push(arc(b, a));
        }
    };
    for j in 1..=m {
        // Nothing may enter the root, so only r → v_j.
        edge(0, j, false);
    }
    for j in 1..=m {
        for i in 1..=3 * m {
            edge(j, m + i, true);
        }
    }
    let mut next = 1 + 4 * m;
    for (i, &d) in tp.d.iter().enumerate() {
        for _ in 1..d {
            edge(m + 1 + i, next, true);
            next += 1;
        }
    }
    debug_assert_eq!(next, n);
    let inst = Instance::new(n, arcs, 0, (1..n).collect(), None)?;
    Ok((inst, tp.b + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_levels_round_up() {
        assert_eq!(capacity_levels(4), [4, 3, 2, 1]);
        assert_eq!(capacity_levels(5), [4, 3, 2, 1]);
        assert_eq!(capacity_levels(1), [1, 1, 1, 1]);
    }

    #[test]
    fn worked_example_has_25_nodes() {
        let tp = ThreePartitionInstance::parse("2,11:5,3,4,3,4,3").unwrap();
        let (inst, beta) = generate_3partition_graph(&tp).unwrap();
        assert_eq!(inst.n_nodes(), 25);
        assert_eq!(beta, 12);
        assert_eq!(inst.terminals().len(), 24);
        assert_eq!(graph::augment_with_sink(&inst).n_nodes(), 26);
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(ThreePartitionInstance::new(2, 11, vec![5, 5, 5, 3, 3, 1]).is_err());
        assert!(ThreePartitionInstance::new(2, 11, vec![5, 3, 4]).is_err());
    }

    #[test]
    fn random_instances_are_deterministic() {
        let cfg = GenConfig::new(10, 4, 26, 3);
        assert_eq!(generate_random(&cfg).unwrap(), generate_random(&cfg).unwrap());
    }
}
