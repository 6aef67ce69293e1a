//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! `ACCEPTANCE_ONLY=1,5` restricts the run to the listed criteria.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use common::{
    brute_force_design, explicit_cutset_model, path_packing, random_instances, three_partition_instances,
    three_partition_yes, worst_residual_by_cuts, worst_single_failure, Lcg,
};
use survnet::arborescence::{
    evaluate_worst_case, robustness_report, solve_model, ArborescenceError, ArborescenceModelSpec as Spec,
};
use survnet::graph::{augment_with_sink, check_feasibility, count_arc_disjoint_paths, most_vital_arcs_enumerate, Instance};
use survnet::instance_gen::{generate_3partition_graph, generate_random, GenConfig, ThreePartitionInstance};
use survnet::milp::{self, solve_lp, MilpModel, Row, Sense, SolveConfig, SolveStatus, VarId, Variable};
use survnet::survivable::{
    solve_bilevel, solve_crsn, solve_cutset, solve_flow, solve_lower_level, valid_inequalities, NetworkDesign,
    SolveOptions, SurvivableProblem,
};

const TOL: f64 = 1e-6;
const AGREEMENT_SEEDS: u64 = 25;

struct Outcome {
    pass: bool,
    /// Failure is reported as a warning only.
    soft: bool,
    detail: String,
}

impl Outcome {
    fn hard(pass: bool, detail: String) -> Self {
        Outcome { pass, soft: false, detail }
    }
}

/// The agreement suite: 8 nodes, 3 terminals, 20–24 arcs.
fn agreement_instances() -> &'static [Instance] {
    static SUITE: OnceLock<Vec<Instance>> = OnceLock::new();
    SUITE.get_or_init(|| {
        (0..AGREEMENT_SEEDS)
            .map(|s| generate_random(&GenConfig::new(8, 3, 20 + s as usize % 5, s)).expect("suite seed"))
            .collect()
    })
}

struct Cell {
    k: usize,
    kp: usize,
    /// cutset, flow, bilevel
    designs: Vec<(&'static str, NetworkDesign)>,
}

struct InstanceRun {
    cells: Vec<Cell>,
    crsn: f64,
    /// Cut-set optima without valid inequalities, per (k, k').
    no_vi: Vec<(usize, usize, f64)>,
    /// Cut-set optima at k' = 3 for k = 1, 2.
    kp3: Vec<(usize, f64)>,
}

impl InstanceRun {
    fn cost(&self, k: usize, kp: usize) -> f64 {
        if kp == 3 {
            return self.kp3.iter().find(|c| c.0 == k).unwrap().1;
        }
        self.cells.iter().find(|c| c.k == k && c.kp == kp).unwrap().designs[0].1.cost
    }
}

/// Every (instance, k, k') solve of the sweep, computed once and shared.
fn sweep() -> &'static Result<Vec<InstanceRun>, String> {
    static SWEEP: OnceLock<Result<Vec<InstanceRun>, String>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let vis = SolveOptions {
            use_vis: true,
            ..SolveOptions::default()
        };
        let plain = SolveOptions::default();
        let mut runs = Vec::new();
        for (i, inst) in agreement_instances().iter().enumerate() {
            let err = |what: &str, k, kp, e: survnet::survivable::SurvivableError| format!("instance {i} ({k},{kp}) {what}: {e}");
            let mut cells = Vec::new();
            let mut no_vi = Vec::new();
            for k in 0..=2 {
                for kp in 0..=2 {
                    let prob = SurvivableProblem::new(inst, k, kp).map_err(|e| err("setup", k, kp, e))?;
                    let designs = vec![
                        ("cutset", solve_cutset(&prob, &vis).map_err(|e| err("cutset", k, kp, e))?),
                        ("flow", solve_flow(&prob, &vis).map_err(|e| err("flow", k, kp, e))?),
                        ("bilevel", solve_bilevel(&prob, &vis).map_err(|e| err("bilevel", k, kp, e))?),
                    ];
                    cells.push(Cell { k, kp, designs });
                    let d = solve_cutset(&prob, &plain).map_err(|e| err("cutset without VIs", k, kp, e))?;
                    no_vi.push((k, kp, d.cost));
                }
            }
            let prob = SurvivableProblem::new(inst, 0, 0).unwrap();
            let crsn = solve_crsn(&prob, &plain).map_err(|e| err("crsn", 0, 0, e))?.cost;
            let mut kp3 = Vec::new();
            for k in 1..=2 {
                let prob = SurvivableProblem::new(inst, k, 3).unwrap();
                kp3.push((k, solve_cutset(&prob, &vis).map_err(|e| err("cutset", k, 3, e))?.cost));
            }
            runs.push(InstanceRun { cells, crsn, no_vi, kp3 });
        }
        Ok(runs)
    })
}

fn with_sweep(f: impl FnOnce(&[InstanceRun]) -> Outcome) -> Outcome {
    match sweep() {
        Ok(runs) => f(runs),
        Err(e) => Outcome::hard(false, format!("sweep aborted: {e}")),
    }
}

fn criterion_1() -> Outcome {
    with_sweep(|runs| {
        let mut cells = 0;
        let mut worst: f64 = 0.0;
        let mut bad = Vec::new();
        for (i, run) in runs.iter().enumerate() {
            for c in &run.cells {
                cells += 1;
                let base = c.designs[0].1.cost;
                for (name, d) in &c.designs {
                    let diff = (d.cost - base).abs();
                    worst = worst.max(diff);
                    if diff > TOL {
                        bad.push(format!("instance {i} ({},{}) {name}", c.k, c.kp));
                    }
                }
            }
        }
        Outcome::hard(
            bad.is_empty() && runs.len() >= 25,
            format!("{} instances, {cells} cells x 3 formulations, max |diff| {worst:.1e}; disagreements {bad:?}", runs.len()),
        )
    })
}

fn criterion_2() -> Outcome {
    let mut tiny = random_instances(5, 6, 2, 12, 2, 1000);
    tiny.extend(random_instances(5, 6, 3, 14, 2, 2000));
    let mut checked = 0;
    let mut bad = Vec::new();
    for (i, inst) in tiny.iter().enumerate() {
        let aug = augment_with_sink(inst);
        assert!(aug.n_initial() <= 14);
        for k in 0..=2 {
            for kp in 0..=2 {
                let Some((best, _, _)) = brute_force_design(&aug, k, kp) else {
                    bad.push(format!("instance {i} ({k},{kp}) has no design"));
                    continue;
                };
                let prob = SurvivableProblem::new(inst, k, kp).unwrap();
                let opts = SolveOptions::default();
                for (name, res) in [
                    ("cutset", solve_cutset(&prob, &opts)),
                    ("flow", solve_flow(&prob, &opts)),
                    ("bilevel", solve_bilevel(&prob, &opts)),
                ] {
                    checked += 1;
                    match res {
                        Ok(d) if (d.cost - best).abs() <= TOL => {}
                        Ok(d) => bad.push(format!("instance {i} ({k},{kp}) {name}: {} vs {best}", d.cost)),
                        Err(e) => bad.push(format!("instance {i} ({k},{kp}) {name}: {e}")),
                    }
                }
            }
        }
    }
    Outcome::hard(
        bad.is_empty(),
        format!("{} instances with |A_I| <= 14, {checked} solves against subset enumeration; mismatches {bad:?}", tiny.len()),
    )
}

fn criterion_3() -> Outcome {
    with_sweep(|runs| {
        let mut designs = 0;
        let mut bad = Vec::new();
        for (i, (run, inst)) in runs.iter().zip(agreement_instances()).enumerate() {
            let aug = augment_with_sink(inst);
            for c in &run.cells {
                for (name, d) in &c.designs {
                    designs += 1;
                    let sel = d.selected_mask(&aug);
                    let prot = d.protected_mask(&aug);
                    let lib = check_feasibility(&aug, &sel, &prot, c.k as i64).unwrap();
                    let oracle = worst_residual_by_cuts(&aug, &sel, &prot, c.k) >= aug.n_terminals() as u64;
                    if !(d.certified && lib.feasible && oracle) {
                        bad.push(format!("instance {i} ({},{}) {name} fails", c.k, c.kp));
                    }
                    if c.kp == 0 {
                        let chosen: Vec<usize> = aug.initial_arcs().filter(|&a| sel[a]).collect();
                        for &t in inst.terminals() {
                            let paths = count_arc_disjoint_paths(&aug, &sel, t) as usize;
                            // exhaustive packing only where it stays cheap
                            let exact = if chosen.len() <= 14 { path_packing(inst, &chosen, t) } else { paths };
                            if paths < c.k + 1 || exact != paths {
                                bad.push(format!("instance {i} ({},0) {name}: terminal {t} has {paths} paths", c.k));
                            }
                        }
                    }
                }
            }
        }
        Outcome::hard(bad.is_empty(), format!("{designs} designs certified, k+1 disjoint paths at k'=0; violations {bad:?}"))
    })
}

fn criterion_4() -> Outcome {
    with_sweep(|runs| {
        let mut bad = Vec::new();
        for (i, run) in runs.iter().enumerate() {
            for kp in 0..=2 {
                for k in 0..2 {
                    if run.cost(k + 1, kp) < run.cost(k, kp) - TOL {
                        bad.push(format!("instance {i}: cost drops from k={k} to k={} at k'={kp}", k + 1));
                    }
                }
            }
            for k in 0..=2 {
                let top = if k == 0 { 2 } else { 3 };
                for kp in 0..top {
                    if run.cost(k, kp + 1) > run.cost(k, kp) + TOL {
                        bad.push(format!("instance {i}: cost rises from k'={kp} to k'={} at k={k}", kp + 1));
                    }
                }
            }
            for kp in 0..=2 {
                if (run.cost(0, kp) - run.crsn).abs() > TOL {
                    bad.push(format!("instance {i}: k=0, k'={kp} differs from the plain design"));
                }
            }
        }
        Outcome::hard(bad.is_empty(), format!("{} instances, k in 0..2, k' in 0..3; violations {bad:?}", runs.len()))
    })
}

fn criterion_5() -> Outcome {
    let mut bad = Vec::new();
    let mut cases = 0;
    let mut no = 0;
    for m in 2..=3 {
        for b in 1..=15 {
            for d in three_partition_instances(m, b) {
                cases += 1;
                let yes = three_partition_yes(m, b, &d);
                no += !yes as usize;
                let tp = ThreePartitionInstance::new(m, b, d.clone()).unwrap();
                let (inst, beta) = generate_3partition_graph(&tp).unwrap();
                let feasible = match solve_model(&inst, &Spec::csta_bounded_robust(beta)) {
                    Ok(arb) => {
                        if arb.worst_robustness > beta {
                            bad.push(format!("{m},{b}:{d:?} bound violated"));
                        }
                        true
                    }
                    Err(ArborescenceError::Infeasible) => false,
                    Err(e) => {
                        bad.push(format!("{m},{b}:{d:?}: {e}"));
                        continue;
                    }
                };
                if feasible != yes {
                    bad.push(format!("{m},{b}:{d:?} solver says {feasible}, partition says {yes}"));
                }
            }
        }
    }
    let tp = ThreePartitionInstance::parse("2,11:5,3,4,3,4,3").unwrap();
    let (fig, _) = generate_3partition_graph(&tp).unwrap();
    let r_star = solve_model(&fig, &Spec::rcsta()).map(|a| a.worst_robustness);
    if r_star != Ok(12) || fig.n_nodes() != 25 {
        bad.push(format!("2,11 example: {} nodes, R* = {r_star:?}", fig.n_nodes()));
    }
    Outcome::hard(
        bad.is_empty() && cases == 49,
        format!("{cases} 3-Partition instances ({no} NO) decided correctly at beta = B+1, 2,11 example R* = {r_star:?}; mismatches {bad:?}"),
    )
}

fn criterion_6() -> Outcome {
    let mut bad = Vec::new();
    let mut simulated = 0;
    for (i, inst) in agreement_instances().iter().enumerate() {
        let r = match robustness_report(inst, &[0.08, 0.12]) {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("instance {i}: {e}"));
                continue;
            }
        };
        if r.delta_crob < 0.0 || r.delta_cbrob < 0.0 {
            bad.push(format!("instance {i}: negative cost of robustness"));
        }
        if r.r_gap[1].1 > r.r_gap[0].1 {
            bad.push(format!("instance {i}: R_0.12 > R_0.08"));
        }
        match solve_model(inst, &Spec::csta_bounded_robust(r.r_star)) {
            Ok(a) if a.worst_robustness == r.r_star && (a.cost - r.c_r_star).abs() <= TOL => {}
            _ => bad.push(format!("instance {i}: bound not saturated at R*")),
        }
        if r.r_star > 0 && solve_model(inst, &Spec::csta_bounded_robust(r.r_star - 1)).is_ok() {
            bad.push(format!("instance {i}: bound below R* is feasible"));
        }
        for spec in [Spec::csta(), Spec::rcsta(), Spec::brcsta(), Spec::csta_bounded_robust(r.r_star)] {
            let arb = solve_model(inst, &spec).unwrap();
            simulated += 1;
            if evaluate_worst_case(inst, &arb) != worst_single_failure(inst, &arb.arcs) {
                bad.push(format!("instance {i}: worst case differs from deletion simulation"));
            }
        }
    }
    Outcome::hard(
        bad.is_empty(),
        format!("{} instances, {simulated} arborescences simulated; violations {bad:?}", agreement_instances().len()),
    )
}

fn criterion_7() -> Outcome {
    with_sweep(|runs| {
        let mut bad = Vec::new();
        let mut raised = 0;
        let mut lps = 0;
        for (i, (run, inst)) in runs.iter().zip(agreement_instances()).enumerate() {
            for &(k, kp, cost) in &run.no_vi {
                if (cost - run.cost(k, kp)).abs() > TOL {
                    bad.push(format!("instance {i} ({k},{kp}): optimum {cost} without VIs vs {}", run.cost(k, kp)));
                }
                let prob = SurvivableProblem::new(inst, k, kp).unwrap();
                let base = explicit_cutset_model(&prob.aug, k, kp);
                let mut with = base.clone();
                for row in valid_inequalities(&prob) {
                    with.add_row(row);
                }
                let (lp0, lp1) = (solve_lp(&base).unwrap(), solve_lp(&with).unwrap());
                lps += 2;
                if lp0.status != SolveStatus::Optimal || lp1.status != SolveStatus::Optimal {
                    bad.push(format!("instance {i} ({k},{kp}): relaxation not solved"));
                } else if lp1.objective_value < lp0.objective_value - TOL {
                    bad.push(format!("instance {i} ({k},{kp}): VIs lower the bound"));
                } else if lp1.objective_value > lp0.objective_value + TOL {
                    raised += 1;
                }
            }
        }
        Outcome::hard(
            bad.is_empty(),
            format!("{lps} relaxations, VIs raise the bound in {raised} cells and never lower it; optima unchanged; violations {bad:?}"),
        )
    })
}

fn criterion_8() -> Outcome {
    let mut rng = Lcg(8);
    let mut bad = Vec::new();
    let mut samples = 0;
    for inst in agreement_instances().iter().take(12) {
        let aug = augment_with_sink(inst);
        let full = (1u64 << aug.n_initial()) - 1;
        for _ in 0..5 {
            let bits = (rng.next() | rng.next() | rng.next()) & full;
            let sel = common::mask_of(&aug, bits as u32, true);
            let prot: Vec<bool> = (0..sel.len()).map(|a| sel[a] && !aug.is_fictive(a) && rng.coin(1, 6)).collect();
            let k = 1 + rng.below(2) as usize;
            let ll = solve_lower_level(&aug, &sel, &prot, k).unwrap();
            let vital = most_vital_arcs_enumerate(&aug, &sel, &prot, k);
            samples += 1;
            if ll.value != vital.residual || ll.value != worst_residual_by_cuts(&aug, &sel, &prot, k) {
                bad.push(format!("sample {samples}: {} vs {}", ll.value, vital.residual));
            }
        }
    }
    Outcome::hard(bad.is_empty() && samples >= 50, format!("{samples} sampled (y, p); mismatches {bad:?}"))
}

fn criterion_9() -> Outcome {
    let mut rng = Lcg(9);
    let mut bad = Vec::new();
    let mut gap: f64 = 0.0;
    let models = 120;
    for case in 0..models {
        let n = 1 + rng.below(6) as usize;
        let mut m = MilpModel::new();
        let vars: Vec<VarId> = (0..n).map(|j| m.add_var(Variable::binary(format!("b{j}")))).collect();
        for r in 0..1 + rng.below(4) {
            let mut coeffs = Vec::new();
            for &v in &vars {
                if rng.coin(2, 3) {
                    coeffs.push((v, rng.below(11) as f64 - 5.0));
                }
            }
            let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.below(3) as usize];
            m.add_row(Row::new(format!("r{r}"), coeffs, sense, rng.below(7) as f64 - 2.0));
        }
        m.set_objective(vars.iter().map(|&v| (v, rng.below(21) as f64 - 10.0)).collect());

        let mut best: Option<f64> = None;
        for bits in 0u32..1 << n {
            let x: Vec<f64> = (0..n).map(|j| (bits >> j & 1) as f64).collect();
            if m.rows.iter().all(|r| r.violation(&x) <= 1e-9) {
                let v = m.objective_value(&x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        let sol = milp::solve(&m, &SolveConfig::default()).unwrap();
        let lp = solve_lp(&m).unwrap();
        gap = gap.max(sol.max_duality_gap).max(lp.max_duality_gap);
        let ok = match best {
            Some(b) => sol.status == SolveStatus::Optimal && (sol.objective_value - b).abs() <= TOL,
            None => sol.status == SolveStatus::Infeasible,
        };
        if !ok {
            bad.push(format!("model {case}: {:?} {} vs {best:?}", sol.status, sol.objective_value));
        }
    }
    Outcome::hard(
        bad.is_empty() && gap <= TOL,
        format!("{models} binary models vs 2^n enumeration, max duality gap {gap:.1e}; mismatches {bad:?}"),
    )
}

fn criterion_10() -> Outcome {
    with_sweep(|runs| {
        let mut close = 0;
        let (mut r1, mut r2) = (0.0, 0.0);
        for run in runs {
            let base = run.cost(0, 0);
            let (c1, c2) = (run.cost(1, 3), run.cost(2, 3));
            r1 += c1 / base;
            r2 += c2 / base;
            if c1 <= 1.1 * base + TOL && c2 <= 1.1 * base + TOL {
                close += 1;
            }
        }
        let n = runs.len() as f64;
        Outcome {
            pass: 2 * close >= runs.len(),
            soft: true,
            detail: format!(
                "{close}/{} instances within 10% of the k=0 cost at k'=3; mean ratio {:.3} (k=1), {:.3} (k=2)",
                runs.len(),
                r1 / n,
                r2 / n
            ),
        }
    })
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "cross-formulation agreement", criterion_1),
        (2, "brute-force optimality", criterion_2),
        (3, "certification and connectivity", criterion_3),
        (4, "monotonicity", criterion_4),
        (5, "3-Partition equivalence", criterion_5),
        (6, "arborescence metrics", criterion_6),
        (7, "valid inequalities", criterion_7),
        (8, "lower level vs most vital arcs", criterion_8),
        (9, "MILP core vs enumeration", criterion_9),
        (10, "protection trend", criterion_10),
    ];
    let total = Instant::now();
    let mut failed = Vec::new();
    for (n, title, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let status = match (out.pass, out.soft) {
            (true, _) => "PASS",
            (false, true) => "WARN",
            (false, false) => "FAIL",
        };
        println!("criterion {n:>2} {status} [{:>6.1}s] {title}: {}", start.elapsed().as_secs_f64(), out.detail);
        if !out.pass && !out.soft {
            failed.push(n);
        }
    }
    println!("acceptance finished in {:.1}s", total.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
