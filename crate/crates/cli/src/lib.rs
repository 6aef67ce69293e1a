//! `survnet` command line: generate, solve, check, bench, report, export-dot.

pub mod solution;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use survnet::arborescence::{self, Arborescence, ArborescenceError, ArborescenceModelSpec, ArborescenceObjective};
use survnet::graph::{self, Instance};
use survnet::instance_gen::{self, GenConfig, ThreePartitionInstance};
use survnet::milp::SolveConfig;
use survnet::survivable::{self, DesignStatus, NetworkDesign, SeparationMethod, SolveOptions, SurvivableError, SurvivableProblem};

pub use solution::{format_solution, parse_solution, Solution};

pub const EXIT_OK: i32 = 0;
/// Bad arguments, unreadable or mismatched files.
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Per-run budget used when none is given.
pub const DEFAULT_BUDGET_SECS: f64 = 3000.0;

#[derive(Parser, Debug)]
#[command(name = "survnet", version, about = "Survivable capacitated rooted network design")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random instance or a 3-Partition reduction graph.
    Generate(GenerateArgs),
    /// Solve one model on one instance.
    Solve(SolveArgs),
    /// Re-verify a solution file against an instance.
    Check(CheckArgs),
    /// Run formulations × (k, k') over instances and emit CSV.
    Bench(BenchArgs),
    /// Arborescence robustness metrics as JSON.
    Report(ReportArgs),
    /// Draw an instance and solution as a DOT digraph.
    ExportDot(DotArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 12)]
    nodes: usize,
    #[arg(long, default_value_t = 4)]
    terminals: usize,
    #[arg(long, default_value_t = 30)]
    arcs: usize,
    /// Random when omitted; always printed.
    #[arg(long)]
    seed: Option<u64>,
    /// Failures the full arc set must survive.
    #[arg(long, default_value_t = 2)]
    max_k: usize,
    #[arg(long, default_value_t = 100.0)]
    plane_size: f64,
    #[arg(long)]
    one_directional: bool,
    /// "m,B:d1,...,d3m" builds the reduction graph instead.
    #[arg(long = "3partition", value_name = "SPEC")]
    three_partition: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    Csta,
    CstaBoundedRobust,
    Rcsta,
    RcstaBoundedCost,
    CstaBoundedBalancedRobust,
    Brcsta,
    BrcstaBoundedRobustCost,
    Crkecsn,
    Cprkecsn,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Formulation {
    Cutset,
    Flow,
    Bilevel,
}

impl Formulation {
    fn name(self) -> &'static str {
        match self {
            Formulation::Cutset => "cutset",
            Formulation::Flow => "flow",
            Formulation::Bilevel => "bilevel",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Separation {
    Auto,
    Enumerate,
    Mip,
}

#[derive(Args, Debug, Clone)]
struct SurvivableFlags {
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    kprot: usize,
    /// Add the valid inequalities.
    #[arg(long, overrides_with = "no_vi")]
    vi: bool,
    #[arg(long)]
    no_vi: bool,
    /// Lift incumbents before extracting bilevel cuts.
    #[arg(long, overrides_with = "no_enhance")]
    enhance: bool,
    #[arg(long)]
    no_enhance: bool,
    /// Cut-set only: constant worst-case loss on uniform-capacity instances.
    #[arg(long)]
    uniform: bool,
    #[arg(long, value_enum, default_value_t = Separation::Auto)]
    separation: Separation,
    /// Seconds per run.
    #[arg(long, default_value_t = DEFAULT_BUDGET_SECS)]
    time_budget: f64,
}

impl SurvivableFlags {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            use_vis: self.vi && !self.no_vi,
            uniform_capacity: self.uniform,
            separation: match self.separation {
                Separation::Auto => SeparationMethod::Auto,
                Separation::Enumerate => SeparationMethod::Enumerate,
                Separation::Mip => SeparationMethod::Mip,
            },
            use_enhancement: self.enhance && !self.no_enhance,
            full_resolve: false,
            milp: budget_config(self.time_budget),
        }
    }

    fn flag_names(&self) -> Vec<String> {
        let o = self.options();
        let mut f = Vec::new();
        if o.use_vis {
            f.push("vi".to_string());
        }
        if o.use_enhancement {
            f.push("enhance".into());
        }
        if o.uniform_capacity {
            f.push("uniform".into());
        }
        if self.separation != Separation::Auto {
            f.push(format!("separation={:?}", self.separation).to_lowercase());
        }
        f
    }
}

fn budget_config(secs: f64) -> SolveConfig {
    SolveConfig {
        time_budget: Some(Duration::from_secs_f64(secs.max(0.0))),
        ..SolveConfig::default()
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Model::Crkecsn)]
    model: Model,
    #[arg(long, value_enum, default_value_t = Formulation::Cutset)]
    formulation: Formulation,
    #[command(flatten)]
    flags: SurvivableFlags,
    #[arg(long = "bound-R", value_name = "R")]
    bound_r: Option<u32>,
    #[arg(long = "bound-C", value_name = "C")]
    bound_c: Option<f64>,
    #[arg(long = "bound-BR", value_name = "BR")]
    bound_br: Option<u32>,
    /// Solution file.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the run record (JSON) here; it always goes to stdout.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Line-delimited JSON generation trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    instance: PathBuf,
    solution: PathBuf,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    kprot: usize,
    /// Verify arborescence invariants instead of survivability.
    #[arg(long)]
    arborescence: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "cutset,flow,bilevel")]
    formulations: Vec<Formulation>,
    #[arg(long = "ks", value_delimiter = ',', default_value = "0,1,2")]
    ks: Vec<usize>,
    #[arg(long = "kprots", value_delimiter = ',', default_value = "0")]
    kprots: Vec<usize>,
    #[arg(long)]
    vi: bool,
    #[arg(long)]
    enhance: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET_SECS)]
    time_budget: f64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    instance: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.08,0.12")]
    gaps: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_BUDGET_SECS)]
    time_budget: f64,
}

#[derive(Args, Debug)]
struct DotArgs {
    instance: PathBuf,
    solution: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// One solve, as printed by `solve` and tabulated by `bench`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub model: String,
    pub formulation: String,
    pub k: usize,
    pub kprot: usize,
    pub flags: String,
    /// optimal, budget_exceeded, infeasible, invalid or error.
    pub status: String,
    pub objective: Option<f64>,
    pub wall_time_s: f64,
    /// Rows, scenarios or extreme-point cuts generated.
    pub iterations: usize,
    pub nodes: usize,
    pub lps: usize,
    pub certified: bool,
    pub message: String,
}

struct Fail(i32, String);

impl Fail {
    fn usage(msg: impl Into<String>) -> Self {
        Fail(EXIT_USAGE, msg.into())
    }
}

type CmdResult = Result<i32, Fail>;

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            eprintln!("\n{}", Cli::command().render_usage());
            return EXIT_USAGE;
        }
    };
    let res = match cli.cmd {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Report(a) => cmd_report(&a),
        Command::ExportDot(a) => cmd_export_dot(&a),
    };
    match res {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, Fail> {
    instance_gen::read_instance(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn load_solution(path: &Path) -> Result<Solution, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))?;
    parse_solution(&text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Fail> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::usage(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Fail(EXIT_INTERNAL, e.to_string()))
        }
    }
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult {
    let (inst, header) = if let Some(spec) = &a.three_partition {
        let tp = ThreePartitionInstance::parse(spec).map_err(|e| Fail::usage(e.to_string()))?;
        let (inst, beta) = instance_gen::generate_3partition_graph(&tp).map_err(|e| Fail::usage(e.to_string()))?;
        eprintln!("beta {beta}");
        (inst, format!("# 3-partition {spec}, beta {beta}\n"))
    } else {
        let seed = a.seed.unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0)
        });
        eprintln!("seed {seed}");
        let cfg = GenConfig {
            plane_size: a.plane_size,
            max_k: a.max_k,
            one_directional: a.one_directional,
            ..GenConfig::new(a.nodes, a.terminals, a.arcs, seed)
        };
        let inst = instance_gen::generate_random(&cfg).map_err(|e| Fail::usage(e.to_string()))?;
        (inst, format!("# seed {seed}\n"))
    };
    let text = instance_gen::format_instance(&inst);
    // keep the version header first
    let text = match text.split_once('\n') {
        Some((first, rest)) => format!("{first}\n{header}{rest}"),
        None => text,
    };
    write_out(a.output.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn arborescence_spec(a: &SolveArgs) -> Result<ArborescenceModelSpec, Fail> {
    use ArborescenceObjective::*;
    let need = |v: bool, flag: &str| if v { Ok(()) } else { Err(Fail::usage(format!("model {:?} needs {flag}", a.model))) };
    let objective = match a.model {
        Model::Csta => Cost,
        Model::CstaBoundedRobust => {
            need(a.bound_r.is_some(), "--bound-R")?;
            Cost
        }
        Model::Rcsta => WorstRobustness,
        Model::RcstaBoundedCost => {
            need(a.bound_c.is_some(), "--bound-C")?;
            WorstRobustness
        }
        Model::CstaBoundedBalancedRobust => {
            need(a.bound_br.is_some(), "--bound-BR")?;
            Cost
        }
        Model::Brcsta => BalancedRobustness,
        Model::BrcstaBoundedRobustCost => {
            need(a.bound_r.is_some() && a.bound_c.is_some(), "--bound-R and --bound-C")?;
            BalancedRobustness
        }
        Model::Crkecsn | Model::Cprkecsn => unreachable!("not an arborescence model"),
    };
    let spec = ArborescenceModelSpec {
        objective,
        bound_r: a.bound_r,
        bound_c: a.bound_c,
        bound_br: a.bound_br,
    };
    spec.validate().map_err(|e| Fail::usage(e.to_string()))?;
    Ok(spec)
}

fn model_name(m: Model) -> String {
    format!("{m:?}").to_lowercase()
}

fn survivable_solution(prob: &SurvivableProblem, d: &NetworkDesign) -> Solution {
    let aug = &prob.aug;
    let sel = d.selected_mask(aug);
    let flow = graph::max_flow(aug, &aug.selected_capacities(&sel));
    Solution {
        objective: d.cost,
        selected: d.selected.iter().copied().filter(|&a| !aug.is_fictive(a)).collect(),
        protected: d.protected.clone(),
        flows: aug
            .initial_arcs()
            .filter(|&a| flow.flow[a] > 0)
            .map(|a| ("0".to_string(), a, flow.flow[a]))
            .collect(),
    }
}

/// Solves one survivable cell; the design is re-verified with the oracle.
fn solve_survivable(
    inst: &Instance,
    formulation: Formulation,
    k: usize,
    kprot: usize,
    options: &SolveOptions,
) -> (Result<(SurvivableProblem, NetworkDesign), SurvivableError>, f64) {
    let start = Instant::now();
    let res = SurvivableProblem::new(inst, k, kprot).and_then(|prob| {
        let d = match formulation {
            Formulation::Cutset => survivable::solve_cutset(&prob, options),
            Formulation::Flow => survivable::solve_flow(&prob, options),
            Formulation::Bilevel => survivable::solve_bilevel(&prob, options),
        }?;
        let aug = &prob.aug;
        let check = graph::check_feasibility(aug, &d.selected_mask(aug), &d.protected_mask(aug), k as i64)?;
        if !check.feasible || !d.certified {
            return Err(SurvivableError::Internal(format!(
                "returned design fails re-verification (residual {})",
                check.residual
            )));
        }
        Ok((prob, d))
    });
    (res, start.elapsed().as_secs_f64())
}

fn survivable_status(e: &SurvivableError) -> (&'static str, i32) {
    match e {
        SurvivableError::Infeasible => ("infeasible", EXIT_INFEASIBLE),
        SurvivableError::BudgetExceeded => ("budget_exceeded", EXIT_BUDGET),
        SurvivableError::InvalidProblem(_) => ("invalid", EXIT_USAGE),
        _ => ("error", EXIT_INTERNAL),
    }
}

fn design_status(s: DesignStatus) -> (&'static str, i32) {
    match s {
        DesignStatus::Optimal => ("optimal", EXIT_OK),
        DesignStatus::BudgetExceeded => ("budget_exceeded", EXIT_BUDGET),
    }
}

fn cmd_solve(a: &SolveArgs) -> CmdResult {
    let inst = load_instance(&a.instance)?;
    let mut record = RunRecord {
        instance: a.instance.display().to_string(),
        model: model_name(a.model),
        formulation: String::new(),
        k: a.flags.k,
        kprot: a.flags.kprot,
        flags: a.flags.flag_names().join(";"),
        status: String::new(),
        objective: None,
        wall_time_s: 0.0,
        iterations: 0,
        nodes: 0,
        lps: 0,
        certified: false,
        message: String::new(),
    };
    let code = match a.model {
        Model::Crkecsn | Model::Cprkecsn => {
            if a.model == Model::Cprkecsn && a.flags.kprot == 0 {
                return Err(Fail::usage("cprkecsn needs --kprot >= 1"));
            }
            record.formulation = a.formulation.name().into();
            let (res, secs) = solve_survivable(&inst, a.formulation, a.flags.k, a.flags.kprot, &a.flags.options());
            record.wall_time_s = secs;
            match res {
                Ok((prob, d)) => {
                    let (status, code) = design_status(d.status);
                    record.status = status.into();
                    record.objective = Some(d.cost);
                    record.iterations = d.stats.generated;
                    record.nodes = d.stats.node_count;
                    record.lps = d.stats.lp_count;
                    record.certified = d.certified;
                    if let Some(p) = &a.output {
                        write_out(Some(p), &format_solution(&survivable_solution(&prob, &d)))?;
                    }
                    if let Some(p) = &a.trace {
                        let f = std::fs::File::create(p).map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?;
                        survivable::write_trace(&d.stats.trace, f).map_err(|e| Fail(EXIT_INTERNAL, e.to_string()))?;
                    }
                    eprintln!(
                        "{status}: cost {:.6}, {} arcs selected, {} protected, certified",
                        d.cost,
                        d.selected.len() - prob.n_terminals(),
                        d.protected.len()
                    );
                    code
                }
                Err(e) => {
                    let (status, code) = survivable_status(&e);
                    record.status = status.into();
                    record.message = e.to_string();
                    eprintln!("{status}: {e}");
                    code
                }
            }
        }
        _ => {
            let spec = arborescence_spec(a)?;
            let start = Instant::now();
            let res = arborescence::solve_model_with(&inst, &spec, &budget_config(a.flags.time_budget));
            record.wall_time_s = start.elapsed().as_secs_f64();
            match res {
                Ok(arb) => {
                    // the same invariants check would apply to a hand-written file
                    let again = Arborescence::from_arcs(&inst, &arb.arcs);
                    if again.as_ref().map(|b| b.x != arb.x).unwrap_or(true) {
                        return Err(Fail(EXIT_INTERNAL, "solver output is not a valid arborescence".into()));
                    }
                    let worst = arborescence::evaluate_worst_case(&inst, &arb);
                    let objective = match spec.objective {
                        ArborescenceObjective::Cost => arb.cost,
                        ArborescenceObjective::WorstRobustness => arb.worst_robustness as f64,
                        ArborescenceObjective::BalancedRobustness => arb.balanced_robustness as f64,
                    };
                    record.status = "optimal".into();
                    record.objective = Some(objective);
                    record.certified = true;
                    eprintln!(
                        "optimal: cost {:.6}, worst-case robustness {} (evaluated {worst}), balanced robustness {}",
                        arb.cost, arb.worst_robustness, arb.balanced_robustness
                    );
                    if spec.objective == ArborescenceObjective::WorstRobustness {
                        eprintln!("R* = {}", arb.worst_robustness);
                    }
                    if let Some(p) = &a.output {
                        let sol = Solution {
                            objective,
                            selected: arb.arcs.clone(),
                            protected: Vec::new(),
                            flows: arb.arcs.iter().map(|&e| ("x".to_string(), e, arb.x[e] as u64)).collect(),
                        };
                        write_out(Some(p), &format_solution(&sol))?;
                    }
                    EXIT_OK
                }
                Err(e) => {
                    let (status, code) = match e {
                        ArborescenceError::Infeasible => ("infeasible", EXIT_INFEASIBLE),
                        ArborescenceError::BudgetExceeded => ("budget_exceeded", EXIT_BUDGET),
                        ArborescenceError::NoTerminals | ArborescenceError::InvalidSpec(_) => ("invalid", EXIT_USAGE),
                        _ => ("error", EXIT_INTERNAL),
                    };
                    record.status = status.into();
                    record.message = e.to_string();
                    eprintln!("{status}: {e}");
                    code
                }
            }
        }
    };
    let json = serde_json::to_string(&record).map_err(|e| Fail(EXIT_INTERNAL, e.to_string()))?;
    println!("{json}");
    if let Some(p) = &a.record {
        write_out(Some(p), &format!("{json}\n"))?;
    }
    Ok(code)
}

fn cmd_check(a: &CheckArgs) -> CmdResult {
    let inst = load_instance(&a.instance)?;
    let sol = load_solution(&a.solution)?;
    let n = inst.arcs().len();
    if let Some(&bad) = sol.selected.iter().chain(&sol.protected).find(|&&x| x >= n) {
        return Err(Fail::usage(format!("solution references arc {bad}, instance has {n} arcs")));
    }
    if a.arborescence {
        return Ok(match Arborescence::from_arcs(&inst, &sol.selected) {
            Ok(arb) => {
                println!(
                    "PASS arborescence: cost {:.6}, worst-case robustness {}, balanced robustness {}",
                    arb.cost, arb.worst_robustness, arb.balanced_robustness
                );
                EXIT_OK
            }
            Err(e) => {
                println!("FAIL {e}");
                EXIT_INFEASIBLE
            }
        });
    }
    if let Some(&p) = sol.protected.iter().find(|p| sol.selected.binary_search(p).is_err()) {
        println!("FAIL protected arc {p} is not selected");
        return Ok(EXIT_INFEASIBLE);
    }
    if sol.protected.len() > a.kprot {
        println!("FAIL {} protected arcs exceed k' = {}", sol.protected.len(), a.kprot);
        return Ok(EXIT_INFEASIBLE);
    }
    let aug = graph::augment_with_sink(&inst);
    let mut sel = aug.mask(&sol.selected);
    for f in aug.fictive_arcs() {
        sel[f] = true;
    }
    let prot = aug.mask(&sol.protected);
    let check = graph::check_feasibility(&aug, &sel, &prot, a.k as i64).map_err(|e| Fail(EXIT_INTERNAL, e.to_string()))?;
    let cost: f64 = sol.selected.iter().map(|&e| inst.arcs()[e].cost).sum();
    if (cost - sol.objective).abs() > 1e-6 * cost.abs().max(1.0) {
        eprintln!("note: objective {:.6} differs from the selected arcs' cost {cost:.6}", sol.objective);
    }
    if check.feasible {
        println!(
            "PASS k={} k'={}: worst-case residual flow {} >= |T| = {}",
            a.k,
            a.kprot,
            check.residual,
            aug.n_terminals()
        );
        if sol.protected.is_empty() {
            let worst = inst
                .terminals()
                .iter()
                .map(|&t| graph::count_arc_disjoint_paths(&aug, &sel, t))
                .min()
                .unwrap_or(0);
            println!("min arc-disjoint root-terminal paths {worst}");
        }
        Ok(EXIT_OK)
    } else {
        let witness = check.witness.map(|s| s.failed).unwrap_or_default();
        let ids: Vec<String> = witness.iter().map(|a| a.to_string()).collect();
        println!(
            "FAIL k={} k'={}: failing arcs [{}] leave residual flow {} < |T| = {}",
            a.k,
            a.kprot,
            ids.join(" "),
            check.residual,
            aug.n_terminals()
        );
        Ok(EXIT_INFEASIBLE)
    }
}

fn run_cell(inst: &Instance, name: &str, f: Formulation, k: usize, kp: usize, opts: &SolveOptions, flags: &str) -> RunRecord {
    let (res, secs) = solve_survivable(inst, f, k, kp, opts);
    let mut r = RunRecord {
        instance: name.to_string(),
        model: "crkecsn".into(),
        formulation: f.name().into(),
        k,
        kprot: kp,
        flags: flags.to_string(),
        status: String::new(),
        objective: None,
        wall_time_s: secs,
        iterations: 0,
        nodes: 0,
        lps: 0,
        certified: false,
        message: String::new(),
    };
    match res {
        Ok((_, d)) => {
            r.status = design_status(d.status).0.into();
            r.objective = Some(d.cost);
            r.iterations = d.stats.generated;
            r.nodes = d.stats.node_count;
            r.lps = d.stats.lp_count;
            r.certified = d.certified;
        }
        Err(e) => {
            r.status = survivable_status(&e).0.into();
            r.message = e.to_string();
        }
    }
    r
}

/// Objectives of optimal runs that break cross-formulation agreement or
/// monotonicity in k and k'.
pub fn bench_inconsistencies(records: &[RunRecord]) -> Vec<String> {
    let opt: Vec<&RunRecord> = records.iter().filter(|r| r.status == "optimal").collect();
    let mut issues = Vec::new();
    let tol = |a: f64, b: f64| 1e-6 * a.abs().max(b.abs()).max(1.0);
    for (i, a) in opt.iter().enumerate() {
        for b in &opt[i + 1..] {
            if a.instance != b.instance {
                continue;
            }
            let (oa, ob) = (a.objective.unwrap(), b.objective.unwrap());
            if a.k == b.k && a.kprot == b.kprot && a.formulation != b.formulation && (oa - ob).abs() > tol(oa, ob) {
                issues.push(format!(
                    "{} k={} k'={}: {} {oa:.6} vs {} {ob:.6}",
                    a.instance, a.k, a.kprot, a.formulation, b.formulation
                ));
            }
            if a.formulation != b.formulation {
                continue;
            }
            // (lo, hi) must satisfy cost(lo) <= cost(hi)
            let ordered = if a.kprot == b.kprot && a.k != b.k {
                Some(if a.k < b.k { (a, b) } else { (b, a) })
            } else if a.k == b.k && a.kprot != b.kprot {
                Some(if a.kprot > b.kprot { (a, b) } else { (b, a) })
            } else {
                None
            };
            if let Some((lo, hi)) = ordered {
                let (ol, oh) = (lo.objective.unwrap(), hi.objective.unwrap());
                if ol > oh + tol(ol, oh) {
                    issues.push(format!(
                        "{} {}: cost {ol:.6} at (k={}, k'={}) exceeds {oh:.6} at (k={}, k'={})",
                        lo.instance, lo.formulation, lo.k, lo.kprot, hi.k, hi.kprot
                    ));
                }
            }
        }
    }
    issues
}

fn cmd_bench(a: &BenchArgs) -> CmdResult {
    let mut insts = Vec::new();
    for p in &a.instances {
        insts.push((p.display().to_string(), load_instance(p)?));
    }
    let opts = SolveOptions {
        use_vis: a.vi,
        use_enhancement: a.enhance,
        milp: budget_config(a.time_budget),
        ..SolveOptions::default()
    };
    let mut flags = Vec::new();
    if a.vi {
        flags.push("vi");
    }
    if a.enhance {
        flags.push("enhance");
    }
    let flags = flags.join(";");
    let mut cells = Vec::new();
    for i in 0..insts.len() {
        for &k in &a.ks {
            for &kp in &a.kprots {
                for &f in &a.formulations {
                    cells.push((i, k, kp, f));
                }
            }
        }
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|s| {
        for _ in 0..a.jobs.max(1).min(cells.len().max(1)) {
            s.spawn(|| loop {
                let c = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, k, kp, f)) = cells.get(c) else { break };
                let r = run_cell(&insts[i].1, &insts[i].0, f, k, kp, &opts, &flags);
                eprintln!(
                    "{} {} k={} k'={}: {} {}",
                    r.instance,
                    r.formulation,
                    k,
                    kp,
                    r.status,
                    r.objective.map(|o| format!("{o:.6}")).unwrap_or_default()
                );
                results.lock().unwrap()[c] = Some(r);
            });
        }
    });
    let records: Vec<RunRecord> = results.into_inner().unwrap().into_iter().map(|r| r.expect("every cell ran")).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &records {
        w.serialize(r).map_err(|e| Fail(EXIT_INTERNAL, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Fail(EXIT_INTERNAL, e.to_string()))?;
    write_out(a.output.as_deref(), &String::from_utf8_lossy(&bytes))?;
    let issues = bench_inconsistencies(&records);
    for i in &issues {
        eprintln!("error: {i}");
    }
    Ok(if issues.is_empty() { EXIT_OK } else { EXIT_INTERNAL })
}

fn cmd_report(a: &ReportArgs) -> CmdResult {
    let inst = load_instance(&a.instance)?;
    let r = arborescence::robustness_report_with(&inst, &a.gaps, &budget_config(a.time_budget)).map_err(|e| match e {
        ArborescenceError::Infeasible => Fail(EXIT_INFEASIBLE, e.to_string()),
        ArborescenceError::BudgetExceeded => Fail(EXIT_BUDGET, e.to_string()),
        _ => Fail(EXIT_INTERNAL, e.to_string()),
    })?;
    let json = serde_json::json!({
        "c_star": r.c_star,
        "r_star": r.r_star,
        "c_r_star": r.c_r_star,
        "delta_crob": r.delta_crob,
        "br_star": r.br_star,
        "r_br_star": r.r_br_star,
        "c_br_star": r.c_br_star,
        "delta_cbrob": r.delta_cbrob,
        "r_gap": r.r_gap.iter().map(|&(g, v)| serde_json::json!({"gap": g, "r": v})).collect::<Vec<_>>(),
    });
    println!("{json}");
    Ok(EXIT_OK)
}

/// DOT drawing: terminals filled, root double-circled, protected arcs bold,
/// arcs labelled with their flow under the first flow tag of the solution.
pub fn to_dot(inst: &Instance, sol: Option<&Solution>) -> String {
    let mut out = String::from("digraph survnet {\n  node [shape=circle];\n");
    for v in 0..inst.n_nodes() {
        let mut attrs = vec![format!("label=\"{v}\"")];
        if v == inst.root() {
            attrs.push("shape=doublecircle".into());
        }
        if inst.is_terminal(v) {
            attrs.push("style=filled".into());
            attrs.push("fillcolor=lightgray".into());
        }
        if let Some(c) = inst.coords() {
            attrs.push(format!("pos=\"{:.3},{:.3}!\"", c[v].0, c[v].1));
        }
        writeln!(out, "  n{v} [{}];", attrs.join(", ")).unwrap();
    }
    let tag = sol.and_then(|s| s.flows.first().map(|f| f.0.clone()));
    for (id, arc) in inst.arcs().iter().enumerate() {
        let mut attrs = Vec::new();
        if let Some(s) = sol {
            if s.selected.binary_search(&id).is_err() {
                continue;
            }
            if s.protected.binary_search(&id).is_ok() {
                attrs.push("style=bold".to_string());
            }
            if let Some(tag) = &tag {
                let f = s.flows.iter().find(|(t, a, _)| t == tag && *a == id).map_or(0, |x| x.2);
                attrs.push(format!("label=\"{f}\""));
            }
        } else {
            attrs.push(format!("label=\"u={}\"", arc.capacity));
        }
        writeln!(out, "  n{} -> n{} [{}];", arc.tail, arc.head, attrs.join(", ")).unwrap();
    }
    out.push_str("}\n");
    out
}

fn cmd_export_dot(a: &DotArgs) -> CmdResult {
    let inst = load_instance(&a.instance)?;
    let sol = a.solution.as_deref().map(load_solution).transpose()?;
    if let Some(s) = &sol {
        if let Some(&bad) = s.selected.iter().find(|&&x| x >= inst.arcs().len()) {
            return Err(Fail::usage(format!("solution references unknown arc {bad}")));
        }
    }
    write_out(a.output.as_deref(), &to_dot(&inst, sol.as_ref()))?;
    Ok(EXIT_OK)
}
