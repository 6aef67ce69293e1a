//! Python bindings. Instances cross the boundary as text in the `RCSN 1`
//! format; designs come back as dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use survnet::arborescence::{self, ArborescenceError, ArborescenceModelSpec, ArborescenceObjective};
use survnet::graph::{self, Instance};
use survnet::instance_gen::{self, GenConfig, ThreePartitionInstance};
use survnet::survivable::{self, SolveOptions, SurvivableError, SurvivableProblem};

fn parse(text: &str) -> PyResult<Instance> {
    instance_gen::parse_instance(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn surv_err(e: SurvivableError) -> PyErr {
    match e {
        SurvivableError::InvalidProblem(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn arb_err(e: ArborescenceError) -> PyErr {
    match e {
        ArborescenceError::InvalidSpec(_) | ArborescenceError::NoTerminals | ArborescenceError::Capacitated(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Random instance text; the full arc set survives `max_k` failures.
#[pyfunction]
#[pyo3(signature = (nodes, terminals, arcs, seed, max_k = 2))]
fn generate_random(nodes: usize, terminals: usize, arcs: usize, seed: u64, max_k: usize) -> PyResult<String> {
    let cfg = GenConfig {
        max_k,
        ..GenConfig::new(nodes, terminals, arcs, seed)
    };
    let inst = instance_gen::generate_random(&cfg).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(instance_gen::format_instance(&inst))
}

/// `(instance text, beta)` for a spec like `"2,11:5,3,4,3,4,3"`.
#[pyfunction]
fn three_partition_graph(spec: &str) -> PyResult<(String, u32)> {
    let tp = ThreePartitionInstance::parse(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let (inst, beta) = instance_gen::generate_3partition_graph(&tp).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((instance_gen::format_instance(&inst), beta))
}

/// Optimal survivable design; `formulation` is cutset, flow or bilevel.
#[pyfunction]
#[pyo3(signature = (instance, k, kprot = 0, formulation = "cutset", use_vis = true, enhance = false))]
fn solve<'py>(
    py: Python<'py>,
    instance: &str,
    k: usize,
    kprot: usize,
    formulation: &str,
    use_vis: bool,
    enhance: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let inst = parse(instance)?;
    let prob = SurvivableProblem::new(&inst, k, kprot).map_err(surv_err)?;
    let options = SolveOptions {
        use_vis,
        use_enhancement: enhance,
        ..SolveOptions::default()
    };
    let d = match formulation {
        "cutset" => survivable::solve_cutset(&prob, &options),
        "flow" => survivable::solve_flow(&prob, &options),
        "bilevel" => survivable::solve_bilevel(&prob, &options),
        other => return Err(PyValueError::new_err(format!("unknown formulation {other:?}"))),
    }
    .map_err(surv_err)?;
    let out = PyDict::new(py);
    out.set_item("cost", d.cost)?;
    let initial: Vec<usize> = d.selected.iter().copied().filter(|&a| !prob.aug.is_fictive(a)).collect();
    out.set_item("selected", initial)?;
    out.set_item("protected", d.protected.clone())?;
    out.set_item("certified", d.certified)?;
    out.set_item("optimal", d.status == survivable::DesignStatus::Optimal)?;
    out.set_item("generated", d.stats.generated)?;
    Ok(out)
}

/// `(feasible, worst residual flow, failing arcs)` for a selection of initial arcs.
#[pyfunction]
#[pyo3(signature = (instance, selected, k, protected = Vec::new()))]
fn check(instance: &str, selected: Vec<usize>, k: usize, protected: Vec<usize>) -> PyResult<(bool, u64, Vec<usize>)> {
    let inst = parse(instance)?;
    let aug = graph::augment_with_sink(&inst);
    if let Some(&bad) = selected.iter().chain(&protected).find(|&&a| a >= aug.n_initial()) {
        return Err(PyValueError::new_err(format!("unknown arc {bad}")));
    }
    let mut sel = aug.mask(&selected);
    for f in aug.fictive_arcs() {
        sel[f] = true;
    }
    let prot = aug.mask(&protected);
    let r = graph::check_feasibility(&aug, &sel, &prot, k as i64).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((r.feasible, r.residual, r.witness.map(|s| s.failed).unwrap_or_default()))
}

/// One arborescence model; `objective` is cost, worst or balanced.
#[pyfunction]
#[pyo3(signature = (instance, objective = "cost", bound_r = None, bound_c = None, bound_br = None))]
fn solve_arborescence<'py>(
    py: Python<'py>,
    instance: &str,
    objective: &str,
    bound_r: Option<u32>,
    bound_c: Option<f64>,
    bound_br: Option<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let inst = parse(instance)?;
    let objective = match objective {
        "cost" => ArborescenceObjective::Cost,
        "worst" => ArborescenceObjective::WorstRobustness,
        "balanced" => ArborescenceObjective::BalancedRobustness,
        other => return Err(PyValueError::new_err(format!("unknown objective {other:?}"))),
    };
    let spec = ArborescenceModelSpec {
        objective,
        bound_r,
        bound_c,
        bound_br,
    };
    let arb = arborescence::solve_model(&inst, &spec).map_err(arb_err)?;
    let out = PyDict::new(py);
    out.set_item("arcs", arb.arcs.clone())?;
    out.set_item("x", arb.arcs.iter().map(|&a| arb.x[a]).collect::<Vec<_>>())?;
    out.set_item("cost", arb.cost)?;
    out.set_item("worst_robustness", arb.worst_robustness)?;
    out.set_item("balanced_robustness", arb.balanced_robustness)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (instance, gaps = vec![0.08, 0.12]))]
fn robustness_report<'py>(py: Python<'py>, instance: &str, gaps: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let inst = parse(instance)?;
    let r = arborescence::robustness_report(&inst, &gaps).map_err(arb_err)?;
    let out = PyDict::new(py);
    out.set_item("c_star", r.c_star)?;
    out.set_item("r_star", r.r_star)?;
    out.set_item("c_r_star", r.c_r_star)?;
    out.set_item("delta_crob", r.delta_crob)?;
    out.set_item("br_star", r.br_star)?;
    out.set_item("r_br_star", r.r_br_star)?;
    out.set_item("c_br_star", r.c_br_star)?;
    out.set_item("delta_cbrob", r.delta_cbrob)?;
    out.set_item("r_gap", r.r_gap)?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "survnet")]
fn survnet_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate_random, m)?)?;
    m.add_function(wrap_pyfunction!(three_partition_graph, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(solve_arborescence, m)?)?;
    m.add_function(wrap_pyfunction!(robustness_report, m)?)?;
    Ok(())
}
