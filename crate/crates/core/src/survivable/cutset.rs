use crate::graph::{self, ArcId, AugmentedInstance};
use crate::milp::{Extension, MilpModel, Row, Sense};

use super::{fractional_scenario, run_generation, vital, Generator, Master, NetworkDesign, SeparationMethod, SolveOptions, SurvivableError,
            SurvivableProblem};

struct CutsetGen {
    method: SeparationMethod,
    /// `Some(U)` in uniform-capacity mode.
    uniform: Option<f64>,
}

/// `Σ_S u y ≥ |T| + kU`. Only valid for cuts whose fictive part alone is
/// below |T|, which holds for every violated cut.
fn uniform_row(master: &Master, aug: &AugmentedInstance, name: String, cutset: &[ArcId], rhs: f64) -> Row {
    let coeffs = cutset
        .iter()
        .map(|&a| (master.y[a], aug.arcs()[a].capacity as f64))
        .collect();
    Row::new(name, coeffs, Sense::Ge, rhs)
}

impl Generator for CutsetGen {
    fn formulation(&self) -> &'static str {
        "cutset"
    }

    fn separate(
        &mut self,
        prob: &SurvivableProblem,
        master: &Master,
        model: &MilpModel,
        sel: &[bool],
        prot: &[bool],
    ) -> Result<(u64, Extension), SurvivableError> {
        let nt = prob.n_terminals() as u64;
        let worst = vital(prob, sel, prot, self.method)?;
        if worst.residual >= nt {
            return Ok((worst.residual, Extension::default()));
        }
        // Both extreme minimum cuts of the attacked network are violated; add
        // each distinct one.
        let aug = &prob.aug;
        let mut cap = aug.selected_capacities(sel);
        for &a in &worst.scenario.failed {
            cap[a] = 0;
        }
        let (near_root, near_sink) = graph::extreme_min_cuts(aug, &cap);
        let mut cutsets = vec![near_root.cutset];
        if near_sink.cutset != cutsets[0] {
            cutsets.push(near_sink.cutset);
        }
        let mut rows = Vec::new();
        for cutset in cutsets {
            let deleted: Vec<ArcId> = worst
                .scenario
                .failed
                .iter()
                .copied()
                .filter(|a| cutset.binary_search(a).is_ok())
                .collect();
            let name = format!("cut{}", model.rows.len() + rows.len());
            rows.push(match self.uniform {
                Some(u) => uniform_row(master, aug, name, &cutset, nt as f64 + prob.k as f64 * u),
                None => master.cut_row(aug, name, &cutset, &deleted, nt as f64),
            });
        }
        Ok((worst.residual, Extension::rows(rows)))
    }

    fn separate_fractional(
        &mut self,
        prob: &SurvivableProblem,
        master: &Master,
        model: &MilpModel,
        values: &[f64],
    ) -> Result<Extension, SurvivableError> {
        if self.uniform.is_some() {
            return Ok(Extension::default());
        }
        let Some((_, cut)) = fractional_scenario(prob, master, values) else {
            return Ok(Extension::default());
        };
        let name = format!("fcut{}", model.rows.len());
        let row = master.cut_row(&prob.aug, name, &cut.cutset, &cut.deleted, prob.n_terminals() as f64);
        Ok(Extension::rows(vec![row]))
    }
}

pub fn solve_cutset(prob: &SurvivableProblem, options: &SolveOptions) -> Result<NetworkDesign, SurvivableError> {
    let aug = &prob.aug;
    let nt = prob.n_terminals() as f64;
    let uniform = if options.uniform_capacity {
        if prob.k_prot > 0 {
            return Err(SurvivableError::InvalidProblem(
                "uniform-capacity mode has no protected variant".into(),
            ));
        }
        match aug.base().uniform_capacity() {
            Some(u) => Some(u as f64),
            None => {
                return Err(SurvivableError::InvalidProblem(
                    "uniform-capacity mode needs equal capacities on all arcs".into(),
                ))
            }
        }
    } else {
        None
    };
    let mut master = Master::build(prob, options.use_vis);
    // Seed cuts: around the root and around each terminal with the sink.
    let mut seeds: Vec<Vec<ArcId>> = vec![aug.base().out_arcs(aug.root()).collect()];
    for &t in aug.base().terminals() {
        let mut side = vec![true; aug.n_nodes()];
        side[t] = false;
        side[aug.sink()] = false;
        let cap = aug.selected_capacities(&aug.full_selection());
        seeds.push(graph::cut_from_side(aug, &side, &cap, &[]).cutset);
    }
    for (i, cutset) in seeds.iter().enumerate() {
        let name = format!("seed{i}");
        let row = match uniform {
            Some(u) => uniform_row(&master, aug, name, cutset, nt + prob.k as f64 * u),
            None => master.cut_row(aug, name, cutset, &[], nt),
        };
        master.model.add_row(row);
    }

    let mut gen = CutsetGen {
        method: options.separation,
        uniform,
    };
    run_generation(prob, master, &mut gen, options)
}
