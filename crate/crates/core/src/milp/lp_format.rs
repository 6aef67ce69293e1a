//! CPLEX LP-format export, mainly for debugging models in an external solver.

use std::fmt::Write;

use super::{MilpModel, Sense, VarId, VarKind};

fn name(model: &MilpModel, v: VarId) -> String {
    let raw = &model.vars[v.0].name;
    if raw.is_empty() {
        format!("v{}", v.0)
    } else {
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
            .collect()
    }
}

fn terms(model: &MilpModel, coeffs: &[(VarId, f64)], out: &mut String) {
    if coeffs.is_empty() {
        out.push_str(" 0 v0");
        return;
    }
    for &(v, a) in coeffs {
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", a.abs(), name(model, v));
    }
}

fn bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::from("\\ generated model\nMinimize\n obj:");
    terms(model, &model.objective, &mut out);
    if model.obj_offset != 0.0 {
        let _ = write!(out, " + {} constant", model.obj_offset);
    }
    out.push_str("\nSubject To\n");
    for (i, r) in model.rows.iter().enumerate() {
        let label = if r.name.is_empty() { format!("r{i}") } else { format!("r{i}_{}", r.name) };
        let label: String = label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
            .collect();
        let _ = write!(out, " {label}:");
        terms(model, &r.coeffs, &mut out);
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", r.rhs);
    }
    out.push_str("Bounds\n");
    for (j, v) in model.vars.iter().enumerate() {
        let n = name(model, VarId(j));
        if v.lb == v.ub {
            let _ = writeln!(out, " {n} = {}", v.lb);
        } else {
            let _ = writeln!(out, " {} <= {n} <= {}", bound(v.lb), bound(v.ub));
        }
    }
    if model.obj_offset != 0.0 {
        out.push_str(" constant = 1\n");
    }
    for (header, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
        let listed: Vec<String> = (0..model.vars.len())
            .filter(|&j| model.vars[j].kind == kind)
            .map(|j| name(model, VarId(j)))
            .collect();
        if !listed.is_empty() {
            let _ = writeln!(out, "{header}\n {}", listed.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
