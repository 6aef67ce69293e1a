//! Solution files:
//!
//! ```text
//! solution 1
//! objective 412.750000
//! select 3
//! protect 3
//! flow 0 3 2
//! ```

use std::fmt::Write as _;

use survnet::graph::ArcId;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solution {
    pub objective: f64,
    pub selected: Vec<ArcId>,
    pub protected: Vec<ArcId>,
    /// `(scenario tag, arc, value)`.
    pub flows: Vec<(String, ArcId, u64)>,
}

pub fn format_solution(sol: &Solution) -> String {
    let mut out = String::from("solution 1\n");
    writeln!(out, "objective {:.6}", sol.objective).unwrap();
    for a in &sol.selected {
        writeln!(out, "select {a}").unwrap();
    }
    for a in &sol.protected {
        writeln!(out, "protect {a}").unwrap();
    }
    for (tag, a, v) in &sol.flows {
        writeln!(out, "flow {tag} {a} {v}").unwrap();
    }
    out
}

pub fn parse_solution(text: &str) -> Result<Solution, String> {
    let mut sol = Solution::default();
    let mut header = false;
    let mut objective = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let bad = |what: &str| format!("line {line}: {what}");
        let num = |t: Option<&&str>| -> Result<usize, String> {
            t.and_then(|t| t.parse().ok()).ok_or_else(|| bad("expected an arc id"))
        };
        if !header {
            if toks != ["solution", "1"] {
                return Err(bad("expected header \"solution 1\""));
            }
            header = true;
            continue;
        }
        match toks[0] {
            "objective" if toks.len() == 2 => {
                objective = Some(toks[1].parse().map_err(|_| bad("bad objective"))?);
            }
            "select" if toks.len() == 2 => sol.selected.push(num(toks.get(1))?),
            "protect" if toks.len() == 2 => sol.protected.push(num(toks.get(1))?),
            "flow" if toks.len() == 4 => {
                let v = toks[3].parse().map_err(|_| bad("bad flow value"))?;
                sol.flows.push((toks[1].to_string(), num(toks.get(2))?, v));
            }
            _ => return Err(bad(&format!("unrecognised line {content:?}"))),
        }
    }
    if !header {
        return Err("empty solution file".into());
    }
    sol.objective = objective.ok_or("missing objective line")?;
    sol.selected.sort_unstable();
    sol.selected.dedup();
    sol.protected.sort_unstable();
    sol.protected.dedup();
    Ok(sol)
}
