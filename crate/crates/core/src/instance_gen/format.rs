//! Line-oriented instance files:
//!
//! ```text
//! RCSN 1
//! node 0 12.5 3.25
//! root 0
//! terminal 2
//! arc 0 0 1 4 17.000000
//! ```
//!
//! Nodes and arcs are listed with dense ids in order; `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::graph::{Arc, Instance};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    Instance(#[from] crate::graph::InstanceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn format_instance(inst: &Instance) -> String {
    let mut out = String::from("RCSN 1\n");
    for v in 0..inst.n_nodes() {
        match inst.coords() {
            Some(c) => writeln!(out, "node {v} {} {}", c[v].0, c[v].1),
            None => writeln!(out, "node {v}"),
        }
        .unwrap();
    }
    writeln!(out, "root {}", inst.root()).unwrap();
    for t in inst.terminals() {
        writeln!(out, "terminal {t}").unwrap();
    }
    for (i, a) in inst.arcs().iter().enumerate() {
        writeln!(out, "arc {i} {} {} {} {:.6}", a.tail, a.head, a.capacity, a.cost).unwrap();
    }
    out
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), FormatError> {
    std::fs::write(path, format_instance(inst))?;
    Ok(())
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, FormatError> {
    parse_instance(&std::fs::read_to_string(path)?)
}

fn field<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| FormatError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| FormatError::Parse {
        line,
        msg: format!("bad {what} {tok:?}"),
    })
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let err = |line: usize, msg: String| FormatError::Parse { line, msg };
    let mut header_seen = false;
    let mut n_nodes = 0;
    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut root = None;
    let mut terminals = Vec::new();
    let mut arcs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let key = toks.next().unwrap_or_default();
        if !header_seen {
            if key != "RCSN" {
                return Err(err(line, "expected header \"RCSN 1\"".into()));
            }
            let version: String = field(toks.next(), "version", line)?;
            if version != "1" {
                return Err(err(line, format!("unsupported format version {version}")));
            }
            header_seen = true;
            continue;
        }
        match key {
            "node" => {
                let id: usize = field(toks.next(), "node id", line)?;
                if id != n_nodes {
                    return Err(err(line, format!("node ids must be dense, expected {n_nodes}, got {id}")));
                }
                if let Some(x) = toks.next() {
                    let x: f64 = field(Some(x), "x coordinate", line)?;
                    let y: f64 = field(toks.next(), "y coordinate", line)?;
                    if coords.len() != n_nodes {
                        return Err(err(line, "coordinates must be given for all nodes or none".into()));
                    }
                    coords.push((x, y));
                } else if !coords.is_empty() {
                    return Err(err(line, "coordinates must be given for all nodes or none".into()));
                }
                n_nodes += 1;
            }
            "root" => {
                if root.is_some() {
                    return Err(err(line, "duplicate root".into()));
                }
                root = Some(field(toks.next(), "root id", line)?);
            }
            "terminal" => terminals.push(field(toks.next(), "terminal id", line)?),
            "arc" => {
                let id: usize = field(toks.next(), "arc id", line)?;
                if id != arcs.len() {
                    return Err(err(line, format!("arc ids must be dense, expected {}, got {id}", arcs.len())));
                }
                arcs.push(Arc {
                    tail: field(toks.next(), "tail", line)?,
                    head: field(toks.next(), "head", line)?,
                    capacity: field(toks.next(), "capacity", line)?,
                    cost: field(toks.next(), "cost", line)?,
                });
            }
            other => return Err(err(line, format!("unknown record {other:?}"))),
        }
        if let Some(extra) = toks.next() {
            return Err(err(line, format!("unexpected trailing token {extra:?}")));
        }
    }
    if !header_seen {
        return Err(err(1, "empty file".into()));
    }
    let root = root.ok_or_else(|| err(text.lines().count(), "missing root".into()))?;
    let coords = (!coords.is_empty()).then_some(coords);
    Ok(Instance::new(n_nodes, arcs, root, terminals, coords)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "RCSN 1\n# three nodes\nnode 0\nnode 1\nnode 2\nroot 0\nterminal 2\narc 0 0 1 2 1.500000\narc 1 1 2 1 0.250000\n";

    #[test]
    fn fixture_parses() {
        let inst = parse_instance(FIXTURE).unwrap();
        assert_eq!(inst.n_nodes(), 3);
        assert_eq!(inst.terminals(), &[2]);
        assert_eq!(inst.arcs()[1].cost, 0.25);
        assert_eq!(format_instance(&inst), FIXTURE.replace("# three nodes\n", ""));
    }

    #[test]
    fn bad_version_and_line_numbers() {
        let e = parse_instance("RCSN 2\n").unwrap_err();
        assert!(e.to_string().contains("version"), "{e}");
        let e = parse_instance("RCSN 1\nnode 0\nnode 1\nroot 0\narc 0 0 1 x 1.0\n").unwrap_err();
        assert!(e.to_string().starts_with("line 5"), "{e}");
    }
}
