use std::io::{self, Write};

use serde::Serialize;

/// One generation round, emitted as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub formulation: String,
    pub iteration: usize,
    pub incumbent_cost: f64,
    /// Worst-case residual flow of the incumbent.
    pub separation_value: u64,
    pub rows_added: usize,
    pub columns_added: usize,
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
