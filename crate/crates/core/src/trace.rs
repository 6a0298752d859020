//! Per-iteration convergence records and their CSV form.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "iter,elapsed_sec,primal,dual,gap";

/// Objective values after `iteration` updates. `dual` and `gap` are NaN for
/// optimizers without a dual iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub elapsed_sec: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Options for [`write_trace`].
#[derive(Clone, Copy, Debug, Default)]
pub struct TraceFormat {
    /// Write `0.0` in the elapsed column so that output is reproducible.
    pub zero_elapsed: bool,
}

pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_trace<W: Write>(out: &mut W, records: &[TraceRecord], format: TraceFormat) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        let elapsed = if format.zero_elapsed { 0.0 } else { r.elapsed_sec };
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration,
            format_float(elapsed),
            format_float(r.primal),
            format_float(r.dual),
            format_float(r.gap)
        )?;
    }
    Ok(())
}

/// Reads a trace written by [`write_trace`]. Extra trailing columns are
/// ignored.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if !header.starts_with(TRACE_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected trace header `{header}`"),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse {
            line: i + 2,
            message: format!("malformed trace row `{line}`"),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 5 {
            return Err(bad());
        }
        let float = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        records.push(TraceRecord {
            iteration: fields[0].trim().parse().map_err(|_| bad())?,
            elapsed_sec: float(fields[1])?,
            primal: float(fields[2])?,
            dual: float(fields[3])?,
            gap: float(fields[4])?,
        });
    }
    Ok(records)
}
