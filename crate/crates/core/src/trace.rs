//! Per-iteration run records and their comma-separated form.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::ParameterVector;

pub const SCS_HEADER: &str = "k,F_hat,u,track_err,step_norm";
pub const SPIDER_HEADER: &str = "k,F_hat,u,track_err,step_norm,epoch,batch_size";

/// What a run records. `every = 0` disables rows; `checkpoint_every = 0`
/// disables iterate snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    pub every: usize,
    pub checkpoint_every: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            every: 1,
            checkpoint_every: 0,
        }
    }
}

impl TraceOptions {
    pub fn off() -> Self {
        Self {
            every: 0,
            checkpoint_every: 0,
        }
    }

    pub fn records(&self, k: usize) -> bool {
        self.every > 0 && k.is_multiple_of(self.every)
    }

    pub fn snapshots(&self, k: usize) -> bool {
        self.checkpoint_every > 0 && k.is_multiple_of(self.checkpoint_every)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub k: usize,
    /// Full-batch `F(x^k)`.
    pub f_hat: T,
    pub u: T,
    /// Full-batch `h(x^k)`; not written to CSV, `track_err = |u - h|`.
    pub h: T,
    pub step_norm: T,
    /// SPIDER only: epoch index and the batch size used for `u^k`.
    pub epoch: Option<usize>,
    pub batch_size: Option<usize>,
}

impl<T: Scalar> TraceRow<T> {
    pub fn track_err(&self) -> T {
        (self.u - self.h).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace<T> {
    pub rows: Vec<TraceRow<T>>,
    /// `(k, x^k)` snapshots for stationarity probing.
    pub checkpoints: Vec<(usize, ParameterVector<T>)>,
    /// Index `R` of the returned iterate.
    pub output_index: usize,
}

impl<T: Scalar> RunTrace<T> {
    pub fn is_spider(&self) -> bool {
        self.rows.first().is_some_and(|r| r.epoch.is_some())
    }

    pub fn to_csv(&self) -> String {
        let spider = self.is_spider();
        let mut out = String::from(if spider { SPIDER_HEADER } else { SCS_HEADER });
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}",
                r.k,
                r.f_hat.as_f64(),
                r.u.as_f64(),
                r.track_err().as_f64(),
                r.step_norm.as_f64()
            ));
            if spider {
                out.push_str(&format!(
                    ",{},{}",
                    r.epoch.unwrap_or(0),
                    r.batch_size.unwrap_or(0)
                ));
            }
            out.push('\n');
        }
        out
    }

    /// `k,x_1,...,x_n` per snapshot.
    pub fn checkpoints_csv(&self) -> String {
        let mut out = String::new();
        for (k, x) in &self.checkpoints {
            out.push_str(&k.to_string());
            for v in x.iter() {
                out.push_str(&format!(",{}", v.as_f64()));
            }
            out.push('\n');
        }
        out
    }
}

/// A trace row as read back from text. Columns beyond the SCS set are
/// optional.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub k: usize,
    pub f_hat: f64,
    pub u: f64,
    pub track_err: f64,
    pub step_norm: f64,
    pub epoch: Option<usize>,
    pub batch_size: Option<usize>,
}

/// Parses a trace written by [`RunTrace::to_csv`]. Malformed rows are
/// reported with their 1-based line number.
pub fn parse_trace(text: &str) -> Result<Vec<ParsedRow>> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.trim(),
            None => return Ok(Vec::new()),
        }
    };
    let spider = match header {
        SCS_HEADER => false,
        SPIDER_HEADER => true,
        other => {
            return Err(Error::Data(format!(
                "line 1: unrecognized trace header '{other}'"
            )))
        }
    };
    let width = if spider { 7 } else { 5 };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Data(format!("line {}: {what}", i + 1));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != width {
            return Err(bad(&format!("expected {width} columns, found {}", cols.len())));
        }
        let int = |s: &str| s.trim().parse::<usize>().map_err(|e| bad(&e.to_string()));
        let real = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
        rows.push(ParsedRow {
            k: int(cols[0])?,
            f_hat: real(cols[1])?,
            u: real(cols[2])?,
            track_err: real(cols[3])?,
            step_norm: real(cols[4])?,
            epoch: if spider { Some(int(cols[5])?) } else { None },
            batch_size: if spider { Some(int(cols[6])?) } else { None },
        });
    }
    Ok(rows)
}
