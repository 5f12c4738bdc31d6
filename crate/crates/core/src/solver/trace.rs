use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One completed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    /// Residual variance ‖R‖²_F / M after the step.
    pub theta: f64,
    /// Relative change between consecutive iterates.
    pub tol: f64,
    pub residual_norm: f64,
    /// Milliseconds since the start of the run.
    pub wall_ms: f64,
}

/// Per-iteration history of a solver run plus the parameters it ran with.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub solver: String,
    pub params: BTreeMap<String, f64>,
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn new(solver: impl Into<String>) -> Self {
        Self {
            solver: solver.into(),
            ..Default::default()
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.t < record.t));
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Total wall time of the run in milliseconds.
    pub fn wall_ms(&self) -> f64 {
        self.last().map_or(0.0, |r| r.wall_ms)
    }

    /// Writes `t,theta,tol,residual_norm,wall_ms`, one row per iteration.
    /// With `include_timing = false` the wall-clock column is written as 0 so
    /// the file depends only on the numerics.
    pub fn write_csv<W: Write>(&self, writer: W, include_timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "theta", "tol", "residual_norm", "wall_ms"])?;
        for r in &self.records {
            let wall = if include_timing { r.wall_ms } else { 0.0 };
            w.write_record(&[
                r.t.to_string(),
                format_float(r.theta),
                format_float(r.tol),
                format_float(r.residual_norm),
                format!("{wall:.3}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn format_float(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.12e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut trace = IterationTrace::new("mixamp");
        trace.push(TraceRecord {
            t: 1,
            theta: 0.5,
            tol: f64::INFINITY,
            residual_norm: 2.0,
            wall_ms: 1.25,
        });
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,theta,tol,residual_norm,wall_ms"));
        assert_eq!(
            lines.next(),
            Some("1,5.000000000000e-1,inf,2.000000000000e0,0.000")
        );
        assert_eq!(trace.wall_ms(), 1.25);
    }
}
