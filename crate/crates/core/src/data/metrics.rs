use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::ImageGrid;

/// PSNR in dB with peak = max|reference|. Returns +∞ when the images match.
pub fn psnr(reference: &ImageGrid, estimate: &ImageGrid) -> Result<f64> {
    if reference.side() != estimate.side() {
        return Err(Error::Dimension(format!(
            "side mismatch: {} vs {}",
            reference.side(),
            estimate.side()
        )));
    }
    let mse = reference.sub(estimate)?.norm_sq() / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.max_abs();
    Ok(10.0 * (peak * peak / mse).log10())
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment: String,
    pub side: usize,
    pub m_over_n: f64,
    pub seed: u64,
    pub psnr_a_db: f64,
    pub psnr_b_db: f64,
    pub iters: usize,
    pub wall_ms: f64,
    pub solver: String,
}

pub fn write_metrics_csv<W: Write>(writer: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "experiment", "side", "m_over_n", "seed", "psnr_a_db", "psnr_b_db", "iters", "wall_ms", "solver",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
