use ndarray::s;

use super::DenoiseOutput;
use crate::error::{Error, Result};
use crate::linops::ImageGrid;

/// Divergence of `x ↦ x·max(1 − thr/‖x‖, 0)` for a block of `b` entries with
/// norm `r`: `b(1 − thr/r) + thr/r` when `r > thr`, else 0.
#[inline]
pub fn block_divergence(b: usize, r: f64, thr: f64) -> f64 {
    if r > thr {
        let q = thr / r;
        b as f64 * (1.0 - q) + q
    } else {
        0.0
    }
}

pub(crate) fn check_block(side: usize, block_side: usize) -> Result<()> {
    if block_side == 0 || side % block_side != 0 {
        return Err(Error::Dimension(format!(
            "block side {block_side} does not divide grid side {side}"
        )));
    }
    Ok(())
}

/// Block soft thresholding over contiguous `block_side × block_side` tiles in
/// raster order. Each tile is scaled by `max(1 − thr/‖tile‖_F, 0)`.
pub fn block_soft_threshold(x: &ImageGrid, block_side: usize, thr: f64) -> Result<DenoiseOutput> {
    let side = x.side();
    check_block(side, block_side)?;
    let b = block_side * block_side;
    let mut out = x.as_array().clone();
    let mut div_sum = 0.0;
    for bi in (0..side).step_by(block_side) {
        for bj in (0..side).step_by(block_side) {
            let mut tile = out.slice_mut(s![bi..bi + block_side, bj..bj + block_side]);
            let r = tile.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > thr {
                tile *= 1.0 - thr / r;
            } else {
                tile.fill(0.0);
            }
            div_sum += block_divergence(b, r, thr);
        }
    }
    Ok(DenoiseOutput {
        estimate: ImageGrid::from_array_unchecked(out),
        divergence_avg: div_sum / x.len() as f64,
        converged: true,
    })
}
