use super::DenoiseOutput;
use crate::linops::ImageGrid;

/// Scalar soft thresholding, `sgn(x)·max(|x| − thr, 0)`: the minimizer of
/// `|u| + (1/(2·thr))(u − x)²`.
#[inline]
pub fn soft_threshold(x: f64, thr: f64) -> f64 {
    let mag = x.abs() - thr;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

/// Derivative of [`soft_threshold`] away from the kinks at ±thr.
#[inline]
pub fn soft_threshold_deriv(x: f64, thr: f64) -> f64 {
    if x.abs() > thr {
        1.0
    } else {
        0.0
    }
}

/// Average derivative (1/N)·#{|x_ij| > thr}.
pub fn soft_threshold_div(x: &ImageGrid, thr: f64) -> f64 {
    let active = x.iter().filter(|v| v.abs() > thr).count();
    active as f64 / x.len() as f64
}

/// Elementwise soft thresholding with its exact divergence.
pub fn soft_threshold_grid(x: &ImageGrid, thr: f64) -> DenoiseOutput {
    DenoiseOutput {
        estimate: x.map(|v| soft_threshold(v, thr)),
        divergence_avg: soft_threshold_div(x, thr),
        converged: true,
    }
}
