//! Anisotropic TV denoising,
//!
//! ```text
//! argmin_u  ‖u‖_TV + (λ/2)‖u − f‖²_F,
//! ```
//!
//! solved by split Bregman on the horizontal and vertical difference fields.
//! Differences are forward differences with Neumann boundaries (no
//! wraparound), matching [`tv_norm`].

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::soft::soft_threshold;
use crate::error::{Error, Result};
use crate::linops::ImageGrid;

/// Split-Bregman settings for the TV denoiser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvParams {
    /// Outer Bregman iterations.
    pub inner_iters: usize,
    /// Splitting penalty μ. `None` means 2λ.
    pub mu: Option<f64>,
    /// Gauss–Seidel sweeps for the u-subproblem per outer iteration.
    pub gs_sweeps: usize,
    /// Relative change ‖uᵏ − uᵏ⁻¹‖/‖uᵏ‖ below which the iteration stops early.
    pub tol: f64,
    /// Rademacher probes for the Monte-Carlo divergence.
    pub probes: usize,
    /// Probe step relative to max|x|.
    pub probe_eps: f64,
}

impl Default for TvParams {
    fn default() -> Self {
        Self {
            inner_iters: 20,
            mu: None,
            gs_sweeps: 2,
            tol: 1e-6,
            probes: 1,
            probe_eps: 1e-3,
        }
    }
}

impl TvParams {
    pub fn validate(&self) -> Result<()> {
        if self.inner_iters == 0 || self.gs_sweeps == 0 || self.probes == 0 {
            return Err(Error::Domain(
                "TV iteration, sweep and probe counts must be at least 1".into(),
            ));
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Domain(format!("TV penalty mu must be positive, got {mu}")));
            }
        }
        if !(self.probe_eps > 0.0) || !(self.tol >= 0.0) {
            return Err(Error::Domain("TV probe_eps must be positive and tol non-negative".into()));
        }
        Ok(())
    }
}

/// Result of one TV solve.
#[derive(Debug, Clone)]
pub struct TvEstimate {
    /// Lowest-objective iterate seen, including the input itself.
    pub estimate: ImageGrid,
    pub objective: f64,
    pub iterations: usize,
    /// False when `inner_iters` ran out before the tolerance was met.
    pub converged: bool,
}

/// Anisotropic TV: Σ|horizontal differences| + Σ|vertical differences|.
pub fn tv_norm(x: &ImageGrid) -> f64 {
    let a = x.as_array();
    let horiz: f64 = a
        .rows()
        .into_iter()
        .map(|r| r.windows(2).into_iter().map(|w| (w[1] - w[0]).abs()).sum::<f64>())
        .sum();
    let vert: f64 = a
        .columns()
        .into_iter()
        .map(|c| c.windows(2).into_iter().map(|w| (w[1] - w[0]).abs()).sum::<f64>())
        .sum();
    horiz + vert
}

/// `‖u‖_TV + (λ/2)‖u − f‖²`.
pub fn tv_objective(u: &ImageGrid, f: &ImageGrid, lambda: f64) -> f64 {
    let fit: f64 = u
        .iter()
        .zip(f.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    tv_norm(u) + 0.5 * lambda * fit
}

pub fn tv_denoise_bregman(f: &ImageGrid, lambda: f64, params: &TvParams) -> Result<TvEstimate> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    params.validate()?;

    let n = f.side();
    let input_obj = tv_norm(f);
    if input_obj == 0.0 || lambda.is_infinite() {
        return Ok(TvEstimate {
            estimate: f.clone(),
            objective: input_obj,
            iterations: 0,
            converged: true,
        });
    }

    let mu = params.mu.unwrap_or(2.0 * lambda);
    let shrink = 1.0 / mu;
    let fa = f.as_array().as_standard_layout();

    let mut u = fa.to_owned();
    let mut dx = Array2::<f64>::zeros((n, n - 1));
    let mut dy = Array2::<f64>::zeros((n - 1, n));
    let mut bx = Array2::<f64>::zeros((n, n - 1));
    let mut by = Array2::<f64>::zeros((n - 1, n));
    let mut wx = Array2::<f64>::zeros((n, n - 1));
    let mut wy = Array2::<f64>::zeros((n - 1, n));

    let mut best_u = fa.to_owned();
    let mut best_obj = input_obj;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..params.inner_iters {
        iterations += 1;
        let u_prev = u.clone();

        // w = d - b feeds the right-hand side λf + μ Dᵀ(d − b)
        Zip::from(&mut wx).and(&dx).and(&bx).for_each(|w, &d, &b| *w = d - b);
        Zip::from(&mut wy).and(&dy).and(&by).for_each(|w, &d, &b| *w = d - b);

        {
            let us = u.as_slice_mut().expect("standard layout");
            let fs = fa.as_slice().expect("standard layout");
            let wxs = wx.as_slice().expect("standard layout");
            let wys = wy.as_slice().expect("standard layout");
            let m = n - 1;
            for _ in 0..params.gs_sweeps {
                for i in 0..n {
                    for j in 0..n {
                        let k = i * n + j;
                        let mut rhs = lambda * fs[k];
                        let mut nb = 0.0;
                        let mut deg = 0.0;
                        if j > 0 {
                            rhs += mu * wxs[i * m + j - 1];
                            nb += us[k - 1];
                            deg += 1.0;
                        }
                        if j < m {
                            rhs -= mu * wxs[i * m + j];
                            nb += us[k + 1];
                            deg += 1.0;
                        }
                        if i > 0 {
                            rhs += mu * wys[k - n];
                            nb += us[k - n];
                            deg += 1.0;
                        }
                        if i < m {
                            rhs -= mu * wys[k];
                            nb += us[k + n];
                            deg += 1.0;
                        }
                        us[k] = (rhs + mu * nb) / (lambda + mu * deg);
                    }
                }
            }

            let dxs = dx.as_slice_mut().expect("standard layout");
            let bxs = bx.as_slice_mut().expect("standard layout");
            for i in 0..n {
                for j in 0..m {
                    let e = i * m + j;
                    let t = us[i * n + j + 1] - us[i * n + j] + bxs[e];
                    let d = soft_threshold(t, shrink);
                    dxs[e] = d;
                    bxs[e] = t - d;
                }
            }
            let dys = dy.as_slice_mut().expect("standard layout");
            let bys = by.as_slice_mut().expect("standard layout");
            for k in 0..m * n {
                let t = us[k + n] - us[k] + bys[k];
                let d = soft_threshold(t, shrink);
                dys[k] = d;
                bys[k] = t - d;
            }
        }

        let cur = ImageGrid::from_array_unchecked(u.clone());
        let obj = tv_objective(&cur, f, lambda);
        if obj < best_obj {
            best_obj = obj;
            best_u.assign(&u);
        }

        let change = Zip::from(&u)
            .and(&u_prev)
            .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
            .sqrt();
        let scale = cur.norm().max(f64::MIN_POSITIVE);
        if change <= params.tol * scale {
            converged = true;
            break;
        }
    }

    Ok(TvEstimate {
        estimate: ImageGrid::from_array_unchecked(best_u),
        objective: best_obj,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_norm_hand_cases() {
        assert_eq!(tv_norm(&ImageGrid::filled(5, 2.5).unwrap()), 0.0);
        let g = ImageGrid::from_row_major(2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(tv_norm(&g), 2.0);
    }

    #[test]
    fn constant_is_fixed_point() {
        let f = ImageGrid::filled(8, 0.37).unwrap();
        let out = tv_denoise_bregman(&f, 3.0, &TvParams::default()).unwrap();
        assert_eq!(out.estimate, f);
        assert!(out.converged);
    }

    #[test]
    fn huge_lambda_keeps_input() {
        let f = ImageGrid::from_fn(8, |(r, c)| ((r * 3 + c * 5) % 7) as f64 / 7.0).unwrap();
        let out = tv_denoise_bregman(&f, 1e8, &TvParams::default()).unwrap();
        assert!(out.estimate.sub(&f).unwrap().max_abs() <= 1e-4);
    }

    #[test]
    fn never_worse_than_input() {
        let f = ImageGrid::from_fn(8, |(r, c)| ((r * 7 + c * 13) % 5) as f64 - 2.0).unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            let out = tv_denoise_bregman(&f, lambda, &TvParams::default()).unwrap();
            assert!(out.objective <= tv_norm(&f));
            assert!((tv_objective(&out.estimate, &f, lambda) - out.objective).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_lambda() {
        let f = ImageGrid::zeros(4).unwrap();
        assert!(tv_denoise_bregman(&f, 0.0, &TvParams::default()).is_err());
        assert!(tv_denoise_bregman(&f, -1.0, &TvParams::default()).is_err());
    }
}
