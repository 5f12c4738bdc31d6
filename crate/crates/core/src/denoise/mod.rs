//! Denoisers η(·; θ) and their average derivatives ⟨η′⟩.
//!
//! Three denoisers are available: elementwise soft thresholding (direct
//! sparsity), block soft thresholding over square tiles (group sparsity) and
//! anisotropic TV denoising (finite-difference sparsity). The first two have
//! exact divergences; the TV divergence is estimated with Rademacher probes.

mod block;
mod soft;
mod tv;

pub use block::{block_divergence, block_soft_threshold};
pub use soft::{soft_threshold, soft_threshold_deriv, soft_threshold_div, soft_threshold_grid};
pub use tv::{tv_denoise_bregman, tv_norm, tv_objective, TvEstimate, TvParams};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::ImageGrid;

/// Denoised grid plus the divergence scalar used by the Onsager term.
#[derive(Debug, Clone)]
pub struct DenoiseOutput {
    pub estimate: ImageGrid,
    pub divergence_avg: f64,
    /// Only ever false for the TV denoiser when its inner loop ran out.
    pub converged: bool,
}

/// How the iteration variance θ becomes a denoiser threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// τ·√θ, an amplitude-scale threshold.
    #[default]
    Sqrt,
    /// τ·θ, passing the variance through unchanged.
    Literal,
}

/// τ·√θ.
pub fn threshold_from_theta(theta: f64, tau: f64) -> Result<f64> {
    threshold_with_policy(theta, tau, ThresholdPolicy::Sqrt)
}

pub fn threshold_with_policy(theta: f64, tau: f64, policy: ThresholdPolicy) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!("theta must be non-negative, got {theta}")));
    }
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    Ok(match policy {
        ThresholdPolicy::Sqrt => tau * theta.sqrt(),
        ThresholdPolicy::Literal => tau * theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenoiserKind {
    Soft,
    BlockSoft { block_side: usize },
    TvBregman(TvParams),
}

/// A denoiser choice plus its threshold scale τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    pub tau: f64,
}

impl DenoiserSpec {
    pub fn soft() -> Self {
        Self {
            kind: DenoiserKind::Soft,
            tau: 1.0,
        }
    }

    pub fn block_soft(block_side: usize) -> Self {
        Self {
            kind: DenoiserKind::BlockSoft { block_side },
            tau: 1.0,
        }
    }

    pub fn tv_bregman(params: TvParams) -> Self {
        Self {
            kind: DenoiserKind::TvBregman(params),
            tau: 1.0,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DenoiserKind::Soft => "soft",
            DenoiserKind::BlockSoft { .. } => "block_soft",
            DenoiserKind::TvBregman(_) => "tv_bregman",
        }
    }

    /// Checks parameters against a grid side.
    pub fn validate(&self, side: usize) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Domain(format!("tau must be positive, got {}", self.tau)));
        }
        match self.kind {
            DenoiserKind::Soft => Ok(()),
            DenoiserKind::BlockSoft { block_side } => block::check_block(side, block_side),
            DenoiserKind::TvBregman(p) => p.validate(),
        }
    }

    /// η(x; thr) without the divergence. For TV the threshold maps to the
    /// fidelity weight λ = 1/thr; thr = 0 is the identity.
    pub fn estimate(&self, x: &ImageGrid, thr: f64) -> Result<ImageGrid> {
        check_thr(thr)?;
        match self.kind {
            DenoiserKind::Soft => Ok(x.map(|v| soft_threshold(v, thr))),
            DenoiserKind::BlockSoft { block_side } => {
                Ok(block_soft_threshold(x, block_side, thr)?.estimate)
            }
            DenoiserKind::TvBregman(p) => {
                if thr == 0.0 {
                    Ok(x.clone())
                } else {
                    Ok(tv_denoise_bregman(x, 1.0 / thr, &p)?.estimate)
                }
            }
        }
    }

    /// η(x; thr) together with ⟨η′(x; thr)⟩. `probe_seed` only matters for TV.
    pub fn denoise(&self, x: &ImageGrid, thr: f64, probe_seed: u64) -> Result<DenoiseOutput> {
        check_thr(thr)?;
        match self.kind {
            DenoiserKind::Soft => Ok(soft_threshold_grid(x, thr)),
            DenoiserKind::BlockSoft { block_side } => block_soft_threshold(x, block_side, thr),
            DenoiserKind::TvBregman(p) => {
                if thr == 0.0 {
                    return Ok(DenoiseOutput {
                        estimate: x.clone(),
                        divergence_avg: 1.0,
                        converged: true,
                    });
                }
                let base = tv_denoise_bregman(x, 1.0 / thr, &p)?;
                let eps = p.probe_eps * x.max_abs().max(1.0e-12);
                let div = mc_divergence_from(self, x, &base.estimate, thr, probe_seed, eps, p.probes)?;
                Ok(DenoiseOutput {
                    estimate: base.estimate,
                    divergence_avg: div,
                    converged: base.converged,
                })
            }
        }
    }
}

fn check_thr(thr: f64) -> Result<()> {
    if !(thr >= 0.0) || thr.is_infinite() {
        return Err(Error::Domain(format!("threshold must be finite and non-negative, got {thr}")));
    }
    Ok(())
}

/// Monte-Carlo divergence (1/N)·bᵀ[η(x + ε b) − η(x)]/ε averaged over
/// `n_probes` Rademacher grids b drawn from `probe_seed`.
pub fn mc_divergence(
    spec: &DenoiserSpec,
    x: &ImageGrid,
    thr: f64,
    probe_seed: u64,
    eps: f64,
    n_probes: usize,
) -> Result<f64> {
    let base = spec.estimate(x, thr)?;
    mc_divergence_from(spec, x, &base, thr, probe_seed, eps, n_probes)
}

fn mc_divergence_from(
    spec: &DenoiserSpec,
    x: &ImageGrid,
    base: &ImageGrid,
    thr: f64,
    probe_seed: u64,
    eps: f64,
    n_probes: usize,
) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("probe step must be positive, got {eps}")));
    }
    if n_probes == 0 {
        return Err(Error::Domain("at least one probe is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let side = x.side();
    let mut total = 0.0;
    for _ in 0..n_probes {
        let probe = ImageGrid::from_fn(side, |_| if rng.random::<bool>() { 1.0 } else { -1.0 })?;
        let shifted = spec.estimate(&x.axpy(eps, &probe)?, thr)?;
        let diff = shifted.sub(base)?;
        total += probe.inner(&diff) / eps;
    }
    Ok(total / (n_probes as f64 * x.len() as f64))
}
