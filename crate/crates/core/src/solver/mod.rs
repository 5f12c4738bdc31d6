//! The MixAMP iteration.
//!
//! Two estimation chains, one per mixture component, share a single masked
//! residual R. Each step denoises `AᵀRA + X` for both components at the same
//! threshold, then rebuilds the residual from the new estimates and adds one
//! Onsager correction term per chain:
//!
//! ```text
//! Xa ← ηa(AᵀRA + Xa; θ)          Xb ← ηb(AᵀRA + Xb; θ)
//! R  ← Y − P_Ω{A(Xa + Xb)Aᵀ} + (N/M)(⟨ηa′⟩ + ⟨ηb′⟩)·R
//! θ  ← ‖R‖²_F / M
//! ```

mod trace;

pub use trace::{IterationTrace, TraceRecord};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::denoise::{threshold_with_policy, DenoiserSpec, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::linops::{adjoint, forward, mask_apply, ImageGrid, SamplingMask, SensingMatrix};

/// Paper-default stopping tolerance on the relative iterate change.
pub const DEFAULT_TOL: f64 = 5e-4;
pub const DEFAULT_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixAmpConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub denoiser_a: DenoiserSpec,
    pub denoiser_b: DenoiserSpec,
    pub record_trace: bool,
    pub threshold_policy: ThresholdPolicy,
    /// β in (0, 1]; 1 disables damping.
    pub damping: f64,
    /// Set to false to drop both correction terms (plain iterative thresholding).
    pub onsager: bool,
    /// How (A, Y) are rescaled before iterating. Estimates are unaffected;
    /// θ in the trace is reported in the rescaled units.
    pub scaling: OperatorScaling,
    /// Seed for the Monte-Carlo divergence probes.
    pub probe_seed: u64,
}

impl MixAmpConfig {
    pub fn new(denoiser_a: DenoiserSpec, denoiser_b: DenoiserSpec) -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            denoiser_a,
            denoiser_b,
            record_trace: true,
            threshold_policy: ThresholdPolicy::Sqrt,
            damping: 1.0,
            onsager: true,
            scaling: OperatorScaling::default(),
            probe_seed: 0,
        }
    }

    pub fn validate(&self, side: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        self.denoiser_a.validate(side)?;
        self.denoiser_b.validate(side)
    }
}

/// Rescaling of the sensing matrix applied by [`mixamp_run`]. A is replaced
/// by s·A and Y by s²·Y, which leaves the solution unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OperatorScaling {
    /// Use A as given.
    None,
    /// Unit mean column energy of P_Ω'(A ⊗ A).
    ColumnEnergy,
    /// Largest eigenvalue of the normal operator bounded by `target`, using
    /// λmax(AᵀA)² as the bound.
    Spectral { target: f64 },
}

impl Default for OperatorScaling {
    fn default() -> Self {
        OperatorScaling::Spectral {
            target: DEFAULT_SPECTRAL_TARGET,
        }
    }
}

pub const DEFAULT_SPECTRAL_TARGET: f64 = 0.9;

impl OperatorScaling {
    /// The factor s for this mode.
    pub fn factor(self, a: &SensingMatrix, mask: &SamplingMask) -> Result<f64> {
        match self {
            OperatorScaling::None => Ok(1.0),
            OperatorScaling::ColumnEnergy => operator_scale(a, mask),
            OperatorScaling::Spectral { target } => {
                if !(target > 0.0 && target.is_finite()) {
                    return Err(Error::Domain(format!("spectral target must be positive, got {target}")));
                }
                let g = a.gram_max_eig(100);
                if !(g > 0.0) {
                    return Err(Error::Degenerate("sensing matrix is zero".into()));
                }
                Ok(target.powf(0.25) / g.sqrt())
            }
        }
    }
}

/// Full iteration state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixAmpState {
    pub xa: ImageGrid,
    pub xb: ImageGrid,
    /// Residual, zero off Ω.
    pub r: ImageGrid,
    /// ‖r‖²_F / M.
    pub theta: f64,
    pub t: usize,
    /// ⟨ηa′⟩ and ⟨ηb′⟩ from the last step (0 before the first).
    pub div_a: f64,
    pub div_b: f64,
}

/// Xa = Xb = 0, R = P_Ω{Y}, θ = ‖Y‖²/M.
pub fn mixamp_init(y: &ImageGrid, mask: &SamplingMask) -> Result<MixAmpState> {
    if mask.m() == 0 {
        return Err(Error::Degenerate("no measurements (M = 0)".into()));
    }
    let r = mask_apply(mask, y)?;
    let theta = r.norm_sq() / mask.m() as f64;
    let zero = ImageGrid::zeros(y.side())?;
    Ok(MixAmpState {
        xa: zero.clone(),
        xb: zero,
        r,
        theta,
        t: 0,
        div_a: 0.0,
        div_b: 0.0,
    })
}

/// One MixAMP iteration.
pub fn mixamp_step(
    state: &MixAmpState,
    a: &SensingMatrix,
    y: &ImageGrid,
    mask: &SamplingMask,
    cfg: &MixAmpConfig,
) -> Result<MixAmpState> {
    let t = state.t + 1;
    let n = mask.n() as f64;
    let m = mask.m() as f64;

    let thr_a = threshold_with_policy(state.theta, cfg.denoiser_a.tau, cfg.threshold_policy)?;
    let thr_b = threshold_with_policy(state.theta, cfg.denoiser_b.tau, cfg.threshold_policy)?;

    // Both chains see the same pseudo-data AᵀRA.
    let z = adjoint(a, &state.r)?;
    let in_a = z.add(&state.xa)?;
    let in_b = z.add(&state.xb)?;
    let seed = cfg.probe_seed.wrapping_add(2 * t as u64);
    let out_a = cfg.denoiser_a.denoise(&in_a, thr_a, seed)?;
    let out_b = cfg.denoiser_b.denoise(&in_b, thr_b, seed.wrapping_add(1))?;

    let beta = cfg.damping;
    let (xa, xb) = if beta < 1.0 {
        (
            out_a.estimate.scaled(beta).axpy(1.0 - beta, &state.xa)?,
            out_b.estimate.scaled(beta).axpy(1.0 - beta, &state.xb)?,
        )
    } else {
        (out_a.estimate, out_b.estimate)
    };

    let fit = forward(a, &xa.add(&xb)?, mask)?;
    let mut r = mask_apply(mask, y)?.sub(&fit)?;
    if cfg.onsager {
        let coeff = (n / m) * (out_a.divergence_avg + out_b.divergence_avg);
        r = r.axpy(coeff, &state.r)?;
    }
    let theta = r.norm_sq() / m;

    if !(theta.is_finite() && xa.is_finite() && xb.is_finite()) {
        return Err(Error::Divergence {
            iteration: t,
            trace: Box::default(),
        });
    }

    Ok(MixAmpState {
        xa,
        xb,
        r,
        theta,
        t,
        div_a: out_a.divergence_avg,
        div_b: out_b.divergence_avg,
    })
}

/// `√(‖Xa⁻ − Xa‖² + ‖Xb⁻ − Xb‖²) / √(‖Xa‖² + ‖Xb‖²)`, with 0/0 = 0 and
/// x/0 = +∞ for x > 0.
pub fn stopping_tol(prev: (&ImageGrid, &ImageGrid), cur: (&ImageGrid, &ImageGrid)) -> Result<f64> {
    let num = prev.0.sub(cur.0)?.norm_sq() + prev.1.sub(cur.1)?.norm_sq();
    let den = cur.0.norm_sq() + cur.1.norm_sq();
    Ok(if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    })
}

/// Final estimates of a MixAMP run.
#[derive(Debug, Clone)]
pub struct MixAmpOutput {
    pub xa: ImageGrid,
    pub xb: ImageGrid,
    pub trace: IterationTrace,
    pub iterations: usize,
    /// True when the stopping tolerance was met before `max_iters`.
    pub converged: bool,
}

/// Scale factor s such that s·A gives the masked Kronecker operator unit mean
/// column energy. Y must be scaled by s² to keep the same solution.
pub fn operator_scale(a: &SensingMatrix, mask: &SamplingMask) -> Result<f64> {
    let energy = a.column_energy(mask)?;
    if !(energy > 0.0) {
        return Err(Error::Degenerate("sensing operator has zero energy on the mask".into()));
    }
    Ok(energy.powf(-0.25))
}

/// Iterates [`mixamp_step`] until [`stopping_tol`] ≤ `cfg.tol` or
/// `cfg.max_iters` steps.
pub fn mixamp_run(
    a: &SensingMatrix,
    y: &ImageGrid,
    mask: &SamplingMask,
    cfg: &MixAmpConfig,
) -> Result<MixAmpOutput> {
    let side = y.side();
    if a.side() != side || mask.side() != side {
        return Err(Error::Dimension(format!(
            "sides differ: A {}, Y {side}, mask {}",
            a.side(),
            mask.side()
        )));
    }
    cfg.validate(side)?;

    let s = cfg.scaling.factor(a, mask)?;
    let (a_run, y_run) = (a.scaled(s), y.scaled(s * s));

    let mut trace = IterationTrace::new("mixamp")
        .with_param("tau_a", cfg.denoiser_a.tau)
        .with_param("tau_b", cfg.denoiser_b.tau)
        .with_param("tol", cfg.tol)
        .with_param("max_iters", cfg.max_iters as f64)
        .with_param("operator_scale", s);
    if cfg.damping < 1.0 {
        trace = trace.with_param("damping", cfg.damping);
    }
    if !cfg.onsager {
        trace = trace.with_param("onsager_disabled", 1.0);
    }

    let start = Instant::now();
    let mut state = mixamp_init(&y_run, mask)?;
    let mut converged = false;
    while state.t < cfg.max_iters {
        let next = match mixamp_step(&state, &a_run, &y_run, mask, cfg) {
            Ok(s) => s,
            Err(Error::Divergence { iteration, .. }) => {
                return Err(Error::Divergence {
                    iteration,
                    trace: Box::new(trace),
                })
            }
            Err(e) => return Err(e),
        };
        let tol = stopping_tol((&state.xa, &state.xb), (&next.xa, &next.xb))?;
        if cfg.record_trace {
            trace.push(TraceRecord {
                t: next.t,
                theta: next.theta,
                tol,
                residual_norm: next.r.norm(),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        state = next;
        if tol <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(MixAmpOutput {
        iterations: state.t,
        xa: state.xa,
        xb: state.xb,
        trace,
        converged,
    })
}
