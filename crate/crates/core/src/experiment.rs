//! End-to-end separation scenarios: build a mixture, measure it, run one or
//! both solvers and score the estimates.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{baseline_solve, BaselineConfig, BaselineVariant};
use crate::data::{
    gen_group_sparse, gen_shot_noise, gen_shot_noise_avoiding, load_image_pgm, psnr, Amplitude, GroupSparseSpec,
    MetricsRow, Mixture, ShotNoiseSpec,
};
use crate::denoise::{DenoiserSpec, ThresholdPolicy, TvParams};
use crate::error::{Error, Result};
use crate::linops::{forward, gen_gaussian_sensing, gen_mask, ImageGrid, SamplingMask, SensingMatrix};
use crate::solver::{mixamp_run, IterationTrace, MixAmpConfig, OperatorScaling, DEFAULT_MAX_ITERS, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Shot noise plus a group-sparse tiling.
    Group,
    /// Shot noise plus a piecewise-smooth image.
    Tv,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Group => "group",
            Case::Tv => "tv",
        }
    }

    /// (λ₁, λ₂) used by the baseline when none are given.
    pub fn default_lambdas(self) -> (f64, f64) {
        match self {
            Case::Group => (0.5, 1.2),
            Case::Tv => (2.0, 1.4),
        }
    }

    /// Calibrated MixAMP threshold scales (τa, τb).
    pub fn default_taus(self) -> (f64, f64) {
        match self {
            Case::Group => (0.2, 0.5),
            Case::Tv => (0.2, 0.2),
        }
    }
}

/// Outer split-Bregman iterations of the TV denoiser inside MixAMP.
pub const MIXAMP_TV_INNER_ITERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Mixamp,
    Baseline,
    Both,
}

impl SolverChoice {
    pub fn runs_mixamp(self) -> bool {
        matches!(self, SolverChoice::Mixamp | SolverChoice::Both)
    }

    pub fn runs_baseline(self) -> bool {
        matches!(self, SolverChoice::Baseline | SolverChoice::Both)
    }
}

/// Everything needed to reproduce one separation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub case: Case,
    pub side: usize,
    /// M/N in (0, 1].
    pub sampling: f64,
    /// Shot-noise density.
    pub sparsity: f64,
    /// Tile side for the group case.
    pub block: Option<usize>,
    /// Fraction of active tiles in the group phantom.
    pub group_fraction: f64,
    /// Natural image for the TV case.
    pub image: Option<PathBuf>,
    pub seed: u64,
    pub solver: SolverChoice,
    pub max_iters: usize,
    pub baseline_max_iters: usize,
    pub tol: f64,
    pub tau_a: f64,
    pub tau_b: f64,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub rho: f64,
    pub amplitude: Amplitude,
    pub disjoint: bool,
    pub threshold_policy: ThresholdPolicy,
    pub damping: f64,
    pub scaling: OperatorScaling,
    /// TV denoiser settings inside MixAMP.
    pub mixamp_tv: TvParams,
    /// TV prox settings inside the baseline.
    pub baseline_tv: TvParams,
}

impl Scenario {
    pub fn new(case: Case, side: usize, sampling: f64, sparsity: f64, seed: u64) -> Self {
        let (tau_a, tau_b) = case.default_taus();
        Self {
            case,
            side,
            sampling,
            sparsity,
            block: None,
            group_fraction: 0.25,
            image: None,
            seed,
            solver: SolverChoice::Mixamp,
            max_iters: DEFAULT_MAX_ITERS,
            baseline_max_iters: 2000,
            tol: DEFAULT_TOL,
            tau_a,
            tau_b,
            lambda1: None,
            lambda2: None,
            rho: 1e4,
            amplitude: Amplitude::Symmetric,
            disjoint: false,
            threshold_policy: ThresholdPolicy::Sqrt,
            damping: 1.0,
            scaling: OperatorScaling::default(),
            mixamp_tv: TvParams {
                inner_iters: MIXAMP_TV_INNER_ITERS,
                ..TvParams::default()
            },
            baseline_tv: TvParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling > 0.0 && self.sampling <= 1.0) {
            return Err(Error::Domain(format!("sampling must lie in (0, 1], got {}", self.sampling)));
        }
        if self.case == Case::Group && self.block.is_none() {
            return Err(Error::Domain("the group case needs a block size".into()));
        }
        if self.case == Case::Tv && self.image.is_none() {
            return Err(Error::Domain("the tv case needs an image".into()));
        }
        Ok(())
    }

    /// Number of measurements, round(sampling·N) clamped to [1, N].
    pub fn m(&self) -> usize {
        let n = self.side * self.side;
        ((self.sampling * n as f64).round() as usize).clamp(1, n)
    }

    pub fn mixamp_config(&self) -> MixAmpConfig {
        let b = match self.case {
            Case::Group => DenoiserSpec::block_soft(self.block.unwrap_or(1)),
            Case::Tv => DenoiserSpec::tv_bregman(self.mixamp_tv),
        };
        let mut cfg = MixAmpConfig::new(DenoiserSpec::soft().with_tau(self.tau_a), b.with_tau(self.tau_b));
        cfg.max_iters = self.max_iters;
        cfg.tol = self.tol;
        cfg.threshold_policy = self.threshold_policy;
        cfg.damping = self.damping;
        cfg.scaling = self.scaling;
        cfg.probe_seed = self.seed;
        cfg
    }

    pub fn baseline_config(&self) -> (BaselineConfig, BaselineVariant) {
        let (l1, l2) = self.case.default_lambdas();
        let mut cfg = BaselineConfig::new(self.lambda1.unwrap_or(l1), self.lambda2.unwrap_or(l2));
        cfg.rho = self.rho;
        cfg.max_iters = self.baseline_max_iters;
        cfg.tol = self.tol;
        let variant = match self.case {
            Case::Group => BaselineVariant::Group {
                block_side: self.block.unwrap_or(1),
            },
            Case::Tv => BaselineVariant::Tv(self.baseline_tv),
        };
        (cfg, variant)
    }
}

/// Seeds for the independent random draws of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub sensing: u64,
    pub mask: u64,
    pub shot_noise: u64,
    pub group: u64,
}

impl DerivedSeeds {
    pub fn from_seed(seed: u64) -> Self {
        let base = seed.wrapping_mul(4);
        Self {
            sensing: base,
            mask: base + 1,
            shot_noise: base + 2,
            group: base + 3,
        }
    }
}

/// A measured mixture ready for separation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mixture: Mixture,
    pub a: SensingMatrix,
    pub mask: SamplingMask,
    pub y: ImageGrid,
    pub seeds: DerivedSeeds,
}

pub fn build_problem(s: &Scenario) -> Result<Problem> {
    s.validate()?;
    let seeds = DerivedSeeds::from_seed(s.seed);
    let xb = match s.case {
        Case::Group => gen_group_sparse(&GroupSparseSpec {
            side: s.side,
            block_side: s.block.unwrap_or(1),
            active_fraction: s.group_fraction,
            seed: seeds.group,
        })?,
        Case::Tv => {
            let path = s.image.as_ref().expect("validated");
            let img = load_image_pgm(path)?;
            if img.side() != s.side {
                return Err(Error::Dimension(format!(
                    "image {} is {}x{}, expected side {}",
                    path.display(),
                    img.side(),
                    img.side(),
                    s.side
                )));
            }
            img
        }
    };
    let shot = ShotNoiseSpec {
        side: s.side,
        sparsity: s.sparsity,
        amplitude: s.amplitude,
        seed: seeds.shot_noise,
    };
    let xa = if s.disjoint {
        gen_shot_noise_avoiding(&shot, Some(&xb))?
    } else {
        gen_shot_noise(&shot)?
    };
    let mixture = Mixture::new(xa, xb)?;
    let m = s.m();
    let a = gen_gaussian_sensing(s.side, m, seeds.sensing)?;
    let mask = gen_mask(s.side, m, seeds.mask)?;
    let y = forward(&a, &mixture.x, &mask)?;
    Ok(Problem {
        mixture,
        a,
        mask,
        y,
        seeds,
    })
}

/// Output of one solver on one problem.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: &'static str,
    pub xa: ImageGrid,
    pub xb: ImageGrid,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
    pub psnr_a_db: f64,
    pub psnr_b_db: f64,
    pub trace: IterationTrace,
}

impl SolverRun {
    pub fn metrics_row(&self, s: &Scenario, include_timing: bool) -> MetricsRow {
        MetricsRow {
            experiment: s.case.name().to_string(),
            side: s.side,
            m_over_n: s.sampling,
            seed: s.seed,
            psnr_a_db: self.psnr_a_db,
            psnr_b_db: self.psnr_b_db,
            iters: self.iterations,
            wall_ms: if include_timing { self.wall_ms } else { 0.0 },
            solver: self.solver.to_string(),
        }
    }
}

pub fn run_mixamp(s: &Scenario, p: &Problem) -> Result<SolverRun> {
    let cfg = s.mixamp_config();
    let start = Instant::now();
    let out = mixamp_run(&p.a, &p.y, &p.mask, &cfg)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SolverRun {
        solver: "mixamp",
        psnr_a_db: psnr(&p.mixture.xa, &out.xa)?,
        psnr_b_db: psnr(&p.mixture.xb, &out.xb)?,
        xa: out.xa,
        xb: out.xb,
        iterations: out.iterations,
        converged: out.converged,
        wall_ms,
        trace: out.trace,
    })
}

pub fn run_baseline(s: &Scenario, p: &Problem) -> Result<SolverRun> {
    let (cfg, variant) = s.baseline_config();
    let start = Instant::now();
    let out = baseline_solve(&p.a, &p.y, &p.mask, &cfg, &variant)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SolverRun {
        solver: "baseline",
        psnr_a_db: psnr(&p.mixture.xa, &out.xa)?,
        psnr_b_db: psnr(&p.mixture.xb, &out.xb)?,
        xa: out.xa,
        xb: out.xb,
        iterations: out.iterations,
        converged: out.converged,
        wall_ms,
        trace: out.trace,
    })
}

/// Runs the solvers selected by `s.solver`, MixAMP first.
pub fn run_scenario(s: &Scenario) -> Result<(Problem, Vec<SolverRun>)> {
    let problem = build_problem(s)?;
    let mut runs = Vec::new();
    if s.solver.runs_mixamp() {
        runs.push(run_mixamp(s, &problem)?);
    }
    if s.solver.runs_baseline() {
        runs.push(run_baseline(s, &problem)?);
    }
    Ok((problem, runs))
}
