use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mixamp::data::Amplitude;
use mixamp::denoise::ThresholdPolicy;
use mixamp::experiment::{Case, Scenario, SolverChoice};
use mixamp::solver::OperatorScaling;

#[derive(Debug, Parser)]
#[command(name = "mixamp", version, about = "Sparse mixture separation from 2D compressed measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one separation experiment.
    Separate(SeparateArgs),
    /// Run separations over a grid of sampling ratios and seeds.
    Sweep(SweepArgs),
    /// Run the small-scale oracle checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    Group,
    Tv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Mixamp,
    Baseline,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AmplitudeArg {
    Symmetric,
    UniformSigned,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    Spectral,
    ColumnEnergy,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Sqrt,
    Literal,
}

/// Problem and solver flags shared by `separate` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    #[arg(long, default_value_t = 64)]
    pub side: usize,
    /// Shot-noise density [default: 0.05 for group, 0.10 for tv].
    #[arg(long)]
    pub sparsity: Option<f64>,
    /// Tile side of the group phantom (group case).
    #[arg(long)]
    pub block: Option<usize>,
    /// Fraction of active tiles in the group phantom.
    #[arg(long, default_value_t = 0.25)]
    pub group_fraction: f64,
    /// Square PGM image used as the second component (tv case).
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverArg::Mixamp)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = mixamp::solver::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 2000)]
    pub baseline_max_iters: usize,
    #[arg(long, default_value_t = mixamp::solver::DEFAULT_TOL)]
    pub tol: f64,
    /// Threshold scale for both denoisers [default: calibrated per case].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Threshold scale for the second denoiser only.
    #[arg(long)]
    pub tau_b: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Baseline data-term weight.
    #[arg(long, default_value_t = 1e4)]
    pub rho: f64,
    /// MixAMP damping factor in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub damping: f64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Sqrt)]
    pub threshold_policy: PolicyArg,
    /// Rescaling of A before the MixAMP iteration.
    #[arg(long, value_enum, default_value_t = ScalingArg::Spectral)]
    pub scaling: ScalingArg,
    /// Bound on the normal-operator spectrum for `--scaling spectral`.
    #[arg(long, default_value_t = mixamp::solver::DEFAULT_SPECTRAL_TARGET)]
    pub spectral_target: f64,
    #[arg(long, value_enum, default_value_t = AmplitudeArg::Symmetric)]
    pub amplitude: AmplitudeArg,
    /// Keep shot noise off the support of the second component.
    #[arg(long)]
    pub disjoint: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Write zero wall times so repeated runs give identical files.
    #[arg(long)]
    pub no_timing: bool,
}

impl ProblemArgs {
    /// Scenario for one (sampling, seed) pair, or a usage message.
    pub fn scenario(&self, sampling: f64, seed: u64) -> Result<Scenario, String> {
        let case = match self.case {
            Some(CaseArg::Group) => Case::Group,
            Some(CaseArg::Tv) => Case::Tv,
            None => return Err("--case is required".into()),
        };
        let sparsity = self.sparsity.unwrap_or(match case {
            Case::Group => 0.05,
            Case::Tv => 0.10,
        });
        let mut s = Scenario::new(case, self.side, sampling, sparsity, seed);
        s.block = self.block;
        s.group_fraction = self.group_fraction;
        s.image = self.image.clone();
        s.solver = match self.solver {
            SolverArg::Mixamp => SolverChoice::Mixamp,
            SolverArg::Baseline => SolverChoice::Baseline,
            SolverArg::Both => SolverChoice::Both,
        };
        s.max_iters = self.max_iters;
        s.baseline_max_iters = self.baseline_max_iters;
        s.tol = self.tol;
        if let Some(t) = self.tau {
            s.tau_a = t;
            s.tau_b = t;
        }
        if let Some(t) = self.tau_b {
            s.tau_b = t;
        }
        s.lambda1 = self.lambda1;
        s.lambda2 = self.lambda2;
        s.rho = self.rho;
        s.damping = self.damping;
        s.threshold_policy = match self.threshold_policy {
            PolicyArg::Sqrt => ThresholdPolicy::Sqrt,
            PolicyArg::Literal => ThresholdPolicy::Literal,
        };
        s.scaling = match self.scaling {
            ScalingArg::Spectral => OperatorScaling::Spectral {
                target: self.spectral_target,
            },
            ScalingArg::ColumnEnergy => OperatorScaling::ColumnEnergy,
            ScalingArg::None => OperatorScaling::None,
        };
        s.amplitude = match self.amplitude {
            AmplitudeArg::Symmetric => Amplitude::Symmetric,
            AmplitudeArg::UniformSigned => Amplitude::UniformSigned,
            AmplitudeArg::Constant => Amplitude::Constant,
        };
        s.disjoint = self.disjoint;
        check_scenario(&s)?;
        Ok(s)
    }
}

/// Flag-level validation; anything rejected here is a usage error.
pub fn check_scenario(s: &Scenario) -> Result<(), String> {
    if !(s.sampling > 0.0 && s.sampling <= 1.0) {
        return Err(format!("--sampling must lie in (0, 1], got {}", s.sampling));
    }
    if s.side < 2 {
        return Err(format!("--side must be at least 2, got {}", s.side));
    }
    if !(s.sparsity >= 0.0 && s.sparsity <= 1.0) {
        return Err(format!("--sparsity must lie in [0, 1], got {}", s.sparsity));
    }
    if !(s.group_fraction >= 0.0 && s.group_fraction <= 1.0) {
        return Err(format!("--group-fraction must lie in [0, 1], got {}", s.group_fraction));
    }
    match s.case {
        Case::Group => match s.block {
            None => return Err("--block is required for --case group".into()),
            Some(b) if b == 0 || s.side % b != 0 => {
                return Err(format!("--block {b} must divide --side {}", s.side))
            }
            _ => {}
        },
        Case::Tv => {
            if s.image.is_none() {
                return Err("--image is required for --case tv".into());
            }
        }
    }
    for (name, v) in [("--tol", s.tol), ("--tau", s.tau_a), ("--tau-b", s.tau_b), ("--rho", s.rho)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("{name} must be positive, got {v}"));
        }
    }
    for (name, v) in [("--lambda1", s.lambda1), ("--lambda2", s.lambda2)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
    }
    if let OperatorScaling::Spectral { target } = s.scaling {
        if !(target > 0.0 && target.is_finite()) {
            return Err(format!("--spectral-target must be positive, got {target}"));
        }
    }
    if !(s.damping > 0.0 && s.damping <= 1.0) {
        return Err(format!("--damping must lie in (0, 1], got {}", s.damping));
    }
    if s.max_iters == 0 || s.baseline_max_iters == 0 {
        return Err("iteration limits must be at least 1".into());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Measurement ratio M/N in (0, 1].
    #[arg(long, default_value_t = 0.7)]
    pub sampling: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Re-run the scenario stored in a manifest.json; problem flags are ignored.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated M/N values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub sampling: Vec<f64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0,1,2")]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Print the check names and exit.
    #[arg(long)]
    pub list: bool,
    /// Perturb the forward operator under test.
    #[arg(long, hide = true)]
    pub corrupt_operator: bool,
}
