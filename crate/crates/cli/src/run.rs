use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use mixamp::data::{save_image_pgm, write_metrics_csv, MetricsRow};
use mixamp::experiment::{build_problem, run_baseline, run_mixamp, Problem, Scenario, SolverRun};
use mixamp::solver::IterationTrace;
use mixamp::Error;
use rayon::prelude::*;

use crate::args::{check_scenario, SeparateArgs, SweepArgs};
use crate::manifest::{RunManifest, SweepManifest, MANIFEST_FILE};

pub const METRICS_FILE: &str = "metrics.csv";
pub const THREADS_ENV: &str = "MIXAMP_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs; exit code 2.
    Usage(String),
    /// Numerical or solver failure, or an output that could not be written;
    /// exit code 1.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => m,
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failure(format!("cannot write {}: {e}", path.display()))
}

pub fn cmd_separate(args: &SeparateArgs) -> Result<(), CliError> {
    let timing_flag = !args.problem.no_timing;
    let (scenario, include_timing) = match &args.manifest {
        Some(path) => {
            let m = RunManifest::read(path).map_err(CliError::Usage)?;
            check_scenario(&m.scenario).map_err(CliError::Usage)?;
            (m.scenario, m.include_timing && timing_flag)
        }
        None => (
            args.problem.scenario(args.sampling, args.seed).map_err(CliError::Usage)?,
            timing_flag,
        ),
    };
    let rows = run_instance(&scenario, &args.problem.out, include_timing)?;
    for row in &rows {
        println!(
            "{}: {} iterations, psnr_a {:.2} dB, psnr_b {:.2} dB, {:.1} ms",
            row.solver, row.iters, row.psnr_a_db, row.psnr_b_db, row.wall_ms
        );
    }
    Ok(())
}

/// Runs one scenario into `out`: per-solver images and traces, a metrics
/// table and the manifest. Outputs of solvers that finished are kept when
/// another one fails.
pub fn run_instance(s: &Scenario, out: &Path, include_timing: bool) -> Result<Vec<MetricsRow>, CliError> {
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let problem = build_problem(s).map_err(|e| match e {
        Error::Io(_) | Error::Format(_) | Error::Domain(_) | Error::Dimension(_) | Error::UnsupportedSize(_) => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Failure(other.to_string()),
    })?;

    let mut manifest = RunManifest::new(s, include_timing);
    let mut rows = Vec::new();
    let mut failures = Vec::new();

    type Runner = fn(&Scenario, &Problem) -> mixamp::Result<SolverRun>;
    let mut solvers: Vec<(&str, Runner)> = Vec::new();
    if s.solver.runs_mixamp() {
        solvers.push(("mixamp", run_mixamp));
    }
    if s.solver.runs_baseline() {
        solvers.push(("baseline", run_baseline));
    }

    for (name, runner) in solvers {
        let dir = out.join(name);
        fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
        match runner(s, &problem) {
            Ok(run) => {
                for (file, grid) in [("xa_hat.pgm", &run.xa), ("xb_hat.pgm", &run.xb)] {
                    let path = dir.join(file);
                    save_image_pgm(grid, &path).map_err(|e| io_failure(&path, e))?;
                    manifest.artifacts.push(format!("{name}/{file}"));
                }
                write_trace(&run.trace, &dir.join("trace.csv"), include_timing)?;
                manifest.artifacts.push(format!("{name}/trace.csv"));
                rows.push(run.metrics_row(s, include_timing));
            }
            Err(Error::Divergence { iteration, trace }) => {
                write_trace(&trace, &dir.join("trace.csv"), include_timing)?;
                manifest.artifacts.push(format!("{name}/trace.csv"));
                failures.push(format!("{name} diverged at iteration {iteration}"));
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }

    let metrics = out.join(METRICS_FILE);
    let file = File::create(&metrics).map_err(|e| io_failure(&metrics, e))?;
    write_metrics_csv(BufWriter::new(file), &rows).map_err(|e| io_failure(&metrics, e))?;
    manifest.artifacts.push(METRICS_FILE.into());
    manifest.artifacts.push(MANIFEST_FILE.into());
    if !failures.is_empty() {
        manifest.failure = Some(failures.join("; "));
    }
    manifest.write(out).map_err(|e| io_failure(&out.join(MANIFEST_FILE), e))?;

    match manifest.failure {
        Some(msg) => Err(CliError::Failure(msg)),
        None => Ok(rows),
    }
}

fn write_trace(trace: &IterationTrace, path: &Path, include_timing: bool) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    trace
        .write_csv(BufWriter::new(file), include_timing)
        .map_err(|e| io_failure(path, e))
}

/// Worker count from MIXAMP_THREADS, or `None` for the rayon default.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn instance_dir(sampling: f64, seed: u64) -> String {
    format!("m{sampling:.3}_s{seed}")
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    if args.sampling.is_empty() || args.seeds.is_empty() {
        return Err(CliError::Usage("sampling and seed lists must be nonempty".into()));
    }
    let mut jobs = Vec::new();
    for &sampling in &args.sampling {
        for &seed in &args.seeds {
            let s = args.problem.scenario(sampling, seed).map_err(CliError::Usage)?;
            jobs.push((instance_dir(sampling, seed), s));
        }
    }
    let mut names: Vec<&String> = jobs.iter().map(|(d, _)| d).collect();
    names.sort();
    names.dedup();
    if names.len() != jobs.len() {
        return Err(CliError::Usage("sampling and seed lists must not repeat values".into()));
    }

    let out = &args.problem.out;
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let include_timing = !args.problem.no_timing;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Failure(format!("cannot start worker pool: {e}")))?;

    let results: Vec<Result<Vec<MetricsRow>, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(dir, s)| run_instance(s, &out.join(dir), include_timing))
            .collect()
    });

    let mut rows = Vec::new();
    let mut usage = Vec::new();
    let mut failures = Vec::new();
    for ((dir, _), res) in jobs.iter().zip(results) {
        match res {
            Ok(r) => rows.extend(r),
            Err(CliError::Usage(m)) => usage.push(format!("{dir}: {m}")),
            Err(CliError::Failure(m)) => failures.push(format!("{dir}: {m}")),
        }
    }
    rows.sort_by(|a, b| {
        a.m_over_n
            .total_cmp(&b.m_over_n)
            .then(a.seed.cmp(&b.seed))
            .then(a.solver.cmp(&b.solver))
    });

    let metrics = out.join(METRICS_FILE);
    let file = File::create(&metrics).map_err(|e| io_failure(&metrics, e))?;
    write_metrics_csv(BufWriter::new(file), &rows).map_err(|e| io_failure(&metrics, e))?;
    let manifest = SweepManifest {
        tool: "mixamp".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        sampling: args.sampling.clone(),
        seeds: args.seeds.clone(),
        include_timing,
        runs: jobs.iter().map(|(d, _)| d.clone()).collect(),
    };
    manifest.write(out).map_err(|e| io_failure(&out.join(MANIFEST_FILE), e))?;

    for row in &rows {
        println!(
            "{} m/n {} seed {}: psnr_a {:.2} dB, psnr_b {:.2} dB, {} iterations",
            row.solver, row.m_over_n, row.seed, row.psnr_a_db, row.psnr_b_db, row.iters
        );
    }
    if !usage.is_empty() {
        return Err(CliError::Usage(usage.join("; ")));
    }
    if !failures.is_empty() {
        return Err(CliError::Failure(failures.join("; ")));
    }
    Ok(())
}
