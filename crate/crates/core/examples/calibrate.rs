//! τ scan behind the calibrated defaults of `Case::default_taus`.
//!
//! Usage: `cargo run --release -p mixamp --example calibrate [OUT.csv]`

use std::path::PathBuf;

use mixamp::experiment::{build_problem, run_baseline, run_mixamp, Case, Scenario, SolverRun};
use serde::Serialize;

#[derive(Serialize)]
struct Row {
    case: &'static str,
    solver: &'static str,
    tau_a: f64,
    tau_b: f64,
    seed: u64,
    converged: bool,
    iterations: usize,
    psnr_a_db: f64,
    psnr_b_db: f64,
}

fn row(case: Case, tau: (f64, f64), seed: u64, run: Result<SolverRun, mixamp::Error>) -> Row {
    let (solver, converged, iterations, pa, pb) = match run {
        Ok(r) => (r.solver, r.converged, r.iterations, r.psnr_a_db, r.psnr_b_db),
        Err(_) => ("mixamp", false, 0, f64::NAN, f64::NAN),
    };
    Row {
        case: case.name(),
        solver,
        tau_a: tau.0,
        tau_b: tau.1,
        seed,
        converged,
        iterations,
        psnr_a_db: pa,
        psnr_b_db: pb,
    }
}

fn scenario(case: Case, seed: u64) -> Scenario {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets");
    match case {
        Case::Group => {
            let mut s = Scenario::new(case, 64, 0.7, 0.05, seed);
            s.block = Some(4);
            s
        }
        Case::Tv => {
            let mut s = Scenario::new(case, 64, 0.5, 0.10, seed);
            s.image = Some(assets.join("astronaut64.pgm"));
            s
        }
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "calibration/tau_scan.csv".into());
    if let Some(dir) = PathBuf::from(&out).parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(&out)?;
    let grids = [
        (Case::Group, vec![0.15, 0.2, 0.25, 0.3], vec![0.3, 0.5, 0.8], 0..5u64),
        (Case::Tv, vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5], 0..3u64),
    ];
    for (case, taus_a, taus_b, seeds) in grids {
        for seed in seeds {
            let base = scenario(case, seed);
            let problem = build_problem(&base)?;
            w.serialize(row(case, (f64::NAN, f64::NAN), seed, run_baseline(&base, &problem)))?;
            for &ta in &taus_a {
                for &tb in &taus_b {
                    let s = Scenario {
                        tau_a: ta,
                        tau_b: tb,
                        ..base.clone()
                    };
                    w.serialize(row(case, (ta, tb), seed, run_mixamp(&s, &problem)))?;
                }
            }
        }
    }
    w.flush()?;
    println!("wrote {out}");
    Ok(())
}
