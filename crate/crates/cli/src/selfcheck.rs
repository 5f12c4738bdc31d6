//! Micro-scale oracle checks run by `mixamp selfcheck`.

use mixamp::denoise::{
    block_soft_threshold, soft_threshold, soft_threshold_div, tv_denoise_bregman, tv_norm, TvParams,
};
use mixamp::linops::{
    adjoint, dct_fast_forward, forward, gen_gaussian_sensing, gen_mask, kron_forward_oracle, mask_apply,
    ImageGrid, SamplingMask, SensingMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::SelfcheckArgs;
use crate::run::CliError;

type Check = fn(&Hooks) -> Result<(), String>;

pub const CHECKS: &[(&str, Check)] = &[
    ("kron_equivalence", kron_equivalence),
    ("adjoint_identity", adjoint_identity),
    ("dct_fast_path", dct_fast_path),
    ("soft_prox", soft_prox),
    ("block_prox", block_prox),
    ("soft_divergence", soft_divergence),
    ("block_divergence", block_divergence),
    ("tv_descent", tv_descent),
];

pub struct Hooks {
    pub corrupt_operator: bool,
}

impl Hooks {
    /// The forward operator being checked; optionally perturbed on one entry.
    fn forward(&self, a: &SensingMatrix, x: &ImageGrid, mask: &SamplingMask) -> Result<ImageGrid, String> {
        let y = forward(a, x, mask).map_err(|e| e.to_string())?;
        if !self.corrupt_operator {
            return Ok(y);
        }
        let (r0, c0) = mask.indices()[0];
        Ok(ImageGrid::from_fn(y.side(), |(i, j)| {
            let v = y.get(i, j);
            if (i, j) == (r0, c0) {
                v + 1e-3 * (1.0 + v.abs())
            } else {
                v
            }
        })
        .expect("same side"))
    }
}

pub fn cmd_selfcheck(args: &SelfcheckArgs) -> Result<(), CliError> {
    if args.list {
        for (name, _) in CHECKS {
            println!("{name}");
        }
        return Ok(());
    }
    let hooks = Hooks {
        corrupt_operator: args.corrupt_operator,
    };
    let failed = run_checks(&hooks);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!("failed checks: {}", failed.join(", "))))
    }
}

/// Runs every check, prints PASS/FAIL lines and returns the failed names.
pub fn run_checks(hooks: &Hooks) -> Vec<&'static str> {
    let mut failed = Vec::new();
    for (name, check) in CHECKS {
        match check(hooks) {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                failed.push(*name);
            }
        }
    }
    failed
}

fn random_grid(side: usize, rng: &mut ChaCha8Rng) -> ImageGrid {
    ImageGrid::from_fn(side, |_| rng.random_range(-1.0..1.0)).expect("side >= 2")
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn kron_equivalence(h: &Hooks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for side in [2usize, 4, 8] {
        let n = side * side;
        for k in 0..20u64 {
            let m = rng.random_range(1..=n);
            let a = gen_gaussian_sensing(side, m, k).map_err(|e| e.to_string())?;
            let mask = gen_mask(side, m, k + 100).map_err(|e| e.to_string())?;
            let x = random_grid(side, &mut rng);
            let got = h.forward(&a, &x, &mask)?.to_col_major();
            let want = kron_forward_oracle(&a, &x.to_col_major(), &mask.col_major_indices())
                .map_err(|e| e.to_string())?;
            let err = rel_err(&got, &want);
            if err > 1e-12 {
                return Err(format!("side {side}: relative error {err:.3e}"));
            }
        }
    }
    Ok(())
}

fn adjoint_identity(h: &Hooks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let side = 8;
    for k in 0..20u64 {
        let a = gen_gaussian_sensing(side, 40, k).map_err(|e| e.to_string())?;
        let mask = gen_mask(side, 40, k + 7).map_err(|e| e.to_string())?;
        let x = random_grid(side, &mut rng);
        let r = random_grid(side, &mut rng);
        let lhs = h.forward(&a, &x, &mask)?.inner(&r);
        let pr = mask_apply(&mask, &r).map_err(|e| e.to_string())?;
        let rhs = x.inner(&adjoint(&a, &pr).map_err(|e| e.to_string())?);
        let err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);
        if err > 1e-10 {
            return Err(format!("<AX Aᵀ, R> = {lhs:.6e} but <X, Aᵀ P(R) A> = {rhs:.6e}"));
        }
    }
    Ok(())
}

fn dct_fast_path(h: &Hooks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for side in [8usize, 16] {
        let c = SensingMatrix::dct(side).map_err(|e| e.to_string())?;
        let mask = gen_mask(side, side * side / 2, side as u64).map_err(|e| e.to_string())?;
        let x = random_grid(side, &mut rng);
        let fast = dct_fast_forward(&x, &mask).map_err(|e| e.to_string())?;
        let slow = h.forward(&c, &x, &mask)?;
        let err = rel_err(&fast.to_col_major(), &slow.to_col_major());
        if err > 1e-10 {
            return Err(format!("side {side}: relative error {err:.3e}"));
        }
    }
    Ok(())
}

fn soft_prox(_: &Hooks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let x: f64 = rng.random_range(-3.0..3.0);
        let thr: f64 = rng.random_range(0.05..2.0);
        let f = |u: f64| u.abs() + (u - x) * (u - x) / (2.0 * thr);
        let (mut best_u, mut best_f) = (0.0, f(0.0));
        let steps = 80_000;
        let (lo, hi) = (-4.0, 4.0);
        for s in 0..=steps {
            let u = lo + (hi - lo) * s as f64 / steps as f64;
            let v = f(u);
            if v < best_f {
                best_f = v;
                best_u = u;
            }
        }
        let p = soft_threshold(x, thr);
        if (p - best_u).abs() > 1e-3 {
            return Err(format!("x {x}, thr {thr}: prox {p} vs grid {best_u}"));
        }
    }
    Ok(())
}

fn block_objective(u: &[f64], x: &[f64], thr: f64) -> f64 {
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let fit: f64 = u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    norm + fit / (2.0 * thr)
}

fn block_of(g: &ImageGrid, bs: usize, bi: usize, bj: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(bs * bs);
    for i in 0..bs {
        for j in 0..bs {
            v.push(g.get(bi * bs + i, bj * bs + j));
        }
    }
    v
}

fn block_prox(_: &Hooks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (side, bs) = (4, 2);
    for _ in 0..50 {
        let x = random_grid(side, &mut rng);
        let thr = rng.random_range(0.1..1.5);
        let out = block_soft_threshold(&x, bs, thr).map_err(|e| e.to_string())?;
        for bi in 0..side / bs {
            for bj in 0..side / bs {
                let xb = block_of(&x, bs, bi, bj);
                let pb = block_of(&out.estimate, bs, bi, bj);
                let fp = block_objective(&pb, &xb, thr);
                // no random nearby point may do better
                for _ in 0..50 {
                    let h = if rng.random::<bool>() { 1e-2 } else { 1e-4 };
                    let q: Vec<f64> = pb.iter().map(|v| v + h * rng.random_range(-1.0..1.0)).collect();
                    if block_objective(&q, &xb, thr) < fp - 1e-12 {
                        return Err(format!("perturbation lowers the block objective below {fp:.6e}"));
                    }
                }
                // and the origin or the input cannot either
                let zero = vec![0.0; xb.len()];
                if block_objective(&zero, &xb, thr) < fp - 1e-12 || block_objective(&xb, &xb, thr) < fp - 1e-12 {
                    return Err("prox is worse than a trivial candidate".into());
                }
            }
        }
    }
    Ok(())
}

fn soft_divergence(_: &Hooks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let eps = 1e-6;
    let mut done = 0;
    while done < 20 {
        let x = random_grid(8, &mut rng);
        let thr = rng.random_range(0.1..0.8);
        if x.iter().any(|v| (v.abs() - thr).abs() < 1e-4) {
            continue;
        }
        let fd: f64 = x
            .iter()
            .map(|&v| (soft_threshold(v + eps, thr) - soft_threshold(v - eps, thr)) / (2.0 * eps))
            .sum::<f64>()
            / x.len() as f64;
        let div = soft_threshold_div(&x, thr);
        if (fd - div).abs() > 1e-6 {
            return Err(format!("closed form {div} vs finite difference {fd}"));
        }
        done += 1;
    }
    Ok(())
}

fn block_divergence(_: &Hooks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (side, bs, eps) = (4, 2, 1e-6);
    let mut done = 0;
    while done < 20 {
        let x = random_grid(side, &mut rng);
        let thr = rng.random_range(0.1..1.2);
        let near_kink = (0..side / bs).any(|bi| {
            (0..side / bs).any(|bj| {
                let r = block_of(&x, bs, bi, bj).iter().map(|v| v * v).sum::<f64>().sqrt();
                (r - thr).abs() < 1e-4
            })
        });
        if near_kink {
            continue;
        }
        let div = block_soft_threshold(&x, bs, thr).map_err(|e| e.to_string())?.divergence_avg;
        let mut trace = 0.0;
        for i in 0..side {
            for j in 0..side {
                let bump = |d: f64| {
                    ImageGrid::from_fn(side, |(a, b)| x.get(a, b) + if (a, b) == (i, j) { d } else { 0.0 })
                        .expect("side >= 2")
                };
                let up = block_soft_threshold(&bump(eps), bs, thr).map_err(|e| e.to_string())?;
                let dn = block_soft_threshold(&bump(-eps), bs, thr).map_err(|e| e.to_string())?;
                trace += (up.estimate.get(i, j) - dn.estimate.get(i, j)) / (2.0 * eps);
            }
        }
        let fd = trace / (side * side) as f64;
        if (fd - div).abs() > 1e-5 {
            return Err(format!("closed form {div} vs finite difference {fd}"));
        }
        done += 1;
    }
    Ok(())
}

fn tv_descent(_: &Hooks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let params = TvParams::default();
    for _ in 0..20 {
        let f = random_grid(8, &mut rng);
        let lambda = rng.random_range(0.5..5.0);
        let out = tv_denoise_bregman(&f, lambda, &params).map_err(|e| e.to_string())?;
        let input = tv_norm(&f);
        if out.objective > input + 1e-12 {
            return Err(format!("objective rose from {input:.6e} to {:.6e}", out.objective));
        }
    }
    Ok(())
}
