use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::ImageGrid;

/// Amplitude law for nonzero phantom entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    /// ±1 with a random sign.
    #[default]
    Symmetric,
    /// Uniform on [0.5, 1.5] times a random sign.
    UniformSigned,
    /// Always 1.
    Constant,
}

impl Amplitude {
    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Amplitude::Symmetric => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Amplitude::UniformSigned => {
                let mag = rng.random_range(0.5..=1.5);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
            Amplitude::Constant => 1.0,
        }
    }
}

/// Sparse impulsive component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseSpec {
    pub side: usize,
    /// Fraction of nonzero entries, in (0, 1].
    pub sparsity: f64,
    pub amplitude: Amplitude,
    pub seed: u64,
}

/// QR-like binary tiling: each tile is all ones or all zeros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSparseSpec {
    pub side: usize,
    pub block_side: usize,
    /// Fraction of active tiles, in [0, 1].
    pub active_fraction: f64,
    pub seed: u64,
}

/// Exactly round(ρN) nonzeros at uniformly drawn positions.
pub fn gen_shot_noise(spec: &ShotNoiseSpec) -> Result<ImageGrid> {
    gen_shot_noise_avoiding(spec, None)
}

/// As [`gen_shot_noise`], but never places an impulse where `avoid` is
/// nonzero.
pub fn gen_shot_noise_avoiding(spec: &ShotNoiseSpec, avoid: Option<&ImageGrid>) -> Result<ImageGrid> {
    if !(spec.sparsity > 0.0 && spec.sparsity <= 1.0) {
        return Err(Error::Domain(format!(
            "shot-noise sparsity must lie in (0, 1], got {}",
            spec.sparsity
        )));
    }
    let side = spec.side;
    let mut out = ImageGrid::zeros(side)?.into_array();
    let n = side * side;
    let count = (spec.sparsity * n as f64).round() as usize;

    let candidates: Vec<usize> = match avoid {
        Some(mask) => {
            if mask.side() != side {
                return Err(Error::Dimension("avoid grid has a different side".into()));
            }
            (0..n)
                .filter(|&k| mask.get(k / side, k % side) == 0.0)
                .collect()
        }
        None => (0..n).collect(),
    };
    if count > candidates.len() {
        return Err(Error::Domain(format!(
            "cannot place {count} impulses in {} free positions",
            candidates.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let picked = index::sample(&mut rng, candidates.len(), count);
    let mut positions: Vec<usize> = picked.into_iter().map(|i| candidates[i]).collect();
    positions.sort_unstable();
    for k in positions {
        out[[k / side, k % side]] = spec.amplitude.draw(&mut rng);
    }
    ImageGrid::from_array(out)
}

pub fn gen_group_sparse(spec: &GroupSparseSpec) -> Result<ImageGrid> {
    let side = spec.side;
    let b = spec.block_side;
    if b == 0 || side % b != 0 {
        return Err(Error::Dimension(format!(
            "block side {b} does not divide grid side {side}"
        )));
    }
    if !(0.0..=1.0).contains(&spec.active_fraction) {
        return Err(Error::Domain(format!(
            "active fraction must lie in [0, 1], got {}",
            spec.active_fraction
        )));
    }
    let tiles_per_row = side / b;
    let tiles = tiles_per_row * tiles_per_row;
    let active = (spec.active_fraction * tiles as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = ImageGrid::zeros(side)?.into_array();
    for tile in index::sample(&mut rng, tiles, active) {
        let (ti, tj) = (tile / tiles_per_row, tile % tiles_per_row);
        for i in ti * b..(ti + 1) * b {
            for j in tj * b..(tj + 1) * b {
                out[[i, j]] = 1.0;
            }
        }
    }
    ImageGrid::from_array(out)
}
