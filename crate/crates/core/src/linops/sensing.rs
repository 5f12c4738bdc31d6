use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::grid::check_side;
use super::mask::SamplingMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingKind {
    Gaussian,
    Dct,
    Identity,
}

/// The side×side matrix A acting on both axes of X.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    entries: Array2<f64>,
    kind: SensingKind,
    seed: Option<u64>,
}

impl SensingMatrix {
    pub fn identity(side: usize) -> Result<Self> {
        check_side(side)?;
        Ok(Self {
            entries: Array2::eye(side),
            kind: SensingKind::Identity,
            seed: None,
        })
    }

    /// Orthonormal DCT-II matrix, `C[k][j] = α_k cos(π (2j + 1) k / (2n))`
    /// with α_0 = √(1/n) and α_k = √(2/n) otherwise.
    pub fn dct(side: usize) -> Result<Self> {
        check_side(side)?;
        let n = side as f64;
        let entries = Array2::from_shape_fn((side, side), |(k, j)| {
            let alpha = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            alpha * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2.0 * n)).cos()
        });
        Ok(Self {
            entries,
            kind: SensingKind::Dct,
            seed: None,
        })
    }

    pub fn side(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> SensingKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Same matrix multiplied by `factor`; kind and seed are kept.
    pub fn scaled(&self, factor: f64) -> SensingMatrix {
        Self {
            entries: &self.entries * factor,
            kind: self.kind,
            seed: self.seed,
        }
    }

    /// Mean squared column norm of the masked Kronecker operator
    /// P_Ω'(A ⊗ A), computed without forming it:
    /// (1/N) Σ_{(i,j)∈Ω} ‖a_i‖² ‖a_j‖² where a_i is the i-th row of A.
    pub fn column_energy(&self, mask: &SamplingMask) -> Result<f64> {
        if mask.side() != self.side() {
            return Err(Error::Dimension(format!(
                "mask side {} does not match matrix side {}",
                mask.side(),
                self.side()
            )));
        }
        let row_sq: Vec<f64> = self
            .entries
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|v| v * v).sum())
            .collect();
        let total: f64 = mask
            .indices()
            .iter()
            .map(|&(i, j)| row_sq[i] * row_sq[j])
            .sum();
        Ok(total / mask.n() as f64)
    }

    /// Largest eigenvalue of AᵀA by power iteration from a fixed start.
    /// Its square bounds the largest eigenvalue of the masked Kronecker
    /// operator's normal matrix.
    pub fn gram_max_eig(&self, iters: usize) -> f64 {
        let side = self.side();
        let mut v = Array1::from_iter((0..side).map(|k| 1.0 + (k % 7) as f64));
        let mut lambda = 0.0;
        for _ in 0..iters.max(1) {
            let w = self.entries.t().dot(&self.entries.dot(&v));
            let norm = w.dot(&w).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = v.dot(&w) / v.dot(&v);
            v = w / norm;
        }
        lambda
    }
}

/// Gaussian sensing matrix with i.i.d. N(0, 1/m) entries, filled row-major
/// from a ChaCha8 stream seeded with `seed`.
pub fn gen_gaussian_sensing(side: usize, m: usize, seed: u64) -> Result<SensingMatrix> {
    check_side(side)?;
    if m == 0 || m > side * side {
        return Err(Error::Dimension(format!(
            "m must be in 1..={}, got {m}",
            side * side
        )));
    }
    let normal = Normal::new(0.0, (1.0 / m as f64).sqrt())
        .map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..side * side).map(|_| normal.sample(&mut rng)).collect();
    let entries = Array2::from_shape_vec((side, side), values)
        .map_err(|e| Error::Dimension(e.to_string()))?;
    Ok(SensingMatrix {
        entries,
        kind: SensingKind::Gaussian,
        seed: Some(seed),
    })
}
