use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::grid::{check_side, ImageGrid};
use crate::error::{Error, Result};

/// The sampled index set Ω of the undersampling operator P_Ω.
///
/// Indices are 0-based `(row, col)` pairs kept sorted in raster order, with a
/// dense membership table for O(1) lookups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    side: usize,
    indices: Vec<(usize, usize)>,
    member: Vec<bool>,
}

impl SamplingMask {
    /// Builds a mask from explicit 0-based pairs. Duplicates, out-of-range
    /// pairs and empty sets are rejected.
    pub fn from_indices(side: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        check_side(side)?;
        let mut member = vec![false; side * side];
        let mut indices = Vec::new();
        for (r, c) in pairs {
            if r >= side || c >= side {
                return Err(Error::Dimension(format!(
                    "index ({r}, {c}) out of range for side {side}"
                )));
            }
            let k = r * side + c;
            if member[k] {
                return Err(Error::Dimension(format!("duplicate index ({r}, {c})")));
            }
            member[k] = true;
            indices.push((r, c));
        }
        if indices.is_empty() {
            return Err(Error::Degenerate("sampling mask is empty".into()));
        }
        indices.sort_unstable();
        Ok(Self {
            side,
            indices,
            member,
        })
    }

    /// Ω = Λ.
    pub fn full(side: usize) -> Result<Self> {
        Self::from_indices(side, (0..side).flat_map(|r| (0..side).map(move |c| (r, c))))
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of sampled entries, M = |Ω|.
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Total number of entries, N = side².
    pub fn n(&self) -> usize {
        self.side * self.side
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.side && col < self.side && self.member[row * self.side + col]
    }

    /// Ω′ for the column-major vectorized model: (r, c) ↦ c·side + r.
    pub fn col_major_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .indices
            .iter()
            .map(|&(r, c)| c * self.side + r)
            .collect();
        v.sort_unstable();
        v
    }

    pub(crate) fn apply_in_place(&self, z: &mut Array2<f64>) {
        if let Some(flat) = z.as_slice_mut() {
            for (v, &keep) in flat.iter_mut().zip(&self.member) {
                if !keep {
                    *v = 0.0;
                }
            }
            return;
        }
        for ((r, c), v) in z.indexed_iter_mut() {
            if !self.member[r * self.side + c] {
                *v = 0.0;
            }
        }
    }
}

/// Draws `m` distinct pairs uniformly without replacement.
pub fn gen_mask(side: usize, m: usize, seed: u64) -> Result<SamplingMask> {
    check_side(side)?;
    let n = side * side;
    if m == 0 || m > n {
        return Err(Error::Dimension(format!(
            "mask size must be in 1..={n}, got {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, n, m);
    SamplingMask::from_indices(side, picked.into_iter().map(|k| (k / side, k % side)))
}

/// P_Ω: zeroes every entry outside the mask.
pub fn mask_apply(mask: &SamplingMask, z: &ImageGrid) -> Result<ImageGrid> {
    if mask.side() != z.side() {
        return Err(Error::Dimension(format!(
            "mask side {} does not match grid side {}",
            mask.side(),
            z.side()
        )));
    }
    let mut out = z.as_array().clone();
    mask.apply_in_place(&mut out);
    Ok(ImageGrid::from_array_unchecked(out))
}
