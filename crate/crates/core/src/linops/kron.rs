use ndarray::{Array1, Array2};

use super::sensing::SensingMatrix;
use crate::error::{Error, Result};

/// Largest side the explicit Kronecker oracle will build (N² = 65536 entries).
pub const KRON_ORACLE_MAX_SIDE: usize = 16;

/// Explicit A ⊗ A. Row `c·s + r`, column `l·s + k` holds `A[c,l]·A[r,k]`, so
/// that `(A ⊗ A) vec(X) = vec(A X Aᵀ)` under column-major vectorization.
pub fn kron_matrix(a: &SensingMatrix) -> Result<Array2<f64>> {
    let s = a.side();
    if s > KRON_ORACLE_MAX_SIDE {
        return Err(Error::OracleScale {
            side: s,
            limit: KRON_ORACLE_MAX_SIDE,
        });
    }
    let e = a.entries();
    let n = s * s;
    Ok(Array2::from_shape_fn((n, n), |(p, q)| {
        let (c, r) = (p / s, p % s);
        let (l, k) = (q / s, q % s);
        e[[c, l]] * e[[r, k]]
    }))
}

/// The vectorized model P_Ω'{(A ⊗ A) vec(X)}, returned as a length-N vector
/// with zeros off Ω'. `mask_vec` holds 0-based column-major linear indices.
///
/// Memory is O(N²); test and self-check use only.
pub fn kron_forward_oracle(a: &SensingMatrix, xvec: &[f64], mask_vec: &[usize]) -> Result<Vec<f64>> {
    let k = kron_matrix(a)?;
    let n = k.nrows();
    if xvec.len() != n {
        return Err(Error::Dimension(format!(
            "vector length {} does not match N = {n}",
            xvec.len()
        )));
    }
    let full = k.dot(&Array1::from(xvec.to_vec()));
    let mut out = vec![0.0; n];
    for &idx in mask_vec {
        if idx >= n {
            return Err(Error::Dimension(format!("mask index {idx} out of range")));
        }
        out[idx] = full[idx];
    }
    Ok(out)
}
