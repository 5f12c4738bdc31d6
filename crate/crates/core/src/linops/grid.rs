use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// A square, real-valued 2D array stored row-major.
///
/// Signals, components, measurements and residuals all live in this type.
/// The side is at least 2 and values are finite when constructed through the
/// checked constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    data: Array2<f64>,
}

impl ImageGrid {
    pub fn zeros(side: usize) -> Result<Self> {
        check_side(side)?;
        Ok(Self {
            data: Array2::zeros((side, side)),
        })
    }

    pub fn filled(side: usize, value: f64) -> Result<Self> {
        check_side(side)?;
        check_finite(value)?;
        Ok(Self {
            data: Array2::from_elem((side, side), value),
        })
    }

    /// Wraps a square array, rejecting non-square shapes and non-finite values.
    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows != cols {
            return Err(Error::Dimension(format!(
                "grid must be square, got {rows}x{cols}"
            )));
        }
        check_side(rows)?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid contains non-finite values".into()));
        }
        Ok(Self { data })
    }

    /// Builds a grid from row-major values.
    pub fn from_row_major(side: usize, values: Vec<f64>) -> Result<Self> {
        check_side(side)?;
        if values.len() != side * side {
            return Err(Error::Dimension(format!(
                "expected {} values for side {side}, got {}",
                side * side,
                values.len()
            )));
        }
        let data = Array2::from_shape_vec((side, side), values)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Self::from_array(data)
    }

    pub fn from_fn(side: usize, f: impl FnMut((usize, usize)) -> f64) -> Result<Self> {
        check_side(side)?;
        Self::from_array(Array2::from_shape_fn((side, side), f))
    }

    /// Skips the finiteness scan. Callers that can produce non-finite values
    /// are expected to check [`ImageGrid::is_finite`] themselves.
    pub(crate) fn from_array_unchecked(data: Array2<f64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }

    pub fn side(&self) -> usize {
        self.data.nrows()
    }

    /// Number of entries, N = side².
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[[row, col]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &ImageGrid) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> ImageGrid {
        Self::from_array_unchecked(&self.data * factor)
    }

    pub fn add(&self, other: &ImageGrid) -> Result<ImageGrid> {
        check_same_side(self, other)?;
        Ok(Self::from_array_unchecked(&self.data + &other.data))
    }

    pub fn sub(&self, other: &ImageGrid) -> Result<ImageGrid> {
        check_same_side(self, other)?;
        Ok(Self::from_array_unchecked(&self.data - &other.data))
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &ImageGrid) -> Result<ImageGrid> {
        check_same_side(self, other)?;
        let mut out = self.data.clone();
        out.scaled_add(alpha, &other.data);
        Ok(Self::from_array_unchecked(out))
    }

    pub fn map(&self, f: impl FnMut(f64) -> f64) -> ImageGrid {
        Self::from_array_unchecked(self.data.mapv(f))
    }

    /// Column-major vectorization, matching the usual `vec(·)` convention.
    pub fn to_col_major(&self) -> Vec<f64> {
        self.data.t().iter().copied().collect()
    }

    pub fn from_col_major(side: usize, values: &[f64]) -> Result<Self> {
        check_side(side)?;
        if values.len() != side * side {
            return Err(Error::Dimension(format!(
                "expected {} values for side {side}, got {}",
                side * side,
                values.len()
            )));
        }
        Self::from_fn(side, |(r, c)| values[c * side + r])
    }

    pub fn distance(&self, other: &ImageGrid) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}

pub(crate) fn check_side(side: usize) -> Result<()> {
    if side < 2 {
        return Err(Error::Dimension(format!("side must be at least 2, got {side}")));
    }
    Ok(())
}

fn check_finite(v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("non-finite value {v}")));
    }
    Ok(())
}

pub(crate) fn check_same_side(a: &ImageGrid, b: &ImageGrid) -> Result<()> {
    if a.side() != b.side() {
        return Err(Error::Dimension(format!(
            "side mismatch: {} vs {}",
            a.side(),
            b.side()
        )));
    }
    Ok(())
}
