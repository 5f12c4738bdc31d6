//! The 2D measurement model Y = P_Ω{A X Aᵀ}: grids, masks, sensing matrices,
//! the forward/adjoint pair, a fast DCT path and the explicit Kronecker
//! oracle used to cross-check them.

mod dct;
mod grid;
mod kron;
mod mask;
mod sensing;

pub use dct::{dct2_2d, dct_fast_forward, dct_plan, Dct2};
pub use grid::ImageGrid;
pub use kron::{kron_forward_oracle, kron_matrix, KRON_ORACLE_MAX_SIDE};
pub use mask::{gen_mask, mask_apply, SamplingMask};
pub use sensing::{gen_gaussian_sensing, SensingKind, SensingMatrix};

use crate::error::{Error, Result};

fn check_sides(a: &SensingMatrix, x: &ImageGrid) -> Result<()> {
    if a.side() != x.side() {
        return Err(Error::Dimension(format!(
            "matrix side {} does not match grid side {}",
            a.side(),
            x.side()
        )));
    }
    Ok(())
}

/// Y = P_Ω{A X Aᵀ}, two side×side products.
pub fn forward(a: &SensingMatrix, x: &ImageGrid, mask: &SamplingMask) -> Result<ImageGrid> {
    check_sides(a, x)?;
    if mask.side() != x.side() {
        return Err(Error::Dimension(format!(
            "mask side {} does not match grid side {}",
            mask.side(),
            x.side()
        )));
    }
    let e = a.entries();
    let mut out = e.dot(x.as_array()).dot(&e.t());
    mask.apply_in_place(&mut out);
    Ok(ImageGrid::from_array_unchecked(out))
}

/// Aᵀ R A. The solver only passes residuals that are already zero off Ω.
pub fn adjoint(a: &SensingMatrix, r: &ImageGrid) -> Result<ImageGrid> {
    check_sides(a, r)?;
    let e = a.entries();
    Ok(ImageGrid::from_array_unchecked(
        e.t().dot(r.as_array()).dot(e),
    ))
}
