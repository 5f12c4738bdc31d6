//! Separation of a 2D sparse mixture X = Xa + Xb from undersampled
//! measurements Y = P_Ω{A X Aᵀ} by approximate message passing (MixAMP),
//! with an accelerated proximal-gradient baseline for comparison.
//!
//! Modules:
//! - [`linops`]: grids, masks, sensing matrices and the measurement operators.
//! - [`denoise`]: soft, block-soft and TV denoisers with their divergences.
//! - [`solver`]: the MixAMP iteration.
//! - [`baseline`]: FISTA on the penalized separation objectives.
//! - [`data`]: phantoms, PGM files, PSNR and metric tables.
//! - [`experiment`]: end-to-end scenarios shared by the CLI and the tests.

pub mod baseline;
pub mod data;
pub mod denoise;
pub mod error;
pub mod experiment;
pub mod linops;
pub mod solver;

pub use error::{Error, Result};
pub use linops::{ImageGrid, SamplingMask, SensingMatrix};
