//! Phantoms, mixtures, image files and quality metrics.

mod metrics;
mod pgm;
mod phantom;

pub use metrics::{psnr, read_metrics_csv, write_metrics_csv, MetricsRow};
pub use pgm::{decode_pgm, encode_pgm, load_image_pgm, save_image_pgm};
pub use phantom::{
    gen_group_sparse, gen_shot_noise, gen_shot_noise_avoiding, Amplitude, GroupSparseSpec, ShotNoiseSpec,
};

use crate::error::Result;
use crate::linops::ImageGrid;

/// X = Xa + Xb with both ground-truth components kept for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub xa: ImageGrid,
    pub xb: ImageGrid,
    pub x: ImageGrid,
}

impl Mixture {
    pub fn new(xa: ImageGrid, xb: ImageGrid) -> Result<Self> {
        let x = xa.add(&xb)?;
        Ok(Self { xa, xb, x })
    }

    pub fn side(&self) -> usize {
        self.x.side()
    }
}
