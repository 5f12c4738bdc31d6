#![allow(dead_code)]

use mixamp::linops::ImageGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_grid(side: usize, rng: &mut ChaCha8Rng) -> ImageGrid {
    ImageGrid::from_fn(side, |_| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn grid_from(side: usize, values: &[f64]) -> ImageGrid {
    ImageGrid::from_row_major(side, values.to_vec()).unwrap()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Grid with entry (i, j) moved by `d`.
pub fn bumped(x: &ImageGrid, i: usize, j: usize, d: f64) -> ImageGrid {
    ImageGrid::from_fn(x.side(), |(a, b)| x.get(a, b) + if (a, b) == (i, j) { d } else { 0.0 }).unwrap()
}
