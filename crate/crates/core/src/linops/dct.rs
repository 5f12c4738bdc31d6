//! Fast orthonormal DCT-II through a length-n complex FFT (Makhoul's
//! even/odd reordering).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::ImageGrid;
use super::mask::SamplingMask;
use crate::error::{Error, Result};

/// Plan for the orthonormal DCT-II of one length.
pub struct Dct2 {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    // alpha_k * exp(-i pi k / 2n)
    twiddles: Vec<Complex<f64>>,
}

impl Dct2 {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let n = len as f64;
        let twiddles = (0..len)
            .map(|k| {
                let alpha = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                let phase = -std::f64::consts::PI * k as f64 / (2.0 * n);
                Complex::from_polar(alpha, phase)
            })
            .collect();
        Self { len, fft, twiddles }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Transforms `data` in place. `scratch` must hold `len` values.
    pub fn process(&self, data: &mut [f64], scratch: &mut [Complex<f64>]) {
        let n = self.len;
        debug_assert_eq!(data.len(), n);
        let half = n.div_ceil(2);
        for k in 0..half {
            scratch[k] = Complex::new(data[2 * k], 0.0);
        }
        for k in 0..n / 2 {
            scratch[n - 1 - k] = Complex::new(data[2 * k + 1], 0.0);
        }
        self.fft.process(&mut scratch[..n]);
        for k in 0..n {
            data[k] = (scratch[k] * self.twiddles[k]).re;
        }
    }

    /// Transforms every length-`len` row of the row-major block `src` and
    /// writes the result transposed into `dst`. Rows go through the FFT in
    /// pairs, one as the real part and one as the imaginary part. `buf` must
    /// hold `len · ⌈rows/2⌉` values.
    pub fn process_rows_transposed(
        &self,
        src: &[f64],
        dst: &mut [f64],
        buf: &mut [Complex<f64>],
        scratch: &mut [Complex<f64>],
    ) {
        let n = self.len;
        let rows = src.len() / n;
        let pairs = rows.div_ceil(2);
        let buf = &mut buf[..pairs * n];
        let half = n.div_ceil(2);
        for (p, b) in buf.chunks_exact_mut(n).enumerate() {
            let re = &src[2 * p * n..(2 * p + 1) * n];
            let (evens, odds) = b.split_at_mut(half);
            for (e, v) in evens.iter_mut().zip(re.iter().step_by(2)) {
                *e = Complex::new(*v, 0.0);
            }
            for (o, v) in odds.iter_mut().rev().zip(re.iter().skip(1).step_by(2)) {
                *o = Complex::new(*v, 0.0);
            }
            if 2 * p + 1 < rows {
                let im = &src[(2 * p + 1) * n..(2 * p + 2) * n];
                for (e, v) in evens.iter_mut().zip(im.iter().step_by(2)) {
                    e.im = *v;
                }
                for (o, v) in odds.iter_mut().rev().zip(im.iter().skip(1).step_by(2)) {
                    o.im = *v;
                }
            }
        }
        self.fft.process_with_scratch(buf, scratch);
        for (p, b) in buf.chunks_exact(n).enumerate() {
            let (ia, ib) = (2 * p, 2 * p + 1);
            let paired = ib < rows;
            for (k, (&z, &t)) in b.iter().zip(&self.twiddles).enumerate() {
                let w = if k == 0 { z.conj() } else { b[n - k].conj() };
                let out = &mut dst[k * rows..(k + 1) * rows];
                out[ia] = 0.5 * ((z + w) * t).re;
                if paired {
                    out[ib] = 0.5 * ((z - w) * t).im;
                }
            }
        }
    }

    pub fn scratch_len(&self) -> usize {
        self.fft.get_inplace_scratch_len()
    }
}

/// Shared plan for one length.
pub fn dct_plan(len: usize) -> Arc<Dct2> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Dct2>>>> = OnceLock::new();
    let mut plans = PLANS.get_or_init(Default::default).lock().expect("plan cache poisoned");
    plans.entry(len).or_insert_with(|| Arc::new(Dct2::new(len))).clone()
}

thread_local! {
    static WORK: std::cell::RefCell<(Vec<f64>, Vec<Complex<f64>>, Vec<Complex<f64>>)> = Default::default();
}

/// Orthonormal 2D DCT-II, C X Cᵀ: two row passes, each writing transposed.
pub fn dct2_2d(x: &ImageGrid) -> ImageGrid {
    let n = x.side();
    let plan = dct_plan(n);
    let src = x.as_array().as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let mut out = vec![0.0; n * n];
    WORK.with(|w| {
        let (tmp, buf, scratch) = &mut *w.borrow_mut();
        tmp.resize(n * n, 0.0);
        buf.resize(n * n.div_ceil(2), Complex::new(0.0, 0.0));
        scratch.resize(plan.scratch_len(), Complex::new(0.0, 0.0));
        plan.process_rows_transposed(src, tmp, buf, scratch);
        plan.process_rows_transposed(tmp, &mut out, buf, scratch);
    });
    ImageGrid::from_array_unchecked(Array2::from_shape_vec((n, n), out).expect("n × n"))
}

/// P_Ω{C X Cᵀ} with C the orthonormal DCT-II matrix, in O(N log √N).
/// The side must be a power of two.
pub fn dct_fast_forward(x: &ImageGrid, mask: &SamplingMask) -> Result<ImageGrid> {
    let side = x.side();
    if !side.is_power_of_two() {
        return Err(Error::UnsupportedSize(format!(
            "fast DCT path needs a power-of-two side, got {side}"
        )));
    }
    if mask.side() != side {
        return Err(Error::Dimension(format!(
            "mask side {} does not match grid side {side}",
            mask.side()
        )));
    }
    let mut out = dct2_2d(x).into_array();
    mask.apply_in_place(&mut out);
    Ok(ImageGrid::from_array_unchecked(out))
}
