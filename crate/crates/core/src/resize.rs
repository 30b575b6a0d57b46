//! Bicubic resampling with the cubic convolution kernel (a = -0.5).
//!
//! Downscaling widens the kernel support by 1/scale so the filter acts as an
//! antialiasing low-pass, matching the classic MATLAB-style resize semantics
//! that SR datasets are prepared with. Sample coordinates outside the source
//! are clamped to the edge, tap weights are normalized to sum to 1, and the
//! two passes (rows, then columns) run unclamped; only the final output is
//! clamped back into [0, 1].

use crate::error::{Error, Result};
use crate::image::Image;
use crate::parallel;

const KERNEL_A: f64 = -0.5;
const KERNEL_SUPPORT: f64 = 4.0;

/// Cubic convolution kernel.
fn cubic(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        (KERNEL_A + 2.0) * t * t * t - (KERNEL_A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        KERNEL_A * (t * t * t - 5.0 * t * t + 8.0 * t - 4.0)
    } else {
        0.0
    }
}

/// Weights and clamped source indices for one output coordinate along one axis.
#[derive(Debug, Clone)]
struct Taps {
    first: isize,
    weights: Vec<f64>,
}

/// Per-axis resampling plan; antialiasing kicks in below scale 1. Indices
/// are clamped to the source range at application time.
fn plan_axis(out_len: usize, scale: f64) -> Vec<Taps> {
    let antialias = scale < 1.0;
    let kernel_scale = if antialias { scale } else { 1.0 };
    let width = KERNEL_SUPPORT / kernel_scale;
    let tap_count = width.ceil() as isize + 2;

    (0..out_len)
        .map(|x| {
            let center = (x as f64 + 0.5) / scale - 0.5;
            let first = (center - width / 2.0).floor() as isize;
            let mut weights = Vec::with_capacity(tap_count as usize);
            let mut sum = 0.0;
            for j in 0..tap_count {
                let w = kernel_scale * cubic(kernel_scale * (center - (first + j) as f64));
                weights.push(w);
                sum += w;
            }
            for w in &mut weights {
                *w /= sum;
            }
            Taps { first, weights }
        })
        .collect()
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Resample along the horizontal axis into an `h x out_w x c` buffer.
fn resample_rows(src: &[f64], h: usize, in_w: usize, c: usize, taps: &[Taps]) -> Vec<f64> {
    let out_w = taps.len();
    let mut out = vec![0.0; h * out_w * c];
    parallel::fill_rows(&mut out, out_w * c, |y, row| {
        let src_row = &src[y * in_w * c..(y + 1) * in_w * c];
        for (x, t) in taps.iter().enumerate() {
            for ch in 0..c {
                let mut acc = 0.0;
                for (j, w) in t.weights.iter().enumerate() {
                    let sx = clamp_index(t.first + j as isize, in_w);
                    acc += w * src_row[sx * c + ch];
                }
                row[x * c + ch] = acc;
            }
        }
    });
    out
}

/// Resample along the vertical axis into an `out_h x w x c` buffer.
fn resample_cols(src: &[f64], in_h: usize, w: usize, c: usize, taps: &[Taps]) -> Vec<f64> {
    let out_h = taps.len();
    let mut out = vec![0.0; out_h * w * c];
    parallel::fill_rows(&mut out, w * c, |y, row| {
        let t = &taps[y];
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (j, wgt) in t.weights.iter().enumerate() {
                    let sy = clamp_index(t.first + j as isize, in_h);
                    acc += wgt * src[(sy * w + x) * c + ch];
                }
                row[x * c + ch] = acc;
            }
        }
    });
    out
}

impl Image {
    /// Resize by `scale` (> 0). Output dimensions are `round(len * scale)`
    /// and must come out at least 1. `scale == 1` returns the input unchanged.
    pub fn resize_bicubic(&self, scale: f64) -> Result<Image> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param(format!("scale must be positive, got {scale}")));
        }
        if scale == 1.0 {
            return Ok(self.clone());
        }
        let (h, w, c) = self.shape();
        let out_h = (h as f64 * scale).round() as usize;
        let out_w = (w as f64 * scale).round() as usize;
        if out_h == 0 || out_w == 0 {
            return Err(Error::param(format!(
                "scale {scale} collapses {h}x{w} to {out_h}x{out_w}"
            )));
        }

        let col_taps = plan_axis(out_h, scale);
        let row_taps = plan_axis(out_w, scale);
        let tall = resample_cols(self.data(), h, w, c, &col_taps);
        let mut out = resample_rows(&tall, out_h, w, c, &row_taps);
        for v in &mut out {
            *v = v.clamp(0.0, 1.0);
        }
        Image::new(out_h, out_w, c, out)
    }
}
