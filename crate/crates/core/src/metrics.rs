//! Full-reference evaluation: PSNR and SSIM on the Y channel, plus the mean
//! absolute difference statistic used to track optimization stability.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::parallel;

/// Evaluation settings. PSNR/SSIM follow the common SR convention: convert
/// RGB to the BT.601 Y channel, crop a border of `scale` pixels, and use the
/// original SSIM constants with dynamic range L = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    /// Pixels removed from each side before PSNR/SSIM.
    pub border_crop: usize,
    /// Value reported when the compared planes are identical (zero MSE).
    pub psnr_cap: f64,
    /// SSIM window length (odd) and Gaussian standard deviation.
    pub ssim_window_len: usize,
    pub ssim_window_sigma: f64,
    /// SSIM stabilization constants `C1 = (k1 L)^2`, `C2 = (k2 L)^2`.
    pub k1: f64,
    pub k2: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            border_crop: 4,
            psnr_cap: 100.0,
            ssim_window_len: 11,
            ssim_window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

/// Y plane of `img`: RGB is converted, grayscale passes through.
fn luma_plane(img: &Image) -> Result<Image> {
    match img.channels() {
        1 => Ok(img.clone()),
        _ => img.to_luma(),
    }
}

/// Drop `crop` pixels from each side of a single-channel plane.
fn crop_plane(plane: &Image, crop: usize) -> Result<Image> {
    if crop == 0 {
        return Ok(plane.clone());
    }
    let (h, w, _) = plane.shape();
    if 2 * crop >= h.min(w) {
        return Err(Error::param(format!(
            "border crop {crop} leaves no pixels of a {h}x{w} image"
        )));
    }
    Ok(Image::from_fn(h - 2 * crop, w - 2 * crop, 1, |y, x, _| {
        plane.get(y + crop, x + crop, 0)
    }))
}

fn cropped_luma_pair(a: &Image, b: &Image, cfg: &MetricConfig) -> Result<(Image, Image)> {
    a.same_shape(b)?;
    let ya = crop_plane(&luma_plane(a)?, cfg.border_crop)?;
    let yb = crop_plane(&luma_plane(b)?, cfg.border_crop)?;
    Ok((ya, yb))
}

/// Peak signal-to-noise ratio in dB over the border-cropped Y planes,
/// capped at `psnr_cap`.
pub fn psnr_y(a: &Image, b: &Image, cfg: &MetricConfig) -> Result<f64> {
    let (ya, yb) = cropped_luma_pair(a, b, cfg)?;
    let (h, w, _) = ya.shape();
    let mse = parallel::sum_rows(h, |y| {
        let ra = &ya.data()[y * w..(y + 1) * w];
        let rb = &yb.data()[y * w..(y + 1) * w];
        ra.iter().zip(rb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()
    }) / (h * w) as f64;
    if mse == 0.0 {
        return Ok(cfg.psnr_cap);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(cfg.psnr_cap))
}

/// Normalized 1-D Gaussian window.
fn gaussian_window(len: usize, sigma: f64) -> Vec<f64> {
    let half = (len / 2) as f64;
    let mut w: Vec<f64> = (0..len)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Valid-mode separable convolution of a plane with `win` along both axes.
fn filter_valid(data: &[f64], h: usize, w: usize, win: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = win.len();
    let fw = w - n + 1;
    // rows
    let mut rows = vec![0.0; h * fw];
    parallel::fill_rows(&mut rows, fw, |y, row| {
        let src = &data[y * w..(y + 1) * w];
        for (x, dst) in row.iter_mut().enumerate() {
            *dst = win.iter().zip(&src[x..x + n]).map(|(k, v)| k * v).sum();
        }
    });
    // columns
    let fh = h - n + 1;
    let mut out = vec![0.0; fh * fw];
    parallel::fill_rows(&mut out, fw, |y, row| {
        for (x, dst) in row.iter_mut().enumerate() {
            *dst = win
                .iter()
                .enumerate()
                .map(|(j, k)| k * rows[(y + j) * fw + x])
                .sum();
        }
    });
    (out, fh, fw)
}

/// Mean of the local SSIM index map over the border-cropped Y planes.
pub fn ssim_y(a: &Image, b: &Image, cfg: &MetricConfig) -> Result<f64> {
    let (ya, yb) = cropped_luma_pair(a, b, cfg)?;
    let (h, w, _) = ya.shape();
    let n = cfg.ssim_window_len;
    if n.is_multiple_of(2) || n < 2 {
        return Err(Error::param(format!("SSIM window length must be odd, got {n}")));
    }
    if h < n || w < n {
        return Err(Error::param(format!(
            "image too small for SSIM: {h}x{w} after cropping, window {n}"
        )));
    }
    let c1 = (cfg.k1).powi(2);
    let c2 = (cfg.k2).powi(2);
    let win = gaussian_window(n, cfg.ssim_window_sigma);

    let pa = ya.data();
    let pb = yb.data();
    let sq_a: Vec<f64> = pa.iter().map(|v| v * v).collect();
    let sq_b: Vec<f64> = pb.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| x * y).collect();

    let (mu_a, fh, fw) = filter_valid(pa, h, w, &win);
    let (mu_b, _, _) = filter_valid(pb, h, w, &win);
    let (e_a2, _, _) = filter_valid(&sq_a, h, w, &win);
    let (e_b2, _, _) = filter_valid(&sq_b, h, w, &win);
    let (e_ab, _, _) = filter_valid(&ab, h, w, &win);

    let total = parallel::sum_rows(fh, |y| {
        let mut s = 0.0;
        for x in 0..fw {
            let i = y * fw + x;
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_a2[i] - ma * ma;
            let var_b = e_b2[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            s += (2.0 * ma * mb + c1) * (2.0 * cov + c2)
                / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        }
        s
    });
    Ok(total / (fh * fw) as f64)
}

/// Mean absolute difference over every element of two congruent images.
pub fn mad(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    let (h, w, c) = a.shape();
    let row_len = w * c;
    let sum = parallel::sum_rows(h, |y| {
        let ra = &a.data()[y * row_len..(y + 1) * row_len];
        let rb = &b.data()[y * row_len..(y + 1) * row_len];
        ra.iter().zip(rb).map(|(p, q)| (p - q).abs()).sum::<f64>()
    });
    Ok(sum / (h * row_len) as f64)
}

/// MAD between each frame `k` and frame `k + gap`, one entry per valid `k`,
/// in order.
pub fn mad_series(frames: &[Image], gap: usize) -> Result<Vec<(usize, f64)>> {
    if gap == 0 {
        return Err(Error::param("gap must be positive"));
    }
    if gap >= frames.len() {
        return Err(Error::param(format!(
            "gap {gap} needs more than {gap} frames, got {}",
            frames.len()
        )));
    }
    (0..frames.len() - gap)
        .map(|k| Ok((k, mad(&frames[k], &frames[k + gap])?)))
        .collect()
}
