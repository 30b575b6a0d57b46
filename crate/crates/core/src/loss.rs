//! Reconstruction loss, map-weighted artifact loss and their analytic
//! gradient with respect to the SR image.
//!
//! All reductions sum one image row at a time and fold the partials in row
//! order, so values are bit-stable across runs and thread counts.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::map::ArtifactMap;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Mean,
    Sum,
}

impl Reduction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reduction::Mean => "mean",
            Reduction::Sum => "sum",
        }
    }
}

impl std::str::FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Reduction::Mean),
            "sum" => Ok(Reduction::Sum),
            other => Err(Error::param(format!(
                "reduction must be 'mean' or 'sum', got '{other}'"
            ))),
        }
    }
}

/// Weights of the combined objective `lambda1 * L1 + beta * L_artifact`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub lambda1: f64,
    pub beta: f64,
    pub reduction: Reduction,
}

impl LossConfig {
    pub fn new(lambda1: f64, beta: f64, reduction: Reduction) -> Result<Self> {
        if !(lambda1.is_finite() && lambda1 >= 0.0) {
            return Err(Error::param(format!("lambda1 must be >= 0, got {lambda1}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::param(format!("beta must be >= 0, got {beta}")));
        }
        Ok(Self { lambda1, beta, reduction })
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { lambda1: 1.0, beta: 1.0, reduction: Reduction::Mean }
    }
}

fn check_map_shape(img: &Image, m: &ArtifactMap) -> Result<()> {
    if (img.height(), img.width()) != (m.height(), m.width()) {
        return Err(Error::shape(
            (img.height(), img.width(), 1),
            (m.height(), m.width(), 1),
        ));
    }
    Ok(())
}

fn reduce(sum: f64, count: usize, reduction: Reduction) -> f64 {
    match reduction {
        Reduction::Sum => sum,
        Reduction::Mean => sum / count as f64,
    }
}

/// `sum |hr - sr|`, optionally divided by the element count.
pub fn l1_loss(hr: &Image, sr: &Image, reduction: Reduction) -> Result<f64> {
    hr.same_shape(sr)?;
    let (h, w, c) = hr.shape();
    let row_len = w * c;
    let sum = parallel::sum_rows(h, |y| {
        let a = &hr.data()[y * row_len..(y + 1) * row_len];
        let b = &sr.data()[y * row_len..(y + 1) * row_len];
        a.iter().zip(b).map(|(x, s)| (x - s).abs()).sum::<f64>()
    });
    Ok(reduce(sum, h * row_len, reduction))
}

/// `sum m(i,j) * |hr(i,j,c) - sr(i,j,c)|` with the map broadcast across
/// channels; the mean divides by `H*W*C`.
pub fn artifact_loss(
    hr: &Image,
    sr: &Image,
    m: &ArtifactMap,
    reduction: Reduction,
) -> Result<f64> {
    hr.same_shape(sr)?;
    check_map_shape(hr, m)?;
    let (h, w, c) = hr.shape();
    let sum = parallel::sum_rows(h, |y| {
        let mut s = 0.0;
        for x in 0..w {
            let weight = m.get(y, x);
            for ch in 0..c {
                s += weight * (hr.get(y, x, ch) - sr.get(y, x, ch)).abs();
            }
        }
        s
    });
    Ok(reduce(sum, h * w * c, reduction))
}

/// `lambda1 * l1_loss + beta * artifact_loss`.
pub fn combined_loss(hr: &Image, sr: &Image, m: &ArtifactMap, cfg: &LossConfig) -> Result<f64> {
    let l1 = l1_loss(hr, sr, cfg.reduction)?;
    let artif = artifact_loss(hr, sr, m, cfg.reduction)?;
    Ok(cfg.lambda1 * l1 + cfg.beta * artif)
}

/// Gradient of [`combined_loss`] with respect to `sr`, holding the map
/// constant: per element `-(lambda1 + beta * m) * sign(hr - sr)`, divided by
/// `H*W*C` under mean reduction. `sign(0)` is 0. Returned in the row-major
/// layout of `sr`.
pub fn loss_gradient(
    hr: &Image,
    sr: &Image,
    m: &ArtifactMap,
    cfg: &LossConfig,
) -> Result<Vec<f64>> {
    hr.same_shape(sr)?;
    check_map_shape(hr, m)?;
    let (h, w, c) = hr.shape();
    let norm = match cfg.reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / (h * w * c) as f64,
    };
    let mut grad = vec![0.0; h * w * c];
    parallel::fill_rows(&mut grad, w * c, |y, row| {
        for x in 0..w {
            let weight = (cfg.lambda1 + cfg.beta * m.get(y, x)) * norm;
            for ch in 0..c {
                let diff = hr.get(y, x, ch) - sr.get(y, x, ch);
                let sign = if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                row[x * c + ch] = -weight * sign;
            }
        }
    });
    Ok(grad)
}
