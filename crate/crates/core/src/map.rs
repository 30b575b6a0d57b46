//! Pixel-wise artifact maps from SR residuals.
//!
//! The pipeline: residual -> local-variance primary map -> global-variance
//! scale -> refinement against the residual of an EMA-stabilized twin. High
//! local residual variance flags overshoot pixels (likely artifacts), while
//! the refinement step clears pixels where the live output already beats the
//! slower-moving ensemble.

use crate::colormap;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::parallel;

/// Signed difference grid between two congruent images; values lie in
/// `[-1, 1]` when both inputs are valid images.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ResidualMap {
    /// Wrap raw residual data. Only finiteness is enforced; magnitudes above
    /// 1 are accepted so synthetic inputs can exercise the statistics.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || (channels != 1 && channels != 3) {
            return Err(Error::param(format!(
                "bad residual shape {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::param(format!(
                "residual data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("residual contains non-finite values"));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Mean over channels of the absolute residual at one pixel.
    #[inline]
    pub fn abs_channel_mean(&self, y: usize, x: usize) -> f64 {
        let base = (y * self.width + x) * self.channels;
        let mut s = 0.0;
        for c in 0..self.channels {
            s += self.data[base + c].abs();
        }
        s / self.channels as f64
    }

    /// Scale every element by `factor` (test and analysis helper).
    pub fn scaled(&self, factor: f64) -> ResidualMap {
        let data = self.data.iter().map(|v| v * factor).collect();
        ResidualMap { data, ..*self }
    }
}

/// Single-channel nonnegative map over the same spatial grid as its source
/// residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ArtifactMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::param(format!("bad map shape {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::param(format!(
                "map data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("map values must be finite and nonnegative"));
        }
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// Parameters of the map statistics. Ties in the refinement comparison are
/// always penalized (the keep branch applies on equality).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig {
    /// Local window side length; odd, at least 3.
    pub window: usize,
    /// Exponent `a` of the global scale `var^(1/a)`.
    pub exponent: f64,
}

impl MapConfig {
    pub fn new(window: usize, exponent: f64) -> Result<Self> {
        if window < 3 || window.is_multiple_of(2) {
            return Err(Error::param(format!(
                "window must be odd and >= 3, got {window}"
            )));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::param(format!(
                "exponent must be positive, got {exponent}"
            )));
        }
        Ok(Self { window, exponent })
    }
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { window: 7, exponent: 5.0 }
    }
}

/// Default patch-type thresholds; midpoints of the reference sigma values
/// for smooth (0.25), texture (0.39) and fine-structure (0.67) patches.
pub const DEFAULT_T_AB: f64 = 0.32;
pub const DEFAULT_T_BC: f64 = 0.53;

/// Patch taxonomy by global scale: A = smooth / large structure,
/// B = irregular texture, C = fine regular structure (artifact prone).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchLabel {
    A,
    B,
    C,
}

impl std::fmt::Display for PatchLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PatchLabel::A => f.write_str("A"),
            PatchLabel::B => f.write_str("B"),
            PatchLabel::C => f.write_str("C"),
        }
    }
}

/// `hr - sr`, element-wise.
pub fn residual(hr: &Image, sr: &Image) -> Result<ResidualMap> {
    hr.same_shape(sr)?;
    let (h, w, c) = hr.shape();
    let data = hr
        .data()
        .iter()
        .zip(sr.data())
        .map(|(a, b)| a - b)
        .collect();
    ResidualMap::new(h, w, c, data)
}

/// Mirror an out-of-range index back into `[0, len)`, duplicating the edge
/// sample; well defined for any window size even when `len == 1`.
#[inline]
fn reflect(mut i: isize, len: usize) -> usize {
    let len = len as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= len {
            i = 2 * len - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Primary artifact map: population variance of each `n x n` window of the
/// residual, computed per channel and averaged over channels. Boundaries use
/// reflection padding.
pub fn local_variance_map(r: &ResidualMap, cfg: &MapConfig) -> ArtifactMap {
    let (h, w, c) = r.shape();
    let n = cfg.window;
    let half = (n / 2) as isize;
    let count = (n * n) as f64;

    let mut out = vec![0.0; h * w];
    parallel::fill_rows(&mut out, w, |y, row| {
        for (x, dst) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for ch in 0..c {
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                for dy in -half..=half {
                    let sy = reflect(y as isize + dy, h);
                    for dx in -half..=half {
                        let sx = reflect(x as isize + dx, w);
                        let v = r.get(sy, sx, ch);
                        sum += v;
                        sum_sq += v * v;
                    }
                }
                let mean = sum / count;
                // rounding can push a zero variance fractionally negative
                acc += (sum_sq / count - mean * mean).max(0.0);
            }
            *dst = acc / c as f64;
        }
    });
    ArtifactMap { height: h, width: w, data: out }
}

/// Population variance over every element of the residual.
pub fn residual_variance(r: &ResidualMap) -> f64 {
    let (h, w, c) = r.shape();
    let row_len = w * c;
    let count = (h * row_len) as f64;
    let total = parallel::sum_rows(h, |y| {
        r.data()[y * row_len..(y + 1) * row_len].iter().sum::<f64>()
    });
    let mean = total / count;
    let ss = parallel::sum_rows(h, |y| {
        r.data()[y * row_len..(y + 1) * row_len]
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
    });
    (ss / count).max(0.0)
}

/// Patch-level scale: `var(R)^(1/a)` over all elements jointly.
pub fn global_scale(r: &ResidualMap, cfg: &MapConfig) -> f64 {
    residual_variance(r).powf(1.0 / cfg.exponent)
}

/// Element-wise `sigma * M`.
pub fn scale_map(m: &ArtifactMap, sigma: f64) -> Result<ArtifactMap> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::param(format!("sigma must be nonnegative, got {sigma}")));
    }
    let data = m.data.iter().map(|v| sigma * v).collect();
    Ok(ArtifactMap { height: m.height, width: m.width, data })
}

/// Keep `scaled` only where the live residual is at least as large as the
/// ensemble residual (channel-mean absolute values); zero elsewhere. Ties
/// keep the penalty.
pub fn refine_map(
    scaled: &ArtifactMap,
    r1: &ResidualMap,
    r2: &ResidualMap,
) -> Result<ArtifactMap> {
    if r1.shape() != r2.shape() {
        return Err(Error::shape(r1.shape(), r2.shape()));
    }
    if (scaled.height, scaled.width) != (r1.height, r1.width) {
        return Err(Error::shape(
            (scaled.height, scaled.width, 1),
            (r1.height, r1.width, 1),
        ));
    }
    let (h, w) = (scaled.height, scaled.width);
    let mut out = vec![0.0; h * w];
    parallel::fill_rows(&mut out, w, |y, row| {
        for (x, dst) in row.iter_mut().enumerate() {
            *dst = if r1.abs_channel_mean(y, x) < r2.abs_channel_mean(y, x) {
                0.0
            } else {
                scaled.get(y, x)
            };
        }
    });
    Ok(ArtifactMap { height: h, width: w, data: out })
}

/// Label a patch by its global scale. Requires `0 <= t_ab < t_bc`.
pub fn classify_patch(sigma: f64, t_ab: f64, t_bc: f64) -> Result<PatchLabel> {
    if !(t_ab >= 0.0 && t_ab < t_bc) {
        return Err(Error::param(format!(
            "thresholds must satisfy 0 <= t_ab < t_bc, got {t_ab} and {t_bc}"
        )));
    }
    Ok(if sigma < t_ab {
        PatchLabel::A
    } else if sigma < t_bc {
        PatchLabel::B
    } else {
        PatchLabel::C
    })
}

/// Render a map through the embedded color table. `max_value = None` scales
/// by the map maximum (or 1 for an all-zero map); larger map values never
/// land on a lower table index.
pub fn render_heatmap(m: &ArtifactMap, max_value: Option<f64>) -> Result<Image> {
    let max = match max_value {
        Some(v) if !(v.is_finite() && v > 0.0) => {
            return Err(Error::param(format!("max_value must be positive, got {v}")));
        }
        Some(v) => v,
        None => {
            let peak = m.max();
            if peak > 0.0 {
                peak
            } else {
                1.0
            }
        }
    };
    let mut out = vec![0.0; m.height * m.width * 3];
    parallel::fill_rows(&mut out, m.width * 3, |y, row| {
        for x in 0..m.width {
            let t = (m.get(y, x) / max).clamp(0.0, 1.0);
            let rgb = colormap::entry((t * 255.0).round() as usize);
            row[x * 3..x * 3 + 3].copy_from_slice(&rgb);
        }
    });
    Image::new(m.height, m.width, 3, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rm(h: usize, w: usize, c: usize, data: Vec<f64>) -> ResidualMap {
        ResidualMap::new(h, w, c, data).unwrap()
    }

    /// Brute-force oracle: materialize the reflection padding, then take the
    /// centered two-pass variance of every window.
    fn variance_map_oracle(r: &ResidualMap, n: usize) -> Vec<f64> {
        let (h, w, c) = r.shape();
        let half = n / 2;
        let (ph, pw) = (h + 2 * half, w + 2 * half);
        let mut padded = vec![0.0; ph * pw * c];
        for y in 0..ph {
            for x in 0..pw {
                let sy = reflect(y as isize - half as isize, h);
                let sx = reflect(x as isize - half as isize, w);
                for ch in 0..c {
                    padded[(y * pw + x) * c + ch] = r.get(sy, sx, ch);
                }
            }
        }
        let mut out = vec![0.0; h * w];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for ch in 0..c {
                    let mut window = Vec::with_capacity(n * n);
                    for dy in 0..n {
                        for dx in 0..n {
                            window.push(padded[((y + dy) * pw + (x + dx)) * c + ch]);
                        }
                    }
                    let mean = window.iter().sum::<f64>() / window.len() as f64;
                    acc += window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / window.len() as f64;
                }
                out[y * w + x] = acc / c as f64;
            }
        }
        out
    }

    fn pseudo_residual(h: usize, w: usize, c: usize, seed: u64) -> ResidualMap {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..h * w * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        rm(h, w, c, data)
    }

    #[test]
    fn residual_basics() {
        let hr = Image::constant(2, 2, 1, 0.8);
        let sr = Image::constant(2, 2, 1, 0.5);
        let r = residual(&hr, &sr).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.3).abs() < 1e-15));

        let same = residual(&hr, &hr).unwrap();
        assert!(same.data().iter().all(|&v| v == 0.0));

        let sr_bad = Image::constant(2, 3, 1, 0.5);
        assert!(residual(&hr, &sr_bad).is_err());
    }

    #[test]
    fn residual_antisymmetry() {
        let a = Image::from_fn(4, 5, 3, |y, x, c| ((y * 7 + x * 3 + c) % 11) as f64 / 10.0);
        let b = Image::from_fn(4, 5, 3, |y, x, c| ((y + x * 5 + c * 2) % 13) as f64 / 12.0);
        let ab = residual(&a, &b).unwrap();
        let ba = residual(&b, &a).unwrap();
        for (u, v) in ab.data().iter().zip(ba.data()) {
            assert_eq!(*u, -*v);
        }
    }

    #[test]
    fn variance_of_constant_is_zero() {
        let r = rm(5, 5, 3, vec![0.25; 75]);
        let m = local_variance_map(&r, &MapConfig::default());
        assert!(m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variance_center_spike() {
        // 3x3 patch with a single 3 in the middle: center window variance 8/9
        let mut data = vec![0.0; 9];
        data[4] = 3.0;
        let r = rm(3, 3, 1, data);
        let m = local_variance_map(&r, &MapConfig::new(3, 5.0).unwrap());
        assert!((m.get(1, 1) - 8.0 / 9.0).abs() < 1e-12, "{}", m.get(1, 1));
    }

    #[test]
    fn variance_matches_bruteforce() {
        for seed in 0..4 {
            for &(h, w, c) in &[(16usize, 16usize, 1usize), (16, 16, 3), (9, 13, 3)] {
                let r = pseudo_residual(h, w, c, seed);
                let m = local_variance_map(&r, &MapConfig::default());
                let oracle = variance_map_oracle(&r, 7);
                let max_err = m
                    .data()
                    .iter()
                    .zip(&oracle)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(max_err < 1e-12, "{h}x{w}x{c} seed {seed}: {max_err}");
            }
        }
    }

    #[test]
    fn variance_handles_inputs_smaller_than_window() {
        let r = pseudo_residual(3, 4, 1, 9);
        let m = local_variance_map(&r, &MapConfig::default());
        let oracle = variance_map_oracle(&r, 7);
        for (a, b) in m.data().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_is_independent_of_boundary_handling() {
        let r = pseudo_residual(16, 16, 1, 3);
        let m = local_variance_map(&r, &MapConfig::default());

        // zero-pad by the window margin and recompute
        let margin = 3;
        let (ph, pw) = (16 + 2 * margin, 16 + 2 * margin);
        let mut padded = vec![0.0; ph * pw];
        for y in 0..16 {
            for x in 0..16 {
                padded[(y + margin) * pw + (x + margin)] = r.get(y, x, 0);
            }
        }
        let rp = rm(ph, pw, 1, padded);
        let mp = local_variance_map(&rp, &MapConfig::default());

        for y in margin..16 - margin {
            for x in margin..16 - margin {
                assert_eq!(m.get(y, x), mp.get(y + margin, x + margin));
            }
        }
    }

    #[test]
    fn config_rejects_bad_window() {
        assert!(MapConfig::new(4, 5.0).is_err());
        assert!(MapConfig::new(1, 5.0).is_err());
        assert!(MapConfig::new(7, 0.0).is_err());
        assert!(MapConfig::new(7, -1.0).is_err());
    }

    #[test]
    fn global_scale_power_law() {
        let cfg = MapConfig::default();

        // +-1 residual: population variance exactly 1, sigma = 1
        let r = rm(2, 2, 1, vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(global_scale(&r, &cfg), 1.0);

        // variance 1e-5 -> sigma = 0.1
        let v = 1e-5f64.sqrt();
        let r = rm(2, 2, 1, vec![v, -v, v, -v]);
        assert!((global_scale(&r, &cfg) - 0.1).abs() < 1e-12);

        // variance 9.77e-4 -> sigma close to the reference type-A value 0.25
        let v = 9.77e-4f64.sqrt();
        let r = rm(2, 2, 1, vec![v, -v, v, -v]);
        assert!((global_scale(&r, &cfg) - 0.25).abs() < 1e-3);

        // zero residual
        let r = rm(2, 2, 1, vec![0.0; 4]);
        assert_eq!(global_scale(&r, &cfg), 0.0);
    }

    #[test]
    fn scale_map_basics() {
        let m = ArtifactMap::new(1, 2, vec![0.4, 0.1]).unwrap();
        assert_eq!(scale_map(&m, 0.0).unwrap().data(), &[0.0, 0.0]);
        assert_eq!(scale_map(&m, 1.0).unwrap().data(), m.data());
        assert_eq!(scale_map(&m, 0.5).unwrap().data(), &[0.2, 0.05]);
        assert!(scale_map(&m, -0.1).is_err());
    }

    #[test]
    fn refine_tie_keeps_penalty() {
        let r = pseudo_residual(4, 4, 3, 11);
        let scaled = local_variance_map(&r, &MapConfig::new(3, 5.0).unwrap());
        let refined = refine_map(&scaled, &r, &r).unwrap();
        assert_eq!(refined.data(), scaled.data());
    }

    #[test]
    fn refine_strictly_smaller_clears_everything() {
        let r1 = rm(3, 3, 1, vec![0.1; 9]);
        let r2 = rm(3, 3, 1, vec![0.5; 9]);
        let scaled = ArtifactMap::new(3, 3, vec![0.7; 9]).unwrap();
        let refined = refine_map(&scaled, &r1, &r2).unwrap();
        assert!(refined.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn refine_matches_two_branch_oracle() {
        let r1 = pseudo_residual(8, 8, 3, 21);
        let r2 = pseudo_residual(8, 8, 3, 22);
        let scaled = scale_map(
            &local_variance_map(&r1, &MapConfig::default()),
            global_scale(&r1, &MapConfig::default()),
        )
        .unwrap();
        let refined = refine_map(&scaled, &r1, &r2).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let m1 = (0..3).map(|c| r1.get(y, x, c).abs()).sum::<f64>() / 3.0;
                let m2 = (0..3).map(|c| r2.get(y, x, c).abs()).sum::<f64>() / 3.0;
                let expect = if m1 < m2 { 0.0 } else { scaled.get(y, x) };
                assert_eq!(refined.get(y, x), expect);
            }
        }
    }

    #[test]
    fn refine_rejects_shape_mismatch() {
        let r1 = pseudo_residual(4, 4, 1, 0);
        let r2 = pseudo_residual(4, 5, 1, 0);
        let scaled = ArtifactMap::new(4, 4, vec![0.0; 16]).unwrap();
        assert!(refine_map(&scaled, &r1, &r2).is_err());
    }

    #[test]
    fn classify_reference_sigmas() {
        assert_eq!(classify_patch(0.25, DEFAULT_T_AB, DEFAULT_T_BC).unwrap(), PatchLabel::A);
        assert_eq!(classify_patch(0.39, DEFAULT_T_AB, DEFAULT_T_BC).unwrap(), PatchLabel::B);
        assert_eq!(classify_patch(0.67, DEFAULT_T_AB, DEFAULT_T_BC).unwrap(), PatchLabel::C);
        assert!(classify_patch(0.5, 0.6, 0.4).is_err());
        assert!(classify_patch(0.5, -0.1, 0.4).is_err());
    }

    #[test]
    fn heatmap_endpoints() {
        let zero = ArtifactMap::new(2, 2, vec![0.0; 4]).unwrap();
        let img = render_heatmap(&zero, None).unwrap();
        let e0 = colormap::entry(0);
        for px in img.data().chunks(3) {
            assert_eq!(px, e0);
        }

        let m = ArtifactMap::new(1, 2, vec![0.0, 0.8]).unwrap();
        let img = render_heatmap(&m, Some(0.8)).unwrap();
        assert_eq!(&img.data()[3..6], colormap::entry(255));
        assert!(render_heatmap(&m, Some(0.0)).is_err());
        assert!(render_heatmap(&m, Some(-1.0)).is_err());
    }

    proptest! {
        #[test]
        fn variance_homogeneity(seed in 0u64..100, c in 0.05f64..4.0) {
            let r = pseudo_residual(8, 8, 1, seed);
            let cfg = MapConfig::new(5, 5.0).unwrap();
            let m = local_variance_map(&r, &cfg);
            let mc = local_variance_map(&r.scaled(c), &cfg);
            for (a, b) in m.data().iter().zip(mc.data()) {
                prop_assert!((c * c * a - b).abs() < 1e-12 * (1.0 + c * c));
            }
            let s = global_scale(&r, &cfg);
            let sc = global_scale(&r.scaled(c), &cfg);
            prop_assert!((sc - c.powf(2.0 / 5.0) * s).abs() < 1e-12);
        }

        #[test]
        fn heatmap_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let m = ArtifactMap::new(1, 2, vec![a, b]).unwrap();
            let img = render_heatmap(&m, Some(1.0)).unwrap();
            let idx = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as usize;
            prop_assert_eq!(&img.data()[0..3], &colormap::entry(idx(a)));
            prop_assert_eq!(&img.data()[3..6], &colormap::entry(idx(b)));
            if a >= b {
                prop_assert!(idx(a) >= idx(b));
            }
        }

        #[test]
        fn refined_values_come_from_scaled_or_zero(s1 in 0u64..50, s2 in 50u64..100) {
            let r1 = pseudo_residual(6, 6, 3, s1);
            let r2 = pseudo_residual(6, 6, 3, s2);
            let cfg = MapConfig::default();
            let scaled = scale_map(&local_variance_map(&r1, &cfg), global_scale(&r1, &cfg)).unwrap();
            let refined = refine_map(&scaled, &r1, &r2).unwrap();
            for (v, s) in refined.data().iter().zip(scaled.data()) {
                prop_assert!(*v == 0.0 || v == s);
            }
        }
    }
}
