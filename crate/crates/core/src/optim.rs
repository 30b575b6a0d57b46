//! Pixel-space optimization loop with an EMA twin.
//!
//! Gradient descent on the pixels of an image under the combined loss. Each
//! step rebuilds the artifact map from the live residual, refines it against
//! the EMA image's residual, applies one (optionally noise-perturbed)
//! gradient step, clamps back into [0, 1] and folds the result into the EMA.
//! Gradient noise stands in for the instability that adversarial training
//! injects; the map never receives gradient.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ema::EmaState;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::loss::{artifact_loss, l1_loss, loss_gradient, LossConfig};
use crate::map::{global_scale, local_variance_map, refine_map, residual, scale_map, MapConfig};
use crate::metrics::mad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub loss: LossConfig,
    pub map: MapConfig,
    /// EMA decay of the twin image.
    pub alpha: f64,
    /// Standard deviation of the zero-mean Gaussian added to the gradient.
    pub noise_std: f64,
    pub seed: u64,
    /// Snapshot cadence of [`run`].
    pub log_every: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            iterations: 2000,
            loss: LossConfig::default(),
            map: MapConfig::default(),
            alpha: 0.999,
            noise_std: 0.02,
            seed: 0,
            log_every: 100,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::param(format!(
                "learning rate must be nonnegative, got {}",
                self.learning_rate
            )));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::param(format!(
                "noise std must be nonnegative, got {}",
                self.noise_std
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.log_every == 0 {
            return Err(Error::param("log_every must be positive"));
        }
        Ok(())
    }
}

/// Scalars recorded once per step. The losses and map mean are evaluated at
/// the state the step started from (they are what produced the update); the
/// EMA distance is measured after the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based index of the completed step.
    pub step: usize,
    pub l1: f64,
    pub artifact: f64,
    pub combined: f64,
    /// Mean of the refined artifact map used for this step's gradient.
    pub map_mean: f64,
    /// MAD between the live image and its EMA twin after the step.
    pub mad_ema: f64,
}

#[derive(Debug, Clone)]
pub struct OptimState {
    psi: Image,
    ema: EmaState,
    step: usize,
    rng: ChaCha8Rng,
    series: Vec<StepRecord>,
}

impl OptimState {
    /// Start from `start`; the EMA twin begins as a copy of it.
    pub fn new(start: Image, hr: &Image, cfg: &OptimConfig) -> Result<Self> {
        cfg.validate()?;
        start.same_shape(hr)?;
        let ema = EmaState::new(start.data().to_vec(), cfg.alpha)?;
        Ok(Self {
            psi: start,
            ema,
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            series: Vec::new(),
        })
    }

    pub fn psi(&self) -> &Image {
        &self.psi
    }

    /// The EMA twin as an image. EMA blending of in-range values stays in
    /// range, so this cannot fail after construction.
    pub fn ema_image(&self) -> Image {
        let (h, w, c) = self.psi.shape();
        Image::new(h, w, c, self.ema.params().to_vec()).expect("EMA params stay in [0, 1]")
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn series(&self) -> &[StepRecord] {
        &self.series
    }

    /// One optimization step against `hr`.
    pub fn step(&mut self, hr: &Image, cfg: &OptimConfig) -> Result<()> {
        let ema_img = self.ema_image();
        let r1 = residual(hr, &self.psi)?;
        let r2 = residual(hr, &ema_img)?;
        let primary = local_variance_map(&r1, &cfg.map);
        let sigma = global_scale(&r1, &cfg.map);
        let scaled = scale_map(&primary, sigma)?;
        let refined = refine_map(&scaled, &r1, &r2)?;

        let l1 = l1_loss(hr, &self.psi, cfg.loss.reduction)?;
        let artifact = artifact_loss(hr, &self.psi, &refined, cfg.loss.reduction)?;
        let combined = cfg.loss.lambda1 * l1 + cfg.loss.beta * artifact;
        let map_mean = refined.mean();

        let mut grad = loss_gradient(hr, &self.psi, &refined, &cfg.loss)?;
        if cfg.noise_std > 0.0 {
            for g in &mut grad {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *g += cfg.noise_std * z;
            }
        }

        let lr = cfg.learning_rate;
        let updated: Vec<f64> = self
            .psi
            .data()
            .iter()
            .zip(&grad)
            .map(|(v, g)| v - lr * g)
            .collect();
        self.psi.overwrite_clamped(&updated);
        self.ema.update(self.psi.data())?;
        self.step += 1;
        self.series.push(StepRecord {
            step: self.step,
            l1,
            artifact,
            combined,
            map_mean,
            mad_ema: mad(&self.psi, &self.ema_image())?,
        });
        Ok(())
    }
}

/// Snapshots of the live image at the logged steps, the full per-step scalar
/// series and the final images.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(step, image)` at step 0 and every `log_every` steps.
    pub snapshots: Vec<(usize, Image)>,
    pub series: Vec<StepRecord>,
    pub final_psi: Image,
    pub final_ema: Image,
}

/// Run `cfg.iterations` steps from `start`. The outcome is a pure function
/// of `(start, hr, cfg)`.
pub fn run(start: &Image, hr: &Image, cfg: &OptimConfig) -> Result<Trajectory> {
    let mut state = OptimState::new(start.clone(), hr, cfg)?;
    let mut snapshots = vec![(0, start.clone())];
    for k in 1..=cfg.iterations {
        state.step(hr, cfg)?;
        if k % cfg.log_every == 0 {
            snapshots.push((k, state.psi.clone()));
        }
    }
    let final_ema = state.ema_image();
    Ok(Trajectory {
        snapshots,
        series: state.series,
        final_psi: state.psi,
        final_ema,
    })
}

/// Default starting point: a 4x bicubic down-then-up round trip of `hr`.
/// Requires dimensions divisible by 4 so the round trip restores the shape.
pub fn blurred_start(hr: &Image) -> Result<Image> {
    let (h, w, _) = hr.shape();
    if h % 4 != 0 || w % 4 != 0 {
        return Err(Error::param(format!(
            "blurred start needs dimensions divisible by 4, got {h}x{w}"
        )));
    }
    hr.resize_bicubic(0.25)?.resize_bicubic(4.0)
}
