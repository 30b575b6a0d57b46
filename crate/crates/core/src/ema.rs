//! Exponential moving average of a flat parameter vector.
//!
//! `params_k = alpha * params_{k-1} + (1 - alpha) * current_k`, initialized
//! as a copy of the first parameters (no bias correction), matching how
//! temporal model ensembling is used in image synthesis training.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmaState {
    params: Vec<f64>,
    alpha: f64,
    step: u64,
}

impl EmaState {
    /// Start the average at `initial` with decay `alpha` in `[0, 1]`.
    pub fn new(initial: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
            return Err(Error::param(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("EMA parameters must be finite"));
        }
        Ok(Self { params: initial, alpha, step: 0 })
    }

    /// Blend `current` into the average and advance the step counter.
    pub fn update(&mut self, current: &[f64]) -> Result<()> {
        if current.len() != self.params.len() {
            return Err(Error::param(format!(
                "EMA length mismatch: state has {}, update has {}",
                self.params.len(),
                current.len()
            )));
        }
        let a = self.alpha;
        let b = 1.0 - self.alpha;
        for (old, &new) in self.params.iter_mut().zip(current) {
            *old = a * *old + b * new;
        }
        self.step += 1;
        Ok(())
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}
