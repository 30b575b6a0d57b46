//! Artifact discrimination for super-resolution outputs.
//!
//! Given a ground-truth image and an SR result, this crate builds a
//! pixel-wise artifact map from the local variance of their residual, scales
//! it by a patch-level statistic, and optionally refines it against the
//! residual of an EMA-stabilized twin. The map weights an L1 penalty that
//! can be combined with a plain reconstruction loss, differentiated, and
//! driven in a pixel-space optimization loop. Y-channel PSNR/SSIM and MAD
//! stability metrics round out the toolkit.
//!
//! The `parallel` feature (on by default) runs the pixel loops on rayon.
//! Results are bit-identical across thread counts and match the sequential
//! build: work is always decomposed by output row and reductions fold
//! per-row partials in a fixed order.

pub mod colormap;
pub mod ema;
pub mod error;
pub mod image;
pub mod loss;
pub mod map;
pub mod metrics;
pub mod optim;
mod parallel;
mod resize;
pub mod synthetic;

pub use crate::image::Image;
pub use ema::EmaState;
pub use error::{Error, Result};
pub use loss::{artifact_loss, combined_loss, l1_loss, loss_gradient, LossConfig, Reduction};
pub use map::{
    classify_patch, global_scale, local_variance_map, refine_map, render_heatmap, residual,
    scale_map, ArtifactMap, MapConfig, PatchLabel, ResidualMap, DEFAULT_T_AB, DEFAULT_T_BC,
};
pub use metrics::{mad, mad_series, psnr_y, ssim_y, MetricConfig};
pub use optim::{blurred_start, run as optim_run, OptimConfig, OptimState, StepRecord, Trajectory};
pub use parallel::join;
