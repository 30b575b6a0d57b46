//! `artimap`: artifact maps, losses, metrics and a pixel-space
//! optimization demo for super-resolution image pairs.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors with a
//! message on stderr. Output files are written atomically and contain no
//! timestamps, so any subcommand rerun on the same inputs produces
//! byte-identical artifacts.

mod config;
mod output;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use artimap_core::{
    blurred_start, classify_patch, global_scale, l1_loss, local_variance_map, mad, mad_series,
    optim_run, psnr_y, refine_map, render_heatmap, residual, scale_map, ssim_y, ArtifactMap,
    Image, LossConfig, MapConfig, MetricConfig, OptimConfig, ResidualMap, Trajectory,
    DEFAULT_T_AB, DEFAULT_T_BC,
};
use config::{resolve, FileConfig};
use output::{ClassifyReport, LossReport, MapReport, MetricsReport};

#[derive(Parser)]
#[command(
    name = "artimap",
    version,
    about = "Artifact discrimination toolkit for super-resolution outputs"
)]
struct Cli {
    /// JSON file with default values for tuning flags; explicit flags win
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build artifact maps from an (HR, SR) pair and write them as heatmaps
    Map {
        /// Ground-truth image
        #[arg(long)]
        hr: PathBuf,
        /// Super-resolved image
        #[arg(long)]
        sr: PathBuf,
        /// Second SR image (e.g. an EMA output); enables map refinement
        #[arg(long)]
        sr2: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out_dir: PathBuf,
        /// Local variance window (odd, >= 3)
        #[arg(long)]
        n: Option<usize>,
        /// Global scale exponent
        #[arg(long)]
        a: Option<f64>,
    },
    /// Evaluate the reconstruction / artifact / combined losses
    Loss {
        #[arg(long)]
        hr: PathBuf,
        #[arg(long)]
        sr: PathBuf,
        /// Grayscale PNG to use as the artifact map
        #[arg(long, conflicts_with = "sr2")]
        map: Option<PathBuf>,
        /// Second SR image; the map is then the refined pipeline map
        #[arg(long)]
        sr2: Option<PathBuf>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        lambda1: Option<f64>,
        /// mean | sum
        #[arg(long)]
        reduction: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        a: Option<f64>,
    },
    /// Y-channel PSNR/SSIM and MAD between two images
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Border pixels cropped before PSNR/SSIM
        #[arg(long)]
        crop: Option<usize>,
    },
    /// Apply a synthetic degradation
    Degrade {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: DegradeMode,
    },
    /// MAD series over a directory of frames (lexicographic order;
    /// zero-pad frame numbers in the filenames)
    Stability {
        #[arg(long)]
        frames: PathBuf,
        /// Compare frame k with frame k + gap
        #[arg(long)]
        gap: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pixel-space optimization of a blurred start toward --hr, run twice:
    /// with the artifact penalty and as a beta = 0 baseline
    Demo {
        #[arg(long)]
        hr: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        /// Gradient noise standard deviation
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Snapshot cadence
        #[arg(long)]
        log_every: Option<usize>,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        reduction: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        a: Option<f64>,
        /// EMA decay of the twin image
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Report the global scale of an (HR, SR) residual and its patch label
    Classify {
        #[arg(long)]
        hr: PathBuf,
        #[arg(long)]
        sr: PathBuf,
        #[arg(long)]
        t_ab: Option<f64>,
        #[arg(long)]
        t_bc: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DegradeMode {
    /// MATLAB-style bicubic 4x downscale
    Bicubic4,
    /// 2x2 average pooling with stride 2
    Avgpool2,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Map { hr, sr, sr2, out_dir, n, a } => cmd_map(&file, hr, sr, sr2, out_dir, n, a),
        Command::Loss { hr, sr, map, sr2, beta, lambda1, reduction, n, a } => {
            cmd_loss(&file, hr, sr, map, sr2, beta, lambda1, reduction, n, a)
        }
        Command::Metrics { a, b, crop } => cmd_metrics(&file, a, b, crop),
        Command::Degrade { input, out, mode } => cmd_degrade(input, out, mode),
        Command::Stability { frames, gap, out } => cmd_stability(&file, frames, gap, out),
        Command::Demo {
            hr,
            out_dir,
            beta,
            eta,
            lr,
            iters,
            seed,
            log_every,
            lambda1,
            reduction,
            n,
            a,
            alpha,
        } => cmd_demo(
            &file, hr, out_dir, beta, eta, lr, iters, seed, log_every, lambda1, reduction, n, a,
            alpha,
        ),
        Command::Classify { hr, sr, t_ab, t_bc } => cmd_classify(&file, hr, sr, t_ab, t_bc),
    }
}

fn map_config(file: &FileConfig, n: Option<usize>, a: Option<f64>) -> anyhow::Result<MapConfig> {
    let d = MapConfig::default();
    Ok(MapConfig::new(
        resolve(n, file.n, d.window),
        resolve(a, file.a, d.exponent),
    )?)
}

fn loss_config(
    file: &FileConfig,
    lambda1: Option<f64>,
    beta: Option<f64>,
    reduction: Option<String>,
) -> anyhow::Result<LossConfig> {
    let d = LossConfig::default();
    let reduction = resolve(reduction, file.reduction.clone(), d.reduction.as_str().into());
    Ok(LossConfig::new(
        resolve(lambda1, file.lambda1, d.lambda1),
        resolve(beta, file.beta, d.beta),
        reduction.parse()?,
    )?)
}

fn cmd_map(
    file: &FileConfig,
    hr: PathBuf,
    sr: PathBuf,
    sr2: Option<PathBuf>,
    out_dir: PathBuf,
    n: Option<usize>,
    a: Option<f64>,
) -> anyhow::Result<()> {
    let cfg = map_config(file, n, a)?;
    let hr = Image::load_png(&hr)?;
    let sr = Image::load_png(&sr)?;
    let r1 = residual(&hr, &sr)?;
    let primary = local_variance_map(&r1, &cfg);
    let sigma = global_scale(&r1, &cfg);
    let scaled = scale_map(&primary, sigma)?;

    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    output::write_png(&out_dir.join("residual.png"), &abs_residual_image(&r1))?;
    output::write_png(&out_dir.join("m.png"), &render_heatmap(&primary, None)?)?;

    // scaled and refined maps share one scale so they stay comparable
    let shared_max = (scaled.max() > 0.0).then(|| scaled.max());
    output::write_png(
        &out_dir.join("m_scaled.png"),
        &render_heatmap(&scaled, shared_max)?,
    )?;

    let final_map = match sr2 {
        Some(path) => {
            let r2 = residual(&hr, &Image::load_png(&path)?)?;
            let refined = refine_map(&scaled, &r1, &r2)?;
            output::write_png(
                &out_dir.join("m_refine.png"),
                &render_heatmap(&refined, shared_max)?,
            )?;
            refined
        }
        None => scaled,
    };

    let report = MapReport {
        sigma,
        map_mean: final_map.mean(),
        label: classify_patch(sigma, DEFAULT_T_AB, DEFAULT_T_BC)?.to_string(),
    };
    output::write_json(&out_dir.join("map.json"), &report)?;
    output::print_json(&report)
}

/// Absolute residual normalized by its peak (gray stays gray, RGB stays RGB).
fn abs_residual_image(r: &ResidualMap) -> Image {
    let peak = r.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let denom = if peak > 0.0 { peak } else { 1.0 };
    let (h, w, c) = r.shape();
    Image::from_fn(h, w, c, |y, x, ch| r.get(y, x, ch).abs() / denom)
}

#[allow(clippy::too_many_arguments)]
fn cmd_loss(
    file: &FileConfig,
    hr: PathBuf,
    sr: PathBuf,
    map: Option<PathBuf>,
    sr2: Option<PathBuf>,
    beta: Option<f64>,
    lambda1: Option<f64>,
    reduction: Option<String>,
    n: Option<usize>,
    a: Option<f64>,
) -> anyhow::Result<()> {
    let map_cfg = map_config(file, n, a)?;
    let loss_cfg = loss_config(file, lambda1, beta, reduction)?;
    let hr = Image::load_png(&hr)?;
    let sr = Image::load_png(&sr)?;

    let weight_map = match (map, sr2) {
        (Some(path), _) => {
            let img = Image::load_png(&path)?;
            if img.channels() != 1 {
                bail!(
                    "{}: expected a grayscale PNG for --map, got {} channels",
                    path.display(),
                    img.channels()
                );
            }
            ArtifactMap::new(img.height(), img.width(), img.data().to_vec())?
        }
        (None, Some(path)) => {
            let r1 = residual(&hr, &sr)?;
            let r2 = residual(&hr, &Image::load_png(&path)?)?;
            let scaled = scale_map(&local_variance_map(&r1, &map_cfg), global_scale(&r1, &map_cfg))?;
            refine_map(&scaled, &r1, &r2)?
        }
        (None, None) => {
            let r1 = residual(&hr, &sr)?;
            scale_map(&local_variance_map(&r1, &map_cfg), global_scale(&r1, &map_cfg))?
        }
    };

    let l1 = l1_loss(&hr, &sr, loss_cfg.reduction)?;
    let artifact = artimap_core::artifact_loss(&hr, &sr, &weight_map, loss_cfg.reduction)?;
    output::print_json(&LossReport {
        l1,
        artifact,
        combined: loss_cfg.lambda1 * l1 + loss_cfg.beta * artifact,
        reduction: loss_cfg.reduction.as_str().into(),
        beta: loss_cfg.beta,
        lambda1: loss_cfg.lambda1,
    })
}

fn cmd_metrics(
    file: &FileConfig,
    a: PathBuf,
    b: PathBuf,
    crop: Option<usize>,
) -> anyhow::Result<()> {
    let cfg = MetricConfig {
        border_crop: resolve(crop, file.crop, MetricConfig::default().border_crop),
        ..MetricConfig::default()
    };
    let a = Image::load_png(&a)?;
    let b = Image::load_png(&b)?;
    output::print_json(&MetricsReport {
        psnr: psnr_y(&a, &b, &cfg)?,
        ssim: ssim_y(&a, &b, &cfg)?,
        mad: mad(&a, &b)?,
    })
}

fn cmd_degrade(input: PathBuf, out: PathBuf, mode: DegradeMode) -> anyhow::Result<()> {
    let img = Image::load_png(&input)?;
    let degraded = match mode {
        DegradeMode::Bicubic4 => img.resize_bicubic(0.25)?,
        DegradeMode::Avgpool2 => img.downsample_avgpool2()?,
    };
    output::write_png(&out, &degraded)
}

fn cmd_stability(
    file: &FileConfig,
    frames_dir: PathBuf,
    gap: Option<usize>,
    out: PathBuf,
) -> anyhow::Result<()> {
    let Some(gap) = gap.or(file.gap) else {
        bail!("--gap is required (on the command line or in the config file)");
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&frames_dir)
        .with_context(|| format!("reading {}", frames_dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|e| e.eq_ignore_ascii_case("png"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("{}: no PNG frames found", frames_dir.display());
    }
    let frames: Vec<Image> = paths
        .iter()
        .map(Image::load_png)
        .collect::<artimap_core::Result<_>>()?;
    let series = mad_series(&frames, gap)?;
    output::write_mad_csv(&out, &series)
}

#[allow(clippy::too_many_arguments)]
fn cmd_demo(
    file: &FileConfig,
    hr: PathBuf,
    out_dir: PathBuf,
    beta: Option<f64>,
    eta: Option<f64>,
    lr: Option<f64>,
    iters: Option<usize>,
    seed: Option<u64>,
    log_every: Option<usize>,
    lambda1: Option<f64>,
    reduction: Option<String>,
    n: Option<usize>,
    a: Option<f64>,
    alpha: Option<f64>,
) -> anyhow::Result<()> {
    let defaults = OptimConfig::default();
    let loss = loss_config(file, lambda1, beta, reduction)?;
    let regularized = OptimConfig {
        learning_rate: resolve(lr, file.lr, defaults.learning_rate),
        iterations: resolve(iters, file.iters, defaults.iterations),
        loss,
        map: map_config(file, n, a)?,
        alpha: resolve(alpha, file.alpha, defaults.alpha),
        noise_std: resolve(eta, file.eta, defaults.noise_std),
        seed: resolve(seed, file.seed, defaults.seed),
        log_every: resolve(log_every, file.log_every, defaults.log_every),
    };
    let baseline = OptimConfig {
        loss: LossConfig { beta: 0.0, ..loss },
        ..regularized
    };

    let hr = Image::load_png(&hr)?;
    let start = blurred_start(&hr)?;
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let (reg, base) = artimap_core::join(
        || optim_run(&start, &hr, &regularized),
        || optim_run(&start, &hr, &baseline),
    );
    write_run(&out_dir, "regularized", &reg?)?;
    write_run(&out_dir, "baseline", &base?)?;
    Ok(())
}

fn write_run(out_dir: &Path, name: &str, traj: &Trajectory) -> anyhow::Result<()> {
    output::write_series_csv(&out_dir.join(format!("series_{name}.csv")), &traj.series)?;
    for (step, img) in &traj.snapshots {
        output::write_png(&out_dir.join(format!("{name}_{step:06}.png")), img)?;
    }
    Ok(())
}

fn cmd_classify(
    file: &FileConfig,
    hr: PathBuf,
    sr: PathBuf,
    t_ab: Option<f64>,
    t_bc: Option<f64>,
) -> anyhow::Result<()> {
    let hr = Image::load_png(&hr)?;
    let sr = Image::load_png(&sr)?;
    let sigma = global_scale(&residual(&hr, &sr)?, &MapConfig::default());
    let label = classify_patch(
        sigma,
        resolve(t_ab, file.t_ab, DEFAULT_T_AB),
        resolve(t_bc, file.t_bc, DEFAULT_T_BC),
    )?;
    output::print_json(&ClassifyReport { sigma, label: label.to_string() })
}
