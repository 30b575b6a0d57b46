//! Atomic file writers and the machine-readable report shapes.
//!
//! Every artifact is written to a temporary file in the target directory and
//! renamed into place. Field order of the JSON reports is fixed by struct
//! declaration order and none of the outputs embed timestamps, so reruns are
//! byte-identical.

use std::path::Path;

use anyhow::Context;
use artimap_core::{Image, StepRecord};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct MapReport {
    pub sigma: f64,
    pub map_mean: f64,
    pub label: String,
}

#[derive(Debug, Serialize)]
pub struct LossReport {
    pub l1: f64,
    pub artifact: f64,
    pub combined: f64,
    pub reduction: String,
    pub beta: f64,
    pub lambda1: f64,
}

#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub psnr: f64,
    pub ssim: f64,
    pub mad: f64,
}

#[derive(Debug, Serialize)]
pub struct ClassifyReport {
    pub sigma: f64,
    pub label: String,
}

pub fn print_json<T: Serialize>(report: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(report)?);
    Ok(())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
        .with_context(|| format!("creating temporary file near {}", path.display()))?;
    std::fs::write(tmp.path(), bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("moving output into place at {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, report: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn write_png(path: &Path, img: &Image) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp_dir = dir.unwrap_or_else(|| Path::new("."));
    let tmp = tempfile::Builder::new()
        .suffix(".png")
        .tempfile_in(tmp_dir)
        .with_context(|| format!("creating temporary file near {}", path.display()))?;
    img.save_png(tmp.path())?;
    tmp.persist(path)
        .with_context(|| format!("moving output into place at {}", path.display()))?;
    Ok(())
}

/// Shortest round-trip float formatting (what `{}` prints for `f64`), which
/// keeps the CSVs deterministic.
pub fn write_series_csv(path: &Path, series: &[StepRecord]) -> anyhow::Result<()> {
    let mut text = String::from("k,l1,artifact,combined,map_mean,mad_ema\n");
    for r in series {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.step, r.l1, r.artifact, r.combined, r.map_mean, r.mad_ema
        ));
    }
    write_bytes(path, text.as_bytes())
}

pub fn write_mad_csv(path: &Path, series: &[(usize, f64)]) -> anyhow::Result<()> {
    let mut text = String::from("k,mad\n");
    for (k, v) in series {
        text.push_str(&format!("{k},{v}\n"));
    }
    write_bytes(path, text.as_bytes())
}
