//! Experiment sweeps: degrade → restore → evaluate over a cross product of
//! settings, with per-group averages.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use p4ip_core::anscombe::InverseKind;
use p4ip_core::imaging::{psnr, save_raster};
use p4ip_core::Image;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method};
use crate::inputs::{load_image, load_kernel};
use crate::pipeline::{degrade, denoiser_list, preset, restore};

pub const RESULTS_FILE: &str = "results.csv";

pub const HEADER: [&str; 12] = [
    "image",
    "peak",
    "kernel",
    "method",
    "denoiser",
    "seed",
    "status",
    "noisy_psnr",
    "psnr",
    "iterations",
    "inner_iterations",
    "wall_time_s",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub image: String,
    pub peak: f64,
    pub kernel: String,
    pub method: Method,
    pub denoiser: String,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub cell: Cell,
    pub result: Result<CellMetrics, String>,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct CellMetrics {
    pub noisy_psnr: f64,
    pub psnr: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
}

/// Cells in row-major order over images, peaks, kernels, methods,
/// denoisers and seeds.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::with_capacity(cfg.cell_count());
    for image in &cfg.images {
        for &peak in &cfg.peaks {
            for kernel in &cfg.kernels {
                for &method in &cfg.methods {
                    for denoiser in &cfg.denoisers {
                        for &seed in &cfg.seeds {
                            out.push(Cell {
                                index: out.len(),
                                image: image.clone(),
                                peak,
                                kernel: kernel.clone(),
                                method,
                                denoiser: denoiser.clone(),
                                seed,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn run_cell(
    cfg: &ExperimentConfig,
    clean: &Result<Image, String>,
    cell: &Cell,
    save: Option<&Path>,
) -> Result<CellMetrics> {
    let clean = clean.as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
    let kernel = load_kernel(&cell.kernel)?;
    let (reference, observed) = degrade(clean, cell.peak, kernel.as_ref(), cell.seed)?;
    let mut params = preset(cell.peak, kernel.as_ref());
    if let Some(iters) = cfg.iters {
        params.iters = iters;
    }
    if let Some(step) = cfg.lambda_step {
        params.lambda_step = step;
    }
    if let Some(beta) = cfg.beta {
        params.beta = beta;
    }
    params.binning = cfg.binning;
    let restored = restore(
        &observed,
        cell.method,
        &denoiser_list(&cell.denoiser),
        kernel.as_ref(),
        &params,
        InverseKind::Unbiased,
    )?;
    if let Some(dir) = save {
        let path = dir.join(format!("cell{:04}.raster", cell.index));
        save_raster(&restored.image, &path)?;
    }
    Ok(CellMetrics {
        noisy_psnr: psnr(&reference, &observed, cell.peak)?,
        psnr: psnr(&reference, &restored.image, cell.peak)?,
        iterations: restored.iterations,
        inner_iterations: restored.inner_iterations,
    })
}

/// Runs every cell on a pool of `threads` workers (`None`: one per logical
/// core). Failing cells are recorded, not fatal. Outcomes come back in
/// cell order.
pub fn run(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
    save: Option<&Path>,
) -> Result<Vec<CellOutcome>> {
    let mut images: HashMap<&str, Result<Image, String>> = HashMap::new();
    for spec in &cfg.images {
        images
            .entry(spec.as_str())
            .or_insert_with(|| load_image(spec).map_err(|e| format!("{e:#}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let all = cells(cfg);
    let total = all.len();
    Ok(pool.install(|| {
        all.into_par_iter()
            .map(|cell| {
                let started = std::time::Instant::now();
                let result = run_cell(cfg, &images[cell.image.as_str()], &cell, save)
                    .map_err(|e| format!("{e:#}"));
                let wall_time = started.elapsed();
                match &result {
                    Ok(m) => eprintln!(
                        "[{}/{total}] {} peak={} kernel={} {} {} seed={}: {:.2} dB",
                        cell.index + 1,
                        cell.image,
                        cell.peak,
                        cell.kernel,
                        cell.method,
                        cell.denoiser,
                        cell.seed,
                        m.psnr
                    ),
                    Err(e) => eprintln!("[{}/{total}] cell failed: {e}", cell.index + 1),
                }
                CellOutcome {
                    cell,
                    result,
                    wall_time,
                }
            })
            .collect()
    }))
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64())
}

/// Result rows followed by one `Average` row per
/// `(peak, kernel, method, denoiser)` group, averaged over images and
/// seeds. Timing is always the last column.
pub fn table(outcomes: &[CellOutcome]) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut groups: Vec<(String, Vec<&CellOutcome>)> = Vec::new();
    for o in outcomes {
        let c = &o.cell;
        let mut row = vec![
            c.image.clone(),
            c.peak.to_string(),
            c.kernel.clone(),
            c.method.to_string(),
            c.denoiser.clone(),
            c.seed.to_string(),
        ];
        match &o.result {
            Ok(m) => row.extend([
                "ok".to_string(),
                fmt_db(m.noisy_psnr),
                fmt_db(m.psnr),
                m.iterations.to_string(),
                m.inner_iterations.to_string(),
            ]),
            Err(e) => {
                row.push(format!("error: {}", e.replace(['\n', '\r'], " ")));
                row.extend(std::iter::repeat_n(String::new(), 4));
            }
        }
        row.push(fmt_secs(o.wall_time));
        rows.push(row);

        let key = format!(
            "{}\u{1f}{}\u{1f}{}\u{1f}{}",
            c.peak, c.kernel, c.method, c.denoiser
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(o),
            None => groups.push((key, vec![o])),
        }
    }
    for (_, members) in groups {
        let c = &members[0].cell;
        let ok: Vec<&CellMetrics> = members
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .collect();
        let mean = |f: fn(&CellMetrics) -> f64| {
            if ok.is_empty() {
                String::new()
            } else {
                fmt_db(ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64)
            }
        };
        let status = if ok.len() == members.len() {
            "ok".to_string()
        } else {
            format!("{}/{} ok", ok.len(), members.len())
        };
        let total: Duration = members.iter().map(|o| o.wall_time).sum();
        rows.push(vec![
            "Average".into(),
            c.peak.to_string(),
            c.kernel.clone(),
            c.method.to_string(),
            c.denoiser.clone(),
            String::new(),
            status,
            mean(|m| m.noisy_psnr),
            mean(|m| m.psnr),
            String::new(),
            String::new(),
            fmt_secs(total),
        ]);
    }
    rows
}

pub fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Loads the config, runs it, and writes `results.csv` into the output
/// directory (`output_dir` overrides the config's). Returns the CSV path.
pub fn cmd_experiment(
    config_path: &Path,
    output_dir: Option<&Path>,
    threads: Option<usize>,
    fallback_seed: Option<u64>,
) -> Result<PathBuf> {
    let cfg = ExperimentConfig::load(config_path)?.finalize(fallback_seed)?;
    let dir = output_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let save_dir = if cfg.save_images {
        let d = dir.join("cells");
        std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        Some(d)
    } else {
        None
    };
    let outcomes = run(&cfg, threads, save_dir.as_deref())?;
    let path = dir.join(RESULTS_FILE);
    write_csv(&path, &table(&outcomes))?;
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    eprintln!(
        "{} cells, {failed} failed; results in {}",
        outcomes.len(),
        path.display()
    );
    Ok(path)
}
