//! Method dispatch shared by `restore`, `baseline` and `experiment`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use p4ip_core::anscombe::{vst_restore, InverseKind, VstPipelineConfig};
use p4ip_core::denoisers::{from_selection, Denoiser};
use p4ip_core::imaging::scale_to_peak;
use p4ip_core::operators::Kernel;
use p4ip_core::solver::{p4ip_multi_run, p4ip_run, restore_with_binning, Prior};
use p4ip_core::{Image, SolverParams};

use crate::config::Method;
use crate::exit::usage;
use crate::inputs::operator_for;

#[derive(Clone, Debug)]
pub struct Restoration {
    pub image: Image,
    pub method: Method,
    /// Denoiser names joined with `+`.
    pub denoisers: String,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub primal_residual: Option<f64>,
    pub wall_time: Duration,
}

/// Splits `a+b` selections into their parts.
pub fn denoiser_list(selection: &str) -> Vec<String> {
    selection.split('+').map(|s| s.trim().to_string()).collect()
}

pub fn build_denoisers(selections: &[String]) -> Result<Vec<Arc<dyn Denoiser>>> {
    selections
        .iter()
        .map(|s| from_selection(s).with_context(|| format!("denoiser `{s}`")))
        .collect()
}

/// Preset for the problem type: deblurring when a kernel is present.
pub fn preset(peak: f64, kernel: Option<&Kernel>) -> SolverParams {
    match kernel {
        Some(_) => SolverParams::deblurring(peak),
        None => SolverParams::denoising(peak),
    }
}

pub fn restore(
    y: &Image,
    method: Method,
    selections: &[String],
    kernel: Option<&Kernel>,
    params: &SolverParams,
    inverse: InverseKind,
) -> Result<Restoration> {
    if selections.is_empty() {
        return Err(usage("at least one denoiser is required"));
    }
    if method != Method::MultiP4ip && selections.len() > 1 {
        return Err(usage(format!("method {method} takes exactly one denoiser")));
    }
    if kernel.is_some() && matches!(method, Method::P4ipBin | Method::Anscombe) {
        return Err(usage(format!(
            "method {method} only supports denoising (kernel none)"
        )));
    }
    let denoisers = build_denoisers(selections)?;
    let label = denoisers
        .iter()
        .map(|d| d.name())
        .collect::<Vec<_>>()
        .join("+");
    let (w, h) = y.dims();
    let op = operator_for(kernel, w, h);
    let started = Instant::now();
    let (image, report) = match method {
        Method::P4ip => p4ip_run(y, &op, denoisers[0].as_ref(), params)?,
        Method::P4ipBin => {
            let params = SolverParams {
                binning: Some(params.binning.unwrap_or(3)),
                ..params.clone()
            };
            restore_with_binning(y, denoisers[0].as_ref(), &params)?
        }
        Method::MultiP4ip => {
            let priors: Vec<Prior<'_>> = denoisers
                .iter()
                .map(|d| Prior {
                    denoiser: d.as_ref(),
                    beta: params.beta,
                })
                .collect();
            p4ip_multi_run(y, &op, &priors, params)?
        }
        Method::Anscombe => {
            let cfg = VstPipelineConfig {
                denoiser: denoisers[0].clone(),
                inverse,
            };
            let image = vst_restore(y, &cfg)?;
            return Ok(Restoration {
                image,
                method,
                denoisers: label,
                iterations: 0,
                inner_iterations: 0,
                primal_residual: None,
                wall_time: started.elapsed(),
            });
        }
    };
    Ok(Restoration {
        image,
        method,
        denoisers: label,
        iterations: report.iterations,
        inner_iterations: report.inner_iterations,
        primal_residual: Some(report.primal_residual),
        wall_time: started.elapsed(),
    })
}

/// Clean image scaled to `peak`, blurred when a kernel is given, then
/// Poisson-sampled with `seed`. Returns `(scaled clean, observation)`.
pub fn degrade(
    clean: &Image,
    peak: f64,
    kernel: Option<&Kernel>,
    seed: u64,
) -> Result<(Image, Image)> {
    let scaled = scale_to_peak(clean, peak)?;
    let (w, h) = scaled.dims();
    // The FFT path can leave rounding-level negatives.
    let mean = operator_for(kernel, w, h)
        .apply(&scaled)?
        .map(|v| v.max(0.0));
    let observed = p4ip_core::imaging::poisson_sample(&mean, seed)?;
    Ok((scaled, observed))
}
