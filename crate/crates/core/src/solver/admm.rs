use std::time::Instant;

use rayon::prelude::*;

use super::xupdate::{closed_form_image, general_step};
use super::{Initialization, OutputSelect, RunReport, SolverParams};
use crate::denoisers::{denoise_checked, Denoiser};
use crate::error::{Error, Result};
use crate::imaging::{bin_down, bin_up, Image};
use crate::likelihood::{default_epsilon, PoissonNll};
use crate::operators::LinearOperator;

/// Iterates of the single-prior loop after an iteration completes.
#[derive(Clone, Debug)]
pub struct AdmmState {
    pub x: Image,
    pub v: Image,
    pub u: Image,
    /// Number of completed iterations.
    pub k: usize,
    /// `λ` used during iteration `k - 1`.
    pub lambda: f64,
}

/// One slot of the multi-prior loop: a denoiser and its prior weight.
#[derive(Clone, Copy)]
pub struct Prior<'a> {
    pub denoiser: &'a dyn Denoiser,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct PriorState {
    pub v: Image,
    pub u: Image,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct MultiPriorState {
    pub x: Image,
    pub priors: Vec<PriorState>,
    pub k: usize,
    pub lambda: f64,
}

fn l2_distance(a: &Image, b: &Image) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

fn check_inputs(y: &Image, op: &LinearOperator, params: &SolverParams) -> Result<()> {
    params.validate()?;
    if !y.is_nonnegative() {
        return Err(Error::InvalidImage(
            "observed counts must be nonnegative".into(),
        ));
    }
    if y.dims() != op.dims() {
        return Err(Error::DimensionMismatch {
            expected: op.dims(),
            found: y.dims(),
        });
    }
    Ok(())
}

fn initial_v(y: &Image, params: &SolverParams) -> Image {
    match params.init {
        Initialization::Zero => Image::zeros(y.width(), y.height()),
        Initialization::Constant(c) => Image::filled(y.width(), y.height(), c),
    }
}

/// Shared x-step: closed form for the identity, L-BFGS otherwise.
struct XStepper<'a> {
    y: &'a Image,
    nll: Option<PoissonNll>,
    params: &'a SolverParams,
    inner_iterations: usize,
}

impl<'a> XStepper<'a> {
    fn new(y: &'a Image, op: &LinearOperator, params: &'a SolverParams) -> Result<Self> {
        let nll = if op.is_identity() {
            None
        } else {
            let eps = params.epsilon.unwrap_or_else(|| default_epsilon(y));
            Some(PoissonNll::with_epsilon(y.clone(), op.clone(), eps)?)
        };
        Ok(Self {
            y,
            nll,
            params,
            inner_iterations: 0,
        })
    }

    fn step(&mut self, target: &Image, lambda: f64, warm: &Image) -> Result<Image> {
        match &self.nll {
            None => closed_form_image(self.y, target, lambda),
            Some(nll) => {
                let (x, diag) = general_step(nll, target, lambda, warm, &self.params.inner)?;
                self.inner_iterations += diag.iterations;
                Ok(x)
            }
        }
    }
}

fn solver_error(iteration: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Solver {
        iteration,
        source: Box::new(e),
    }
}

pub fn p4ip_run(
    y: &Image,
    op: &LinearOperator,
    denoiser: &dyn Denoiser,
    params: &SolverParams,
) -> Result<(Image, RunReport)> {
    p4ip_run_observed(y, op, denoiser, params, |_| {})
}

/// Single-prior loop; `observer` sees the state after every iteration.
///
/// Starts from `u = 0` and `v` per `params.init`. The first L-BFGS solve
/// (non-identity operators only) is warm-started at `y`, later ones at the
/// previous `x`.
pub fn p4ip_run_observed(
    y: &Image,
    op: &LinearOperator,
    denoiser: &dyn Denoiser,
    params: &SolverParams,
    mut observer: impl FnMut(&AdmmState),
) -> Result<(Image, RunReport)> {
    check_inputs(y, op, params)?;
    let started = Instant::now();
    let mut stepper = XStepper::new(y, op, params)?;
    let mut state = AdmmState {
        x: y.clone(),
        v: initial_v(y, params),
        u: Image::zeros(y.width(), y.height()),
        k: 0,
        lambda: params.lambda0,
    };
    let lambdas = params.lambda_schedule();
    let mut sigmas = Vec::with_capacity(params.iters);

    for (k, &lambda) in lambdas.iter().enumerate() {
        let target = state.v.zip_map(&state.u, |v, u| v - u)?;
        let x = stepper
            .step(&target, lambda, &state.x)
            .map_err(solver_error(k))?;
        let sigma = (params.beta / lambda).sqrt();
        let noisy = x.zip_map(&state.u, |a, b| a + b)?;
        let v = denoise_checked(denoiser, &noisy, sigma).map_err(solver_error(k))?;
        let u = noisy.zip_map(&v, |a, b| a - b)?;
        sigmas.push(sigma);
        state = AdmmState {
            x,
            v,
            u,
            k: k + 1,
            lambda,
        };
        observer(&state);
    }

    let report = RunReport {
        method: if op.is_identity() {
            "p4ip"
        } else {
            "p4ip-deblur"
        }
        .to_string(),
        denoisers: vec![denoiser.name().to_string()],
        iterations: params.iters,
        lambdas,
        sigmas,
        inner_iterations: stepper.inner_iterations,
        primal_residual: l2_distance(&state.x, &state.v),
        binning: None,
        wall_time: started.elapsed(),
        params: params.clone(),
    };
    let out = match params.output {
        OutputSelect::V => state.v,
        OutputSelect::X => state.x,
    };
    Ok((out, report))
}

pub fn p4ip_multi_run(
    y: &Image,
    op: &LinearOperator,
    priors: &[Prior<'_>],
    params: &SolverParams,
) -> Result<(Image, RunReport)> {
    p4ip_multi_run_observed(y, op, priors, params, |_| {})
}

/// Multi-prior loop with one `(v_j, u_j)` pair per denoiser.
///
/// The x-step couples to all priors at once: with `m = mean_j(v_j - u_j)`
/// it is the single-prior step at `N λ` and target `m`. Each denoiser then
/// runs on `x + u_j` at `σ_j = √(β_j / λ)`; those calls run in parallel.
/// `params.beta` is ignored in favour of the per-prior weights. The result
/// is the mean of the final `v_j` (or `x`, per `params.output`).
pub fn p4ip_multi_run_observed(
    y: &Image,
    op: &LinearOperator,
    priors: &[Prior<'_>],
    params: &SolverParams,
    mut observer: impl FnMut(&MultiPriorState),
) -> Result<(Image, RunReport)> {
    check_inputs(y, op, params)?;
    if priors.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one prior is required".into(),
        ));
    }
    if let Some(p) = priors
        .iter()
        .find(|p| !(p.beta.is_finite() && p.beta > 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "prior weight for `{}` must be positive, got {}",
            p.denoiser.name(),
            p.beta
        )));
    }
    let started = Instant::now();
    let count = priors.len() as f64;
    let mut stepper = XStepper::new(y, op, params)?;
    let mut state = MultiPriorState {
        x: y.clone(),
        priors: priors
            .iter()
            .map(|p| PriorState {
                v: initial_v(y, params),
                u: Image::zeros(y.width(), y.height()),
                beta: p.beta,
            })
            .collect(),
        k: 0,
        lambda: params.lambda0,
    };
    let lambdas = params.lambda_schedule();
    let mut sigmas = Vec::with_capacity(params.iters);

    for (k, &lambda) in lambdas.iter().enumerate() {
        let mut target = state.priors[0]
            .v
            .zip_map(&state.priors[0].u, |v, u| v - u)?;
        for p in &state.priors[1..] {
            let m = p.v.zip_map(&p.u, |v, u| v - u)?;
            target = target.zip_map(&m, |a, b| a + b)?;
        }
        let target = target.map(|t| t / count);
        let x = stepper
            .step(&target, count * lambda, &state.x)
            .map_err(solver_error(k))?;

        let updated: Vec<Result<PriorState>> = priors
            .par_iter()
            .zip(&state.priors)
            .map(|(prior, ps)| {
                let sigma = (prior.beta / lambda).sqrt();
                let noisy = x.zip_map(&ps.u, |a, b| a + b)?;
                let v = denoise_checked(prior.denoiser, &noisy, sigma)?;
                let u = noisy.zip_map(&v, |a, b| a - b)?;
                Ok(PriorState {
                    v,
                    u,
                    beta: prior.beta,
                })
            })
            .collect();
        let updated = updated
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .map_err(solver_error(k))?;
        sigmas.push((priors[0].beta / lambda).sqrt());
        state = MultiPriorState {
            x,
            priors: updated,
            k: k + 1,
            lambda,
        };
        observer(&state);
    }

    let report = RunReport {
        method: "m-p4ip".to_string(),
        denoisers: priors
            .iter()
            .map(|p| p.denoiser.name().to_string())
            .collect(),
        iterations: params.iters,
        lambdas,
        sigmas,
        inner_iterations: stepper.inner_iterations,
        primal_residual: l2_distance(&state.x, &state.priors[0].v),
        binning: None,
        wall_time: started.elapsed(),
        params: params.clone(),
    };
    let out = match params.output {
        OutputSelect::X => state.x,
        OutputSelect::V => {
            let mut acc = state.priors[0].v.clone();
            for p in &state.priors[1..] {
                acc = acc.zip_map(&p.v, |a, b| a + b)?;
            }
            acc.map(|a| a / count)
        }
    };
    Ok((out, report))
}

/// Denoising with photon-count binning: sum `factor x factor` blocks
/// (`params.binning`, default 3), restore the smaller image with
/// parameters rescaled for the `factor²` intensity gain, then interpolate
/// back to the original size. A factor of 1 is a plain [`p4ip_run`].
pub fn restore_with_binning(
    y: &Image,
    denoiser: &dyn Denoiser,
    params: &SolverParams,
) -> Result<(Image, RunReport)> {
    params.validate()?;
    let factor = params.binning.unwrap_or(3);
    let (w, h) = y.dims();
    if factor == 1 {
        let plain = SolverParams {
            binning: None,
            ..params.clone()
        };
        return p4ip_run(y, &LinearOperator::identity(w, h), denoiser, &plain);
    }
    let started = Instant::now();
    let binned = bin_down(y, factor)?;
    let op = LinearOperator::identity(binned.width(), binned.height());
    let (small, mut report) =
        p4ip_run(&binned, &op, denoiser, &params.rescaled_for_binning(factor))?;
    let out = bin_up(&small, factor, w, h)?;
    report.method = "p4ip-bin".to_string();
    report.binning = Some(factor);
    report.params = params.clone();
    report.wall_time = started.elapsed();
    Ok((out, report))
}
