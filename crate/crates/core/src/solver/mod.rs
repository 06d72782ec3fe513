//! Plug-and-play ADMM for Poisson inverse problems.
//!
//! Each iteration solves the likelihood-plus-coupling problem for `x`,
//! denoises `x + u` at noise level `σ = √(β/λ)`, then accumulates the
//! residual `x - v` into the scaled dual `u`. `λ` grows geometrically by
//! `lambda_step` per iteration and the loop runs a fixed number of times.

mod admm;
mod xupdate;

use std::time::Duration;

pub use admm::{
    p4ip_multi_run, p4ip_multi_run_observed, p4ip_run, p4ip_run_observed, restore_with_binning,
    AdmmState, MultiPriorState, Prior, PriorState,
};
pub use xupdate::{
    anscombe_matching_offset, closed_form_scalar, transform_curve, x_update_denoise,
    x_update_general, ANSCOMBE_MATCHING_LAMBDA,
};

use crate::error::{Error, Result};
use crate::optim::LbfgsConfig;

/// Which iterate is returned as the reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputSelect {
    /// The denoiser output `v`.
    #[default]
    V,
    /// The likelihood-step iterate `x`.
    X,
}

impl std::str::FromStr for OutputSelect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v" => Ok(Self::V),
            "x" => Ok(Self::X),
            other => Err(Error::InvalidParameter(format!(
                "unknown output `{other}` (expected v or x)"
            ))),
        }
    }
}

/// Starting value of `v` (and of every `v_j` in the multi-prior loop);
/// `u` always starts at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Initialization {
    #[default]
    Zero,
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub lambda0: f64,
    /// Per-iteration multiplier on `λ`, at least 1.
    pub lambda_step: f64,
    /// Prior weight; the multi-prior loop carries one per prior instead.
    pub beta: f64,
    pub iters: usize,
    /// Peak of the clean image the presets were derived for.
    pub peak: f64,
    /// Binning factor for [`restore_with_binning`]; `None` disables it.
    pub binning: Option<usize>,
    pub output: OutputSelect,
    pub init: Initialization,
    /// Inner solver settings for non-identity operators.
    pub inner: LbfgsConfig,
    /// Knee of the log surrogate; `None` picks `1e-8 (mean(y) + 1)`.
    pub epsilon: Option<f64>,
}

impl SolverParams {
    /// Shipped denoising defaults: `λ0 = 0.5 / peak`, `β = 1`,
    /// `λ_step = 1.05`, 60 iterations.
    pub fn denoising(peak: f64) -> Self {
        Self {
            lambda0: 0.5 / peak,
            lambda_step: 1.05,
            beta: 1.0,
            iters: 60,
            peak,
            binning: None,
            output: OutputSelect::V,
            init: Initialization::Zero,
            inner: LbfgsConfig::default(),
            epsilon: None,
        }
    }

    /// Shipped deblurring defaults: `λ0 = 0.2 / peak`, `β = 1`,
    /// `λ_step = 1.03`, 44 iterations.
    pub fn deblurring(peak: f64) -> Self {
        Self {
            lambda0: 0.2 / peak,
            lambda_step: 1.03,
            iters: 44,
            ..Self::denoising(peak)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return bad("lambda0 must be positive");
        }
        if !(self.lambda_step.is_finite() && self.lambda_step >= 1.0) {
            return bad("lambda_step must be >= 1");
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if self.iters == 0 {
            return bad("iters must be >= 1");
        }
        if !(self.peak.is_finite() && self.peak > 0.0) {
            return bad("peak must be positive");
        }
        if self.binning == Some(0) {
            return bad("binning factor must be >= 1");
        }
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return bad("epsilon must be positive");
            }
        }
        if let Initialization::Constant(c) = self.init {
            if !c.is_finite() {
                return bad("initial value must be finite");
            }
        }
        self.inner.validate()?;
        Ok(())
    }

    /// `λ_k = λ0 · λ_step^k` for `k = 0..iters`, accumulated by repeated
    /// multiplication exactly as the loop does.
    pub fn lambda_schedule(&self) -> Vec<f64> {
        let mut lambda = self.lambda0;
        (0..self.iters)
            .map(|_| {
                let current = lambda;
                lambda *= self.lambda_step;
                current
            })
            .collect()
    }

    /// Denoiser noise levels `σ_k = √(β / λ_k)`.
    pub fn sigma_schedule(&self) -> Vec<f64> {
        self.lambda_schedule()
            .into_iter()
            .map(|l| (self.beta / l).sqrt())
            .collect()
    }

    /// Parameters for the image obtained by summing `factor x factor`
    /// blocks: intensities grow by `factor²`, so the peak does too and
    /// `λ0` shrinks by the same amount, which keeps `σ` proportional to
    /// the square root of the intensity scale.
    pub fn rescaled_for_binning(&self, factor: usize) -> Self {
        let gain = (factor * factor) as f64;
        Self {
            lambda0: self.lambda0 / gain,
            peak: self.peak * gain,
            init: match self.init {
                Initialization::Constant(c) => Initialization::Constant(c * gain),
                Initialization::Zero => Initialization::Zero,
            },
            binning: None,
            ..self.clone()
        }
    }
}

/// Bookkeeping for one restoration run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub method: String,
    pub denoisers: Vec<String>,
    pub iterations: usize,
    /// `λ_k` used at each iteration.
    pub lambdas: Vec<f64>,
    /// `σ_k` handed to the first (or only) denoiser at each iteration.
    pub sigmas: Vec<f64>,
    /// Total inner L-BFGS iterations; zero on the closed-form path.
    pub inner_iterations: usize,
    /// `‖x - v‖₂` after the last iteration (first prior when several).
    pub primal_residual: f64,
    pub binning: Option<usize>,
    pub wall_time: Duration,
    pub params: SolverParams,
}
