use crate::error::Result;
use crate::imaging::Image;
use crate::likelihood::PoissonNll;
use crate::optim::{self, Diagnostics, LbfgsConfig, Objective};

/// `λ` at which the closed-form update reproduces the Anscombe curve.
pub const ANSCOMBE_MATCHING_LAMBDA: f64 = 0.25;

/// `v - u = 4(√(3/8) + 1)`: with `λ = 1/4` the closed-form update becomes
/// `2√(y + 3/8) + 2√(3/8)`, the Anscombe transform plus a constant.
pub fn anscombe_matching_offset() -> f64 {
    4.0 * ((3.0f64 / 8.0).sqrt() + 1.0)
}

/// Minimizer over `x ≥ 0` of `x - y ln x + (λ/2)(x - m)²`:
/// `x = [(λm - 1) + √((λm - 1)² + 4λy)] / 2λ`.
///
/// When `λm - 1 < 0` the numerator is rationalized to `2y / (√D - (λm - 1))`
/// to avoid cancellation; both forms are the same root.
#[inline]
pub fn closed_form_scalar(y: f64, m: f64, lambda: f64) -> f64 {
    let b = lambda * m - 1.0;
    let disc = b * b + 4.0 * lambda * y;
    if b >= 0.0 {
        (b + disc.sqrt()) / (2.0 * lambda)
    } else {
        2.0 * y / (disc.sqrt() - b)
    }
}

/// Per-pixel closed-form x-step for `H = I`, with target `m = v - u`.
pub fn x_update_denoise(y: &Image, v: &Image, u: &Image, lambda: f64) -> Result<Image> {
    let target = v.zip_map(u, |a, b| a - b)?;
    closed_form_image(y, &target, lambda)
}

pub(crate) fn closed_form_image(y: &Image, target: &Image, lambda: f64) -> Result<Image> {
    y.zip_map(target, |yi, mi| closed_form_scalar(yi, mi, lambda))
}

/// Evaluates the closed-form update on a grid of observed counts.
pub fn transform_curve(lambda: f64, v_minus_u: f64, y_grid: &[f64]) -> Vec<f64> {
    y_grid
        .iter()
        .map(|&y| closed_form_scalar(y, v_minus_u, lambda))
        .collect()
}

struct XStep<'a> {
    nll: &'a PoissonNll,
    target: &'a [f64],
    lambda: f64,
}

impl Objective for XStep<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let coupling: f64 = x
            .iter()
            .zip(self.target)
            .map(|(a, m)| (a - m) * (a - m))
            .sum();
        self.nll.value_slice(x) + 0.5 * self.lambda * coupling
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (value, mut grad) = self.nll.value_and_gradient_slice(x);
        let mut coupling = 0.0;
        for ((g, a), m) in grad.iter_mut().zip(x).zip(self.target) {
            let d = a - m;
            coupling += d * d;
            *g += self.lambda * d;
        }
        (value + 0.5 * self.lambda * coupling, grad)
    }
}

/// x-step for a general operator: minimizes
/// `1ᵀHx - yᵀ ln(Hx) + (λ/2)‖x - (v - u)‖²` by L-BFGS from `x_warm`, then
/// projects onto `x ≥ 0`.
///
/// Zero-count pixels carry no log barrier, so the unconstrained minimizer
/// can dip below zero there; the projection keeps the iterate a valid
/// intensity and coincides with the constrained minimizer when `H = I`.
pub fn x_update_general(
    nll: &PoissonNll,
    v: &Image,
    u: &Image,
    lambda: f64,
    x_warm: &Image,
    cfg: &LbfgsConfig,
) -> Result<(Image, Diagnostics)> {
    let target = v.zip_map(u, |a, b| a - b)?;
    general_step(nll, &target, lambda, x_warm, cfg)
}

pub(crate) fn general_step(
    nll: &PoissonNll,
    target: &Image,
    lambda: f64,
    x_warm: &Image,
    cfg: &LbfgsConfig,
) -> Result<(Image, Diagnostics)> {
    nll.observed().check_same_dims(target)?;
    nll.observed().check_same_dims(x_warm)?;
    let objective = XStep {
        nll,
        target: target.data(),
        lambda,
    };
    let (x, diag) = optim::minimize(&objective, x_warm.data().to_vec(), cfg)?;
    let x = x.into_iter().map(|v| v.max(0.0)).collect();
    Ok((
        Image::new(target.width(), target.height(), x).expect("optimizer checks finiteness"),
        diag,
    ))
}
