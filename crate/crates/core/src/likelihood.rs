//! Poisson negative log-likelihood `l(x) = Σ (Hx)_i - y_i ln (Hx)_i`.
//!
//! The constant `Σ ln Γ(y_i + 1)` is dropped. Below a knee `ε` the
//! logarithm is replaced by the quadratic that matches it in value, slope
//! and curvature at `ε`, so value and gradient stay finite for every real
//! `x` while the function remains C² and convex in each `(Hx)_i`.

use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::operators::LinearOperator;

/// `ln t` for `t ≥ ε`, else `a t² + b t + c` with
/// `a = -1/(2ε²)`, `b = 2/ε`, `c = ln ε - 3/2`.
#[inline]
pub fn safe_log(t: f64, epsilon: f64) -> f64 {
    if t >= epsilon {
        t.ln()
    } else {
        let r = t / epsilon;
        // a t² + b t + c written in terms of r = t / ε.
        -0.5 * r * r + 2.0 * r + epsilon.ln() - 1.5
    }
}

/// Derivative of [`safe_log`].
#[inline]
pub fn safe_log_d1(t: f64, epsilon: f64) -> f64 {
    if t >= epsilon {
        1.0 / t
    } else {
        (2.0 - t / epsilon) / epsilon
    }
}

#[derive(Clone, Debug)]
pub struct PoissonNll {
    y: Image,
    op: LinearOperator,
    epsilon: f64,
}

impl PoissonNll {
    /// Uses the default knee `ε = 1e-8 · (mean(y) + 1)`.
    pub fn new(y: Image, op: LinearOperator) -> Result<Self> {
        let epsilon = default_epsilon(&y);
        Self::with_epsilon(y, op, epsilon)
    }

    pub fn with_epsilon(y: Image, op: LinearOperator, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "surrogate knee must be positive, got {epsilon}"
            )));
        }
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
        Ok(Self { y, op, epsilon })
    }

    pub fn observed(&self) -> &Image {
        &self.y
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.op
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn check(&self, x: &Image) -> Result<()> {
        self.y.check_same_dims(x)
    }

    pub fn value(&self, x: &Image) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_slice(x.data()))
    }

    /// `Hᵀ1 - Hᵀ(y · safe_log'(Hx))`.
    pub fn gradient(&self, x: &Image) -> Result<Image> {
        self.check(x)?;
        let (_, g) = self.value_and_gradient_slice(x.data());
        Ok(Image::new(self.y.width(), self.y.height(), g).expect("finite by construction"))
    }

    pub(crate) fn value_slice(&self, x: &[f64]) -> f64 {
        let hx = self.op.apply_slice(x);
        hx.iter()
            .zip(self.y.data())
            .map(|(&t, &y)| self.term(t, y))
            .sum()
    }

    pub(crate) fn value_and_gradient_slice(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let hx = self.op.apply_slice(x);
        let mut value = 0.0;
        let weights: Vec<f64> = hx
            .iter()
            .zip(self.y.data())
            .map(|(&t, &y)| {
                value += self.term(t, y);
                if y == 0.0 {
                    1.0
                } else {
                    1.0 - y * safe_log_d1(t, self.epsilon)
                }
            })
            .collect();
        (value, self.op.adjoint_slice(&weights))
    }

    #[inline]
    fn term(&self, t: f64, y: f64) -> f64 {
        if y == 0.0 {
            t
        } else {
            t - y * safe_log(t, self.epsilon)
        }
    }
}

pub fn default_epsilon(y: &Image) -> f64 {
    1e-8 * (y.mean() + 1.0)
}
