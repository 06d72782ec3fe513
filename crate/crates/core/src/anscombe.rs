//! Anscombe variance-stabilizing transform and the classic
//! transform → Gaussian denoise → inverse baseline.

use std::sync::Arc;

use crate::denoisers::{denoise_checked, Denoiser};
use crate::error::{Error, Result};
use crate::imaging::Image;

/// `2√(3/8)`, the transform of a zero count.
pub fn anscombe_zero() -> f64 {
    2.0 * (3.0f64 / 8.0).sqrt()
}

#[inline]
pub fn forward_scalar(y: f64) -> f64 {
    2.0 * (y + 0.375).sqrt()
}

#[inline]
pub fn inverse_algebraic_scalar(t: f64) -> f64 {
    0.25 * t * t - 0.375
}

/// Closed-form approximation of the exact unbiased inverse. Inputs below
/// `2√(3/8)` are clamped to it first.
#[inline]
pub fn inverse_unbiased_scalar(t: f64) -> f64 {
    let t = t.max(anscombe_zero());
    let r = 1.5f64.sqrt();
    let inv = 1.0 / t;
    0.25 * t * t - 0.125 + 0.25 * r * inv - 1.375 * inv * inv + 0.625 * r * inv * inv * inv
}

pub fn anscombe_forward(img: &Image) -> Result<Image> {
    if !img.is_nonnegative() {
        return Err(Error::InvalidImage(
            "Anscombe transform needs nonnegative counts".into(),
        ));
    }
    Ok(img.map(forward_scalar))
}

pub fn anscombe_inverse_algebraic(img: &Image) -> Image {
    img.map(inverse_algebraic_scalar)
}

pub fn anscombe_inverse_unbiased(img: &Image) -> Image {
    img.map(inverse_unbiased_scalar)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InverseKind {
    Algebraic,
    #[default]
    Unbiased,
}

impl std::str::FromStr for InverseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(Self::Algebraic),
            "unbiased" => Ok(Self::Unbiased),
            other => Err(Error::InvalidParameter(format!(
                "unknown inverse `{other}` (expected algebraic or unbiased)"
            ))),
        }
    }
}

#[derive(Clone)]
pub struct VstPipelineConfig {
    pub denoiser: Arc<dyn Denoiser>,
    pub inverse: InverseKind,
}

/// Forward transform, denoise at unit noise level, inverse transform.
/// The result is clipped at zero.
pub fn vst_restore(noisy: &Image, cfg: &VstPipelineConfig) -> Result<Image> {
    let stabilized = anscombe_forward(noisy)?;
    let denoised = denoise_checked(cfg.denoiser.as_ref(), &stabilized, 1.0)?;
    let restored = match cfg.inverse {
        InverseKind::Algebraic => anscombe_inverse_algebraic(&denoised),
        InverseKind::Unbiased => anscombe_inverse_unbiased(&denoised),
    };
    Ok(restored.map(|v| v.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoisers::IdentityDenoiser;
    use approx::assert_abs_diff_eq;

    #[test]
    fn forward_values() {
        assert_abs_diff_eq!(forward_scalar(0.0), 1.224744871, epsilon = 1e-9);
        assert_abs_diff_eq!(forward_scalar(1.0), 2.345207880, epsilon = 1e-9);
        assert!(anscombe_forward(&Image::new(1, 1, vec![-1.0]).unwrap()).is_err());
    }

    #[test]
    fn algebraic_inverse_values() {
        assert_abs_diff_eq!(
            inverse_algebraic_scalar(anscombe_zero()),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(inverse_algebraic_scalar(2.0), 0.625);
        for y in [0.0, 0.3, 1.0, 17.0, 1234.5] {
            let back = inverse_algebraic_scalar(forward_scalar(y));
            assert!((back - y).abs() <= 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn unbiased_inverse_clamps() {
        let at_clamp = inverse_unbiased_scalar(anscombe_zero());
        assert_eq!(inverse_unbiased_scalar(0.5), at_clamp);
        assert_eq!(inverse_unbiased_scalar(-3.0), at_clamp);
    }

    #[test]
    fn unbiased_minus_algebraic_tends_to_quarter() {
        // 3/8 - 1/8 plus a 1/t tail, about 3e-4 at t = 1000.
        let t = 1e3;
        let diff = inverse_unbiased_scalar(t) - inverse_algebraic_scalar(t);
        assert_abs_diff_eq!(diff, 0.25, epsilon = 1e-3);
        let far = 1e7;
        assert_abs_diff_eq!(
            inverse_unbiased_scalar(far) - inverse_algebraic_scalar(far),
            0.25,
            epsilon = 1e-6
        );
    }

    #[test]
    fn identity_pipeline_round_trips() {
        let cfg = VstPipelineConfig {
            denoiser: Arc::new(IdentityDenoiser),
            inverse: InverseKind::Algebraic,
        };
        let noisy = Image::from_fn(8, 8, |x, y| ((x * 5 + y * 3) % 7) as f64);
        let out = vst_restore(&noisy, &cfg).unwrap();
        for (a, b) in out.data().iter().zip(noisy.data()) {
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
        let zeros = Image::zeros(8, 8);
        assert_eq!(vst_restore(&zeros, &cfg).unwrap(), zeros);
    }

    #[test]
    fn zero_image_with_unbiased_inverse_stays_near_zero() {
        let cfg = VstPipelineConfig {
            denoiser: Arc::new(crate::denoisers::NlmDenoiser::default()),
            inverse: InverseKind::Unbiased,
        };
        let out = vst_restore(&Image::zeros(16, 16), &cfg).unwrap();
        assert!(
            out.data().iter().all(|&v| (0.0..1e-12).contains(&v)),
            "{}",
            out.max()
        );
    }

    #[test]
    fn inverse_kind_parsing() {
        assert_eq!(
            "algebraic".parse::<InverseKind>().unwrap(),
            InverseKind::Algebraic
        );
        assert_eq!(
            "unbiased".parse::<InverseKind>().unwrap(),
            InverseKind::Unbiased
        );
        assert!("exact".parse::<InverseKind>().is_err());
    }
}
