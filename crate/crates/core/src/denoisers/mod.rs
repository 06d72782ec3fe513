//! Gaussian denoisers plugged into the restoration loop.
//!
//! A [`Denoiser`] receives an image and the standard deviation of the
//! additive white Gaussian noise it should remove, expressed in the same
//! intensity units as the image. The prior it embodies is never written
//! down; the solver only ever calls `denoise`.

mod external;
mod gaussian;
mod nlm;
mod tikhonov;

use std::path::Path;
use std::sync::Arc;

pub use external::{ExternalDenoiser, ExternalDenoiserSpec};
pub use gaussian::GaussianFilterDenoiser;
pub use nlm::NlmDenoiser;
pub use tikhonov::TikhonovProxDenoiser;

use crate::error::{Error, Result};
use crate::imaging::Image;

pub trait Denoiser: Send + Sync {
    fn name(&self) -> &str;

    /// Removes Gaussian noise of standard deviation `sigma` from `img`.
    fn denoise(&self, img: &Image, sigma: f64) -> Result<Image>;
}

impl<D: Denoiser + ?Sized> Denoiser for Arc<D> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn denoise(&self, img: &Image, sigma: f64) -> Result<Image> {
        (**self).denoise(img, sigma)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for Box<D> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn denoise(&self, img: &Image, sigma: f64) -> Result<Image> {
        (**self).denoise(img, sigma)
    }
}

/// Calls `denoiser` and enforces the output contract: same dimensions,
/// finite values.
pub fn denoise_checked(denoiser: &dyn Denoiser, img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "denoiser sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    let out = denoiser.denoise(img, sigma)?;
    if out.dims() != img.dims() {
        return Err(Error::Denoiser {
            name: denoiser.name().to_string(),
            reason: format!(
                "returned {}x{} for a {}x{} input",
                out.width(),
                out.height(),
                img.width(),
                img.height()
            ),
        });
    }
    if !out.all_finite() {
        return Err(Error::Denoiser {
            name: denoiser.name().to_string(),
            reason: "returned non-finite values".into(),
        });
    }
    Ok(out)
}

/// Returns its input unchanged. Useful for pipeline checks.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityDenoiser;

impl Denoiser for IdentityDenoiser {
    fn name(&self) -> &str {
        "identity"
    }

    fn denoise(&self, img: &Image, _sigma: f64) -> Result<Image> {
        Ok(img.clone())
    }
}

/// Resolves a command-line denoiser selection:
/// `gauss`, `nlm`, `tikhonov`, `identity`, or `ext:<spec-file>`.
pub fn from_selection(selection: &str) -> Result<Arc<dyn Denoiser>> {
    Ok(match selection {
        "gauss" => Arc::new(GaussianFilterDenoiser::default()),
        "nlm" => Arc::new(NlmDenoiser::default()),
        "tikhonov" => Arc::new(TikhonovProxDenoiser::default()),
        "identity" => Arc::new(IdentityDenoiser),
        other => match other.strip_prefix("ext:") {
            Some(path) => {
                let spec = ExternalDenoiserSpec::load(Path::new(path))?;
                Arc::new(ExternalDenoiser::new(spec)?)
            }
            None => {
                return Err(Error::InvalidParameter(format!(
                    "unknown denoiser `{other}` (expected gauss, nlm, tikhonov, identity or ext:<spec-file>)"
                )))
            }
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Shrinker;

    impl Denoiser for Shrinker {
        fn name(&self) -> &str {
            "shrinker"
        }
        fn denoise(&self, img: &Image, _sigma: f64) -> Result<Image> {
            Ok(Image::zeros(1, 1.max(img.height() / 2)))
        }
    }

    #[test]
    fn contract_violation_is_reported() {
        let err = denoise_checked(&Shrinker, &Image::zeros(4, 4), 1.0).unwrap_err();
        assert!(matches!(err, Error::Denoiser { .. }), "{err}");
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(denoise_checked(&IdentityDenoiser, &Image::zeros(2, 2), -1.0).is_err());
    }

    #[test]
    fn builtin_constants_preserved() {
        let img = Image::filled(24, 20, 3.25);
        for name in ["gauss", "nlm", "tikhonov", "identity"] {
            let d = from_selection(name).unwrap();
            let out = denoise_checked(d.as_ref(), &img, 0.0).unwrap();
            assert!(out.data().iter().all(|v| (v - 3.25).abs() < 1e-9), "{name}");
        }
        for name in ["gauss", "nlm", "identity"] {
            let d = from_selection(name).unwrap();
            for sigma in [0.1, 1.0, 5.0] {
                let out = denoise_checked(d.as_ref(), &img, sigma).unwrap();
                assert!(
                    out.data().iter().all(|v| (v - 3.25).abs() < 1e-9),
                    "{name} {sigma}"
                );
            }
        }
    }

    #[test]
    fn builtins_are_deterministic() {
        let img = Image::from_fn(24, 24, |x, y| ((x * 31 + y * 17) % 13) as f64 * 0.3);
        for name in ["gauss", "nlm", "tikhonov"] {
            let d = from_selection(name).unwrap();
            let a = d.denoise(&img, 0.7).unwrap();
            let b = d.denoise(&img, 0.7).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn unknown_selection() {
        assert!(from_selection("bm3d").is_err());
        assert!(from_selection("ext:/nonexistent/spec.ini").is_err());
    }
}
