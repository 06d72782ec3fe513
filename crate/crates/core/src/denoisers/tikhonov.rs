use super::Denoiser;
use crate::error::{Error, Result};
use crate::imaging::Image;

/// Proximal operator of the quadratic prior `(weight / 2) ‖v‖²`.
///
/// `denoise(z, σ)` solves `min_v ‖z - v‖² / (2σ²) + (weight / 2) ‖v‖²`,
/// i.e. `v = z / (1 + σ² · weight)`. Because its prior is explicit, the
/// whole restoration problem it induces can be solved independently, which
/// makes it the reference denoiser for solver tests.
#[derive(Clone, Copy, Debug)]
pub struct TikhonovProxDenoiser {
    weight: f64,
}

impl Default for TikhonovProxDenoiser {
    fn default() -> Self {
        Self { weight: 1.0 }
    }
}

impl TikhonovProxDenoiser {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Tikhonov weight must be positive, got {weight}"
            )));
        }
        Ok(Self { weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl Denoiser for TikhonovProxDenoiser {
    fn name(&self) -> &str {
        "tikhonov"
    }

    fn denoise(&self, img: &Image, sigma: f64) -> Result<Image> {
        let shrink = 1.0 + sigma * sigma * self.weight;
        Ok(img.map(|z| z / shrink))
    }
}
