use super::Denoiser;
use crate::error::Result;
use crate::imaging::Image;

/// Separable Gaussian smoothing whose spatial width follows the noise level:
/// `σ_s = min(σ / 2, 3)`, support `2⌈3σ_s⌉ + 1` taps, mirrored borders.
#[derive(Clone, Copy, Debug)]
pub struct GaussianFilterDenoiser {
    pub max_spatial_sigma: f64,
}

impl Default for GaussianFilterDenoiser {
    fn default() -> Self {
        Self {
            max_spatial_sigma: 3.0,
        }
    }
}

impl GaussianFilterDenoiser {
    pub fn spatial_sigma(&self, sigma: f64) -> f64 {
        (sigma / 2.0).min(self.max_spatial_sigma)
    }
}

impl Denoiser for GaussianFilterDenoiser {
    fn name(&self) -> &str {
        "gauss"
    }

    fn denoise(&self, img: &Image, sigma: f64) -> Result<Image> {
        let s = self.spatial_sigma(sigma);
        if s <= 0.0 {
            return Ok(img.clone());
        }
        let radius = (3.0 * s).ceil() as isize;
        let mut taps: Vec<f64> = (-radius..=radius)
            .map(|d| (-((d * d) as f64) / (2.0 * s * s)).exp())
            .collect();
        let total: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= total);
        Ok(separable_filter(img, &taps))
    }
}

/// Half-sample symmetric reflection of `i` into `0..n`.
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

fn separable_filter(img: &Image, taps: &[f64]) -> Image {
    let r = (taps.len() / 2) as isize;
    let (w, h) = img.dims();
    let horizontal = Image::from_fn(w, h, |x, y| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * img.get(reflect(x as isize + k as isize - r, w), y))
            .sum()
    });
    Image::from_fn(w, h, |x, y| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * horizontal.get(x, reflect(y as isize + k as isize - r, h)))
            .sum()
    })
}
