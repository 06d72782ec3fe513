use rayon::prelude::*;

use super::gaussian::{reflect, GaussianFilterDenoiser};
use super::Denoiser;
use crate::error::{Error, Result};
use crate::imaging::Image;

/// Ratio between the filtering parameter and `σ · patch`.
const H_PER_SIGMA_PATCH: f64 = 0.8;

/// Pixelwise non-local means.
///
/// For a pixel `p` and candidate `q` in the search window, the patch
/// distance `d²` is the sum of squared differences over the two patches.
/// Pure noise contributes `2 · P · σ²` to it on average (`P` pixels per
/// patch), which is subtracted before weighting:
/// `w = exp(-max(d² - 2Pσ², 0) / h²)` with `h = 0.8 · σ · patch`.
/// Patches near the border read a half-sample symmetric extension.
#[derive(Clone, Copy, Debug)]
pub struct NlmDenoiser {
    patch: usize,
    window: usize,
}

impl Default for NlmDenoiser {
    fn default() -> Self {
        Self {
            patch: 5,
            window: 11,
        }
    }
}

impl NlmDenoiser {
    pub fn new(patch: usize, window: usize) -> Result<Self> {
        if patch.is_multiple_of(2) || window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "patch ({patch}) and window ({window}) must be odd"
            )));
        }
        if patch >= window {
            return Err(Error::InvalidParameter(format!(
                "patch ({patch}) must be smaller than window ({window})"
            )));
        }
        Ok(Self { patch, window })
    }

    pub fn filtering_parameter(&self, sigma: f64) -> f64 {
        H_PER_SIGMA_PATCH * sigma * self.patch as f64
    }
}

impl Denoiser for NlmDenoiser {
    fn name(&self) -> &str {
        "nlm"
    }

    fn denoise(&self, img: &Image, sigma: f64) -> Result<Image> {
        let h = self.filtering_parameter(sigma);
        if h <= 0.0 {
            return Ok(img.clone());
        }
        if img.width() < self.window || img.height() < self.window {
            return GaussianFilterDenoiser::default().denoise(img, sigma);
        }
        Ok(self.filter(img, sigma, h))
    }
}

impl NlmDenoiser {
    fn filter(&self, img: &Image, sigma: f64, h: f64) -> Image {
        let (w, h_img) = img.dims();
        let pr = (self.patch / 2) as isize;
        let sr = (self.window / 2) as isize;
        let pad = pr + sr;
        let pw = w + 2 * pad as usize;
        let ph = h_img + 2 * pad as usize;
        let padded: Vec<f64> = (0..ph)
            .flat_map(|y| {
                let sy = reflect(y as isize - pad, h_img);
                (0..pw).map(move |x| (reflect(x as isize - pad, w), sy))
            })
            .map(|(x, y)| img.get(x, y))
            .collect();
        let at = |x: isize, y: isize| padded[(y + pad) as usize * pw + (x + pad) as usize];

        let patch_len = (self.patch * self.patch) as f64;
        let bias = 2.0 * patch_len * sigma * sigma;
        let inv_h2 = 1.0 / (h * h);
        let offsets: Vec<(isize, isize)> = (-sr..=sr)
            .flat_map(|oy| (-sr..=sr).map(move |ox| (ox, oy)))
            .collect();

        let rows: Vec<Vec<f64>> = (0..h_img as isize)
            .into_par_iter()
            .map(|y| {
                let mut num = vec![0.0; w];
                let mut den = vec![0.0; w];
                // Column sums of squared differences over the patch height,
                // for every x the sliding patch window touches.
                let mut col = vec![0.0; w + 2 * pr as usize];
                for &(ox, oy) in &offsets {
                    for (i, c) in col.iter_mut().enumerate() {
                        let x = i as isize - pr;
                        let mut s = 0.0;
                        for dy in -pr..=pr {
                            let d = at(x, y + dy) - at(x + ox, y + dy + oy);
                            s += d * d;
                        }
                        *c = s;
                    }
                    let mut dist: f64 = col[..self.patch].iter().sum();
                    for x in 0..w {
                        if x > 0 {
                            dist += col[x + 2 * pr as usize] - col[x - 1];
                        }
                        let weight = if ox == 0 && oy == 0 {
                            1.0
                        } else {
                            (-(dist - bias).max(0.0) * inv_h2).exp()
                        };
                        num[x] += weight * at(x as isize + ox, y + oy);
                        den[x] += weight;
                    }
                }
                num.iter().zip(&den).map(|(n, d)| n / d).collect()
            })
            .collect();
        Image::new(w, h_img, rows.concat()).expect("weighted means of finite values")
    }
}
