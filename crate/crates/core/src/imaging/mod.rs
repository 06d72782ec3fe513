//! Single-channel real-valued rasters and the pixel-level operations the
//! restoration pipeline needs: file I/O, peak scaling, Poisson sampling,
//! PSNR and photon-count binning.

mod binning;
mod io;
mod metrics;
mod poisson;

pub use binning::{bin_down, bin_up};
pub use io::{load_pgm, load_raster, parse_pgm, save_pgm, save_raster, RASTER_MAGIC};
pub use metrics::{mse, psnr};
pub use poisson::{poisson_sample, sample_poisson_scalar};

use crate::error::{Error, Result};

/// Row-major single-channel raster of `f64` values.
///
/// Every value is finite. Observed counts and clean intensities are
/// additionally nonnegative, but the same type also carries ADMM dual
/// variables, which may go negative; operations that require
/// nonnegativity check it with [`Image::is_nonnegative`].
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "degenerate dimensions {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} values for a {width}x{height} raster",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite value {} at index {i}",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "degenerate dimensions");
        assert!(value.is_finite());
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "degenerate dimensions");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two equally sized images.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        self.check_same_dims(other)?;
        Ok(Image {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    /// Circularly shifts the image by `(dx, dy)` pixels.
    pub fn shifted(&self, dx: isize, dy: isize) -> Image {
        let (w, h) = (self.width as isize, self.height as isize);
        Image::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }

    /// Euclidean inner product of two equally sized images.
    pub fn dot(&self, other: &Image) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }
}

/// Rescales `img` linearly so that its maximum equals `peak`.
///
/// The peak is hit exactly: the maximal pixels are assigned `peak` rather
/// than `max * (peak / max)`, which can be off by an ulp.
pub fn scale_to_peak(img: &Image, peak: f64) -> Result<Image> {
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "peak must be positive and finite, got {peak}"
        )));
    }
    let max = img.max();
    if !(max > 0.0) {
        return Err(Error::InvalidImage(
            "cannot scale an image whose maximum is not positive".into(),
        ));
    }
    let factor = peak / max;
    Ok(img.map(|v| if v == max { peak } else { v * factor }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_rejects_bad_inputs() {
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(0, 2, vec![]).is_err());
        assert!(Image::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Image::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn scale_divides_by_max() {
        let img = Image::new(3, 1, vec![0.0, 127.5, 255.0]).unwrap();
        let out = scale_to_peak(&img, 1.0).unwrap();
        assert_eq!(out.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn scale_constant_image() {
        let img = Image::filled(4, 4, 10.0);
        let out = scale_to_peak(&img, 0.2).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.2));
    }

    #[test]
    fn scale_is_idempotent() {
        let img = Image::from_fn(7, 5, |x, y| ((x * 13 + y * 7) % 11) as f64 * 0.37);
        let once = scale_to_peak(&img, 4.0).unwrap();
        let twice = scale_to_peak(&once, 4.0).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.max(), 4.0);
    }

    #[test]
    fn scale_rejects_zero_image_and_bad_peak() {
        assert!(scale_to_peak(&Image::zeros(3, 3), 1.0).is_err());
        assert!(scale_to_peak(&Image::filled(3, 3, 1.0), 0.0).is_err());
        assert!(scale_to_peak(&Image::filled(3, 3, 1.0), -1.0).is_err());
    }

    #[test]
    fn shift_wraps_around() {
        let img = Image::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(img.shifted(1, 0).data(), &[3.0, 1.0, 2.0]);
        assert_eq!(img.shifted(-1, 5).data(), &[2.0, 3.0, 1.0]);
    }
}
