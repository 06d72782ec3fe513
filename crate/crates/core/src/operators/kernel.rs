use crate::error::{Error, Result};
use crate::imaging::Image;

/// Normalized, nonnegative blur stencil with odd side lengths, centred on
/// its middle tap.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Normalizes `weights` (row-major, `width x height`) to unit sum.
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "kernel sides must be odd, got {width}x{height}"
            )));
        }
        if weights.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} weights for a {width}x{height} kernel",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "kernel weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("kernel has zero mass".into()));
        }
        Ok(Self {
            width,
            height,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Builds an odd square kernel by evaluating `f(dx, dy)` on the centred
    /// integer grid.
    fn from_offsets(side: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if side.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "kernel size must be odd, got {side}"
            )));
        }
        let r = (side / 2) as isize;
        let mut weights = Vec::with_capacity(side * side);
        for dy in -r..=r {
            for dx in -r..=r {
                weights.push(f(dx as f64, dy as f64));
            }
        }
        Self::new(side, side, weights)
    }

    /// Sampled isotropic Gaussian, `exp(-(dx² + dy²) / 2σ²)`.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Gaussian sigma must be positive, got {sigma}"
            )));
        }
        let denom = 2.0 * sigma * sigma;
        Self::from_offsets(size, |dx, dy| (-(dx * dx + dy * dy) / denom).exp())
    }

    /// `1 / (1 + dx² + dy²)` on the 15x15 grid `-7..=7`.
    pub fn cauchy() -> Self {
        Self::from_offsets(15, |dx, dy| 1.0 / (1.0 + dx * dx + dy * dy)).unwrap()
    }

    /// Box filter, every weight `1 / size²`.
    pub fn uniform(size: usize) -> Result<Self> {
        Self::from_offsets(size, |_, _| 1.0)
    }

    /// Custom kernel from a raster; values are normalized to unit sum.
    pub fn from_image(img: &Image) -> Result<Self> {
        Self::new(img.width(), img.height(), img.data().to_vec())
    }

    /// Resolves the command-line names `gaussian25`, `cauchy15`, `uniform9`.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "gaussian25" => Some(Self::gaussian(25, 1.6).unwrap()),
            "cauchy15" => Some(Self::cauchy()),
            "uniform9" => Some(Self::uniform(9).unwrap()),
            _ => None,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn radius_x(&self) -> isize {
        (self.width / 2) as isize
    }

    pub fn radius_y(&self) -> isize {
        (self.height / 2) as isize
    }

    /// Weight at centred offset `(dx, dy)`.
    #[inline]
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let x = (dx + self.radius_x()) as usize;
        let y = (dy + self.radius_y()) as usize;
        self.weights[y * self.width + x]
    }

    /// Iterates `(dx, dy, weight)` over all taps.
    pub fn taps(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let (rx, ry) = (self.radius_x(), self.radius_y());
        self.weights.iter().enumerate().map(move |(i, &w)| {
            let dx = (i % self.width) as isize - rx;
            let dy = (i / self.width) as isize - ry;
            (dx, dy, w)
        })
    }

    /// Kernel rotated by 180 degrees.
    pub fn flipped(&self) -> Kernel {
        let mut weights = self.weights.clone();
        weights.reverse();
        Kernel {
            width: self.width,
            height: self.height,
            weights,
        }
    }

    pub fn to_image(&self) -> Image {
        Image::new(self.width, self.height, self.weights.clone()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_symmetric(k: &Kernel) {
        let r = k.radius_x();
        for dy in -r..=r {
            for dx in -r..=r {
                let w = k.at(dx, dy);
                assert_eq!(w, k.at(-dx, dy));
                assert_eq!(w, k.at(dx, -dy));
                assert_eq!(w, k.at(dy, dx), "90-degree rotation");
            }
        }
    }

    #[test]
    fn gaussian_properties() {
        let k = Kernel::gaussian(25, 1.6).unwrap();
        assert_eq!((k.width(), k.height()), (25, 25));
        assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let centre = k.at(0, 0);
        assert!(k.weights().iter().all(|&w| w <= centre));
        assert_symmetric(&k);
    }

    #[test]
    fn gaussian_rejects_even_size() {
        assert!(Kernel::gaussian(24, 1.6).is_err());
        assert!(Kernel::gaussian(25, 0.0).is_err());
    }

    #[test]
    fn cauchy_centre_to_corner_ratio() {
        // 1/(1+0+0) against 1/(1+49+49).
        let k = Kernel::cauchy();
        assert_eq!(k.width(), 15);
        let ratio = k.at(0, 0) / k.at(7, 7);
        assert!((ratio - 99.0).abs() < 1e-9, "{ratio}");
        assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_symmetric(&k);
    }

    #[test]
    fn uniform_weights() {
        let k = Kernel::uniform(9).unwrap();
        assert!(k.weights().iter().all(|&w| (w - 1.0 / 81.0).abs() < 1e-17));
        assert!(Kernel::uniform(8).is_err());
    }

    #[test]
    fn custom_kernel_normalized_and_validated() {
        let k = Kernel::new(3, 1, vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(k.weights(), &[0.25, 0.5, 0.25]);
        assert!(Kernel::new(2, 1, vec![1.0, 1.0]).is_err());
        assert!(Kernel::new(1, 1, vec![-1.0]).is_err());
        assert!(Kernel::new(1, 1, vec![0.0]).is_err());
    }

    #[test]
    fn names_resolve() {
        for name in ["gaussian25", "cauchy15", "uniform9"] {
            assert!(Kernel::by_name(name).is_some());
        }
        assert!(Kernel::by_name("box3").is_none());
    }

    #[test]
    fn flip_reverses_offsets() {
        let k = Kernel::new(3, 3, (1..=9).map(f64::from).collect()).unwrap();
        let f = k.flipped();
        for (dx, dy, w) in k.taps() {
            assert_eq!(f.at(-dx, -dy), w);
        }
    }
}
