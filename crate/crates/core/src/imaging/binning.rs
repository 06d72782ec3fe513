//! Photon-count binning: sum `factor x factor` blocks down, interpolate back up.

use super::Image;
use crate::error::{Error, Result};

/// Sums non-overlapping `factor x factor` blocks. Rows and columns that do
/// not fill a whole block are cropped.
pub fn bin_down(img: &Image, factor: usize) -> Result<Image> {
    if factor == 0 {
        return Err(Error::InvalidParameter(
            "binning factor must be >= 1".into(),
        ));
    }
    if factor > img.width() || factor > img.height() {
        return Err(Error::InvalidParameter(format!(
            "binning factor {factor} exceeds image dimensions {}x{}",
            img.width(),
            img.height()
        )));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width() / factor, img.height() / factor);
    Ok(Image::from_fn(w, h, |bx, by| {
        let mut sum = 0.0;
        for y in by * factor..(by + 1) * factor {
            for x in bx * factor..(bx + 1) * factor {
                sum += img.get(x, y);
            }
        }
        sum
    }))
}

/// Bilinear upsampling to `out_width x out_height` followed by division by
/// `factor^2`, undoing the intensity gain of [`bin_down`].
///
/// Output pixel centres map to input coordinates `(i + 0.5) / factor - 0.5`,
/// clamped to the input grid, so cropped margins repeat the edge values.
pub fn bin_up(img: &Image, factor: usize, out_width: usize, out_height: usize) -> Result<Image> {
    if factor == 0 {
        return Err(Error::InvalidParameter(
            "binning factor must be >= 1".into(),
        ));
    }
    if out_width < img.width() || out_height < img.height() {
        return Err(Error::InvalidParameter(format!(
            "target {out_width}x{out_height} is smaller than input {}x{}",
            img.width(),
            img.height()
        )));
    }
    let gain = (factor * factor) as f64;
    let f = factor as f64;
    let axis = |i: usize, n: usize| -> (usize, usize, f64) {
        let pos = ((i as f64 + 0.5) / f - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        (lo, hi, pos - lo as f64)
    };
    Ok(Image::from_fn(out_width, out_height, |x, y| {
        let (x0, x1, tx) = axis(x, img.width());
        let (y0, y1, ty) = axis(y, img.height());
        let top = img.get(x0, y0) * (1.0 - tx) + img.get(x1, y0) * tx;
        let bottom = img.get(x0, y1) * (1.0 - tx) + img.get(x1, y1) * tx;
        (top * (1.0 - ty) + bottom * ty) / gain
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_of_ones_sums_to_nine() {
        let out = bin_down(&Image::filled(3, 3, 1.0), 3).unwrap();
        assert_eq!(out.dims(), (1, 1));
        assert_eq!(out.data(), &[9.0]);
    }

    #[test]
    fn factor_one_is_identity() {
        let img = Image::from_fn(5, 4, |x, y| (x * 7 + y) as f64 * 0.1);
        assert_eq!(bin_down(&img, 1).unwrap(), img);
        assert_eq!(bin_up(&img, 1, 5, 4).unwrap(), img);
    }

    #[test]
    fn cropping_conserves_counts_of_kept_region() {
        let img = Image::from_fn(10, 8, |x, y| ((x * 3 + y * 5) % 4) as f64);
        let out = bin_down(&img, 3).unwrap();
        assert_eq!(out.dims(), (3, 2));
        let kept: f64 = (0..6)
            .flat_map(|y| (0..9).map(move |x| (x, y)))
            .map(|(x, y)| img.get(x, y))
            .sum();
        assert_eq!(out.sum(), kept);
    }

    #[test]
    fn oversized_factor_rejected() {
        assert!(bin_down(&Image::zeros(4, 2), 3).is_err());
        assert!(bin_down(&Image::zeros(4, 4), 0).is_err());
    }

    #[test]
    fn up_constant_fields() {
        let out = bin_up(&Image::filled(1, 1, 9.0), 3, 3, 3).unwrap();
        assert!(out.data().iter().all(|&v| v == 1.0));
        let out = bin_up(&Image::filled(4, 3, 5.0), 3, 14, 10).unwrap();
        assert!(out.data().iter().all(|&v| (v - 5.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn up_rejects_shrinking_target() {
        assert!(bin_up(&Image::zeros(4, 4), 3, 3, 12).is_err());
    }

    #[test]
    fn up_interpolates_linear_ramps() {
        // A linear ramp stays linear away from the clamped borders.
        let img = Image::from_fn(6, 1, |x, _| 9.0 * x as f64);
        let out = bin_up(&img, 3, 18, 3).unwrap();
        for x in 2..15 {
            let expected = (x as f64 + 0.5) / 3.0 - 0.5;
            assert!((out.get(x, 1) - expected).abs() < 1e-12);
        }
    }
}
