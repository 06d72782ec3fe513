use super::Image;
use crate::error::{Error, Result};

pub fn mse(reference: &Image, test: &Image) -> Result<f64> {
    reference.check_same_dims(test)?;
    let sse: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sse / reference.len() as f64)
}

/// Peak signal-to-noise ratio in dB, `10 log10(peak_max^2 / MSE)`.
///
/// Returns `f64::INFINITY` when the images are identical.
pub fn psnr(reference: &Image, test: &Image, peak_max: f64) -> Result<f64> {
    if !(peak_max.is_finite() && peak_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "peak_max must be positive, got {peak_max}"
        )));
    }
    let mse = mse(reference, test)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak_max * peak_max / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_is_infinite() {
        let a = Image::from_fn(5, 5, |x, y| (x * y) as f64);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn unit_mse_is_zero_db() {
        let r = Image::zeros(4, 4);
        let t = Image::filled(4, 4, 1.0);
        assert_abs_diff_eq!(psnr(&r, &t, 1.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_offset_on_255_scale() {
        // MSE = 25.5^2 = 650.25 and 255^2 / 650.25 = 100.
        let r = Image::from_fn(16, 16, |x, y| ((x * 16 + y) % 200) as f64);
        let t = r.map(|v| v + 25.5);
        assert_abs_diff_eq!(psnr(&r, &t, 255.0).unwrap(), 20.0, epsilon = 1e-10);
    }

    #[test]
    fn decreases_along_noise_ladder() {
        let r = Image::from_fn(32, 32, |x, y| ((x ^ y) % 7) as f64 / 7.0);
        let pattern = Image::from_fn(
            32,
            32,
            |x, y| if (x * 3 + y * 5) % 2 == 0 { 1.0 } else { -1.0 },
        );
        let values: Vec<f64> = [0.01, 0.05, 0.2]
            .iter()
            .map(|&amp| {
                let t = r.zip_map(&pattern, |a, p| a + amp * p).unwrap();
                psnr(&r, &t, 1.0).unwrap()
            })
            .collect();
        assert!(values[0] > values[1] && values[1] > values[2], "{values:?}");
    }

    #[test]
    fn mismatched_dims_error() {
        assert!(psnr(&Image::zeros(2, 2), &Image::zeros(2, 3), 1.0).is_err());
    }
}
