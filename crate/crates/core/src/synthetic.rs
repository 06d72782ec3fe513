//! Synthetic stand-in scenes for tests, benchmarks and experiment sweeps.

use crate::error::{Error, Result};
use crate::imaging::Image;

/// Piecewise-constant scene with maximum 1: a dim background, a rectangle,
/// a disk, a triangle and a small bright square, all axis-scaled to `size`.
pub fn shapes(size: usize) -> Image {
    assert!(size >= 8, "scene needs at least 8x8 pixels");
    let s = size as f64;
    Image::from_fn(size, size, |x, y| {
        let (fx, fy) = ((x as f64 + 0.5) / s, (y as f64 + 0.5) / s);
        let in_rect = (0.08..0.45).contains(&fx) && (0.1..0.42).contains(&fy);
        let in_disk = (fx - 0.68).powi(2) + (fy - 0.3).powi(2) < 0.2f64.powi(2);
        let in_tri = fy > 0.55 && fy < 0.92 && (fx - 0.3).abs() < (fy - 0.55) * 0.7;
        let in_square = (0.62..0.8).contains(&fx) && (0.62..0.8).contains(&fy);
        if in_square {
            1.0
        } else if in_rect {
            0.7
        } else if in_disk {
            0.45
        } else if in_tri {
            0.85
        } else {
            0.15
        }
    })
}

/// Resolves scene names of the form `shapes<N>`, e.g. `shapes128`.
pub fn by_name(name: &str) -> Result<Image> {
    let size = name
        .strip_prefix("shapes")
        .and_then(|n| {
            if n.is_empty() {
                Some(128)
            } else {
                n.parse().ok()
            }
        })
        .filter(|&n: &usize| n >= 8)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown synthetic scene `{name}`")))?;
    Ok(shapes(size))
}
