//! Resolution of image and kernel arguments given on the command line.

use std::path::Path;

use anyhow::{Context, Result};
use p4ip_core::imaging::{load_pgm, load_raster, RASTER_MAGIC};
use p4ip_core::operators::{Kernel, LinearOperator};
use p4ip_core::{synthetic, Image};

/// Loads `synth:<scene>`, a `.pgm` file or a raster file. Files with other
/// extensions are sniffed by their leading bytes.
pub fn load_image(spec: &str) -> Result<Image> {
    if let Some(scene) = spec.strip_prefix("synth:") {
        return Ok(synthetic::by_name(scene)?);
    }
    let path = Path::new(spec);
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let img = match ext.as_deref() {
        Some("pgm") => load_pgm(path),
        Some("raster") => load_raster(path),
        _ => {
            let head =
                std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            if head.starts_with(RASTER_MAGIC) {
                load_raster(path)
            } else {
                p4ip_core::imaging::parse_pgm(&head)
            }
        }
    };
    img.with_context(|| format!("loading image {spec}"))
}

/// `none`, a built-in kernel name, or a raster file holding the weights.
pub fn load_kernel(spec: &str) -> Result<Option<Kernel>> {
    if spec == "none" {
        return Ok(None);
    }
    if let Some(k) = Kernel::by_name(spec) {
        return Ok(Some(k));
    }
    if Path::new(spec).is_file() {
        let img = load_raster(spec).with_context(|| format!("loading kernel {spec}"))?;
        return Ok(Some(Kernel::from_image(&img)?));
    }
    Err(crate::exit::usage(format!(
        "unknown kernel `{spec}` (expected none, gaussian25, cauchy15, uniform9 or a raster file)"
    )))
}

pub fn operator_for(kernel: Option<&Kernel>, width: usize, height: usize) -> LinearOperator {
    match kernel {
        Some(k) => LinearOperator::convolution(k.clone(), width, height),
        None => LinearOperator::identity(width, height),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use p4ip_core::imaging::save_raster;

    #[test]
    fn synthetic_and_sniffed_files() {
        assert_eq!(load_image("synth:shapes16").unwrap().dims(), (16, 16));
        assert!(load_image("synth:circles").is_err());

        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(3, 2, |x, y| (x + 10 * y) as f64);
        let path = dir.path().join("noext");
        save_raster(&img, &path).unwrap();
        assert_eq!(load_image(path.to_str().unwrap()).unwrap(), img);

        let pgm = dir.path().join("tiny");
        std::fs::write(&pgm, b"P2\n2 1\n255\n7 9\n").unwrap();
        assert_eq!(
            load_image(pgm.to_str().unwrap()).unwrap().data(),
            &[7.0, 9.0]
        );
        assert!(load_image(dir.path().join("missing.raster").to_str().unwrap()).is_err());
    }

    #[test]
    fn kernels() {
        assert!(load_kernel("none").unwrap().is_none());
        assert_eq!(load_kernel("uniform9").unwrap().unwrap().width(), 9);
        assert!(load_kernel("box3").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.raster");
        save_raster(&Image::filled(3, 3, 2.0), &path).unwrap();
        let k = load_kernel(path.to_str().unwrap()).unwrap().unwrap();
        assert!((k.at(0, 0) - 1.0 / 9.0).abs() < 1e-15);
    }
}
