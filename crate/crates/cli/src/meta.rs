//! Sidecar metadata written next to degraded images.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Sidecar {
    pub peak: f64,
    /// Kernel argument as given, `none` for pure denoising.
    pub kernel: String,
    pub seed: u64,
    pub source: String,
}

/// `<image>.meta`.
pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut name = image.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

impl Sidecar {
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "peak = {:?}", self.peak).unwrap();
        writeln!(out, "kernel = {}", self.kernel).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "source = {}", self.source).unwrap();
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (mut peak, mut kernel, mut seed, mut source) = (None, None, None, String::new());
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let Some((key, value)) = line.split_once('=') else {
                bail!("malformed metadata line `{line}`");
            };
            let value = value.trim();
            match key.trim() {
                "peak" => peak = Some(value.parse::<f64>().context("metadata peak")?),
                "kernel" => kernel = Some(value.to_string()),
                "seed" => seed = Some(value.parse::<u64>().context("metadata seed")?),
                "source" => source = value.to_string(),
                _ => {}
            }
        }
        Ok(Self {
            peak: peak.context("metadata lacks `peak`")?,
            kernel: kernel.unwrap_or_else(|| "none".into()),
            seed: seed.unwrap_or(0),
            source,
        })
    }

    pub fn write_for(&self, image: &Path) -> Result<()> {
        let path = sidecar_path(image);
        std::fs::write(&path, self.render()).with_context(|| format!("writing {}", path.display()))
    }

    /// Reads the sidecar of `image` if one exists.
    pub fn read_for(image: &Path) -> Result<Option<Self>> {
        let path = sidecar_path(image);
        if !path.is_file() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let meta = Sidecar {
            peak: 0.2,
            kernel: "gaussian25".into(),
            seed: 17,
            source: "synth:shapes64".into(),
        };
        assert_eq!(Sidecar::parse(&meta.render()).unwrap(), meta);
        assert_eq!(
            sidecar_path(Path::new("out/y.raster")),
            PathBuf::from("out/y.raster.meta")
        );
        assert!(Sidecar::parse("kernel = none\n").is_err());
    }
}
