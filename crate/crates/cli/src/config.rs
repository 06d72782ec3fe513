//! Experiment configuration in INI style: `key = value` lines, lists given
//! by repeating a key, `#`/`;` comments and optional `[section]` headers
//! that are accepted and ignored.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::exit::usage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    P4ip,
    P4ipBin,
    MultiP4ip,
    Anscombe,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::P4ip => "p4ip",
            Method::P4ipBin => "p4ip-bin",
            Method::MultiP4ip => "m-p4ip",
            Method::Anscombe => "anscombe",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "p4ip" => Method::P4ip,
            "p4ip-bin" => Method::P4ipBin,
            "m-p4ip" => Method::MultiP4ip,
            "anscombe" => Method::Anscombe,
            other => {
                return Err(usage(format!(
                    "unknown method `{other}` (expected p4ip, p4ip-bin, m-p4ip or anscombe)"
                )))
            }
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub images: Vec<String>,
    pub peaks: Vec<f64>,
    /// Kernel specs; `none` means pure denoising.
    pub kernels: Vec<String>,
    pub methods: Vec<Method>,
    /// Denoiser selections. For `m-p4ip` a selection may join several
    /// denoisers with `+`.
    pub denoisers: Vec<String>,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    pub iters: Option<usize>,
    pub lambda_step: Option<f64>,
    pub beta: Option<f64>,
    pub binning: Option<usize>,
    /// Also write each cell's restored raster.
    pub save_images: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(dir) = &cfg.output_dir {
            if dir.is_relative() {
                cfg.output_dir = Some(path.parent().unwrap_or(Path::new(".")).join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            images: vec![],
            peaks: vec![],
            kernels: vec![],
            methods: vec![],
            denoisers: vec![],
            seeds: vec![],
            output_dir: None,
            iters: None,
            lambda_step: None,
            beta: None,
            binning: None,
            save_images: false,
        };
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty()
                || line.starts_with('#')
                || line.starts_with(';')
                || line.starts_with('[')
            {
                continue;
            }
            let lineno = n + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {lineno}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| usage(format!("line {lineno}: invalid {what} `{value}`"));
            match key {
                "image" => cfg.images.push(value.to_string()),
                "peak" => cfg.peaks.push(
                    value
                        .parse()
                        .ok()
                        .filter(|p: &f64| p.is_finite() && *p > 0.0)
                        .ok_or_else(|| bad("peak"))?,
                ),
                "kernel" => cfg.kernels.push(value.to_string()),
                "method" => cfg.methods.push(value.parse()?),
                "denoiser" => cfg.denoisers.push(value.to_string()),
                "seed" => cfg.seeds.push(value.parse().map_err(|_| bad("seed"))?),
                "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
                "iters" => cfg.iters = Some(value.parse().map_err(|_| bad("iters"))?),
                "lambda_step" => {
                    cfg.lambda_step = Some(value.parse().map_err(|_| bad("lambda_step"))?)
                }
                "beta" => cfg.beta = Some(value.parse().map_err(|_| bad("beta"))?),
                "binning" => cfg.binning = Some(value.parse().map_err(|_| bad("binning"))?),
                "save_images" => cfg.save_images = value.parse().map_err(|_| bad("save_images"))?,
                other => return Err(usage(format!("line {lineno}: unknown key `{other}`"))),
            }
        }
        if cfg.kernels.is_empty() {
            cfg.kernels.push("none".into());
        }
        Ok(cfg)
    }

    /// Every list must be non-empty; `fallback_seed` fills an empty seed
    /// list when given.
    pub fn finalize(mut self, fallback_seed: Option<u64>) -> Result<Self> {
        if self.seeds.is_empty() {
            if let Some(s) = fallback_seed {
                self.seeds.push(s);
            }
        }
        for (name, empty) in [
            ("image", self.images.is_empty()),
            ("peak", self.peaks.is_empty()),
            ("method", self.methods.is_empty()),
            ("denoiser", self.denoisers.is_empty()),
            ("seed", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(usage(format!(
                    "experiment config needs at least one `{name}`"
                )));
            }
        }
        Ok(self)
    }

    pub fn cell_count(&self) -> usize {
        self.images.len()
            * self.peaks.len()
            * self.kernels.len()
            * self.methods.len()
            * self.denoisers.len()
            * self.seeds.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sweep
[experiment]
image = synth:shapes32
peak = 1
peak = 0.5
method = p4ip
method = anscombe
denoiser = nlm
seed = 3
seed = 4
iters = 10
";

    #[test]
    fn repeated_keys_build_lists() {
        let cfg = ExperimentConfig::parse(SAMPLE)
            .unwrap()
            .finalize(None)
            .unwrap();
        assert_eq!(cfg.peaks, vec![1.0, 0.5]);
        assert_eq!(cfg.methods, vec![Method::P4ip, Method::Anscombe]);
        assert_eq!(cfg.kernels, vec!["none".to_string()]);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.iters, Some(10));
        assert_eq!(cfg.cell_count(), 8);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("peak = 0\n").is_err());
        assert!(ExperimentConfig::parse("method = bm3d\n").is_err());
        assert!(ExperimentConfig::parse("colour = red\n").is_err());
        assert!(ExperimentConfig::parse("just words\n").is_err());
        let no_seed =
            ExperimentConfig::parse("image = a\npeak = 1\nmethod = p4ip\ndenoiser = nlm\n")
                .unwrap();
        assert!(no_seed.clone().finalize(None).is_err());
        assert_eq!(no_seed.finalize(Some(9)).unwrap().seeds, vec![9]);
    }
}
