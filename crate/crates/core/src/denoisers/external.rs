//! Bridge to a denoiser living in another process.
//!
//! Each call writes the input as a `PNPRAST1` raster into a scratch
//! directory, runs the configured executable with `{input}`, `{sigma}` and
//! `{output}` substituted into its argument template, and reads the output
//! raster back. Exit status 0 means success; sigma is passed as the shortest
//! decimal string that round-trips to the same `f64`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::Denoiser;
use crate::error::{Error, Result};
use crate::imaging::{load_raster, save_raster, Image};

const PLACEHOLDERS: [&str; 3] = ["{input}", "{sigma}", "{output}"];

#[derive(Clone, Debug, PartialEq)]
pub struct ExternalDenoiserSpec {
    pub executable: PathBuf,
    /// Whitespace-separated argument template.
    pub args: String,
    pub timeout: Duration,
}

impl ExternalDenoiserSpec {
    pub fn new(
        executable: impl Into<PathBuf>,
        args: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self> {
        let spec = Self {
            executable: executable.into(),
            args: args.into(),
            timeout,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        for p in PLACEHOLDERS {
            if !self.args.contains(p) {
                return Err(Error::InvalidParameter(format!(
                    "external denoiser template `{}` lacks {p}",
                    self.args
                )));
            }
        }
        if self.timeout.is_zero() {
            return Err(Error::InvalidParameter(
                "external denoiser timeout must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Reads a `key = value` spec file with keys `executable`, `args` and
    /// `timeout` (seconds). Relative executables resolve against the spec
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut executable = None;
        let mut args = None;
        let mut timeout = Duration::from_secs(300);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(
                    "denoiser spec",
                    format!("line {}: expected key = value", n + 1),
                )
            })?;
            let value = value.trim();
            match key.trim() {
                "executable" => {
                    let p = PathBuf::from(value);
                    executable = Some(if p.is_relative() { base_dir.join(p) } else { p });
                }
                "args" => args = Some(value.to_string()),
                "timeout" => {
                    let secs: f64 = value.parse().map_err(|_| {
                        Error::parse(
                            "denoiser spec",
                            format!("line {}: bad timeout `{value}`", n + 1),
                        )
                    })?;
                    if !(secs.is_finite() && secs > 0.0) {
                        return Err(Error::parse("denoiser spec", "timeout must be positive"));
                    }
                    timeout = Duration::from_secs_f64(secs);
                }
                other => {
                    return Err(Error::parse(
                        "denoiser spec",
                        format!("line {}: unknown key `{other}`", n + 1),
                    ))
                }
            }
        }
        let executable =
            executable.ok_or_else(|| Error::parse("denoiser spec", "missing `executable`"))?;
        let args = args.unwrap_or_else(|| PLACEHOLDERS.join(" "));
        Self::new(executable, args, timeout)
    }
}

/// Out-of-process denoiser. Calls through one handle run one at a time.
pub struct ExternalDenoiser {
    spec: ExternalDenoiserSpec,
    name: String,
    lock: Mutex<()>,
}

impl ExternalDenoiser {
    pub fn new(spec: ExternalDenoiserSpec) -> Result<Self> {
        spec.validate()?;
        if !spec.executable.is_file() {
            return Err(Error::InvalidParameter(format!(
                "external denoiser executable {} not found",
                spec.executable.display()
            )));
        }
        let name = format!(
            "ext:{}",
            spec.executable
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        );
        Ok(Self {
            spec,
            name,
            lock: Mutex::new(()),
        })
    }

    pub fn spec(&self) -> &ExternalDenoiserSpec {
        &self.spec
    }

    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Denoiser {
            name: self.name.clone(),
            reason: reason.into(),
        }
    }

    fn run(&self, img: &Image, sigma: f64) -> Result<Image> {
        let scratch = tempfile::tempdir().map_err(|e| self.fail(format!("scratch dir: {e}")))?;
        let input = scratch.path().join("input.raster");
        let output = scratch.path().join("output.raster");
        save_raster(img, &input)?;

        let sigma_text = format!("{sigma:?}");
        let args: Vec<String> = self
            .spec
            .args
            .split_whitespace()
            .map(|a| {
                a.replace("{input}", &input.to_string_lossy())
                    .replace("{sigma}", &sigma_text)
                    .replace("{output}", &output.to_string_lossy())
            })
            .collect();

        let mut child = Command::new(&self.spec.executable)
            .args(&args)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| self.fail(format!("spawn {}: {e}", self.spec.executable.display())))?;

        let started = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if started.elapsed() >= self.spec.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(self.fail(format!("timed out after {:?}", self.spec.timeout)));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(2)),
                Err(e) => return Err(self.fail(format!("wait: {e}"))),
            }
        };
        if !status.success() {
            let mut stderr = String::new();
            if let Some(mut pipe) = child.stderr.take() {
                use std::io::Read;
                let _ = pipe.read_to_string(&mut stderr);
            }
            return Err(self.fail(format!("exited with {status}: {}", stderr.trim())));
        }
        load_raster(&output).map_err(|e| self.fail(format!("reading output: {e}")))
    }
}

impl Denoiser for ExternalDenoiser {
    fn name(&self) -> &str {
        &self.name
    }

    fn denoise(&self, img: &Image, sigma: f64) -> Result<Image> {
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let out = self.run(img, sigma)?;
        if out.dims() != img.dims() {
            return Err(self.fail(format!(
                "returned {}x{} for a {}x{} input",
                out.width(),
                out.height(),
                img.width(),
                img.height()
            )));
        }
        Ok(out)
    }
}
