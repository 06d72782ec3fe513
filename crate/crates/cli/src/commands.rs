use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use p4ip_core::anscombe::{forward_scalar, InverseKind};
use p4ip_core::denoisers::{denoise_checked, from_selection};
use p4ip_core::imaging::{load_raster, psnr, save_raster, scale_to_peak};
use p4ip_core::optim::LbfgsConfig;
use p4ip_core::solver::{
    anscombe_matching_offset, transform_curve, OutputSelect, ANSCOMBE_MATCHING_LAMBDA,
};
use p4ip_core::{Image, SolverParams};

use crate::config::Method;
use crate::exit::usage;
use crate::experiment::cmd_experiment;
use crate::inputs::{load_image, load_kernel};
use crate::meta::Sidecar;
use crate::pipeline::{degrade, preset, restore, Restoration};

#[derive(Debug, Parser)]
#[command(
    name = "p4ip",
    version,
    about = "Plug-and-play ADMM restoration of Poisson-noisy images"
)]
pub struct Cli {
    /// Seed for Poisson sampling (also fills an experiment config without seeds).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to one per logical core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scale a clean image to a peak, optionally blur it, and draw Poisson counts.
    Degrade(DegradeArgs),
    /// Restore a degraded image.
    Restore(RestoreArgs),
    /// Anscombe transform, Gaussian denoising and inverse transform.
    Baseline(BaselineArgs),
    /// PSNR of a test image against a reference.
    Eval(EvalArgs),
    /// CSV of the closed-form x-update against the Anscombe transform.
    Curve(CurveArgs),
    /// Run a sweep described by an INI config.
    Experiment(ExperimentArgs),
    /// Denoise one raster at a given noise level (external-denoiser bridge).
    #[command(hide = true)]
    Denoise(DenoiseArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    /// Clean image: .pgm, raster file, or synth:shapes<N>.
    #[arg(long)]
    pub input: String,
    #[arg(long)]
    pub peak: f64,
    /// none, gaussian25, cauchy15, uniform9, or a raster file of weights.
    #[arg(long, default_value = "none")]
    pub kernel: String,
    /// Degraded raster; a `.meta` sidecar is written next to it.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
    /// Also write the clean image scaled to the peak.
    #[arg(long)]
    pub reference_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverOverrides {
    /// Peak the presets are derived for; read from the sidecar when absent.
    #[arg(long)]
    pub peak: Option<f64>,
    /// Blur kernel; read from the sidecar when absent, else none.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub lambda0: Option<f64>,
    #[arg(long)]
    pub lambda_step: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Binning factor for p4ip-bin (default 3).
    #[arg(long)]
    pub binning: Option<usize>,
    /// Iterate returned by the ADMM loop.
    #[arg(long = "output", value_parser = ["v", "x"], default_value = "v")]
    pub output: String,
    /// Knee of the log surrogate.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Inner L-BFGS iteration budget for deblurring.
    #[arg(long)]
    pub inner_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Append the report row to this CSV instead of printing it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Clean reference, scaled to the peak, for a PSNR column.
    #[arg(long)]
    pub reference: Option<String>,
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    /// Degraded raster (or any loadable image).
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value = "p4ip")]
    pub method: String,
    /// gauss, nlm, tikhonov, identity or ext:<spec-file>; repeat for m-p4ip.
    #[arg(long = "denoiser", default_value = "nlm")]
    pub denoisers: Vec<String>,
    /// Inverse transform for the anscombe method.
    #[arg(long, default_value = "unbiased")]
    pub inverse: String,
    #[command(flatten)]
    pub solver: SolverOverrides,
    #[command(flatten)]
    pub report: ReportArgs,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value = "nlm")]
    pub denoiser: String,
    #[arg(long, value_parser = ["algebraic", "unbiased"], default_value = "unbiased")]
    pub inverse: String,
    /// Peak for the report row; read from the sidecar when absent.
    #[arg(long)]
    pub peak: Option<f64>,
    #[command(flatten)]
    pub report: ReportArgs,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub reference: String,
    #[arg(long)]
    pub test: String,
    /// Peak used in the PSNR formula; defaults to the test image's sidecar
    /// peak, then to the reference maximum.
    #[arg(long)]
    pub peak_max: Option<f64>,
    /// Scale the reference to the peak before comparing.
    #[arg(long)]
    pub scale_reference: bool,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = ANSCOMBE_MATCHING_LAMBDA)]
    pub lambda: f64,
    /// Value of v - u per curve; repeat for several. Defaults to the
    /// Anscombe-matching offset plus 0, 3, 6 and 9.
    #[arg(long = "v-minus-u", allow_hyphen_values = true)]
    pub v_minus_u: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub y_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Write the CSV here instead of standard output.
    #[arg(short = 'o', long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub denoiser: String,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

/// Global flags every command sees.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Globals {
    /// Resolves `path` against the output directory, creating parents.
    pub fn output_path(&self, path: &Path) -> Result<PathBuf> {
        let full = match &self.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        };
        if let Some(parent) = full.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(full)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let globals = Globals {
        seed: cli.seed,
        threads: cli.threads,
        output_dir: cli.output_dir,
    };
    if let Some(n) = globals.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::Degrade(a) => cmd_degrade(&a, &globals).map(|_| ()),
        Command::Restore(a) => cmd_restore(&a, &globals),
        Command::Baseline(a) => cmd_baseline(&a, &globals),
        Command::Eval(a) => {
            println!("{}", cmd_eval(&a)?);
            Ok(())
        }
        Command::Curve(a) => cmd_curve(&a, &globals),
        Command::Experiment(a) => {
            let out = cmd_experiment(
                &a.config,
                globals.output_dir.as_deref(),
                globals.threads,
                globals.seed,
            )?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Denoise(a) => cmd_denoise(&a),
    }
}

pub fn cmd_degrade(args: &DegradeArgs, globals: &Globals) -> Result<PathBuf> {
    let clean = load_image(&args.input)?;
    let kernel = load_kernel(&args.kernel)?;
    let seed = globals.seed.unwrap_or(0);
    let (scaled, observed) = degrade(&clean, args.peak, kernel.as_ref(), seed)?;
    let out = globals.output_path(&args.out)?;
    save_raster(&observed, &out)?;
    Sidecar {
        peak: args.peak,
        kernel: args.kernel.clone(),
        seed,
        source: args.input.clone(),
    }
    .write_for(&out)?;
    if let Some(r) = &args.reference_out {
        save_raster(&scaled, globals.output_path(r)?)?;
    }
    Ok(out)
}

fn solver_params(
    o: &SolverOverrides,
    peak: f64,
    kernel: Option<&p4ip_core::operators::Kernel>,
) -> Result<SolverParams> {
    let mut p = preset(peak, kernel);
    if let Some(v) = o.lambda0 {
        p.lambda0 = v;
    }
    if let Some(v) = o.lambda_step {
        p.lambda_step = v;
    }
    if let Some(v) = o.beta {
        p.beta = v;
    }
    if let Some(v) = o.iters {
        p.iters = v;
    }
    p.binning = o.binning;
    p.output = o.output.parse::<OutputSelect>()?;
    p.epsilon = o.epsilon;
    if let Some(n) = o.inner_iters {
        p.inner = LbfgsConfig {
            max_iters: n,
            ..p.inner
        };
    }
    p.validate()?;
    Ok(p)
}

pub const REPORT_HEADER: &str =
    "input,method,denoiser,peak,kernel,iterations,inner_iterations,lambda0,lambda_step,beta,primal_residual,psnr,wall_time_s";

struct ReportRow<'a> {
    input: &'a str,
    restoration: &'a Restoration,
    peak: f64,
    kernel: &'a str,
    params: Option<&'a SolverParams>,
    psnr: Option<f64>,
}

impl ReportRow<'_> {
    fn render(&self) -> String {
        let r = self.restoration;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let quote = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        [
            quote(self.input),
            r.method.to_string(),
            quote(&r.denoisers),
            self.peak.to_string(),
            quote(self.kernel),
            r.iterations.to_string(),
            r.inner_iterations.to_string(),
            opt(self.params.map(|p| p.lambda0)),
            opt(self.params.map(|p| p.lambda_step)),
            opt(self.params.map(|p| p.beta)),
            opt(r.primal_residual),
            self.psnr.map(format_psnr).unwrap_or_default(),
            format!("{:.3}", r.wall_time.as_secs_f64()),
        ]
        .join(",")
    }
}

fn emit_report(target: Option<&Path>, row: &ReportRow<'_>, globals: &Globals) -> Result<()> {
    let line = row.render();
    match target {
        None => {
            println!("{REPORT_HEADER}");
            println!("{line}");
        }
        Some(path) => {
            let path = globals.output_path(path)?;
            let fresh = std::fs::metadata(&path)
                .map(|m| m.len() == 0)
                .unwrap_or(true);
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .with_context(|| format!("opening {}", path.display()))?;
            if fresh {
                writeln!(f, "{REPORT_HEADER}")?;
            }
            writeln!(f, "{line}").with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn reference_psnr(reference: Option<&str>, restored: &Image, peak: f64) -> Result<Option<f64>> {
    reference
        .map(|spec| {
            let clean = scale_to_peak(&load_image(spec)?, peak)?;
            Ok(psnr(&clean, restored, peak)?)
        })
        .transpose()
}

pub fn cmd_restore(args: &RestoreArgs, globals: &Globals) -> Result<()> {
    let method: Method = args.method.parse()?;
    let inverse: InverseKind = args.inverse.parse()?;
    let y = load_image(&args.input)?;
    let sidecar = Sidecar::read_for(Path::new(&args.input))?;
    let kernel_spec = args
        .solver
        .kernel
        .clone()
        .or_else(|| sidecar.as_ref().map(|s| s.kernel.clone()))
        .unwrap_or_else(|| "none".into());
    let peak = args
        .solver
        .peak
        .or_else(|| sidecar.as_ref().map(|s| s.peak))
        .ok_or_else(|| usage("no peak: pass --peak or restore a file with a .meta sidecar"))?;
    let kernel = load_kernel(&kernel_spec)?;
    let params = solver_params(&args.solver, peak, kernel.as_ref())?;
    let restoration = restore(
        &y,
        method,
        &args.denoisers,
        kernel.as_ref(),
        &params,
        inverse,
    )?;
    let out = globals.output_path(&args.out)?;
    save_raster(&restoration.image, &out)?;
    let row = ReportRow {
        input: &args.input,
        restoration: &restoration,
        peak,
        kernel: &kernel_spec,
        params: (method != Method::Anscombe).then_some(&params),
        psnr: reference_psnr(args.report.reference.as_deref(), &restoration.image, peak)?,
    };
    emit_report(args.report.report.as_deref(), &row, globals)
}

pub fn cmd_baseline(args: &BaselineArgs, globals: &Globals) -> Result<()> {
    let inverse: InverseKind = args.inverse.parse()?;
    let y = load_image(&args.input)?;
    let sidecar = Sidecar::read_for(Path::new(&args.input))?;
    if let Some(s) = &sidecar {
        if s.kernel != "none" {
            return Err(usage(
                "the Anscombe baseline only handles denoising (kernel none)",
            ));
        }
    }
    let peak = args.peak.or_else(|| sidecar.as_ref().map(|s| s.peak));
    // The baseline has no parameters that depend on the peak.
    let params = SolverParams::denoising(peak.unwrap_or(1.0));
    let restoration = restore(
        &y,
        Method::Anscombe,
        std::slice::from_ref(&args.denoiser),
        None,
        &params,
        inverse,
    )?;
    let out = globals.output_path(&args.out)?;
    save_raster(&restoration.image, &out)?;
    let psnr = match peak {
        Some(p) => reference_psnr(args.report.reference.as_deref(), &restoration.image, p)?,
        None if args.report.reference.is_some() => {
            return Err(usage(
                "a PSNR against --reference needs --peak or a sidecar",
            ))
        }
        None => None,
    };
    let row = ReportRow {
        input: &args.input,
        restoration: &restoration,
        peak: peak.unwrap_or(f64::NAN),
        kernel: "none",
        params: None,
        psnr,
    };
    emit_report(args.report.report.as_deref(), &row, globals)
}

/// `inf` for identical images, otherwise two decimals.
pub fn format_psnr(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.2}")
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<String> {
    let reference = load_image(&args.reference)?;
    let test = load_image(&args.test)?;
    let sidecar = Sidecar::read_for(Path::new(&args.test))?;
    let peak_max = args
        .peak_max
        .or_else(|| sidecar.map(|s| s.peak))
        .unwrap_or_else(|| reference.max());
    let reference = if args.scale_reference {
        scale_to_peak(&reference, peak_max)?
    } else {
        reference
    };
    Ok(format_psnr(psnr(&reference, &test, peak_max)?))
}

/// Grid `0, step, 2 step, ...` up to and including `y_max`.
pub fn curve_grid(y_max: f64, step: f64) -> Vec<f64> {
    let n = (y_max / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

pub fn default_curve_family() -> Vec<f64> {
    [0.0, 3.0, 6.0, 9.0]
        .iter()
        .map(|i| anscombe_matching_offset() + i)
        .collect()
}

pub fn curve_csv(lambda: f64, family: &[f64], y_max: f64, step: f64) -> Result<String> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(usage("--lambda must be positive"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(usage("--step must be positive"));
    }
    if !(y_max.is_finite() && y_max >= 0.0) {
        return Err(usage("--y-max must be nonnegative"));
    }
    let grid = curve_grid(y_max, step);
    let columns: Vec<Vec<f64>> = family
        .iter()
        .map(|&m| transform_curve(lambda, m, &grid))
        .collect();
    let mut out = String::from("y");
    for m in family {
        out.push_str(&format!(",p4ip_{m:.4}"));
    }
    out.push_str(",anscombe\n");
    for (i, y) in grid.iter().enumerate() {
        out.push_str(&format!("{y}"));
        for col in &columns {
            out.push_str(&format!(",{}", col[i]));
        }
        out.push_str(&format!(",{}\n", forward_scalar(*y)));
    }
    Ok(out)
}

pub fn cmd_curve(args: &CurveArgs, globals: &Globals) -> Result<()> {
    let family = if args.v_minus_u.is_empty() {
        default_curve_family()
    } else {
        args.v_minus_u.clone()
    };
    let csv = curve_csv(args.lambda, &family, args.y_max, args.step)?;
    match &args.out {
        Some(path) => {
            let path = globals.output_path(path)?;
            std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

pub fn cmd_denoise(args: &DenoiseArgs) -> Result<()> {
    let denoiser = from_selection(&args.denoiser)?;
    let img = load_raster(&args.input)?;
    let out = denoise_checked(denoiser.as_ref(), &img, args.sigma)?;
    save_raster(&out, &args.out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_shapes() {
        let single = curve_csv(0.25, &[1.0], 0.0, 0.1).unwrap();
        assert_eq!(single.lines().count(), 2);
        assert_eq!(curve_grid(100.0, 0.1).len(), 1001);
        assert!(curve_csv(0.0, &[1.0], 1.0, 0.1).is_err());
        assert!(curve_csv(0.25, &[1.0], 1.0, 0.0).is_err());

        let csv = curve_csv(ANSCOMBE_MATCHING_LAMBDA, &default_curve_family(), 10.0, 0.5).unwrap();
        let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        assert_eq!(header.len(), 6);
        assert_eq!(header[1], "p4ip_6.4495");
        for line in csv.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert!((v[1] - v[5] - 2.0 * (3.0f64 / 8.0).sqrt()).abs() < 1e-12);
            assert!(v[1] < v[2] && v[2] < v[3] && v[3] < v[4]);
        }
    }

    #[test]
    fn psnr_formatting() {
        assert_eq!(format_psnr(f64::INFINITY), "inf");
        assert_eq!(format_psnr(20.0), "20.00");
        assert_eq!(format_psnr(13.456), "13.46");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
