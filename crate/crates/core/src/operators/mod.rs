//! The degradation operator `H` and its exact adjoint.
//!
//! Convolutions are circular. Kernels up to 15x15 are applied directly in
//! the spatial domain; larger ones go through a precomputed FFT spectrum.

mod fft;
mod kernel;

use std::fmt;
use std::sync::Arc;

pub use kernel::Kernel;

use crate::error::{Error, Result};
use crate::imaging::Image;
use fft::SpectralConvolver;

const DIRECT_MAX_TAPS: usize = 15 * 15;

#[derive(Clone)]
pub struct LinearOperator {
    width: usize,
    height: usize,
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Identity,
    Convolution {
        kernel: Kernel,
        spectral: Option<Arc<SpectralConvolver>>,
    },
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Identity => write!(f, "Identity({}x{})", self.width, self.height),
            Kind::Convolution { kernel, spectral } => write!(
                f,
                "Convolution({}x{} kernel on {}x{}, {})",
                kernel.width(),
                kernel.height(),
                self.width,
                self.height,
                if spectral.is_some() { "fft" } else { "direct" }
            ),
        }
    }
}

/// Convolution evaluation strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvolutionPath {
    /// Direct for small kernels, FFT above 15x15.
    Auto,
    Direct,
    Fourier,
}

impl LinearOperator {
    pub fn identity(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            kind: Kind::Identity,
        }
    }

    pub fn convolution(kernel: Kernel, width: usize, height: usize) -> Self {
        Self::convolution_with(kernel, width, height, ConvolutionPath::Auto)
    }

    pub fn convolution_with(
        kernel: Kernel,
        width: usize,
        height: usize,
        path: ConvolutionPath,
    ) -> Self {
        let use_fft = match path {
            ConvolutionPath::Auto => kernel.weights().len() > DIRECT_MAX_TAPS,
            ConvolutionPath::Direct => false,
            ConvolutionPath::Fourier => true,
        };
        let spectral = use_fft.then(|| Arc::new(SpectralConvolver::new(&kernel, width, height)));
        Self {
            width,
            height,
            kind: Kind::Convolution { kernel, spectral },
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Identity)
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match &self.kind {
            Kind::Identity => None,
            Kind::Convolution { kernel, .. } => Some(kernel),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn check(&self, img: &Image) -> Result<()> {
        if img.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: img.dims(),
            });
        }
        Ok(())
    }

    /// `H img`.
    pub fn apply(&self, img: &Image) -> Result<Image> {
        self.check(img)?;
        let data = self.apply_slice(img.data());
        Ok(Image::new(self.width, self.height, data).expect("convolution keeps values finite"))
    }

    /// `Hᵀ img`: correlation with the kernel, same boundary handling.
    pub fn adjoint(&self, img: &Image) -> Result<Image> {
        self.check(img)?;
        let data = self.adjoint_slice(img.data());
        Ok(Image::new(self.width, self.height, data).expect("convolution keeps values finite"))
    }

    pub(crate) fn apply_slice(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.width * self.height);
        match &self.kind {
            Kind::Identity => input.to_vec(),
            Kind::Convolution {
                spectral: Some(s), ..
            } => s.convolve(input, false),
            Kind::Convolution { kernel, .. } => {
                circular_direct(input, self.width, self.height, kernel, false)
            }
        }
    }

    pub(crate) fn adjoint_slice(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.width * self.height);
        match &self.kind {
            Kind::Identity => input.to_vec(),
            Kind::Convolution {
                spectral: Some(s), ..
            } => s.convolve(input, true),
            Kind::Convolution { kernel, .. } => {
                circular_direct(input, self.width, self.height, kernel, true)
            }
        }
    }
}

/// `out[p] = Σ k[q] in[p - q]` (or `in[p + q]` when `correlate`), indices
/// taken modulo the image size.
fn circular_direct(
    input: &[f64],
    width: usize,
    height: usize,
    kernel: &Kernel,
    correlate: bool,
) -> Vec<f64> {
    let (w, h) = (width as isize, height as isize);
    let sign = if correlate { 1 } else { -1 };
    let taps: Vec<(isize, isize, f64)> = kernel
        .taps()
        .filter(|t| t.2 != 0.0)
        .map(|(dx, dy, wt)| (sign * dx, sign * dy, wt))
        .collect();
    let mut out = vec![0.0; input.len()];
    for y in 0..h {
        let row = &mut out[(y * w) as usize..((y + 1) * w) as usize];
        for &(dx, dy, wt) in &taps {
            let sy = (y + dy).rem_euclid(h);
            let src = &input[(sy * w) as usize..((sy + 1) * w) as usize];
            let shift = dx.rem_euclid(w) as usize;
            // row[x] += wt * src[(x + dx) mod w], split into two contiguous runs.
            let split = width - shift;
            for (o, s) in row[..split].iter_mut().zip(&src[shift..]) {
                *o += wt * s;
            }
            for (o, s) in row[split..].iter_mut().zip(&src[..shift]) {
                *o += wt * s;
            }
        }
    }
    out
}
