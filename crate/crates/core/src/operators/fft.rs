use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Kernel;

/// Circular convolution by pointwise multiplication with a precomputed
/// kernel spectrum.
pub(crate) struct SpectralConvolver {
    width: usize,
    height: usize,
    spectrum: Vec<Complex64>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl SpectralConvolver {
    pub fn new(kernel: &Kernel, width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        let mut this = Self {
            width,
            height,
            spectrum: Vec::new(),
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        };
        // Wrap every tap onto the periodic grid; taps wider than the image
        // alias, exactly as the direct path does.
        let mut psf = vec![Complex64::new(0.0, 0.0); width * height];
        let (w, h) = (width as isize, height as isize);
        for (dx, dy, wt) in kernel.taps() {
            let x = dx.rem_euclid(w) as usize;
            let y = dy.rem_euclid(h) as usize;
            psf[y * width + x].re += wt;
        }
        this.transform(&mut psf, true);
        this.spectrum = psf;
        this
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        for r in buf.chunks_exact_mut(self.width) {
            row.process(r);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.height];
        for x in 0..self.width {
            for (y, c) in column.iter_mut().enumerate() {
                *c = buf[y * self.width + x];
            }
            col.process(&mut column);
            for (y, c) in column.iter().enumerate() {
                buf[y * self.width + x] = *c;
            }
        }
    }

    /// Convolves `input` with the kernel, or correlates when `adjoint`.
    pub fn convolve(&self, input: &[f64], adjoint: bool) -> Vec<f64> {
        let mut buf: Vec<Complex64> = input.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, true);
        for (b, k) in buf.iter_mut().zip(&self.spectrum) {
            *b *= if adjoint { k.conj() } else { *k };
        }
        self.transform(&mut buf, false);
        let scale = 1.0 / (self.width * self.height) as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }
}
