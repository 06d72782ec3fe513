//! Shared fixtures for the restoration benchmarks.

use p4ip_core::imaging::{poisson_sample, scale_to_peak};
use p4ip_core::{synthetic, Image};

/// Clean scene scaled to `peak` and its Poisson observation.
pub fn noisy_scene(size: usize, peak: f64, seed: u64) -> (Image, Image) {
    let clean = scale_to_peak(&synthetic::shapes(size), peak).expect("positive peak");
    let noisy = poisson_sample(&clean, seed).expect("nonnegative scene");
    (clean, noisy)
}
