//! Independent reference computations shared by integration and acceptance
//! tests. Nothing here calls into the library's solver code.

#![allow(dead_code)]

/// `g(a) - g(b)` for `g(x) = x - y ln x + (λ/2)(x - m)²`, factored as
/// `(a - b) · F(a, b)` so the sign survives when `a` and `b` are close.
pub fn scalar_objective_difference(a: f64, b: f64, y: f64, m: f64, lambda: f64) -> f64 {
    let d = a - b;
    if d == 0.0 {
        return 0.0;
    }
    let log_term = if y == 0.0 {
        0.0
    } else {
        y * (d / b).ln_1p() / d
    };
    d * (1.0 - log_term + 0.5 * lambda * (a + b - 2.0 * m))
}

/// Golden-section search on `[lo, hi]` for a unimodal function, given only a
/// comparison `less(a, b) <=> f(a) < f(b)`.
pub fn golden_section(mut lo: f64, mut hi: f64, less: impl Fn(f64, f64) -> bool) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    for _ in 0..400 {
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if less(c, d) {
            hi = d;
            d = c;
            c = hi - ratio * (hi - lo);
        } else {
            lo = c;
            c = d;
            d = lo + ratio * (hi - lo);
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force minimizer over `x ≥ 0` of `x - y ln x + (λ/2)(x - m)²`.
pub fn brute_force_x_update(y: f64, m: f64, lambda: f64) -> f64 {
    let hi = m.max(0.0) + 1.0 + y + 1.0 / lambda;
    golden_section(0.0, hi, |a, b| {
        scalar_objective_difference(a, b, y, m, lambda) < 0.0
    })
}

/// `-y/x + 1 + λ(x - m)`.
pub fn stationarity_residual(x: f64, y: f64, m: f64, lambda: f64) -> f64 {
    -y / x + 1.0 + lambda * (x - m)
}

/// Central finite difference of `f` along coordinate `i`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// Textbook circular convolution of a row-major image with a centred
/// kernel: `out[p] = Σ_q k[q] img[p - q]`, indices wrapped.
pub fn naive_circular_convolution(
    img: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
    kw: usize,
    kh: usize,
) -> Vec<f64> {
    let (rx, ry) = ((kw / 2) as isize, (kh / 2) as isize);
    let (w, h) = (width as isize, height as isize);
    let mut out = vec![0.0; width * height];
    for py in 0..h {
        for px in 0..w {
            let mut acc = 0.0;
            for ky in 0..kh as isize {
                for kx in 0..kw as isize {
                    let (dx, dy) = (kx - rx, ky - ry);
                    let sx = (px - dx).rem_euclid(w);
                    let sy = (py - dy).rem_euclid(h);
                    acc += kernel[(ky * kw as isize + kx) as usize] * img[(sy * w + sx) as usize];
                }
            }
            out[(py * w + px) as usize] = acc;
        }
    }
    out
}

/// `Σ_i (t_i - y_i ln t_i)` with the plain logarithm; valid for `t > 0`.
pub fn poisson_nll_plain(t: &[f64], y: &[f64]) -> f64 {
    t.iter()
        .zip(y)
        .map(|(&ti, &yi)| if yi == 0.0 { ti } else { ti - yi * ti.ln() })
        .sum()
}
