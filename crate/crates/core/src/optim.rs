//! Limited-memory BFGS with backtracking Armijo line search.
//!
//! Search directions come from the two-loop recursion over the most recent
//! `memory` curvature pairs, with the initial inverse Hessian scaled by
//! `γ = sᵀy / yᵀy` of the newest pair (identity before any pair exists).
//! Pairs with `sᵀy ≤ 1e-10 ‖s‖‖y‖` are skipped.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop once `‖∇f‖∞ ≤ grad_tol · (1 + ‖∇f(x0)‖∞)`.
    pub grad_tol: f64,
    pub armijo_c1: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 8,
            max_iters: 100,
            grad_tol: 1e-6,
            armijo_c1: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        let ok = self.memory >= 1
            && self.grad_tol > 0.0
            && self.armijo_c1 > 0.0
            && self.armijo_c1 < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.max_backtracks >= 1;
        if ok {
            Ok(())
        } else {
            Err(OptimError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid L-BFGS configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite {
        what: &'static str,
        iteration: usize,
        /// Iterate at which the non-finite quantity was produced.
        snapshot: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step satisfying the Armijo condition was found, even along the
    /// steepest-descent direction. The current iterate is returned.
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub struct Diagnostics {
    pub iterations: usize,
    pub evaluations: usize,
    pub initial_value: f64,
    pub final_value: f64,
    pub grad_inf_norm: f64,
    pub termination: Termination,
}

pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }
}

/// Adapts a pair of closures to [`Objective`].
pub struct FnObjective<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> Objective for FnObjective<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `-H g` by the two-loop recursion.
fn two_loop(grad: &[f64], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for p in pairs.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        q.iter_mut().zip(&p.y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some(last) = pairs.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (p, a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        q.iter_mut()
            .zip(&p.s)
            .for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    x0: Vec<f64>,
    cfg: &LbfgsConfig,
) -> Result<(Vec<f64>, Diagnostics), OptimError> {
    cfg.validate()?;
    let mut x = x0;
    let (mut f, mut g) = objective.value_and_gradient(&x);
    let mut evaluations = 1;
    if !f.is_finite() {
        return Err(OptimError::NonFinite {
            what: "objective",
            iteration: 0,
            snapshot: x,
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(OptimError::NonFinite {
            what: "gradient",
            iteration: 0,
            snapshot: x,
        });
    }
    let initial_value = f;
    let tol = cfg.grad_tol * (1.0 + inf_norm(&g));
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;

    let termination = loop {
        if inf_norm(&g) <= tol {
            break Termination::Converged;
        }
        if iterations >= cfg.max_iters {
            break Termination::MaxIterations;
        }

        let mut direction = two_loop(&g, &pairs);
        let mut slope = dot(&g, &direction);
        if !(slope < 0.0) {
            pairs.clear();
            direction = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let mut step = 1.0;
            for _ in 0..cfg.max_backtracks {
                let trial: Vec<f64> = x
                    .iter()
                    .zip(&direction)
                    .map(|(xi, di)| xi + step * di)
                    .collect();
                let ft = objective.value(&trial);
                evaluations += 1;
                if ft.is_finite() && ft <= f + cfg.armijo_c1 * step * slope {
                    accepted = Some((trial, ft));
                    break;
                }
                step *= cfg.shrink;
            }
            if accepted.is_some() || attempt == 1 || pairs.is_empty() {
                break;
            }
            // Quasi-Newton direction failed: retry along steepest descent.
            pairs.clear();
            direction = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let Some((x_new, f_new)) = accepted else {
            break Termination::LineSearchFailed;
        };

        let g_new = objective.gradient(&x_new);
        if g_new.iter().any(|v| !v.is_finite()) {
            return Err(OptimError::NonFinite {
                what: "gradient",
                iteration: iterations + 1,
                snapshot: x_new,
            });
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back(Pair {
                s,
                y,
                rho: 1.0 / sy,
            });
        }
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
    };

    Ok((
        x,
        Diagnostics {
            iterations,
            evaluations,
            initial_value,
            final_value: f,
            grad_inf_norm: inf_norm(&g),
            termination,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Shifted {
        centre: Vec<f64>,
    }

    impl Objective for Shifted {
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * x
                .iter()
                .zip(&self.centre)
                .map(|(a, c)| (a - c).powi(2))
                .sum::<f64>()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.centre).map(|(a, c)| a - c).collect()
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn value(&self, x: &[f64]) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        }
    }

    #[test]
    fn quadratic_converges_fast() {
        let obj = Shifted {
            centre: vec![1.0, -2.0, 3.5, 0.25],
        };
        for x0 in [vec![0.0; 4], vec![100.0, -50.0, 7.0, 1e3]] {
            let (x, d) = minimize(&obj, x0, &LbfgsConfig::default()).unwrap();
            assert!(d.iterations <= 5);
            for (a, c) in x.iter().zip(&obj.centre) {
                assert!((a - c).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let cfg = LbfgsConfig {
            max_iters: 1000,
            grad_tol: 1e-12,
            ..Default::default()
        };
        let (x, d) = minimize(&Rosenbrock, vec![-1.2, 1.0], &cfg).unwrap();
        assert!(
            (x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5,
            "{x:?} {d:?}"
        );
        assert!(d.final_value <= d.initial_value);
    }

    #[test]
    fn optimal_start_takes_no_steps() {
        let obj = Shifted {
            centre: vec![2.0, 3.0],
        };
        let (x, d) = minimize(&obj, vec![2.0, 3.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(x, vec![2.0, 3.0]);
        assert_eq!(d.iterations, 0);
        assert_eq!(d.termination, Termination::Converged);
    }

    #[test]
    fn objective_never_increases() {
        // Anisotropic quartic bowl; track values through max_iters = k.
        let obj = FnObjective {
            value: |x: &[f64]| x[0].powi(4) + 10.0 * x[1] * x[1] + (x[0] - x[1]).powi(2),
            gradient: |x: &[f64]| {
                vec![
                    4.0 * x[0].powi(3) + 2.0 * (x[0] - x[1]),
                    20.0 * x[1] - 2.0 * (x[0] - x[1]),
                ]
            },
        };
        let mut last = f64::INFINITY;
        for k in 0..15 {
            let cfg = LbfgsConfig {
                max_iters: k,
                ..Default::default()
            };
            let (_, d) = minimize(&obj, vec![3.0, -2.0], &cfg).unwrap();
            assert!(d.final_value <= last);
            last = d.final_value;
        }
    }

    #[test]
    fn single_pair_scales_by_gamma() {
        let mut pairs = VecDeque::new();
        pairs.push_back(Pair {
            s: vec![0.5],
            y: vec![2.0],
            rho: 1.0,
        });
        pairs[0].rho = 1.0 / dot(&pairs[0].s, &pairs[0].y);
        let d = two_loop(&[3.0], &pairs);
        assert!((d[0] + 0.25 * 3.0).abs() < 1e-15);
        assert_eq!(two_loop(&[3.0, -1.0], &VecDeque::new()), vec![-3.0, 1.0]);
    }

    #[test]
    fn deterministic_sequence() {
        let run = || minimize(&Rosenbrock, vec![-1.2, 1.0], &LbfgsConfig::default()).unwrap();
        let (a, da) = run();
        let (b, db) = run();
        assert_eq!(a, b);
        assert_eq!(da.evaluations, db.evaluations);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let obj = FnObjective {
            value: |x: &[f64]| x[0].ln(),
            gradient: |x: &[f64]| vec![1.0 / x[0]],
        };
        let err = minimize(&obj, vec![-1.0], &LbfgsConfig::default()).unwrap_err();
        match err {
            OptimError::NonFinite { snapshot, .. } => assert_eq!(snapshot, vec![-1.0]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = LbfgsConfig {
            memory: 0,
            ..Default::default()
        };
        assert!(minimize(&Rosenbrock, vec![0.0, 0.0], &cfg).is_err());
    }
}
