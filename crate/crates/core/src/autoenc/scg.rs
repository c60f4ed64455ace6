//! Møller's scaled conjugate gradient for full-batch minimization.
//!
//! A step is only taken when the comparison ratio Δ is non-negative,
//! so the objective sequence never increases. The search direction is
//! reset to steepest descent every `n_params` accepted steps, or whenever
//! it stops being a descent direction.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScgOptions {
    pub max_iter: usize,
    /// Stop once the gradient norm drops below this.
    pub grad_tol: f64,
    pub sigma0: f64,
    pub lambda0: f64,
}

impl Default for ScgOptions {
    fn default() -> Self {
        ScgOptions {
            max_iter: 100,
            grad_tol: 1e-8,
            sigma0: 5e-5,
            lambda0: 5e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxIter,
    SmallGradient,
    /// The step scale grew without bound; no further progress possible.
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScgTrace {
    /// `objective[0]` is the starting value, then one entry per iteration.
    pub objective: Vec<f64>,
    pub accepted: usize,
    pub stop: StopReason,
}

impl ScgTrace {
    pub fn initial(&self) -> f64 {
        self.objective[0]
    }

    pub fn last(&self) -> f64 {
        *self.objective.last().unwrap()
    }

    /// Largest single-iteration increase (0 when monotone).
    pub fn max_increase(&self) -> f64 {
        self.objective
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(out: &mut [f64], w: &[f64], alpha: f64, p: &[f64]) {
    for ((o, &wi), &pi) in out.iter_mut().zip(w).zip(p) {
        *o = wi + alpha * pi;
    }
}

fn finite(iter: usize, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteLoss { epoch: iter, value })
    }
}

/// Minimizes `f`, which returns the objective and its gradient.
pub fn minimize<F>(w: &mut [f64], opts: &ScgOptions, mut f: F) -> Result<ScgTrace>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = w.len();
    let (mut e, g) = f(w);
    finite(0, e)?;
    let mut trace = ScgTrace {
        objective: vec![e],
        accepted: 0,
        stop: StopReason::MaxIter,
    };
    let mut r: Vec<f64> = g.iter().map(|x| -x).collect();
    let mut p = r.clone();
    let mut lambda = opts.lambda0;
    let mut lambda_bar = 0.0;
    let mut success = true;
    let mut delta = 0.0;
    let mut p2 = dot(&p, &p);
    let mut trial = vec![0.0; n];
    let mut since_restart = 0usize;

    for k in 1..=opts.max_iter {
        if dot(&r, &r).sqrt() < opts.grad_tol {
            trace.stop = StopReason::SmallGradient;
            break;
        }
        if success {
            let sigma = opts.sigma0 / p2.sqrt();
            axpy(&mut trial, w, sigma, &p);
            let (_, g_sigma) = f(&trial);
            // s = (E'(w + σp) - E'(w)) / σ, with E'(w) = -r
            delta = g_sigma.iter().zip(&r).zip(&p).map(|((gs, ri), pi)| pi * (gs + ri)).sum::<f64>() / sigma;
        }
        delta += (lambda - lambda_bar) * p2;
        if delta <= 0.0 {
            lambda_bar = 2.0 * (lambda - delta / p2);
            delta = -delta + lambda * p2;
            lambda = lambda_bar;
        }
        let mu = dot(&p, &r);
        let alpha = mu / delta;
        axpy(&mut trial, w, alpha, &p);
        let (e_new, g_new) = f(&trial);
        let e_new = finite(k, e_new)?;
        let cmp = 2.0 * delta * (e - e_new) / (mu * mu);

        if cmp >= 0.0 && e_new <= e {
            w.copy_from_slice(&trial);
            e = e_new;
            trace.accepted += 1;
            since_restart += 1;
            lambda_bar = 0.0;
            success = true;
            let r_new: Vec<f64> = g_new.iter().map(|x| -x).collect();
            let beta = (dot(&r_new, &r_new) - dot(&r_new, &r)) / mu;
            if since_restart >= n || beta.is_nan() {
                p.copy_from_slice(&r_new);
                since_restart = 0;
            } else {
                for (pi, ri) in p.iter_mut().zip(&r_new) {
                    *pi = ri + beta * *pi;
                }
            }
            r = r_new;
            if dot(&p, &r) <= 0.0 {
                p.copy_from_slice(&r);
                since_restart = 0;
            }
            p2 = dot(&p, &p);
            if cmp >= 0.75 {
                lambda *= 0.25;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if cmp < 0.25 {
            lambda += delta * (1.0 - cmp) / p2;
        }
        trace.objective.push(e);
        if !lambda.is_finite() || lambda > 1e100 {
            trace.stop = StopReason::Stalled;
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(w: &[f64]) -> (f64, Vec<f64>) {
        // diag(1, 10, 100) with minimum at (1, -2, 3)
        let c = [1.0, -2.0, 3.0];
        let d = [1.0, 10.0, 100.0];
        let e = (0..3).map(|i| 0.5 * d[i] * (w[i] - c[i]).powi(2)).sum();
        (e, (0..3).map(|i| d[i] * (w[i] - c[i])).collect())
    }

    #[test]
    fn solves_quadratic() {
        let mut w = vec![0.0; 3];
        let t = minimize(&mut w, &ScgOptions { max_iter: 50, ..Default::default() }, quadratic).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-6 && (w[1] + 2.0).abs() < 1e-6 && (w[2] - 3.0).abs() < 1e-6, "{w:?}");
        assert_eq!(t.max_increase(), 0.0);
        assert_eq!(t.stop, StopReason::SmallGradient);
    }

    #[test]
    fn rosenbrock_is_monotone() {
        let rosen = |w: &[f64]| {
            let (x, y) = (w[0], w[1]);
            let e = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
            (e, vec![-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)])
        };
        let mut w = vec![-1.2, 1.0];
        let t = minimize(&mut w, &ScgOptions { max_iter: 500, ..Default::default() }, rosen).unwrap();
        assert_eq!(t.max_increase(), 0.0);
        assert!(t.last() < 1e-6, "{}", t.last());
    }

    #[test]
    fn zero_iterations_is_identity() {
        let mut w = vec![0.5, 0.5, 0.5];
        let t = minimize(&mut w, &ScgOptions { max_iter: 0, ..Default::default() }, quadratic).unwrap();
        assert_eq!(w, vec![0.5; 3]);
        assert_eq!(t.objective.len(), 1);
    }

    #[test]
    fn non_finite_aborts() {
        let mut w = vec![1.0];
        let r = minimize(&mut w, &ScgOptions::default(), |_| (f64::NAN, vec![0.0]));
        assert!(matches!(r, Err(Error::NonFiniteLoss { epoch: 0, .. })));
    }
}
