//! Limited-memory BFGS on the negative weighted log posterior.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::{Cholesky, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::autodiff::{hessian, value_and_gradient, Objective};
use crate::data::ParamVector;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Stop once the gradient's largest entry is at most this.
    pub tol: f64,
    pub max_iters: usize,
    /// Number of curvature pairs kept.
    pub memory: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 1000,
            memory: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub theta: Vec<f64>,
    /// Negative log posterior.
    pub objective: f64,
    pub grad_norm: f64,
    /// Seconds since the fit started.
    pub elapsed: f64,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub theta_hat: ParamVector,
    /// Starting point first, then every accepted iterate.
    pub trajectory: Vec<Iterate>,
    pub converged: bool,
    pub grad_norm: f64,
}

impl FitResult {
    pub fn iterations(&self) -> usize {
        self.trajectory.len() - 1
    }
}

const ARMIJO: f64 = 1e-4;
/// Approximate Wolfe parameter used once the objective is flat to rounding.
const DELTA: f64 = 0.1;
const MAX_HALVINGS: usize = 50;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative objective and its gradient.
fn evaluate<F: Objective>(f: &F, theta: &[f64], w: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (v, g) = value_and_gradient(f, theta, w)?;
    Ok((-v, g.into_iter().map(|x| -x).collect()))
}

/// Two-loop recursion: `-H_k ∇` from the stored pairs, starting from the
/// preconditioner when one is given and from a scaled identity otherwise.
fn direction(grad: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, pre: Option<&Cholesky<f64, Dyn>>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(chol) = pre {
        q = chol.solve(&DVector::from_vec(q)).data.into();
    } else if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Maximize `f(·, w)` from `theta0`.
pub fn fit<F: Objective>(f: &F, w: &[f64], theta0: &[f64], opts: &FitOptions) -> Result<FitResult> {
    fit_preconditioned(f, w, theta0, opts, None)
}

/// [`fit`] with a factor of a positive definite approximation to the
/// negative Hessian (for example the full-data one when refitting a fold)
/// used as the initial curvature model.
pub fn fit_preconditioned<F: Objective>(
    f: &F,
    w: &[f64],
    theta0: &[f64],
    opts: &FitOptions,
    pre: Option<&Cholesky<f64, Dyn>>,
) -> Result<FitResult> {
    if pre.is_some_and(|c| c.l_dirty().nrows() != theta0.len()) {
        return Err(Error::arg("preconditioner size does not match the parameters"));
    }
    if !(opts.tol >= 0.0) || opts.memory == 0 {
        return Err(Error::arg("tolerance must be non-negative and memory positive"));
    }
    let start = Instant::now();
    let mut theta = theta0.to_vec();
    let (mut value, mut grad) = evaluate(f, &theta, w)?;
    let mut gnorm = inf_norm(&grad);
    let mut trajectory = vec![Iterate {
        theta: theta.clone(),
        objective: value,
        grad_norm: gnorm,
        elapsed: 0.0,
    }];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iters = 0;
    let mut steepest = false;
    let mut local: Option<Cholesky<f64, Dyn>> = None;
    let mut polished = false;
    while gnorm > opts.tol && iters < opts.max_iters {
        let noise = 1e-13 * value.abs().max(1.0);
        let mut d = if steepest { Vec::new() } else { direction(&grad, &pairs, pre.or(local.as_ref())) };
        let mut slope = dot(&grad, &d);
        if !steepest && -slope <= noise {
            // curvature pairs built from steps this small are mostly gradient
            // rounding; switch to Newton-like steps on a fixed curvature model
            if pre.is_none() && !polished {
                polished = true;
                local = hessian(f, &theta, w).ok().and_then(|h| Cholesky::new(-h));
            }
            if let Some(chol) = pre.or(local.as_ref()) {
                pairs.clear();
                d = direction(&grad, &pairs, Some(chol));
                slope = dot(&grad, &d);
            }
        }
        if steepest || !(slope < 0.0) {
            pairs.clear();
            d = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &d);
        }
        let plain = pairs.is_empty() && (steepest || pre.or(local.as_ref()).is_none());
        let mut step = if plain { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di).collect();
            if trial == theta {
                break;
            }
            if let Ok((v, g)) = evaluate(f, &trial, w) {
                // near the optimum the predicted decrease drops below rounding
                // of the objective, so the directional derivative decides
                let ok = if -step * slope > noise {
                    v <= value + ARMIJO * step * slope
                } else {
                    v <= value + 1e3 * noise && dot(&g, &d) <= (2.0 * DELTA - 1.0) * slope
                };
                if ok {
                    accepted = Some((trial, v, g));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, v, g)) = accepted else {
            if !pairs.is_empty() {
                pairs.clear();
                continue;
            }
            if !plain {
                steepest = true;
                continue;
            }
            return Err(Error::Optimization {
                message: format!("line search failed after {MAX_HALVINGS} halvings"),
                last_iterate: theta,
            });
        };
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        steepest = false;
        theta = next;
        value = v;
        grad = g;
        gnorm = inf_norm(&grad);
        iters += 1;
        trajectory.push(Iterate {
            theta: theta.clone(),
            objective: value,
            grad_norm: gnorm,
            elapsed: start.elapsed().as_secs_f64(),
        });
    }
    Ok(FitResult {
        theta_hat: ParamVector::new(theta)?,
        trajectory,
        converged: gnorm <= opts.tol,
        grad_norm: gnorm,
    })
}

/// The `s`-th recorded iterate, counting the starting point as `s = 1`.
pub fn truncate_at(fit: &FitResult, s: usize) -> Result<ParamVector> {
    if s == 0 || s > fit.trajectory.len() {
        return Err(Error::arg(format!(
            "iterate {s} outside 1..={}",
            fit.trajectory.len()
        )));
    }
    ParamVector::new(fit.trajectory[s - 1].theta.clone())
}
