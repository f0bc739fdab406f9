//! Forward-mode automatic differentiation.
//!
//! Objectives are written once against [`Scalar`] and evaluated on
//! [`Dual`] (one pass per gradient coordinate) or [`Dual2`] (one pass per
//! pair of directions) to obtain gradients, Hessians and the mixed
//! parameter/weight Jacobian.

mod dual;
mod scalar;

pub use dual::{Dual, Dual2};
pub use scalar::Scalar;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Scalar objective `f(θ, w)` generic over the scalar type.
pub trait Objective: Sync {
    /// Number of parameters `D`.
    fn dim(&self) -> usize;

    /// Number of weights (`T` or `N`).
    fn num_weights(&self) -> usize;

    fn eval<S: Scalar>(&self, theta: &[S], w: &[S]) -> Result<S>;

    fn value(&self, theta: &[f64], w: &[f64]) -> Result<f64> {
        self.eval(theta, w)
    }
}

fn lift_dual(x: &[f64], seed: Option<usize>) -> Vec<Dual> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| Dual::new(v, if Some(i) == seed { 1.0 } else { 0.0 }))
        .collect()
}

fn lift_dual2(x: &[f64], u: Option<usize>, v: Option<usize>) -> Vec<Dual2> {
    x.iter()
        .enumerate()
        .map(|(i, &val)| {
            Dual2::new(
                val,
                if Some(i) == u { 1.0 } else { 0.0 },
                if Some(i) == v { 1.0 } else { 0.0 },
                0.0,
            )
        })
        .collect()
}

fn check_len<F: Objective>(f: &F, theta: &[f64], w: &[f64]) -> Result<()> {
    if theta.len() != f.dim() {
        return Err(Error::arg(format!(
            "parameter length {} does not match objective dimension {}",
            theta.len(),
            f.dim()
        )));
    }
    if w.len() != f.num_weights() {
        return Err(Error::arg(format!(
            "weight length {} does not match objective's {}",
            w.len(),
            f.num_weights()
        )));
    }
    Ok(())
}

fn finite_or(x: f64, context: &str, coordinate: usize) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Numerical {
            context: context.to_string(),
            coordinate: Some(coordinate),
        })
    }
}

/// Value and `∂f/∂θ`, one `Dual` pass per coordinate.
pub fn value_and_gradient<F: Objective>(f: &F, theta: &[f64], w: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(f, theta, w)?;
    let wd: Vec<Dual> = w.iter().map(|&x| Dual::cst(x)).collect();
    let passes: Vec<Result<Dual>> = (0..theta.len())
        .into_par_iter()
        .map(|d| f.eval(&lift_dual(theta, Some(d)), &wd))
        .collect();
    let mut grad = Vec::with_capacity(theta.len());
    let mut value = None;
    for (d, r) in passes.into_iter().enumerate() {
        let r = r?;
        value.get_or_insert(r.value);
        grad.push(finite_or(r.eps, "gradient", d)?);
    }
    let value = match value {
        Some(v) => v,
        None => f.value(theta, w)?,
    };
    if !value.is_finite() {
        return Err(Error::numerical("objective value"));
    }
    Ok((value, grad))
}

pub fn gradient<F: Objective>(f: &F, theta: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    value_and_gradient(f, theta, w).map(|(_, g)| g)
}

/// Hessian in `θ` before symmetrization; every entry from its own `Dual2` pass.
pub fn hessian_raw<F: Objective>(f: &F, theta: &[f64], w: &[f64]) -> Result<DMatrix<f64>> {
    check_len(f, theta, w)?;
    let dim = theta.len();
    let wd: Vec<Dual2> = w.iter().map(|&x| Dual2::cst(x)).collect();
    let entries: Vec<Result<f64>> = (0..dim * dim)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / dim, idx % dim);
            let r = f.eval(&lift_dual2(theta, Some(i), Some(j)), &wd)?;
            finite_or(r.duv, "hessian", i)
        })
        .collect();
    let mut h = DMatrix::zeros(dim, dim);
    for (idx, e) in entries.into_iter().enumerate() {
        h[(idx / dim, idx % dim)] = e?;
    }
    Ok(h)
}

/// Symmetric Hessian `∂²f/∂θ∂θᵀ`, symmetrized as `(H + Hᵀ)/2`.
pub fn hessian<F: Objective>(f: &F, theta: &[f64], w: &[f64]) -> Result<DMatrix<f64>> {
    let h = hessian_raw(f, theta, w)?;
    Ok(symmetrize(&h))
}

pub fn symmetrize(h: &DMatrix<f64>) -> DMatrix<f64> {
    (h + h.transpose()) * 0.5
}

/// Mixed Jacobian `J[d, t] = ∂²f/∂θ_d∂w_t`, one `Dual2` pass per entry.
pub fn mixed_jacobian<F: Objective>(f: &F, theta: &[f64], w: &[f64]) -> Result<DMatrix<f64>> {
    check_len(f, theta, w)?;
    let (dim, nw) = (theta.len(), w.len());
    let entries: Vec<Result<f64>> = (0..dim * nw)
        .into_par_iter()
        .map(|idx| {
            let (d, t) = (idx / nw, idx % nw);
            let th = lift_dual2(theta, Some(d), None);
            let wd: Vec<Dual2> = w
                .iter()
                .enumerate()
                .map(|(s, &x)| Dual2::new(x, 0.0, if s == t { 1.0 } else { 0.0 }, 0.0))
                .collect();
            let r = f.eval(&th, &wd)?;
            finite_or(r.duv, "mixed jacobian", d)
        })
        .collect();
    let mut j = DMatrix::zeros(dim, nw);
    for (idx, e) in entries.into_iter().enumerate() {
        j[(idx / nw, idx % nw)] = e?;
    }
    Ok(j)
}

/// Largest relative deviations of the autodiff derivatives from central
/// differences with the given step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdReport {
    pub gradient: f64,
    pub hessian: f64,
    pub mixed_jacobian: f64,
}

impl FdReport {
    pub fn max(&self) -> f64 {
        self.gradient.max(self.hessian).max(self.mixed_jacobian)
    }
}

/// Entrywise relative deviation of `a` from `b`; entries of `b` below a
/// thousandth of `b`'s largest magnitude are compared on that floor.
fn rel_dev(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-3 * scale))
        .fold(0.0, f64::max)
}

/// Compare autodiff derivatives against central differences with relative
/// step `step`.
///
/// The gradient is checked against differences of plain `f64` values. The
/// Hessian and mixed Jacobian (computed by `Dual2` passes) are checked
/// against differences of the `Dual` gradient, which keeps the oracle off the
/// second-order code path while avoiding the `ε/h²` rounding floor of nested
/// value differences.
pub fn fd_check<F: Objective>(f: &F, theta: &[f64], w: &[f64], step: f64) -> Result<FdReport> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::arg("finite-difference step must be positive"));
    }
    check_len(f, theta, w)?;
    let dim = theta.len();
    let nw = w.len();

    let grad = gradient(f, theta, w)?;
    let hess = hessian(f, theta, w)?;
    let jac = mixed_jacobian(f, theta, w)?;

    let mut fd_grad = Vec::with_capacity(dim);
    for d in 0..dim {
        let h = step * theta[d].abs().max(1.0);
        let mut p = theta.to_vec();
        let mut m = theta.to_vec();
        p[d] += h;
        m[d] -= h;
        fd_grad.push((f.value(&p, w)? - f.value(&m, w)?) / (2.0 * h));
    }

    let mut fd_hess = Vec::with_capacity(dim * dim);
    let mut ad_hess = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        let h = step * theta[i].abs().max(1.0);
        let mut p = theta.to_vec();
        let mut m = theta.to_vec();
        p[i] += h;
        m[i] -= h;
        let gp = gradient(f, &p, w)?;
        let gm = gradient(f, &m, w)?;
        for j in 0..dim {
            fd_hess.push((gp[j] - gm[j]) / (2.0 * h));
            ad_hess.push(hess[(i, j)]);
        }
    }

    let mut fd_jac = Vec::with_capacity(dim * nw);
    let mut ad_jac = Vec::with_capacity(dim * nw);
    for t in 0..nw {
        let h = step * w[t].abs().max(1.0);
        let mut p = w.to_vec();
        let mut m = w.to_vec();
        p[t] += h;
        m[t] -= h;
        let gp = gradient(f, theta, &p)?;
        let gm = gradient(f, theta, &m)?;
        for d in 0..dim {
            fd_jac.push((gp[d] - gm[d]) / (2.0 * h));
            ad_jac.push(jac[(d, t)]);
        }
    }

    Ok(FdReport {
        gradient: rel_dev(&grad, &fd_grad),
        hessian: rel_dev(&ad_hess, &fd_hess),
        mixed_jacobian: rel_dev(&ad_jac, &fd_jac),
    })
}
