//! Infinitesimal-jackknife and Newton-step approximations to refits.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::autodiff::{gradient, hessian, Objective};
use crate::data::{fold_to_weights, Fold, ParamVector};
use crate::error::{Error, Result};
use crate::problem::CvObjective;

/// Ridges tried, in order, when `-H` is not numerically positive definite.
pub const RIDGE_LADDER: [f64; 4] = [1e-5, 1e-4, 1e-3, 1e-2];

/// Smallest accepted squared Cholesky pivot relative to the largest
/// diagonal entry.
const PIVOT_FLOOR: f64 = 1e-10;

/// Derivatives of the log posterior at `(θ₁, w = 1)`.
#[derive(Clone, Debug)]
pub struct HessianBundle {
    /// `∂² log posterior / ∂Θ∂Θᵀ`.
    pub hessian: DMatrix<f64>,
    /// Factor of `-H + ridge·I`.
    pub chol: Cholesky<f64, Dyn>,
    /// `J[d, t] = ∂² log posterior / ∂Θ_d ∂w_t`.
    pub jacobian: DMatrix<f64>,
    pub ridge: f64,
}

fn cholesky_checked(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = m.diagonal().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let ok = (0..m.nrows()).all(|i| {
        let p = l[(i, i)] * l[(i, i)];
        p.is_finite() && p > PIVOT_FLOOR * scale
    });
    ok.then_some(chol)
}

/// Cholesky factor of `-H`, adding the smallest ridge from
/// [`RIDGE_LADDER`] that makes it succeed.
pub fn factor_negative(h: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if !h.is_square() || h.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("hessian"));
    }
    let neg = -h;
    if let Some(c) = cholesky_checked(&neg) {
        return Ok((c, 0.0));
    }
    for &ridge in &RIDGE_LADDER {
        let mut m = neg.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
        if let Some(c) = cholesky_checked(&m) {
            return Ok((c, ridge));
        }
    }
    Err(Error::SingularHessian {
        ridge: RIDGE_LADDER[RIDGE_LADDER.len() - 1],
    })
}

impl HessianBundle {
    /// Assemble from precomputed derivatives.
    pub fn from_parts(hessian: DMatrix<f64>, jacobian: DMatrix<f64>) -> Result<Self> {
        if jacobian.nrows() != hessian.nrows() {
            return Err(Error::arg("jacobian and hessian disagree on the parameter dimension"));
        }
        let (chol, ridge) = factor_negative(&hessian)?;
        Ok(Self {
            hessian,
            chol,
            jacobian,
            ridge,
        })
    }

    /// Generic second-order autodiff for any objective.
    pub fn from_objective<F: Objective>(f: &F, theta1: &[f64]) -> Result<Self> {
        let ones = vec![1.0; f.num_weights()];
        let h = hessian(f, theta1, &ones)?;
        let j = crate::autodiff::mixed_jacobian(f, theta1, &ones)?;
        Self::from_parts(h, j)
    }

    pub fn dim(&self) -> usize {
        self.hessian.nrows()
    }

    pub fn num_weights(&self) -> usize {
        self.jacobian.ncols()
    }
}

/// `H` and `J` at `θ₁`, using the chain fast path for `J` where it applies.
pub fn build_bundle<F: CvObjective>(problem: &F, theta1: &[f64]) -> Result<HessianBundle> {
    ParamVector::new(theta1.to_vec())?;
    let h = hessian(problem, theta1, &vec![1.0; problem.num_weights()])?;
    let j = problem.weight_jacobian(theta1)?;
    HessianBundle::from_parts(h, j)
}

/// `θ₁ + Σ_{t∈o} H⁻¹ J_t`: the columns are summed first and one solve
/// against the stored factor of `-H` is made.
pub fn ij_params(bundle: &HessianBundle, theta1: &[f64], fold: &Fold) -> Result<ParamVector> {
    if theta1.len() != bundle.dim() {
        return Err(Error::arg("parameter length does not match the bundle"));
    }
    fold.check_range(bundle.num_weights())?;
    if fold.is_empty() {
        return ParamVector::new(theta1.to_vec());
    }
    let mut rhs = DVector::zeros(bundle.dim());
    for &t in fold.indices() {
        rhs += bundle.jacobian.column(t);
    }
    let step = bundle.chol.solve(&rhs);
    ParamVector::new(theta1.iter().zip(step.iter()).map(|(a, s)| a - s).collect())
}

/// One Newton step on the leave-out objective from `θ₁`, with the Hessian
/// recomputed at `w_o`.
pub fn ns_params_objective<F: Objective>(f: &F, theta1: &[f64], w_o: &[f64]) -> Result<ParamVector> {
    let h = hessian(f, theta1, w_o)?;
    let g = gradient(f, theta1, w_o)?;
    let (chol, _) = factor_negative(&h)?;
    let step = chol.solve(&DVector::from_vec(g));
    ParamVector::new(theta1.iter().zip(step.iter()).map(|(a, s)| a + s).collect())
}

pub fn ns_params<F: Objective>(problem: &F, theta1: &[f64], fold: &Fold) -> Result<ParamVector> {
    let w_o = fold_to_weights(fold, problem.num_weights())?;
    ns_params_objective(problem, theta1, &w_o)
}
