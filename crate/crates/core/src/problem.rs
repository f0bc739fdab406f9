//! A model, its data and a weighting target bundled as one weighted log
//! posterior.

use rayon::prelude::*;

use crate::autodiff::{Dual, Objective, Scalar};
use crate::data::{fold_to_weights, Fold, FoldPlan, Scheme, StructuredDataset, Target};
use crate::error::{Error, Result};
use crate::marginal::chain;
use crate::model::{Model, ModelKind};
use crate::models::{structure_log_lik, structure_weighted_log_marginal};

/// `log p(Θ) + weighted log-likelihood`, with weights on the positions of
/// one structure (leave-within-structure-out) or on whole structures
/// (leave-structure-out).
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a, M> {
    pub model: &'a M,
    pub data: &'a StructuredDataset,
    pub target: Target,
    pub scheme: Scheme,
}

impl<'a, M: Model> Problem<'a, M> {
    pub fn new(model: &'a M, data: &'a StructuredDataset, target: Target, scheme: Scheme) -> Result<Self> {
        model.validate_data(data)?;
        match target {
            Target::Within { structure } => {
                if structure >= data.len() {
                    return Err(Error::arg(format!("no structure {structure} in a dataset of {}", data.len())));
                }
                if model.kind() == ModelKind::Crf {
                    return Err(Error::arg("conditional models support leave-structure-out weights only"));
                }
            }
            Target::Structures => {}
        }
        Ok(Self {
            model,
            data,
            target,
            scheme,
        })
    }

    /// Leave-within-structure-out problem on the only structure.
    pub fn within(model: &'a M, data: &'a StructuredDataset, scheme: Scheme) -> Result<Self> {
        Self::new(model, data, Target::Within { structure: 0 }, scheme)
    }

    pub fn across(model: &'a M, data: &'a StructuredDataset) -> Result<Self> {
        Self::new(model, data, Target::Structures, Scheme::A)
    }

    pub fn weight_len(&self) -> usize {
        match self.target {
            Target::Within { structure } => self.data.structures[structure].len(),
            Target::Structures => self.data.len(),
        }
    }

    pub fn ones(&self) -> Vec<f64> {
        vec![1.0; self.weight_len()]
    }

    pub fn fold_weights(&self, fold: &Fold) -> Result<Vec<f64>> {
        fold_to_weights(fold, self.weight_len())
    }

    /// Mixed Jacobian `∂²/∂Θ∂w` at `w = 1`.
    ///
    /// Chains use one forward-backward sweep per parameter direction;
    /// other graphs fall back to the generic second-order passes.
    pub fn jacobian(&self, theta: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let dim = self.dim();
        match self.target {
            Target::Within { structure } => {
                let s = &self.data.structures[structure];
                if !s.is_chain() {
                    return crate::autodiff::mixed_jacobian(self, theta, &self.ones());
                }
                let n = s.len();
                let ones = vec![Dual::cst(1.0); n];
                let rows: Vec<Result<Vec<f64>>> = (0..dim)
                    .into_par_iter()
                    .map(|d| {
                        let th: Vec<Dual> = theta
                            .iter()
                            .enumerate()
                            .map(|(i, &v)| Dual::new(v, if i == d { 1.0 } else { 0.0 }))
                            .collect();
                        let pot = self.model.potentials(&th, s)?;
                        let g = chain::weight_gradient(&pot, &ones, self.scheme)?;
                        Ok(g.into_iter().map(|x| x.eps).collect())
                    })
                    .collect();
                let mut j = nalgebra::DMatrix::zeros(dim, n);
                for (d, row) in rows.into_iter().enumerate() {
                    for (t, v) in row?.into_iter().enumerate() {
                        if !v.is_finite() {
                            return Err(Error::Numerical {
                                context: "mixed jacobian".into(),
                                coordinate: Some(d),
                            });
                        }
                        j[(d, t)] = v;
                    }
                }
                Ok(j)
            }
            Target::Structures => {
                let cols: Vec<Result<Vec<f64>>> = self
                    .data
                    .structures
                    .par_iter()
                    .map(|s| {
                        let single = StructureLogLik { model: self.model, structure: s };
                        crate::autodiff::gradient(&single, theta, &[])
                    })
                    .collect();
                let mut j = nalgebra::DMatrix::zeros(dim, self.data.len());
                for (n, col) in cols.into_iter().enumerate() {
                    for (d, v) in col?.into_iter().enumerate() {
                        j[(d, n)] = v;
                    }
                }
                Ok(j)
            }
        }
    }

    /// `-log p(x_o | x_{-o}; Θ)` for a within-structure fold, or the summed
    /// negative log-likelihood of the left-out structures.
    pub fn fold_loss(&self, theta: &[f64], fold: &Fold) -> Result<f64> {
        match self.target {
            Target::Within { structure } => {
                if fold.is_empty() {
                    return Ok(0.0);
                }
                let s = &self.data.structures[structure];
                let w_o = self.fold_weights(fold)?;
                let full = structure_weighted_log_marginal(self.model, s, theta, &vec![1.0; s.len()], self.scheme)?;
                let kept = structure_weighted_log_marginal(self.model, s, theta, &w_o, self.scheme)?;
                finite(kept - full, "fold loss")
            }
            Target::Structures => {
                fold.check_range(self.data.len())?;
                let mut total = 0.0;
                for &n in fold.indices() {
                    total -= structure_log_lik(self.model, &self.data.structures[n], theta)?;
                }
                finite(total, "fold loss")
            }
        }
    }

    /// One loss per left-out index, in fold order: `-log p(x_t | x_{-o})`
    /// within a structure, `-log p(x_n)` (or `-log p(z_n | x_n)`) across.
    pub fn point_losses(&self, theta: &[f64], fold: &Fold) -> Result<Vec<f64>> {
        match self.target {
            Target::Within { structure } => {
                let s = &self.data.structures[structure];
                let w_o = self.fold_weights(fold)?;
                if self.scheme == Scheme::A && s.is_chain() {
                    let pot = self.model.potentials(theta, s)?;
                    return chain::heldout_log_probs(&pot, &w_o, fold.indices())?
                        .into_iter()
                        .map(|lp| finite(-lp, "point loss"))
                        .collect();
                }
                let base = structure_weighted_log_marginal(self.model, s, theta, &w_o, self.scheme)?;
                fold.indices()
                    .iter()
                    .map(|&t| {
                        let mut w = w_o.clone();
                        w[t] = 1.0;
                        let with = structure_weighted_log_marginal(self.model, s, theta, &w, self.scheme)?;
                        finite(base - with, "point loss")
                    })
                    .collect()
            }
            Target::Structures => {
                fold.check_range(self.data.len())?;
                fold.indices()
                    .iter()
                    .map(|&n| Ok(-structure_log_lik(self.model, &self.data.structures[n], theta)?))
                    .collect()
            }
        }
    }
}

fn finite(v: f64, context: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numerical(context))
    }
}

impl<M: Model> Objective for Problem<'_, M> {
    fn dim(&self) -> usize {
        self.model.num_params()
    }

    fn num_weights(&self) -> usize {
        self.weight_len()
    }

    fn eval<S: Scalar>(&self, theta: &[S], w: &[S]) -> Result<S> {
        let mut total = self.model.log_prior(theta);
        match self.target {
            Target::Within { structure } => {
                for (n, s) in self.data.structures.iter().enumerate() {
                    total += if n == structure {
                        structure_weighted_log_marginal(self.model, s, theta, w, self.scheme)?
                    } else {
                        structure_log_lik(self.model, s, theta)?
                    };
                }
            }
            Target::Structures => {
                for (s, &wn) in self.data.structures.iter().zip(w) {
                    if wn != S::zero() {
                        total += wn * structure_log_lik(self.model, s, theta)?;
                    }
                }
            }
        }
        Ok(total)
    }
}

/// What cross-validation needs from a weighted objective: its mixed
/// Jacobian and the loss of the left-out indices.
pub trait CvObjective: Objective + Sync + Sized {
    fn weight_jacobian(&self, theta: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        crate::autodiff::mixed_jacobian(self, theta, &vec![1.0; self.num_weights()])
    }

    /// Loss of the whole fold at `theta`.
    fn fold_loss(&self, theta: &[f64], fold: &Fold) -> Result<f64>;

    /// One loss per left-out index, in fold order.
    fn point_losses(&self, theta: &[f64], fold: &Fold) -> Result<Vec<f64>>;

    /// Reject plans this objective cannot evaluate.
    fn check_plan(&self, plan: &FoldPlan) -> Result<()> {
        plan.folds.iter().try_for_each(|f| f.check_range(self.num_weights()))
    }
}

impl<M: Model> CvObjective for Problem<'_, M> {
    fn weight_jacobian(&self, theta: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        self.jacobian(theta)
    }

    fn fold_loss(&self, theta: &[f64], fold: &Fold) -> Result<f64> {
        Problem::fold_loss(self, theta, fold)
    }

    fn point_losses(&self, theta: &[f64], fold: &Fold) -> Result<Vec<f64>> {
        Problem::point_losses(self, theta, fold)
    }

    fn check_plan(&self, plan: &FoldPlan) -> Result<()> {
        if plan.target != self.target {
            return Err(Error::arg("fold plan and problem target differ"));
        }
        if plan.scheme != self.scheme && self.target != Target::Structures {
            return Err(Error::arg("fold plan and problem scheme differ"));
        }
        plan.check(self.data)
    }
}

/// Unweighted log-likelihood of a single structure, without the prior.
pub struct StructureLogLik<'a, M> {
    pub model: &'a M,
    pub structure: &'a crate::data::Structure,
}

impl<M: Model> Objective for StructureLogLik<'_, M> {
    fn dim(&self) -> usize {
        self.model.num_params()
    }

    fn num_weights(&self) -> usize {
        0
    }

    fn eval<S: Scalar>(&self, theta: &[S], _w: &[S]) -> Result<S> {
        structure_log_lik(self.model, self.structure, theta)
    }
}
