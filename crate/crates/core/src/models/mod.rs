//! Concrete model families and their synthetic data generators.

pub mod crf;
pub mod event;
pub mod hmm;
pub mod priors;
pub mod spatial;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::data::{Scheme, Structure, StructuredDataset};
use crate::error::{Error, Result};
use crate::marginal::{chain, weighted_log_marginal};
use crate::model::{Model, ModelKind, Potentials};

pub use crf::Crf;
pub use event::EventHmm;
pub use hmm::{Emission, Hmm};
pub use spatial::SpatialIsing;

/// Log-probabilities of a softmax whose last logit is pinned to zero.
pub(crate) fn log_softmax_gauged<S: Scalar>(logits: &[S]) -> Vec<S> {
    let mut full = logits.to_vec();
    full.push(S::zero());
    let lse = S::log_sum_exp(&full);
    full.into_iter().map(|v| v - lse).collect()
}

/// Inverse of [`log_softmax_gauged`] for a strictly positive distribution.
pub(crate) fn gauged_logits(probs: &[f64]) -> Result<Vec<f64>> {
    let last = *probs.last().ok_or_else(|| Error::arg("empty distribution"))?;
    if probs.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::arg("distribution must be strictly positive"));
    }
    Ok(probs[..probs.len() - 1].iter().map(|p| (p / last).ln()).collect())
}

/// Independent generator for structure `n` of a dataset drawn with `seed`.
pub(crate) fn structure_rng(seed: u64, n: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng
}

pub(crate) fn is_count(x: f64) -> bool {
    x >= 0.0 && x.fract() == 0.0 && x.is_finite()
}

/// `log p(x; Θ, w)` of one structure.
pub fn structure_weighted_log_marginal<M: Model, S: Scalar>(
    model: &M,
    s: &Structure,
    theta: &[S],
    w: &[S],
    scheme: Scheme,
) -> Result<S> {
    if model.kind() == ModelKind::Crf {
        return Err(Error::arg("within-structure weights are not defined for conditional models"));
    }
    let pot = model.potentials(theta, s)?;
    weighted_log_marginal(&pot, w, scheme)
}

/// Per-structure log-likelihood: `log p(x_n; Θ)` for hidden-variable
/// models, `log p(z_n | x_n; Θ)` for conditional ones.
pub fn structure_log_lik<M: Model, S: Scalar>(model: &M, s: &Structure, theta: &[S]) -> Result<S> {
    let pot = model.potentials(theta, s)?;
    match model.kind() {
        ModelKind::HiddenMrf => {
            let ones = vec![S::cst(1.0); pot.len()];
            weighted_log_marginal(&pot, &ones, Scheme::A)
        }
        ModelKind::Crf => {
            let labels = s
                .labels
                .as_deref()
                .ok_or_else(|| Error::arg("conditional model needs labels"))?;
            conditional_log_lik(&pot, labels)
        }
    }
}

/// `score(z) − log Z(x)` for a labelled chain.
pub fn conditional_log_lik<S: Scalar>(pot: &Potentials<S>, labels: &[usize]) -> Result<S> {
    if labels.len() != pot.len() || labels.iter().any(|&z| z >= pot.states) {
        return Err(Error::arg("labels do not match the chain"));
    }
    let ones = vec![S::cst(1.0); pot.len()];
    let log_z = chain::forward_table(pot, &ones, Scheme::A)?.log_marginal();
    let mut score = S::zero();
    for (t, &z) in labels.iter().enumerate() {
        score += pot.emission(t, z) + pot.latent(t, z);
    }
    for (e, &(a, b)) in pot.edges.iter().enumerate() {
        score += pot.pair(e, labels[a], labels[b]);
    }
    let out = score - log_z;
    if !out.is_finite() {
        return Err(Error::numerical("conditional log-likelihood"));
    }
    Ok(out)
}

/// Any of the bundled families, for configuration-driven dispatch.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AnyModel {
    Hmm(Hmm),
    Event(EventHmm),
    Spatial(SpatialIsing),
    Crf(Crf),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            AnyModel::Hmm($m) => $body,
            AnyModel::Event($m) => $body,
            AnyModel::Spatial($m) => $body,
            AnyModel::Crf($m) => $body,
        }
    };
}

impl Model for AnyModel {
    fn name(&self) -> &'static str {
        dispatch!(self, m => m.name())
    }

    fn kind(&self) -> ModelKind {
        dispatch!(self, m => m.kind())
    }

    fn num_params(&self) -> usize {
        dispatch!(self, m => m.num_params())
    }

    fn num_states(&self) -> usize {
        dispatch!(self, m => m.num_states())
    }

    fn potentials<S: Scalar>(&self, theta: &[S], s: &Structure) -> Result<Potentials<S>> {
        dispatch!(self, m => m.potentials(theta, s))
    }

    fn log_prior<S: Scalar>(&self, theta: &[S]) -> S {
        dispatch!(self, m => m.log_prior(theta))
    }

    fn validate_data(&self, data: &StructuredDataset) -> Result<()> {
        dispatch!(self, m => m.validate_data(data))
    }

    fn initial_params(&self, data: &StructuredDataset) -> Vec<f64> {
        dispatch!(self, m => m.initial_params(data))
    }
}
