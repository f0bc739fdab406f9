//! Weighted marginal likelihoods `log p(x; Θ, w)`.

pub mod chain;
pub mod graph;

use crate::autodiff::Scalar;
use crate::data::Scheme;
use crate::error::Result;
use crate::model::Potentials;

/// Dispatch to the forward recursion on chains and to elimination elsewhere.
pub fn weighted_log_marginal<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme) -> Result<S> {
    if pot.is_chain() {
        chain::weighted_forward(pot, w, scheme)
    } else {
        graph::eliminate_weighted(pot, w, scheme, None)
    }
}
