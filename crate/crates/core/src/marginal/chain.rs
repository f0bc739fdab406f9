//! Weighted forward algorithm for chain-structured models, in log space.
//!
//! Under scheme A only emission factors carry weights. Under scheme B the
//! latent unary factor of `t` is multiplied by `w_t` and the transition
//! factor between `t-1` and `t` by `w_{t-1} w_t`. The returned log marginal
//! subtracts the weighted latent-only log normalizer whenever it can differ
//! from zero (scheme B, or a prior that is not normalized), so dropped
//! latents never contribute a spurious `log K`.

use crate::autodiff::Scalar;
use crate::data::{Fold, Scheme};
use crate::error::{Error, Result};
use crate::model::Potentials;

/// `log α_{tk}` for every position and state.
#[derive(Clone, Debug)]
pub struct ForwardTable<S> {
    pub states: usize,
    pub log_alpha: Vec<S>,
}

impl<S: Scalar> ForwardTable<S> {
    pub fn row(&self, t: usize) -> &[S] {
        &self.log_alpha[t * self.states..(t + 1) * self.states]
    }

    pub fn len(&self) -> usize {
        self.log_alpha.len() / self.states
    }

    pub fn is_empty(&self) -> bool {
        self.log_alpha.is_empty()
    }

    pub fn log_marginal(&self) -> S {
        S::log_sum_exp(self.row(self.len() - 1))
    }
}

fn check<S: Scalar>(pot: &Potentials<S>, w: &[S]) -> Result<()> {
    pot.validate()?;
    if !pot.is_chain() {
        return Err(Error::arg("weighted forward algorithm needs a chain graph"));
    }
    if w.len() != pot.len() {
        return Err(Error::arg(format!(
            "weight length {} does not match chain length {}",
            w.len(),
            pot.len()
        )));
    }
    if pot.is_empty() {
        return Err(Error::arg("empty chain"));
    }
    Ok(())
}

/// Multiplier of the latent unary factor at `t`.
#[inline]
fn unary_weight<S: Scalar>(scheme: Scheme, w: &[S], t: usize) -> S {
    match scheme {
        Scheme::A => S::cst(1.0),
        Scheme::B => w[t],
    }
}

/// Multiplier of the transition factor into `t` (from `t - 1`).
#[inline]
fn pair_weight<S: Scalar>(scheme: Scheme, w: &[S], t: usize) -> S {
    match scheme {
        Scheme::A => S::cst(1.0),
        Scheme::B => w[t - 1] * w[t],
    }
}

/// Weighted local log-factor of state `k` at `t`.
#[inline]
fn local<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme, with_emission: bool, t: usize, k: usize) -> S {
    let u = unary_weight(scheme, w, t) * pot.latent(t, k);
    if with_emission {
        w[t] * pot.emission(t, k) + u
    } else {
        u
    }
}

fn forward<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme, with_emission: bool) -> ForwardTable<S> {
    let k = pot.states;
    let n = pot.len();
    let mut log_alpha = Vec::with_capacity(n * k);
    for s in 0..k {
        log_alpha.push(local(pot, w, scheme, with_emission, 0, s));
    }
    let mut terms = vec![S::zero(); k];
    for t in 1..n {
        let c = pair_weight(scheme, w, t);
        let prev = (t - 1) * k;
        for s in 0..k {
            for (l, term) in terms.iter_mut().enumerate() {
                *term = log_alpha[prev + l] + c * pot.pair(t - 1, l, s);
            }
            let v = local(pot, w, scheme, with_emission, t, s) + S::log_sum_exp(&terms);
            log_alpha.push(v);
        }
    }
    ForwardTable { states: k, log_alpha }
}

fn needs_normalizer<S>(pot: &Potentials<S>, scheme: Scheme) -> bool {
    scheme == Scheme::B || !pot.normalized_prior
}

/// Forward table of the weighted joint (numerator only).
pub fn forward_table<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme) -> Result<ForwardTable<S>> {
    check(pot, w)?;
    Ok(forward(pot, w, scheme, true))
}

/// `log p(x; Θ, w)` for a chain under the given scheme.
pub fn weighted_forward<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme) -> Result<S> {
    check(pot, w)?;
    let num = forward(pot, w, scheme, true).log_marginal();
    let out = if needs_normalizer(pot, scheme) {
        num - forward(pot, w, scheme, false).log_marginal()
    } else {
        num
    };
    if out.value().is_nan() {
        return Err(Error::numerical("weighted forward recursion"));
    }
    Ok(out)
}

/// Forward/backward quantities of one (numerator or normalizer) chain.
struct Smoothed<S> {
    alpha: ForwardTable<S>,
    log_beta: Vec<S>,
    log_z: S,
}

fn smooth<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme, with_emission: bool) -> Smoothed<S> {
    let k = pot.states;
    let n = pot.len();
    let alpha = forward(pot, w, scheme, with_emission);
    let log_z = alpha.log_marginal();
    let mut log_beta = vec![S::zero(); n * k];
    let mut terms = vec![S::zero(); k];
    for t in (0..n - 1).rev() {
        let c = pair_weight(scheme, w, t + 1);
        for l in 0..k {
            for (s, term) in terms.iter_mut().enumerate() {
                *term = c * pot.pair(t, l, s)
                    + local(pot, w, scheme, with_emission, t + 1, s)
                    + log_beta[(t + 1) * k + s];
            }
            log_beta[t * k + l] = S::log_sum_exp(&terms);
        }
    }
    Smoothed { alpha, log_beta, log_z }
}

impl<S: Scalar> Smoothed<S> {
    fn log_posterior(&self, t: usize, s: usize) -> S {
        let k = self.alpha.states;
        self.alpha.log_alpha[t * k + s] + self.log_beta[t * k + s] - self.log_z
    }

    /// `∂ log Z / ∂w_t` for every `t`, as posterior expectations of the
    /// weight-derivatives of the exponent.
    fn weight_derivatives(&self, pot: &Potentials<S>, w: &[S], scheme: Scheme, with_emission: bool) -> Vec<S> {
        let k = pot.states;
        let n = pot.len();
        let mut grad = vec![S::zero(); n];
        for (t, g) in grad.iter_mut().enumerate() {
            for s in 0..k {
                let mut dexp = S::zero();
                if with_emission {
                    dexp += pot.emission(t, s);
                }
                if scheme == Scheme::B {
                    dexp += pot.latent(t, s);
                }
                *g += self.log_posterior(t, s).exp() * dexp;
            }
        }
        if scheme == Scheme::B {
            // edge (t, t+1): weight w_t w_{t+1}
            for t in 0..n - 1 {
                let c = w[t] * w[t + 1];
                let mut expected = S::zero();
                for l in 0..k {
                    for s in 0..k {
                        let phi = pot.pair(t, l, s);
                        let log_xi = self.alpha.log_alpha[t * k + l]
                            + c * phi
                            + local(pot, w, scheme, with_emission, t + 1, s)
                            + self.log_beta[(t + 1) * k + s]
                            - self.log_z;
                        expected += log_xi.exp() * phi;
                    }
                }
                grad[t] += expected * w[t + 1];
                grad[t + 1] += expected * w[t];
            }
        }
        grad
    }
}

/// `∂ log p(x; Θ, w) / ∂w_t` for all `t` by one forward-backward sweep.
///
/// Evaluated on [`Dual`](crate::autodiff::Dual) with a seeded parameter
/// direction this yields a full row of the mixed Jacobian in one pass.
pub fn weight_gradient<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme) -> Result<Vec<S>> {
    check(pot, w)?;
    let num = smooth(pot, w, scheme, true);
    let mut grad = num.weight_derivatives(pot, w, scheme, true);
    // under scheme A the latent-only normalizer does not depend on w
    if scheme == Scheme::B {
        let den = smooth(pot, w, scheme, false);
        for (g, d) in grad.iter_mut().zip(den.weight_derivatives(pot, w, scheme, false)) {
            *g -= d;
        }
    }
    Ok(grad)
}

/// `log p(x_t | x_{-o})` for each `t` in `points`, where `w_o` has zeros on
/// the fold `o ⊇ points` and ones elsewhere. Scheme A only: the held-out
/// latents remain in the chain and the predictive is the posterior mixture
/// of emission densities.
pub fn heldout_log_probs<S: Scalar>(pot: &Potentials<S>, w_o: &[S], points: &[usize]) -> Result<Vec<S>> {
    check(pot, w_o)?;
    let sm = smooth(pot, w_o, Scheme::A, true);
    let k = pot.states;
    let mut terms = vec![S::zero(); k];
    points
        .iter()
        .map(|&t| {
            if t >= pot.len() || w_o[t].value() != 0.0 {
                return Err(Error::arg(format!("position {t} is not held out")));
            }
            for (s, term) in terms.iter_mut().enumerate() {
                *term = sm.log_posterior(t, s) + pot.emission(t, s);
            }
            Ok(S::log_sum_exp(&terms))
        })
        .collect()
}

/// `-log p(x_o | x_{-o})` as `-(log p(x; 1) - log p(x; w_o))`.
pub fn conditional_loss<S: Scalar>(pot: &Potentials<S>, fold: &Fold, scheme: Scheme) -> Result<S> {
    if fold.is_empty() {
        return Ok(S::zero());
    }
    let n = pot.len();
    let ones = vec![S::cst(1.0); n];
    let w_o: Vec<S> = crate::data::fold_to_weights(fold, n)?.into_iter().map(S::cst).collect();
    Ok(weighted_forward(pot, &w_o, scheme)? - weighted_forward(pot, &ones, scheme)?)
}
