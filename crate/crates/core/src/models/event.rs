//! Two-state event-count HMM with a day-of-week modulated Poisson
//! background and negative-binomial excess counts during events.
//!
//! `θ = [ln λ₀, u₁..u₆, ln a, ln b, logit A₀₀, logit A₁₁]` with
//! `δ = 7 · softmax(u₁..u₆, 0)`. The initial distribution is the
//! stationary distribution of `A`.

use std::collections::HashMap;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::priors::{BetaPrior, GammaPrior};
use super::{gauged_logits, is_count, log_softmax_gauged, structure_rng};
use crate::autodiff::Scalar;
use crate::data::{path_edges, Structure, StructuredDataset};
use crate::error::{Error, Result};
use crate::model::{Model, ModelKind, Potentials};

pub const NUM_PARAMS: usize = 11;

const LN_7: f64 = 1.945_910_149_055_313_3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventPrior {
    pub lambda0: GammaPrior,
    pub shape: GammaPrior,
    pub scale: GammaPrior,
    pub stay_normal: BetaPrior,
    pub stay_event: BetaPrior,
}

impl Default for EventPrior {
    fn default() -> Self {
        Self {
            lambda0: GammaPrior::new(2.0, 0.1),
            shape: GammaPrior::new(2.0, 0.5),
            scale: GammaPrior::new(2.0, 1.0),
            stay_normal: BetaPrior::new(2.0, 2.0),
            stay_event: BetaPrior::new(2.0, 2.0),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EventHmm {
    /// Positions per day, used when simulating day-of-week indices.
    #[serde(default = "default_steps")]
    pub steps_per_day: usize,
    /// `None` gives the flat prior.
    #[serde(default)]
    pub prior: Option<EventPrior>,
}

fn default_steps() -> usize {
    288
}

impl Default for EventHmm {
    fn default() -> Self {
        Self {
            steps_per_day: default_steps(),
            prior: Some(EventPrior::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventParams {
    pub lambda0: f64,
    pub delta: [f64; 7],
    pub shape: f64,
    pub scale: f64,
    pub stay_normal: f64,
    pub stay_event: f64,
}

impl EventParams {
    /// Stationary distribution of the transition matrix.
    pub fn stationary(&self) -> [f64; 2] {
        let leave0 = 1.0 - self.stay_normal;
        let leave1 = 1.0 - self.stay_event;
        [leave1 / (leave0 + leave1), leave0 / (leave0 + leave1)]
    }
}

/// `log p(x | z)` for one count: Poisson background, plus a
/// negative-binomial excess when `z = 1`, summed out by convolution.
pub fn event_emission_logpsi<S: Scalar>(x: f64, z: usize, lambda: S, a: S, b: S) -> Result<S> {
    if !is_count(x) {
        return Err(Error::arg(format!("count must be a non-negative integer, got {x}")));
    }
    Ok(logpsi(x as u64, z == 1, lambda.ln(), lambda, a, b.ln()))
}

fn logpsi<S: Scalar>(x: u64, event: bool, log_lambda: S, lambda: S, a: S, log_b: S) -> S {
    let xf = x as f64;
    if !event {
        return log_lambda * xf - lambda - ln_gamma(xf + 1.0);
    }
    let log_p = -(-log_b).softplus();
    let log_q = -log_b.softplus();
    let mut terms = Vec::with_capacity(x as usize + 1);
    let mut rising = S::zero();
    for e in 0..=x {
        let ef = e as f64;
        if e > 0 {
            rising += (a + (ef - 1.0)).ln();
        }
        let background = log_lambda * (xf - ef) - lambda - ln_gamma(xf - ef + 1.0);
        let excess = rising - ln_gamma(ef + 1.0) + a * log_p + log_q * ef;
        terms.push(background + excess);
    }
    S::log_sum_exp(&terms)
}

impl EventHmm {
    pub fn unpack(&self, theta: &[f64]) -> Result<EventParams> {
        self.check_params(theta)?;
        let log_delta = log_softmax_gauged(&theta[1..7]);
        let mut delta = [0.0; 7];
        for (d, l) in delta.iter_mut().zip(log_delta) {
            *d = (l + LN_7).exp();
        }
        let sigmoid = |v: f64| 1.0 / (1.0 + (-v).exp());
        Ok(EventParams {
            lambda0: theta[0].exp(),
            delta,
            shape: theta[7].exp(),
            scale: theta[8].exp(),
            stay_normal: sigmoid(theta[9]),
            stay_event: sigmoid(theta[10]),
        })
    }

    pub fn pack(&self, p: &EventParams) -> Result<Vec<f64>> {
        let total: f64 = p.delta.iter().sum();
        if (total - 7.0).abs() > 1e-9 {
            return Err(Error::arg("day-of-week multipliers must sum to 7"));
        }
        let logit = |v: f64| (v / (1.0 - v)).ln();
        let mut theta = vec![p.lambda0.ln()];
        theta.extend(gauged_logits(&p.delta)?);
        theta.extend([p.shape.ln(), p.scale.ln(), logit(p.stay_normal), logit(p.stay_event)]);
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("event parameters out of range"));
        }
        Ok(theta)
    }

    /// One sequence of `len` steps starting on day `start_day`.
    pub fn simulate(&self, theta: &[f64], len: usize, start_day: usize, seed: u64) -> Result<StructuredDataset> {
        let p = self.unpack(theta)?;
        if self.steps_per_day == 0 {
            return Err(Error::arg("steps_per_day must be positive"));
        }
        let mut rng = structure_rng(seed, 0);
        let pi = p.stationary();
        let excess = Gamma::new(p.shape, 1.0 / p.scale).map_err(|e| Error::arg(e.to_string()))?;
        let mut obs = Vec::with_capacity(len);
        let mut days = Vec::with_capacity(len);
        let mut z = 0;
        for t in 0..len {
            let u: f64 = rng.random();
            z = if t == 0 {
                usize::from(u >= pi[0])
            } else if z == 0 {
                usize::from(u >= p.stay_normal)
            } else {
                usize::from(u < p.stay_event)
            };
            let day = (start_day + t / self.steps_per_day) % 7;
            let rate = p.lambda0 * p.delta[day];
            let mut x = Poisson::new(rate).map_err(|e| Error::arg(e.to_string()))?.sample(&mut rng);
            if z == 1 {
                let g = excess.sample(&mut rng);
                if g > 0.0 {
                    x += Poisson::new(g).map_err(|e| Error::arg(e.to_string()))?.sample(&mut rng);
                }
            }
            obs.push(vec![x]);
            days.push(day);
        }
        StructuredDataset::single(Structure::sequence(obs).with_days(days))
    }
}

impl Model for EventHmm {
    fn name(&self) -> &'static str {
        "event_hmm"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::HiddenMrf
    }

    fn num_params(&self) -> usize {
        NUM_PARAMS
    }

    fn num_states(&self) -> usize {
        2
    }

    fn potentials<S: Scalar>(&self, theta: &[S], s: &Structure) -> Result<Potentials<S>> {
        self.check_params(theta)?;
        let days = s.day.as_deref().ok_or_else(|| Error::arg("event model needs day-of-week indices"))?;
        let n = s.len();
        let log_delta: Vec<S> = log_softmax_gauged(&theta[1..7]).into_iter().map(|l| l + LN_7).collect();
        let a = theta[7].exp();
        let log_b = theta[8];
        let mut cache: HashMap<(usize, u64), (S, S)> = HashMap::new();
        let mut emission = Vec::with_capacity(2 * n);
        for (x, &d) in s.obs.iter().zip(days) {
            if !is_count(x[0]) || d >= 7 {
                return Err(Error::arg("event model needs counts and days in 0..7"));
            }
            let c = x[0] as u64;
            let (e0, e1) = *cache.entry((d, c)).or_insert_with(|| {
                let log_lambda = theta[0] + log_delta[d];
                let lambda = log_lambda.exp();
                (
                    logpsi(c, false, log_lambda, lambda, a, log_b),
                    logpsi(c, true, log_lambda, lambda, a, log_b),
                )
            });
            emission.push(e0);
            emission.push(e1);
        }
        let (l0, l1) = (theta[9], theta[10]);
        let leave0 = (-l0).log_sigmoid();
        let leave1 = (-l1).log_sigmoid();
        let norm = S::log_sum_exp(&[leave0, leave1]);
        let mut latent = vec![S::zero(); 2 * n];
        if n > 0 {
            latent[0] = leave1 - norm;
            latent[1] = leave0 - norm;
        }
        let table = vec![l0.log_sigmoid(), leave0, leave1, l1.log_sigmoid()];
        let edges = path_edges(n);
        Ok(Potentials {
            states: 2,
            emission,
            latent,
            edge_table: vec![0; edges.len()],
            edges,
            tables: vec![table],
            normalized_prior: true,
        })
    }

    fn log_prior<S: Scalar>(&self, theta: &[S]) -> S {
        let Some(p) = &self.prior else {
            return S::zero();
        };
        // Dir(1, ..., 1) on δ / 7 is the constant Γ(7) on the simplex
        p.lambda0.ln_pdf_log(theta[0])
            + p.shape.ln_pdf_log(theta[7])
            + p.scale.ln_pdf_log(theta[8])
            + p.stay_normal.ln_pdf_logit(theta[9])
            + p.stay_event.ln_pdf_logit(theta[10])
            + ln_gamma(7.0)
    }

    fn validate_data(&self, data: &StructuredDataset) -> Result<()> {
        data.validate()?;
        for (n, s) in data.structures.iter().enumerate() {
            if !s.is_chain() || s.dim() != 1 {
                return Err(Error::arg(format!("structure {n} must be a univariate sequence")));
            }
            if s.day.is_none() {
                return Err(Error::arg(format!("structure {n} has no day-of-week column")));
            }
            if s.obs.iter().any(|x| !is_count(x[0])) {
                return Err(Error::arg(format!("structure {n} has non-count observations")));
            }
        }
        Ok(())
    }

    fn initial_params(&self, data: &StructuredDataset) -> Vec<f64> {
        let mut counts: Vec<f64> = data.structures.iter().flat_map(|s| s.obs.iter().map(|x| x[0])).collect();
        counts.sort_by(f64::total_cmp);
        let median = counts.get(counts.len() / 2).copied().unwrap_or(1.0).max(0.5);
        let p = EventParams {
            lambda0: median,
            delta: [1.0; 7],
            shape: 2.0,
            scale: 2.0 / median.max(1.0),
            stay_normal: 0.95,
            stay_event: 0.8,
        };
        self.pack(&p).expect("initial event parameters are valid")
    }
}
