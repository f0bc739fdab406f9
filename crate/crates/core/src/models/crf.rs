//! Linear-chain conditional random field over real feature vectors.
//!
//! `θ = [emission K×F, transition K×K, start K]`, all row-major.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::priors::normal_ln_pdf;
use super::structure_rng;
use crate::autodiff::Scalar;
use crate::data::{path_edges, Structure, StructuredDataset};
use crate::error::{Error, Result};
use crate::marginal::graph::sample_latents;
use crate::model::{Model, ModelKind, Potentials};

/// Tokens drawn by [`Crf::simulate`].
pub const VOCABULARY: u64 = 64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Crf {
    pub states: usize,
    pub features: usize,
    /// Standard deviation of an iid normal prior on every weight; `None`
    /// gives the flat prior.
    #[serde(default)]
    pub prior_sd: Option<f64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Crf {
    pub fn new(states: usize, features: usize) -> Self {
        Self {
            states,
            features,
            prior_sd: None,
        }
    }

    pub fn with_prior(mut self, sd: f64) -> Self {
        self.prior_sd = Some(sd);
        self
    }

    /// Binary features of a token: bit `f` of its hash.
    pub fn token_features(&self, token: u64) -> Vec<f64> {
        let h = splitmix(token);
        (0..self.features).map(|f| ((h >> (f % 64)) & 1) as f64).collect()
    }

    /// Sentences of hashed random tokens, labelled by exact draws from the
    /// model's conditional distribution.
    pub fn simulate(&self, theta: &[f64], lengths: &[usize], seed: u64) -> Result<StructuredDataset> {
        self.check_params(theta)?;
        let structures = lengths
            .iter()
            .enumerate()
            .map(|(n, &len)| {
                let mut rng = structure_rng(seed, n);
                let obs: Vec<Vec<f64>> = (0..len)
                    .map(|_| self.token_features(rng.random_range(0..VOCABULARY)))
                    .collect();
                let s = Structure::sequence(obs);
                let pot = self.potentials(theta, &s)?;
                let order: Vec<usize> = (0..len).collect();
                let labels = sample_latents(&pot, &order, true, &mut rng)?;
                Ok(s.with_labels(labels))
            })
            .collect::<Result<Vec<_>>>()?;
        StructuredDataset::new(structures)
    }
}

impl Model for Crf {
    fn name(&self) -> &'static str {
        "crf"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Crf
    }

    fn num_params(&self) -> usize {
        let k = self.states;
        k * self.features + k * k + k
    }

    fn num_states(&self) -> usize {
        self.states
    }

    fn potentials<S: Scalar>(&self, theta: &[S], s: &Structure) -> Result<Potentials<S>> {
        self.check_params(theta)?;
        let (k, f) = (self.states, self.features);
        if k == 0 {
            return Err(Error::arg("CRF needs at least one label"));
        }
        let mut emission = Vec::with_capacity(s.len() * k);
        for x in &s.obs {
            if x.len() != f {
                return Err(Error::arg(format!("expected {f} features, got {}", x.len())));
            }
            for st in 0..k {
                let mut acc = S::zero();
                for (j, &v) in x.iter().enumerate() {
                    if v != 0.0 {
                        acc += theta[st * f + j] * v;
                    }
                }
                emission.push(acc);
            }
        }
        let mut latent = vec![S::zero(); s.len() * k];
        if !s.is_empty() {
            latent[..k].copy_from_slice(&theta[k * f + k * k..]);
        }
        let edges = path_edges(s.len());
        Ok(Potentials {
            states: k,
            emission,
            latent,
            edge_table: vec![0; edges.len()],
            edges,
            tables: vec![theta[k * f..k * f + k * k].to_vec()],
            normalized_prior: false,
        })
    }

    fn log_prior<S: Scalar>(&self, theta: &[S]) -> S {
        let Some(sd) = self.prior_sd else {
            return S::zero();
        };
        let mut acc = S::zero();
        for &v in theta {
            acc += normal_ln_pdf(v, 0.0, sd);
        }
        acc
    }

    fn validate_data(&self, data: &StructuredDataset) -> Result<()> {
        data.validate()?;
        data.check_labels(self.states)?;
        for (n, s) in data.structures.iter().enumerate() {
            if !s.is_chain() {
                return Err(Error::arg(format!("structure {n} is not a sequence")));
            }
            if s.dim() != self.features {
                return Err(Error::arg(format!("structure {n} has {} features, expected {}", s.dim(), self.features)));
            }
        }
        Ok(())
    }

    fn initial_params(&self, _data: &StructuredDataset) -> Vec<f64> {
        vec![0.0; self.num_params()]
    }
}
