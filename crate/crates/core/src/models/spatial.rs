//! Poisson mixture on a graph with an Ising-type latent field.
//!
//! Each node carries a count `x_t ~ Poisson(λ_{z_t})` with `z_t ∈ {-1, 1}`
//! (stored as states 0 and 1). The latent field scores
//! `β Σ_t Σ_{t' ∈ Γ(t)} 1{z_t = z_t'}`, a sum over ordered neighbour
//! pairs, so every undirected edge contributes `2β` when its endpoints
//! agree. `β` is a fixed hyperparameter; `θ = [ln λ_{-1}, ln λ_1]`.

use rand::distr::Distribution;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::priors::GammaPrior;
use super::{is_count, structure_rng};
use crate::autodiff::Scalar;
use crate::data::{validate_edges, Structure, StructuredDataset};
use crate::error::{Error, Result};
use crate::marginal::graph::{minfill_order, sample_latents};
use crate::model::{Model, ModelKind, Potentials};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpatialIsing {
    pub beta: f64,
    /// Gamma prior on both rates; `None` gives the flat prior.
    #[serde(default)]
    pub prior: Option<GammaPrior>,
}

/// Edges of a `rows × cols` four-neighbour grid, nodes numbered row-major.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                edges.push((i, i + 1));
            }
            if r + 1 < rows {
                edges.push((i, i + cols));
            }
        }
    }
    edges
}

impl SpatialIsing {
    pub fn new(beta: f64) -> Self {
        Self { beta, prior: None }
    }

    /// Rates `(λ_{-1}, λ_1)`.
    pub fn unpack(&self, theta: &[f64]) -> Result<[f64; 2]> {
        self.check_params(theta)?;
        Ok([theta[0].exp(), theta[1].exp()])
    }

    pub fn pack(&self, rates: [f64; 2]) -> Result<Vec<f64>> {
        if rates.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::arg("rates must be positive"));
        }
        Ok(vec![rates[0].ln(), rates[1].ln()])
    }

    /// One field over `n` nodes: latents drawn exactly from the Ising prior
    /// by elimination, then Poisson counts.
    pub fn simulate(&self, theta: &[f64], n: usize, edges: &[(usize, usize)], seed: u64) -> Result<StructuredDataset> {
        let rates = self.unpack(theta)?;
        validate_edges(edges, n)?;
        let template = Structure {
            obs: vec![vec![0.0]; n],
            labels: None,
            day: None,
            edges: edges.to_vec(),
        };
        let pot = self.potentials(theta, &template)?;
        let order = minfill_order(n, edges);
        let mut rng = structure_rng(seed, 0);
        let z = sample_latents(&pot, &order, false, &mut rng)?;
        let obs = z
            .iter()
            .map(|&k| {
                Poisson::new(rates[k])
                    .map(|d| vec![d.sample(&mut rng)])
                    .map_err(|e| Error::arg(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        StructuredDataset::single(Structure {
            obs,
            labels: None,
            day: None,
            edges: edges.to_vec(),
        })
    }
}

impl Model for SpatialIsing {
    fn name(&self) -> &'static str {
        "spatial_ising"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::HiddenMrf
    }

    fn num_params(&self) -> usize {
        2
    }

    fn num_states(&self) -> usize {
        2
    }

    fn potentials<S: Scalar>(&self, theta: &[S], s: &Structure) -> Result<Potentials<S>> {
        self.check_params(theta)?;
        if !(self.beta >= 0.0) {
            return Err(Error::arg("coupling must be non-negative"));
        }
        let rates = [theta[0].exp(), theta[1].exp()];
        let mut emission = Vec::with_capacity(2 * s.len());
        for x in &s.obs {
            if x.len() != 1 || !is_count(x[0]) {
                return Err(Error::arg("spatial model needs one count per node"));
            }
            let log_fact = ln_gamma(x[0] + 1.0);
            for k in 0..2 {
                emission.push(theta[k] * x[0] - rates[k] - log_fact);
            }
        }
        let c = 2.0 * self.beta;
        Ok(Potentials {
            states: 2,
            emission,
            latent: vec![S::zero(); 2 * s.len()],
            edges: s.edges.clone(),
            tables: vec![vec![S::cst(c), S::zero(), S::zero(), S::cst(c)]],
            edge_table: vec![0; s.edges.len()],
            normalized_prior: false,
        })
    }

    fn log_prior<S: Scalar>(&self, theta: &[S]) -> S {
        match &self.prior {
            Some(g) => g.ln_pdf_log(theta[0]) + g.ln_pdf_log(theta[1]),
            None => S::zero(),
        }
    }

    fn validate_data(&self, data: &StructuredDataset) -> Result<()> {
        data.validate()?;
        for (n, s) in data.structures.iter().enumerate() {
            if s.dim() != 1 || s.obs.iter().any(|x| !is_count(x[0])) {
                return Err(Error::arg(format!("structure {n} must hold one count per node")));
            }
        }
        Ok(())
    }

    fn initial_params(&self, data: &StructuredDataset) -> Vec<f64> {
        let mut counts: Vec<f64> = data.structures.iter().flat_map(|s| s.obs.iter().map(|x| x[0])).collect();
        counts.sort_by(f64::total_cmp);
        let q = |p: f64| counts.get(((counts.len().max(1) - 1) as f64 * p) as usize).copied().unwrap_or(1.0);
        vec![(q(0.25) + 0.5).ln(), (q(0.75) + 1.0).ln()]
    }
}
