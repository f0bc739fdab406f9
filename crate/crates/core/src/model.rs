//! The capability set shared by every concrete model.

use crate::autodiff::Scalar;
use crate::data::{is_path, Structure, StructuredDataset};
use crate::error::{Error, Result};

/// Log-potentials of a pairwise discrete MRF over `T` latents with `K`
/// states each, evaluated at one parameter value.
///
/// The unweighted joint is
/// `Σ_t emission[t,k_t] + Σ_t latent[t,k_t] + Σ_e table_e[k_a, k_b]`.
#[derive(Clone, Debug)]
pub struct Potentials<S> {
    pub states: usize,
    /// `T × K` emission log-factors `ψ_t(x_t, k)`, row-major.
    pub emission: Vec<S>,
    /// `T × K` latent-only unary log-factors (initial distribution, CRF
    /// start scores); zero where absent.
    pub latent: Vec<S>,
    pub edges: Vec<(usize, usize)>,
    /// Pairwise `K × K` tables; entry `[a * K + b]` scores state `a` at the
    /// edge's first endpoint and `b` at its second.
    pub tables: Vec<Vec<S>>,
    /// Table used by each edge.
    pub edge_table: Vec<usize>,
    /// True when the latent-only factors already sum to one over all
    /// latent configurations (directed priors such as an HMM chain).
    pub normalized_prior: bool,
}

impl<S: Scalar> Potentials<S> {
    pub fn len(&self) -> usize {
        self.emission.len() / self.states.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.emission.is_empty()
    }

    #[inline]
    pub fn emission(&self, t: usize, k: usize) -> S {
        self.emission[t * self.states + k]
    }

    #[inline]
    pub fn latent(&self, t: usize, k: usize) -> S {
        self.latent[t * self.states + k]
    }

    #[inline]
    pub fn pair(&self, edge: usize, a: usize, b: usize) -> S {
        self.tables[self.edge_table[edge]][a * self.states + b]
    }

    pub fn is_chain(&self) -> bool {
        is_path(&self.edges, self.len())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.states;
        if k == 0 {
            return Err(Error::arg("model needs at least one latent state"));
        }
        if self.emission.len() % k != 0 || self.latent.len() != self.emission.len() {
            return Err(Error::arg("potential tables have inconsistent sizes"));
        }
        if self.edge_table.len() != self.edges.len()
            || self.edge_table.iter().any(|&i| i >= self.tables.len())
            || self.tables.iter().any(|t| t.len() != k * k)
        {
            return Err(Error::arg("pairwise tables are inconsistent with the edge list"));
        }
        let bad = |v: &S| v.value().is_nan() || v.value() == f64::INFINITY;
        if self.emission.iter().chain(&self.latent).chain(self.tables.iter().flatten()).any(bad) {
            return Err(Error::numerical("log-potential"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Latents are unobserved and summed out.
    HiddenMrf,
    /// Labels are observed; the model is the conditional `p(z | x)`.
    Crf,
}

/// A parametric family over structured data in unconstrained coordinates.
pub trait Model: Sync {
    fn name(&self) -> &'static str;

    fn kind(&self) -> ModelKind;

    /// Length `D` of the parameter vector.
    fn num_params(&self) -> usize;

    fn num_states(&self) -> usize;

    /// Log-potentials of one structure at `theta`.
    fn potentials<S: Scalar>(&self, theta: &[S], s: &Structure) -> Result<Potentials<S>>;

    /// Log prior density of the natural parameters (no change-of-variables
    /// term); zero for a flat prior.
    fn log_prior<S: Scalar>(&self, theta: &[S]) -> S;

    /// Reject data the model cannot score.
    fn validate_data(&self, data: &StructuredDataset) -> Result<()>;

    /// A data-dependent starting point for optimization.
    fn initial_params(&self, data: &StructuredDataset) -> Vec<f64>;

    fn check_params<S: Scalar>(&self, theta: &[S]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::arg(format!(
                "{} expects {} parameters, got {}",
                self.name(),
                self.num_params(),
                theta.len()
            )));
        }
        Ok(())
    }
}
