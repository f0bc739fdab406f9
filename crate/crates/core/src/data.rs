//! Datasets, parameter and weight vectors, folds and weighting schemes.
//!
//! All indices in this API are zero-based. File formats (see [`crate::io`])
//! use one-based positions, labels and day indices.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

/// How leaving out index `t` acts on the factors of a hidden MRF.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Weight only the emission factor of `t`; the latent stays in the model.
    A,
    /// Also weight every latent factor touching `t` by the product of its
    /// members' weights, dropping the latent.
    B,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::A => "A",
            Scheme::B => "B",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Scheme::A),
            "B" | "b" => Ok(Scheme::B),
            other => Err(Error::arg(format!("unknown weighting scheme {other:?} (expected A or B)"))),
        }
    }
}

/// Weight multiplying a latent clique factor.
pub fn clique_weight<S: Scalar>(scheme: Scheme, clique: &[usize], w: &[S]) -> S {
    match scheme {
        Scheme::A => S::cst(1.0),
        Scheme::B => clique.iter().fold(S::cst(1.0), |acc, &t| acc * w[t]),
    }
}

/// One structured observation: a sequence, a sentence or a spatial field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    /// `T × R` observations.
    pub obs: Vec<Vec<f64>>,
    /// Observed labels in `0..K` (CRFs).
    pub labels: Option<Vec<usize>>,
    /// Day-of-week index in `0..7` per position.
    pub day: Option<Vec<usize>>,
    /// Undirected edges over `0..T`; sequences carry the path graph.
    pub edges: Vec<(usize, usize)>,
}

impl Structure {
    /// Sequence with the path graph.
    pub fn sequence(obs: Vec<Vec<f64>>) -> Self {
        let edges = path_edges(obs.len());
        Structure {
            obs,
            labels: None,
            day: None,
            edges,
        }
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn with_days(mut self, day: Vec<usize>) -> Self {
        self.day = Some(day);
        self
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.obs.first().map_or(0, |x| x.len())
    }

    pub fn is_chain(&self) -> bool {
        is_path(&self.edges, self.len())
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.len();
        if t == 0 {
            return Err(Error::arg("structure has no positions"));
        }
        let r = self.dim();
        if self.obs.iter().any(|x| x.len() != r) {
            return Err(Error::arg("observations have inconsistent dimension"));
        }
        if self.obs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::arg("observations must be finite"));
        }
        validate_edges(&self.edges, t)?;
        if let Some(labels) = &self.labels {
            if labels.len() != t {
                return Err(Error::arg("label count does not match structure length"));
            }
        }
        if let Some(day) = &self.day {
            if day.len() != t || day.iter().any(|&d| d >= 7) {
                return Err(Error::arg("day-of-week indices must be in 0..7, one per position"));
            }
        }
        Ok(())
    }
}

/// `N ≥ 1` independent structures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredDataset {
    pub structures: Vec<Structure>,
}

impl StructuredDataset {
    pub fn new(structures: Vec<Structure>) -> Result<Self> {
        let d = StructuredDataset { structures };
        d.validate()?;
        Ok(d)
    }

    pub fn single(s: Structure) -> Result<Self> {
        Self::new(vec![s])
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.structures.is_empty() {
            return Err(Error::arg("dataset needs at least one structure"));
        }
        self.structures.iter().try_for_each(Structure::validate)
    }

    /// Check that labels, when present, lie in `0..k`.
    pub fn check_labels(&self, k: usize) -> Result<()> {
        for s in &self.structures {
            match &s.labels {
                Some(l) if l.iter().any(|&z| z >= k) => {
                    return Err(Error::arg(format!("label outside 1..={k}")));
                }
                None => return Err(Error::arg("structure is missing labels")),
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn path_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|t| (t - 1, t)).collect()
}

/// True when `edges` is exactly the path `0-1-…-(n-1)` in order.
pub fn is_path(edges: &[(usize, usize)], n: usize) -> bool {
    edges.len() + 1 == n.max(1) && edges.iter().enumerate().all(|(i, &(a, b))| a == i && b == i + 1)
}

pub fn validate_edges(edges: &[(usize, usize)], n: usize) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::arg(format!("edge ({a}, {b}) out of range for {n} nodes")));
        }
        if a == b {
            return Err(Error::arg(format!("self-loop at node {a}")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::arg(format!("duplicate edge ({a}, {b})")));
        }
    }
    Ok(())
}

/// Flat unconstrained parameter vector `Θ ∈ R^D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                context: "parameter vector".into(),
                coordinate: Some(i),
            });
        }
        Ok(ParamVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// What a weight vector indexes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    /// Positions inside one designated structure (leave-within-structure-out).
    Within { structure: usize },
    /// Whole structures (leave-structure-out).
    Structures,
}

/// Weights over positions or structures.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    pub target: Target,
    values: Vec<f64>,
}

impl WeightVector {
    pub fn ones(target: Target, len: usize) -> Self {
        WeightVector {
            target,
            values: vec![1.0; len],
        }
    }

    /// Perturbation weights; every entry must lie in `[0, 1]`.
    pub fn new(target: Target, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
            return Err(Error::arg("weights must be finite and lie in [0, 1]"));
        }
        Ok(WeightVector { target, values })
    }

    pub fn from_fold(target: Target, fold: &Fold, len: usize) -> Result<Self> {
        Ok(WeightVector {
            target,
            values: fold_to_weights(fold, len)?,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Indices whose weight is exactly zero.
    pub fn zeros(&self) -> Fold {
        Fold {
            indices: self
                .values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 0.0)
                .map(|(i, _)| i)
                .collect(),
        }
    }
}

/// Strictly increasing set of left-out indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fold {
    indices: Vec<usize>,
}

impl Fold {
    /// Sorts and deduplicates.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Fold { indices }
    }

    pub fn empty() -> Self {
        Fold { indices: Vec::new() }
    }

    pub fn range(start: usize, end_inclusive: usize) -> Self {
        Fold {
            indices: (start..=end_inclusive).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn check_range(&self, len: usize) -> Result<()> {
        match self.indices.last() {
            Some(&i) if i >= len => Err(Error::arg(format!("fold index {i} out of range 0..{len}"))),
            _ => Ok(()),
        }
    }
}

/// Ones with zeros exactly at the fold's indices.
pub fn fold_to_weights(fold: &Fold, len: usize) -> Result<Vec<f64>> {
    fold.check_range(len)?;
    let mut w = vec![1.0; len];
    for &i in fold.indices() {
        w[i] = 0.0;
    }
    Ok(w)
}

/// The collection of folds evaluated by one CV run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
    pub scheme: Scheme,
    pub target: Target,
}

impl FoldPlan {
    pub fn new(folds: Vec<Fold>, scheme: Scheme, target: Target) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &folds {
            if !seen.insert(f.clone()) {
                return Err(Error::arg(format!("duplicate fold {:?}", f.indices())));
            }
        }
        Ok(FoldPlan { folds, scheme, target })
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    /// Number of weights the plan's folds index into.
    pub fn weight_len(&self, data: &StructuredDataset) -> Result<usize> {
        match self.target {
            Target::Within { structure } => data
                .structures
                .get(structure)
                .map(Structure::len)
                .ok_or_else(|| Error::arg(format!("structure {structure} not in dataset"))),
            Target::Structures => Ok(data.len()),
        }
    }

    pub fn check(&self, data: &StructuredDataset) -> Result<()> {
        let len = self.weight_len(data)?;
        self.folds.iter().try_for_each(|f| f.check_range(len))
    }
}
