//! Hidden Markov models with Gaussian, Poisson, categorical and
//! autoregressive Gaussian emissions.
//!
//! Parameter layout: `K-1` initial logits, then `K` rows of `K-1`
//! transition logits (the last column of each row is pinned to zero), then
//! the emission block.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::priors::normal_ln_pdf;
use super::{gauged_logits, is_count, log_softmax_gauged, structure_rng};
use crate::autodiff::Scalar;
use crate::data::{path_edges, Structure, StructuredDataset};
use crate::error::{Error, Result};
use crate::model::{Model, ModelKind, Potentials};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Emission {
    /// Independent Gaussian per coordinate with state-specific mean and
    /// log-variance.
    Gaussian,
    /// Independent Poisson per coordinate with state-specific log-rate.
    Poisson,
    /// One symbol in `0..symbols` per position.
    Categorical { symbols: usize },
    /// `x_t ~ N(b_k + Σ_m B_{k,m} x_{t-m}, σ² I)` with lags before the start
    /// of the sequence taken as zero.
    Ar { order: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hmm {
    pub states: usize,
    /// Observation dimension `R`.
    pub dim: usize,
    pub emission: Emission,
    /// Standard deviation of an iid normal prior on Gaussian means and on
    /// AR coefficients and offsets. `None` gives the flat prior.
    #[serde(default)]
    pub location_prior_sd: Option<f64>,
    /// Concentration of symmetric Dirichlet priors on the initial
    /// distribution and on every transition row. `None` gives the flat prior.
    #[serde(default)]
    pub dirichlet: Option<f64>,
}

/// Natural emission parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum EmissionParams {
    Gaussian { means: Vec<Vec<f64>>, variances: Vec<Vec<f64>> },
    Poisson { rates: Vec<Vec<f64>> },
    Categorical { probs: Vec<Vec<f64>> },
    /// `coefs[k][m]` is the `R × R` matrix of lag `m + 1`, row-major.
    Ar { coefs: Vec<Vec<Vec<f64>>>, offsets: Vec<Vec<f64>>, variance: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HmmParams {
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub emission: EmissionParams,
}

impl Hmm {
    pub fn new(states: usize, dim: usize, emission: Emission) -> Self {
        Self {
            states,
            dim,
            emission,
            location_prior_sd: None,
            dirichlet: None,
        }
    }

    pub fn with_dirichlet(mut self, alpha: f64) -> Self {
        self.dirichlet = Some(alpha);
        self
    }

    pub fn with_location_prior(mut self, sd: f64) -> Self {
        self.location_prior_sd = Some(sd);
        self
    }

    fn emission_start(&self) -> usize {
        let k = self.states;
        (k - 1) + k * (k - 1)
    }

    fn emission_len(&self) -> usize {
        let (k, r) = (self.states, self.dim);
        match self.emission {
            Emission::Gaussian => 2 * k * r,
            Emission::Poisson => k * r,
            Emission::Categorical { symbols } => k * (symbols.max(1) - 1),
            Emission::Ar { order } => k * order * r * r + k * r + 1,
        }
    }

    fn check_shape(&self) -> Result<()> {
        if self.states == 0 || self.dim == 0 {
            return Err(Error::arg("HMM needs at least one state and one observation dimension"));
        }
        if let Emission::Categorical { symbols } = self.emission {
            if symbols == 0 || self.dim != 1 {
                return Err(Error::arg("categorical emissions need one coordinate and at least one symbol"));
            }
        }
        Ok(())
    }

    /// Natural parameters from the unconstrained vector.
    pub fn unpack(&self, theta: &[f64]) -> Result<HmmParams> {
        self.check_shape()?;
        self.check_params(theta)?;
        let (k, r) = (self.states, self.dim);
        let exp_row = |row: &[f64]| log_softmax_gauged(row).into_iter().map(f64::exp).collect::<Vec<_>>();
        let initial = exp_row(&theta[..k - 1]);
        let transition = (0..k)
            .map(|i| exp_row(&theta[k - 1 + i * (k - 1)..k - 1 + (i + 1) * (k - 1)]))
            .collect();
        let e = &theta[self.emission_start()..];
        let grid = |block: &[f64], f: fn(f64) -> f64| -> Vec<Vec<f64>> {
            (0..k).map(|s| block[s * r..(s + 1) * r].iter().map(|&v| f(v)).collect()).collect()
        };
        let emission = match self.emission {
            Emission::Gaussian => EmissionParams::Gaussian {
                means: grid(&e[..k * r], |v| v),
                variances: grid(&e[k * r..], f64::exp),
            },
            Emission::Poisson => EmissionParams::Poisson { rates: grid(e, f64::exp) },
            Emission::Categorical { symbols } => EmissionParams::Categorical {
                probs: (0..k).map(|s| exp_row(&e[s * (symbols - 1)..(s + 1) * (symbols - 1)])).collect(),
            },
            Emission::Ar { order } => {
                let block = r * r;
                let coefs = (0..k)
                    .map(|s| {
                        (0..order)
                            .map(|m| e[(s * order + m) * block..(s * order + m + 1) * block].to_vec())
                            .collect()
                    })
                    .collect();
                let off = k * order * block;
                EmissionParams::Ar {
                    coefs,
                    offsets: grid(&e[off..off + k * r], |v| v),
                    variance: e[off + k * r].exp(),
                }
            }
        };
        Ok(HmmParams {
            initial,
            transition,
            emission,
        })
    }

    /// Unconstrained vector from natural parameters.
    pub fn pack(&self, p: &HmmParams) -> Result<Vec<f64>> {
        self.check_shape()?;
        let (k, r) = (self.states, self.dim);
        if p.initial.len() != k || p.transition.len() != k || p.transition.iter().any(|row| row.len() != k) {
            return Err(Error::arg("initial distribution or transition matrix has the wrong shape"));
        }
        let mut theta = gauged_logits(&p.initial)?;
        for row in &p.transition {
            theta.extend(gauged_logits(row)?);
        }
        let flat = |g: &Vec<Vec<f64>>, f: fn(f64) -> f64| -> Result<Vec<f64>> {
            if g.len() != k || g.iter().any(|row| row.len() != r) {
                return Err(Error::arg("emission parameters have the wrong shape"));
            }
            Ok(g.iter().flatten().map(|&v| f(v)).collect())
        };
        match (&self.emission, &p.emission) {
            (Emission::Gaussian, EmissionParams::Gaussian { means, variances }) => {
                theta.extend(flat(means, |v| v)?);
                theta.extend(flat(variances, f64::ln)?);
            }
            (Emission::Poisson, EmissionParams::Poisson { rates }) => theta.extend(flat(rates, f64::ln)?),
            (Emission::Categorical { symbols }, EmissionParams::Categorical { probs }) => {
                if probs.len() != k || probs.iter().any(|row| row.len() != *symbols) {
                    return Err(Error::arg("emission parameters have the wrong shape"));
                }
                for row in probs {
                    theta.extend(gauged_logits(row)?);
                }
            }
            (Emission::Ar { order }, EmissionParams::Ar { coefs, offsets, variance }) => {
                if coefs.len() != k || coefs.iter().any(|c| c.len() != *order || c.iter().any(|m| m.len() != r * r)) {
                    return Err(Error::arg("AR coefficients have the wrong shape"));
                }
                theta.extend(coefs.iter().flatten().flatten().copied());
                theta.extend(flat(offsets, |v| v)?);
                theta.push(variance.ln());
            }
            _ => return Err(Error::arg("emission parameters do not match the emission family")),
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("natural parameters out of range"));
        }
        Ok(theta)
    }

    /// Emission log-densities of every position and state.
    fn emission_table<S: Scalar>(&self, theta: &[S], s: &Structure) -> Result<Vec<S>> {
        let (k, r) = (self.states, self.dim);
        let n = s.len();
        let e = &theta[self.emission_start()..];
        let mut out = Vec::with_capacity(n * k);
        match self.emission {
            Emission::Gaussian => {
                let inv_var: Vec<S> = e[k * r..].iter().map(|&lv| (-lv).exp()).collect();
                for x in &s.obs {
                    for st in 0..k {
                        let mut acc = S::zero();
                        for (c, &xv) in x.iter().enumerate() {
                            let i = st * r + c;
                            let d = e[i] - xv;
                            acc -= (d.square() * inv_var[i] + e[k * r + i] + LN_2PI) * 0.5;
                        }
                        out.push(acc);
                    }
                }
            }
            Emission::Poisson => {
                let rates: Vec<S> = e[..k * r].iter().map(|&l| l.exp()).collect();
                for x in &s.obs {
                    let log_fact: f64 = x.iter().map(|&v| ln_gamma(v + 1.0)).sum();
                    for st in 0..k {
                        let mut acc = S::cst(-log_fact);
                        for (c, &xv) in x.iter().enumerate() {
                            acc += e[st * r + c] * xv - rates[st * r + c];
                        }
                        out.push(acc);
                    }
                }
            }
            Emission::Categorical { symbols } => {
                let rows: Vec<Vec<S>> = (0..k)
                    .map(|st| log_softmax_gauged(&e[st * (symbols - 1)..(st + 1) * (symbols - 1)]))
                    .collect();
                for x in &s.obs {
                    let sym = x[0] as usize;
                    if !is_count(x[0]) || sym >= symbols {
                        return Err(Error::arg(format!("symbol {} outside 0..{symbols}", x[0])));
                    }
                    for row in &rows {
                        out.push(row[sym]);
                    }
                }
            }
            Emission::Ar { order } => {
                let block = r * r;
                let off = k * order * block;
                let log_var = e[off + k * r];
                let inv_var = (-log_var).exp();
                let norm = (log_var + LN_2PI) * (0.5 * r as f64);
                for t in 0..n {
                    for st in 0..k {
                        let mut acc = S::zero();
                        for row in 0..r {
                            let mut mean = e[off + st * r + row];
                            for m in 0..order.min(t) {
                                let lag = &s.obs[t - m - 1];
                                let base = (st * order + m) * block + row * r;
                                for (c, &lv) in lag.iter().enumerate() {
                                    mean += e[base + c] * lv;
                                }
                            }
                            acc += (mean - s.obs[t][row]).square();
                        }
                        out.push(-(acc * inv_var * 0.5) - norm);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Draw one sequence per entry of `lengths`; structure `n` uses its own
    /// stream of the seeded generator.
    pub fn simulate(&self, theta: &[f64], lengths: &[usize], seed: u64) -> Result<StructuredDataset> {
        let p = self.unpack(theta)?;
        let initial = WeightedIndex::new(&p.initial).map_err(|e| Error::arg(e.to_string()))?;
        let rows = p
            .transition
            .iter()
            .map(|row| WeightedIndex::new(row).map_err(|e| Error::arg(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let symbol_dists = match &p.emission {
            EmissionParams::Categorical { probs } => probs
                .iter()
                .map(|row| WeightedIndex::new(row).map_err(|e| Error::arg(e.to_string())))
                .collect::<Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        let structures = lengths
            .iter()
            .enumerate()
            .map(|(n, &len)| {
                let mut rng = structure_rng(seed, n);
                let mut obs: Vec<Vec<f64>> = Vec::with_capacity(len);
                let mut z = 0;
                for t in 0..len {
                    z = if t == 0 { initial.sample(&mut rng) } else { rows[z].sample(&mut rng) };
                    let x = match &p.emission {
                        EmissionParams::Gaussian { means, variances } => means[z]
                            .iter()
                            .zip(&variances[z])
                            .map(|(&m, &v)| Normal::new(m, v.sqrt()).unwrap().sample(&mut rng))
                            .collect(),
                        EmissionParams::Poisson { rates } => rates[z]
                            .iter()
                            .map(|&l| Poisson::new(l).unwrap().sample(&mut rng))
                            .collect(),
                        EmissionParams::Categorical { .. } => vec![symbol_dists[z].sample(&mut rng) as f64],
                        EmissionParams::Ar { coefs, offsets, variance } => {
                            let r = self.dim;
                            let noise = Normal::new(0.0, variance.sqrt()).unwrap();
                            (0..r)
                                .map(|row| {
                                    let mut mean = offsets[z][row];
                                    for (m, b) in coefs[z].iter().enumerate().take(t) {
                                        let lag = &obs[t - m - 1];
                                        for c in 0..r {
                                            mean += b[row * r + c] * lag[c];
                                        }
                                    }
                                    mean + noise.sample(&mut rng)
                                })
                                .collect()
                        }
                    };
                    obs.push(x);
                }
                Structure::sequence(obs)
            })
            .collect();
        StructuredDataset::new(structures)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i]
}

impl Model for Hmm {
    fn name(&self) -> &'static str {
        "hmm"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::HiddenMrf
    }

    fn num_params(&self) -> usize {
        self.emission_start() + self.emission_len()
    }

    fn num_states(&self) -> usize {
        self.states
    }

    fn potentials<S: Scalar>(&self, theta: &[S], s: &Structure) -> Result<Potentials<S>> {
        self.check_shape()?;
        self.check_params(theta)?;
        let k = self.states;
        let n = s.len();
        let mut latent = vec![S::zero(); n * k];
        if n > 0 {
            latent[..k].copy_from_slice(&log_softmax_gauged(&theta[..k - 1]));
        }
        let table: Vec<S> = (0..k)
            .flat_map(|i| log_softmax_gauged(&theta[k - 1 + i * (k - 1)..k - 1 + (i + 1) * (k - 1)]))
            .collect();
        let edges = path_edges(n);
        Ok(Potentials {
            states: k,
            emission: self.emission_table(theta, s)?,
            latent,
            edge_table: vec![0; edges.len()],
            edges,
            tables: vec![table],
            normalized_prior: true,
        })
    }

    fn log_prior<S: Scalar>(&self, theta: &[S]) -> S {
        let k = self.states;
        let mut acc = S::zero();
        if let Some(alpha) = self.dirichlet {
            let norm = ln_gamma(k as f64 * alpha) - k as f64 * ln_gamma(alpha);
            for row in 0..=k {
                let logits = if row == 0 {
                    &theta[..k - 1]
                } else {
                    &theta[k - 1 + (row - 1) * (k - 1)..k - 1 + row * (k - 1)]
                };
                for lp in log_softmax_gauged(logits) {
                    acc += lp * (alpha - 1.0);
                }
                acc += S::cst(norm);
            }
        }
        let Some(sd) = self.location_prior_sd else {
            return acc;
        };
        let r = self.dim;
        let e = &theta[self.emission_start()..];
        let located = match self.emission {
            Emission::Gaussian => &e[..k * r],
            Emission::Ar { order } => &e[..k * order * r * r + k * r],
            Emission::Poisson | Emission::Categorical { .. } => &e[..0],
        };
        for &v in located {
            acc += normal_ln_pdf(v, 0.0, sd);
        }
        acc
    }

    fn validate_data(&self, data: &StructuredDataset) -> Result<()> {
        self.check_shape()?;
        data.validate()?;
        for (n, s) in data.structures.iter().enumerate() {
            if !s.is_chain() {
                return Err(Error::arg(format!("structure {n} is not a sequence")));
            }
            for x in &s.obs {
                if x.len() != self.dim {
                    return Err(Error::arg(format!(
                        "structure {n} has observations of dimension {}, expected {}",
                        x.len(),
                        self.dim
                    )));
                }
                let ok = match self.emission {
                    Emission::Poisson => x.iter().all(|&v| is_count(v)),
                    Emission::Categorical { symbols } => is_count(x[0]) && (x[0] as usize) < symbols,
                    _ => true,
                };
                if !ok {
                    return Err(Error::arg(format!("structure {n} has observations outside the emission support")));
                }
            }
        }
        Ok(())
    }

    fn initial_params(&self, data: &StructuredDataset) -> Vec<f64> {
        let (k, r) = (self.states, self.dim);
        let stay = if k == 1 { 1.0 } else { 0.8 };
        let move_p = if k == 1 { 0.0 } else { 0.2 / (k - 1) as f64 };
        let transition = (0..k)
            .map(|i| (0..k).map(|j| if i == j { stay } else { move_p }).collect())
            .collect();
        let coords: Vec<Vec<f64>> = (0..r)
            .map(|c| {
                let mut v: Vec<f64> = data.structures.iter().flat_map(|s| s.obs.iter().map(move |x| x[c])).collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        let spread: Vec<Vec<f64>> = (0..k)
            .map(|st| coords.iter().map(|v| quantile(v, (st as f64 + 0.5) / k as f64)).collect())
            .collect();
        let variance = |v: &[f64]| {
            let n = v.len().max(1) as f64;
            let m = v.iter().sum::<f64>() / n;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).max(1e-3)
        };
        let emission = match self.emission {
            Emission::Gaussian => EmissionParams::Gaussian {
                means: spread.clone(),
                variances: (0..k).map(|_| coords.iter().map(|v| variance(v) / k as f64).collect()).collect(),
            },
            Emission::Poisson => EmissionParams::Poisson {
                rates: spread.iter().map(|row| row.iter().map(|v| v + 0.5).collect()).collect(),
            },
            Emission::Categorical { symbols } => {
                let mut counts = vec![1.0; symbols];
                for x in data.structures.iter().flat_map(|s| &s.obs) {
                    if let Some(c) = counts.get_mut(x[0] as usize) {
                        *c += 1.0;
                    }
                }
                let total: f64 = counts.iter().sum();
                let probs = (0..k)
                    .map(|st| {
                        let row: Vec<f64> = counts
                            .iter()
                            .enumerate()
                            .map(|(j, c)| c / total * if j % k == st { 1.5 } else { 1.0 })
                            .collect();
                        let z: f64 = row.iter().sum();
                        row.into_iter().map(|v| v / z).collect()
                    })
                    .collect();
                EmissionParams::Categorical { probs }
            }
            Emission::Ar { order } => EmissionParams::Ar {
                coefs: vec![vec![vec![0.0; r * r]; order]; k],
                offsets: spread.clone(),
                variance: coords.iter().map(|v| variance(v)).sum::<f64>() / (r * k) as f64,
            },
        };
        let p = HmmParams {
            initial: vec![1.0 / k as f64; k],
            transition,
            emission,
        };
        self.pack(&p).unwrap_or_else(|_| vec![0.0; self.num_params()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Scheme;
    use crate::marginal::chain::weighted_forward;
    use crate::models::structure_log_lik;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{Continuous, Discrete, Normal as SNormal, Poisson as SPoisson};

    fn random_theta(model: &Hmm, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..model.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Scaled forward recursion in probability space.
    fn scaled_forward(p: &HmmParams, dens: &dyn Fn(usize, usize) -> f64, n: usize) -> f64 {
        let k = p.initial.len();
        let mut alpha: Vec<f64> = (0..k).map(|s| p.initial[s] * dens(0, s)).collect();
        let mut ll = 0.0;
        for t in 0..n {
            if t > 0 {
                alpha = (0..k)
                    .map(|s| (0..k).map(|l| alpha[l] * p.transition[l][s]).sum::<f64>() * dens(t, s))
                    .collect();
            }
            let c: f64 = alpha.iter().sum();
            ll += c.ln();
            alpha.iter_mut().for_each(|a| *a /= c);
        }
        ll
    }

    #[test]
    fn zero_logits_are_uniform() {
        let m = Hmm::new(2, 1, Emission::Gaussian);
        let p = m.unpack(&vec![0.0; m.num_params()]).unwrap();
        assert_eq!(p.initial, vec![0.5, 0.5]);
        assert_eq!(p.transition, vec![vec![0.5, 0.5]; 2]);
        match p.emission {
            EmissionParams::Gaussian { variances, .. } => assert_eq!(variances[0][0], 1.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn pack_inverts_unpack() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for emission in [
            Emission::Gaussian,
            Emission::Poisson,
            Emission::Categorical { symbols: 4 },
            Emission::Ar { order: 2 },
        ] {
            let dim = if matches!(emission, Emission::Categorical { .. }) { 1 } else { 2 };
            let m = Hmm::new(3, dim, emission);
            let theta = random_theta(&m, &mut rng);
            let p = m.unpack(&theta).unwrap();
            for row in p.transition.iter().chain(std::iter::once(&p.initial)) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let back = m.pack(&p).unwrap();
            for (a, b) in theta.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(Hmm::new(2, 1, Emission::Gaussian).unpack(&[0.0; 3]).is_err());
    }

    #[test]
    fn gaussian_likelihood_matches_scaled_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = Hmm::new(3, 2, Emission::Gaussian);
        for _ in 0..10 {
            let theta = random_theta(&m, &mut rng);
            let data = m.simulate(&theta, &[25], rng.random()).unwrap();
            let s = &data.structures[0];
            let p = m.unpack(&theta).unwrap();
            let EmissionParams::Gaussian { means, variances } = &p.emission else { unreachable!() };
            let dens = |t: usize, k: usize| {
                (0..2)
                    .map(|c| SNormal::new(means[k][c], variances[k][c].sqrt()).unwrap().pdf(s.obs[t][c]))
                    .product::<f64>()
            };
            let reference = scaled_forward(&p, &dens, s.len());
            let ours = structure_log_lik(&m, s, &theta).unwrap();
            assert!((ours - reference).abs() < 1e-10, "{ours} vs {reference}");
        }
    }

    #[test]
    fn poisson_likelihood_matches_scaled_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Hmm::new(2, 1, Emission::Poisson);
        let theta = vec![0.3, 1.5, -0.4, 0.2, 1.8];
        let data = m.simulate(&theta, &[40], 9).unwrap();
        let s = &data.structures[0];
        let p = m.unpack(&theta).unwrap();
        let EmissionParams::Poisson { rates } = &p.emission else { unreachable!() };
        let dens = |t: usize, k: usize| SPoisson::new(rates[k][0]).unwrap().pmf(s.obs[t][0] as u64);
        let reference = scaled_forward(&p, &dens, s.len());
        let ours = structure_log_lik(&m, s, &theta).unwrap();
        assert!((ours - reference).abs() < 1e-10);
        let _ = rng.random::<u8>();
    }

    #[test]
    fn categorical_probabilities_sum_to_one() {
        let m = Hmm::new(2, 1, Emission::Categorical { symbols: 3 });
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = random_theta(&m, &mut rng);
        for len in 1..=3usize {
            let mut total = 0.0;
            for code in 0..3usize.pow(len as u32) {
                let obs = (0..len).map(|i| vec![((code / 3usize.pow(i as u32)) % 3) as f64]).collect();
                total += structure_log_lik(&m, &Structure::sequence(obs), &theta).unwrap().exp();
            }
            assert!((total - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn truncated_poisson_probabilities_sum_to_one() {
        let m = Hmm::new(2, 1, Emission::Poisson);
        let theta = vec![0.2, 0.5, -0.3, 0.4, 1.2];
        let mut total = 0.0;
        for a in 0..=30 {
            for b in 0..=30 {
                let s = Structure::sequence(vec![vec![a as f64], vec![b as f64]]);
                total += structure_log_lik(&m, &s, &theta).unwrap().exp();
            }
        }
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ar0_single_state_is_iid_gaussian() {
        let m = Hmm::new(1, 1, Emission::Ar { order: 0 });
        let theta = vec![0.7, 2.0f64.ln()];
        let ys = [0.1, -1.3, 2.2, 0.9];
        let s = Structure::sequence(ys.iter().map(|&y| vec![y]).collect());
        let reference: f64 = ys
            .iter()
            .map(|&y| SNormal::new(0.7, 2.0f64.sqrt()).unwrap().ln_pdf(y))
            .sum();
        assert!((structure_log_lik(&m, &s, &theta).unwrap() - reference).abs() < 1e-12);
    }

    #[test]
    fn ar0_matches_shared_variance_gaussian_mixture() {
        let ar = Hmm::new(2, 1, Emission::Ar { order: 0 });
        let gauss = Hmm::new(2, 1, Emission::Gaussian);
        let ar_theta = vec![0.3, 0.5, -0.2, -1.0, 1.5, 0.4];
        let g_theta = vec![0.3, 0.5, -0.2, -1.0, 1.5, 0.4, 0.4];
        let data = gauss.simulate(&g_theta, &[30], 5).unwrap();
        let s = &data.structures[0];
        let a = structure_log_lik(&ar, s, &ar_theta).unwrap();
        let g = structure_log_lik(&gauss, s, &g_theta).unwrap();
        assert!((a - g).abs() < 1e-10);
    }

    #[test]
    fn ar_lags_enter_the_mean() {
        let m = Hmm::new(1, 1, Emission::Ar { order: 1 });
        let theta = vec![0.5, 0.1, 0.0];
        let s = Structure::sequence(vec![vec![1.0], vec![2.0]]);
        let n = SNormal::new(0.1, 1.0).unwrap();
        let expected = n.ln_pdf(1.0) + SNormal::new(0.6, 1.0).unwrap().ln_pdf(2.0);
        assert!((structure_log_lik(&m, &s, &theta).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_prior_matches_density() {
        let m = Hmm::new(3, 1, Emission::Poisson).with_dirichlet(2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let theta = random_theta(&m, &mut rng);
        let p = m.unpack(&theta).unwrap();
        let dir = statrs::distribution::Dirichlet::new(vec![2.5; 3]).unwrap();
        let expected: f64 = std::iter::once(&p.initial)
            .chain(&p.transition)
            .map(|row| dir.ln_pdf(&nalgebra::DVector::from_vec(row.clone())))
            .sum();
        assert!((m.log_prior(&theta) - expected).abs() < 1e-10);
    }

    #[test]
    fn poisson_sample_mean() {
        let m = Hmm::new(1, 1, Emission::Poisson);
        let data = m.simulate(&[3.0f64.ln()], &[100_000], 17).unwrap();
        let mean = data.structures[0].obs.iter().map(|x| x[0]).sum::<f64>() / 1e5;
        assert!((mean - 3.0).abs() <= 3.0 * (3.0f64 / 1e5).sqrt());
    }

    #[test]
    fn simulation_is_deterministic() {
        let m = Hmm::new(2, 2, Emission::Ar { order: 1 });
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let theta = random_theta(&m, &mut rng);
        let a = m.simulate(&theta, &[20, 30], 42).unwrap();
        let b = m.simulate(&theta, &[20, 30], 42).unwrap();
        assert_eq!(a.structures, b.structures);
        let c = m.simulate(&theta, &[20, 30], 43).unwrap();
        assert_ne!(a.structures, c.structures);
    }

    #[test]
    fn weighted_at_ones_equals_log_lik() {
        let m = Hmm::new(2, 1, Emission::Gaussian);
        let theta = vec![0.1, 1.0, -1.0, -1.0, 2.0, 0.0, 0.0];
        let data = m.simulate(&theta, &[15], 1).unwrap();
        let s = &data.structures[0];
        let pot = m.potentials(&theta, s).unwrap();
        let w = vec![1.0; 15];
        let a = weighted_forward(&pot, &w, Scheme::A).unwrap();
        assert_eq!(a, structure_log_lik(&m, s, &theta).unwrap());
    }

    #[test]
    fn initial_params_are_finite_and_valid() {
        for emission in [Emission::Gaussian, Emission::Poisson, Emission::Categorical { symbols: 3 }, Emission::Ar { order: 1 }] {
            let m = Hmm::new(2, 1, emission);
            let theta = vec![0.0; m.num_params()];
            let data = m.simulate(&theta, &[50], 2).unwrap();
            m.validate_data(&data).unwrap();
            let init = m.initial_params(&data);
            assert_eq!(init.len(), m.num_params());
            assert!(init.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn rejects_bad_observations() {
        let m = Hmm::new(2, 1, Emission::Poisson);
        let data = StructuredDataset::single(Structure::sequence(vec![vec![1.5]])).unwrap();
        assert!(m.validate_data(&data).is_err());
        let m = Hmm::new(2, 1, Emission::Categorical { symbols: 2 });
        let data = StructuredDataset::single(Structure::sequence(vec![vec![2.0]])).unwrap();
        assert!(m.validate_data(&data).is_err());
    }
}
