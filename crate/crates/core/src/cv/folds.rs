//! Fold generators. Folds are zero-based index sets.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Fold;
use crate::error::{Error, Result};

/// `⌊m·T/100⌋`, rejecting sizes that leave nothing out or nothing in.
fn leave_out_size(t: usize, m_percent: f64) -> Result<usize> {
    if !(m_percent > 0.0 && m_percent < 100.0) {
        return Err(Error::arg(format!("leave-out percentage {m_percent} must lie strictly between 0 and 100")));
    }
    let size = (m_percent * t as f64 / 100.0).floor() as usize;
    if size == 0 {
        return Err(Error::arg(format!("{m_percent}% of {t} indices rounds down to an empty fold")));
    }
    Ok(size)
}

/// Redraw until `n_folds` distinct folds exist.
fn distinct<F: FnMut(&mut ChaCha8Rng) -> Fold>(n_folds: usize, possible: f64, seed: u64, mut draw: F) -> Result<Vec<Fold>> {
    if n_folds as f64 > possible {
        return Err(Error::arg(format!("cannot draw {n_folds} distinct folds from {possible} candidates")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut folds = Vec::with_capacity(n_folds);
    while folds.len() < n_folds {
        let f = draw(&mut rng);
        if seen.insert(f.clone()) {
            folds.push(f);
        }
    }
    Ok(folds)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    statrs::function::factorial::ln_binomial(n as u64, k as u64)
}

/// `n_folds` uniform subsets of size `⌊m·T/100⌋`.
pub fn make_folds_iid(t: usize, m_percent: f64, n_folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let size = leave_out_size(t, m_percent)?;
    distinct(n_folds, ln_choose(t, size).exp(), seed, |rng| Fold::new(sample(rng, t, size).into_vec()))
}

/// Blocks `{s - ⌊m·T/100⌋, …, s}` ending at a uniform `s`, so each fold
/// holds `⌊m·T/100⌋ + 1` consecutive indices.
pub fn make_folds_contiguous(t: usize, m_percent: f64, n_folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let size = leave_out_size(t, m_percent)?;
    if size + 1 >= t {
        return Err(Error::arg("contiguous block would cover every index"));
    }
    distinct(n_folds, (t - size) as f64, seed, |rng| {
        let end = rng.random_range(size..t);
        Fold::range(end - size, end)
    })
}

/// The single fold `{start, …, T-1}`.
pub fn make_folds_future(t: usize, start: usize) -> Result<Vec<Fold>> {
    if start == 0 {
        return Err(Error::arg("leaving out every index leaves no training data"));
    }
    if start >= t {
        return Err(Error::arg(format!("future fold start {start} outside 0..{t}")));
    }
    Ok(vec![Fold::range(start, t - 1)])
}

/// One singleton fold per index.
pub fn make_folds_loo(n: usize) -> Vec<Fold> {
    (0..n).map(|i| Fold::new(vec![i])).collect()
}
