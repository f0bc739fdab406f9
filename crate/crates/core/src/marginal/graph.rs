//! Weighted marginalization on general pairwise graphs by variable
//! elimination, plus exhaustive enumeration for small instances.

use std::collections::BTreeSet;

use rand::Rng;

use crate::autodiff::Scalar;
use crate::data::{clique_weight, Scheme};
use crate::error::{Error, Result};
use crate::model::Potentials;

/// Largest intermediate factor (in entries) elimination will build.
pub const MAX_FACTOR_ENTRIES: usize = 1_000_000;

/// Largest `K^T` enumerated by [`brute_force_weighted_marginal`].
pub const MAX_ENUMERATION: usize = 1_000_000;

#[derive(Clone, Debug)]
struct Factor<S> {
    /// Sorted variable indices; the first is the most significant digit.
    vars: Vec<usize>,
    table: Vec<S>,
}

fn checked_pow(k: usize, e: usize, limit: usize) -> Option<usize> {
    let mut acc = 1usize;
    for _ in 0..e {
        acc = acc.checked_mul(k)?;
        if acc > limit {
            return None;
        }
    }
    Some(acc)
}

/// Exponent of the weighted joint as one factor per node and per edge.
fn weighted_factors<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme, with_emission: bool) -> Vec<Factor<S>> {
    let k = pot.states;
    let mut out = Vec::with_capacity(pot.len() + pot.edges.len());
    for t in 0..pot.len() {
        let c = clique_weight(scheme, &[t], w);
        let table = (0..k)
            .map(|s| {
                let u = c * pot.latent(t, s);
                if with_emission {
                    w[t] * pot.emission(t, s) + u
                } else {
                    u
                }
            })
            .collect();
        out.push(Factor { vars: vec![t], table });
    }
    for (e, &(a, b)) in pot.edges.iter().enumerate() {
        let c = clique_weight(scheme, &[a, b], w);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut table = Vec::with_capacity(k * k);
        for x in 0..k {
            for y in 0..k {
                // x is the state of `lo`, y of `hi`
                let (sa, sb) = if a < b { (x, y) } else { (y, x) };
                table.push(c * pot.pair(e, sa, sb));
            }
        }
        out.push(Factor { vars: vec![lo, hi], table });
    }
    out
}

/// Sum out `order` in sequence. When `record` is set the combined factor
/// built before each sum-out is returned, for backward sampling.
fn eliminate<S: Scalar>(
    mut factors: Vec<Factor<S>>,
    order: &[usize],
    k: usize,
    record: bool,
) -> Result<(S, Vec<Factor<S>>)> {
    let mut recorded = Vec::new();
    let mut digits = Vec::new();
    for &v in order {
        let (touching, rest): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        let scope: Vec<usize> = touching
            .iter()
            .flat_map(|f| f.vars.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if scope.is_empty() {
            continue;
        }
        let m = scope.len();
        let size = checked_pow(k, m, MAX_FACTOR_ENTRIES).ok_or_else(|| {
            Error::Capacity(format!(
                "eliminating variable {v} needs a factor over {m} variables with {k} states"
            ))
        })?;
        let positions: Vec<Vec<usize>> = touching
            .iter()
            .map(|f| f.vars.iter().map(|x| scope.binary_search(x).unwrap()).collect())
            .collect();
        let mut combined = Vec::with_capacity(size);
        digits.clear();
        digits.resize(m, 0usize);
        for _ in 0..size {
            let mut acc = S::zero();
            for (f, pos) in touching.iter().zip(&positions) {
                let idx = pos.iter().fold(0usize, |i, &p| i * k + digits[p]);
                acc += f.table[idx];
            }
            combined.push(acc);
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < k {
                    break;
                }
                *d = 0;
            }
        }
        let p = scope.binary_search(&v).unwrap();
        let stride = k.pow((m - 1 - p) as u32);
        let mut column = vec![S::zero(); k];
        let reduced: Vec<S> = (0..size / k)
            .map(|o| {
                let (high, low) = (o / stride, o % stride);
                for (s, c) in column.iter_mut().enumerate() {
                    *c = combined[high * k * stride + s * stride + low];
                }
                S::log_sum_exp(&column)
            })
            .collect();
        let mut out_vars = scope.clone();
        out_vars.remove(p);
        factors.push(Factor {
            vars: out_vars,
            table: reduced,
        });
        if record {
            recorded.push(Factor { vars: scope, table: combined });
        }
    }
    if let Some(f) = factors.iter().find(|f| !f.vars.is_empty()) {
        return Err(Error::arg(format!(
            "elimination order does not cover variable {}",
            f.vars[0]
        )));
    }
    let mut total = S::zero();
    for f in &factors {
        total += f.table[0];
    }
    Ok((total, recorded))
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        adj[a].insert(b);
        adj[b].insert(a);
    }
    adj
}

fn fill_in(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nb: Vec<usize> = adj[v].iter().copied().collect();
    let mut fill = 0;
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if !adj[a].contains(&b) {
                fill += 1;
            }
        }
    }
    fill
}

fn remove_vertex(adj: &mut [BTreeSet<usize>], v: usize) {
    let nb: Vec<usize> = adj[v].iter().copied().collect();
    for &a in &nb {
        adj[a].remove(&v);
        for &b in &nb {
            if a != b {
                adj[a].insert(b);
            }
        }
    }
    adj[v].clear();
}

/// Greedy min-fill elimination order; ties go to the lowest index.
pub fn minfill_order(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = adjacency(n, edges);
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (fill_in(&adj, v), v))
            .unwrap();
        remove_vertex(&mut adj, v);
        alive[v] = false;
        order.push(v);
    }
    order
}

/// Largest neighbourhood met while eliminating in `order`.
pub fn induced_width(n: usize, edges: &[(usize, usize)], order: &[usize]) -> usize {
    let mut adj = adjacency(n, edges);
    let mut width = 0;
    for &v in order {
        width = width.max(adj[v].len());
        remove_vertex(&mut adj, v);
    }
    width
}

fn check<S: Scalar>(pot: &Potentials<S>, w: &[S]) -> Result<()> {
    pot.validate()?;
    crate::data::validate_edges(&pot.edges, pot.len())?;
    if w.len() != pot.len() {
        return Err(Error::arg(format!(
            "weight length {} does not match graph size {}",
            w.len(),
            pot.len()
        )));
    }
    Ok(())
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::arg("elimination order is not a permutation of the nodes"));
        }
    }
    if order.len() != n {
        return Err(Error::arg("elimination order is not a permutation of the nodes"));
    }
    Ok(())
}

/// `log p(x; Θ, w)` by variable elimination. `order` defaults to min-fill.
pub fn eliminate_weighted<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme, order: Option<&[usize]>) -> Result<S> {
    check(pot, w)?;
    let owned;
    let order = match order {
        Some(o) => o,
        None => {
            owned = minfill_order(pot.len(), &pot.edges);
            &owned
        }
    };
    check_order(order, pot.len())?;
    let k = pot.states;
    let (num, _) = eliminate(weighted_factors(pot, w, scheme, true), order, k, false)?;
    let out = if scheme == Scheme::B || !pot.normalized_prior {
        num - eliminate(weighted_factors(pot, w, scheme, false), order, k, false)?.0
    } else {
        num
    };
    if out.value().is_nan() {
        return Err(Error::numerical("variable elimination"));
    }
    Ok(out)
}

/// Reference value by summing over all `K^T` latent configurations.
///
/// Always subtracts the weighted latent-only normalizer, so it is an
/// independent check of the shortcut taken for normalized priors.
pub fn brute_force_weighted_marginal<S: Scalar>(pot: &Potentials<S>, w: &[S], scheme: Scheme) -> Result<S> {
    check(pot, w)?;
    let k = pot.states;
    let n = pot.len();
    let total = checked_pow(k, n, MAX_ENUMERATION)
        .ok_or_else(|| Error::Capacity(format!("{k}^{n} configurations exceed the enumeration budget")))?;
    let mut joint = Vec::with_capacity(total);
    let mut prior = Vec::with_capacity(total);
    let mut z = vec![0usize; n];
    for _ in 0..total {
        let mut lat = S::zero();
        let mut emit = S::zero();
        for t in 0..n {
            lat += clique_weight(scheme, &[t], w) * pot.latent(t, z[t]);
            emit += w[t] * pot.emission(t, z[t]);
        }
        for (e, &(a, b)) in pot.edges.iter().enumerate() {
            lat += clique_weight(scheme, &[a, b], w) * pot.pair(e, z[a], z[b]);
        }
        joint.push(lat + emit);
        prior.push(lat);
        for d in z.iter_mut().rev() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    Ok(S::log_sum_exp(&joint) - S::log_sum_exp(&prior))
}

/// Draw latents by eliminating forwards and sampling backwards, from the
/// latent-only distribution or, with `with_emission`, the posterior.
pub fn sample_latents<R: Rng + ?Sized>(
    pot: &Potentials<f64>,
    order: &[usize],
    with_emission: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = pot.len();
    check_order(order, n)?;
    let ones = vec![1.0; n];
    let k = pot.states;
    let (_, recorded) = eliminate(weighted_factors(pot, &ones, Scheme::A, with_emission), order, k, true)?;
    let mut z = vec![usize::MAX; n];
    let mut logits = vec![0.0; k];
    for f in recorded.iter().rev() {
        let v = *f
            .vars
            .iter()
            .find(|&&x| z[x] == usize::MAX)
            .expect("recorded factor has one free variable");
        for (s, l) in logits.iter_mut().enumerate() {
            let idx = f
                .vars
                .iter()
                .fold(0usize, |i, &x| i * k + if x == v { s } else { z[x] });
            *l = f.table[idx];
        }
        let lse = f64::log_sum_exp(&logits);
        let mut u: f64 = rng.random();
        let mut pick = k - 1;
        for (s, &l) in logits.iter().enumerate() {
            let p = (l - lse).exp();
            if u < p {
                pick = s;
                break;
            }
            u -= p;
        }
        z[v] = pick;
    }
    Ok(z)
}
