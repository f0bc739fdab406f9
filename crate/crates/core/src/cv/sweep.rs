//! Approximate CV along an optimizer trajectory.

use serde::{Deserialize, Serialize};

use super::{approx_with, CvReport};
use crate::acv::build_bundle;
use crate::data::FoldPlan;
use crate::error::{Error, Result};
use crate::optimize::FitResult;
use crate::problem::CvObjective;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// One-based trajectory index.
    pub iterate: usize,
    /// Euclidean distance to the final iterate.
    pub eps_theta: f64,
    pub grad_norm: f64,
    /// Mean IJ fold loss at this iterate.
    pub ij_loss: f64,
    /// `|ij_loss − exact CV loss|`.
    pub error: f64,
    pub fold_errors: Vec<f64>,
    pub ridge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub exact_loss: f64,
    pub points: Vec<SweepPoint>,
    /// Iterates whose bundle could not be built, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// Slope of `error ≈ C·ε_Θ + ε` over the final decade.
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the final decade has no spread in the error.
    pub r_squared: Option<f64>,
    /// Number of points in the final decade.
    pub tail_len: usize,
}

/// Least squares of `y ≈ c·x + b` with `c, b ≥ 0`, by enumerating the
/// active sets. Returns `(c, b, residual sum of squares)`.
pub fn nnls_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sse = |c: f64, b: f64| xs.iter().zip(ys).map(|(x, y)| (y - c * x - b).powi(2)).sum::<f64>();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let mut candidates = vec![(0.0, my.max(0.0)), (0.0, 0.0)];
    let xx: f64 = xs.iter().map(|x| x * x).sum();
    if xx > 0.0 {
        let c = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / xx;
        candidates.push((c.max(0.0), 0.0));
    }
    if sxx > 0.0 {
        let c = sxy / sxx;
        let b = my - c * mx;
        if c >= 0.0 && b >= 0.0 {
            candidates.push((c, b));
        }
    }
    candidates
        .into_iter()
        .map(|(c, b)| (c, b, sse(c, b)))
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap()
}

/// Indices of the final decade: points with `ε_Θ ≤ ε_Θ(first) / 10`.
pub fn final_decade(points: &[SweepPoint]) -> Vec<usize> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let cut = 0.1 * first.eps_theta;
    (0..points.len()).filter(|&i| points[i].eps_theta <= cut).collect()
}

impl SweepRecord {
    /// With the tail ordered by decreasing `ε_Θ`, each error exceeds the
    /// previous one by at most the relative `band` plus `floor`.
    pub fn tail_non_increasing(&self, band: f64, floor: f64) -> bool {
        let mut tail = final_decade(&self.points);
        tail.sort_by(|&a, &b| self.points[b].eps_theta.total_cmp(&self.points[a].eps_theta));
        tail.windows(2).all(|w| {
            let (prev, next) = (&self.points[w[0]], &self.points[w[1]]);
            next.error <= prev.error * (1.0 + band) + floor
        })
    }

    pub fn final_point(&self) -> Option<&SweepPoint> {
        self.points.last()
    }
}

/// Rebuild the bundle at every `stride`-th iterate of `fit`, counted back
/// from the final one. Run IJ over `plan`, and compare with `exact`.
pub fn inexact_sweep<F: CvObjective>(f: &F, plan: &FoldPlan, fit: &FitResult, stride: usize, exact: &CvReport) -> Result<SweepRecord> {
    if stride == 0 {
        return Err(Error::arg("stride must be positive"));
    }
    let expected: Vec<Vec<usize>> = plan.folds.iter().map(|f| f.indices().to_vec()).collect();
    if exact.plan != expected || !exact.is_complete() {
        return Err(Error::arg("a complete exact CV report on the same plan is required"));
    }
    let traj = &fit.trajectory;
    let last = traj.len();
    let mut iterates: Vec<usize> = (1..=last).rev().step_by(stride).collect();
    iterates.reverse();
    let final_theta = &traj[last - 1].theta;
    let exact_loss = exact.mean_loss();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for s in iterates {
        let it = &traj[s - 1];
        let bundle = match build_bundle(f, &it.theta) {
            Ok(b) => b,
            Err(e) if e.is_numerical() => {
                skipped.push((s, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let report = match approx_with(f, plan, &it.theta, Some(&bundle)) {
            Ok(r) => r,
            Err(e) if e.is_numerical() => {
                skipped.push((s, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let ij_loss = report.mean_loss();
        let eps_theta = it.theta.iter().zip(final_theta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        points.push(SweepPoint {
            iterate: s,
            eps_theta,
            grad_norm: it.grad_norm,
            ij_loss,
            error: (ij_loss - exact_loss).abs(),
            fold_errors: report.outcomes.iter().zip(&exact.outcomes).map(|(a, e)| (a.loss - e.loss).abs()).collect(),
            ridge: bundle.ridge,
        });
    }
    let tail = final_decade(&points);
    let xs: Vec<f64> = tail.iter().map(|&i| points[i].eps_theta).collect();
    let ys: Vec<f64> = tail.iter().map(|&i| points[i].error).collect();
    let (slope, intercept, r_squared) = if xs.is_empty() {
        (0.0, 0.0, None)
    } else {
        let (c, b, sse) = nnls_line(&xs, &ys);
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sst: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        (c, b, (sst > 0.0).then(|| 1.0 - sse / sst))
    };
    Ok(SweepRecord {
        exact_loss,
        tail_len: tail.len(),
        points,
        skipped,
        slope,
        intercept,
        r_squared,
    })
}
