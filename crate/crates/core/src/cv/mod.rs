//! Exact and approximate cross-validation over a fold plan.

pub mod folds;
pub mod sweep;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acv::{build_bundle, factor_negative, ij_params, ns_params, HessianBundle};
use crate::autodiff::hessian;
use crate::data::{fold_to_weights, Fold, FoldPlan};
use crate::error::{Error, Result};
use crate::optimize::{fit_preconditioned, FitOptions};
use crate::problem::CvObjective;

pub use folds::{make_folds_contiguous, make_folds_future, make_folds_iid, make_folds_loo};
pub use sweep::{inexact_sweep, SweepPoint, SweepRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Ij,
    Ns,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Ij => "ij",
            Method::Ns => "ns",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Method::Exact),
            "ij" => Ok(Method::Ij),
            "ns" => Ok(Method::Ns),
            other => Err(Error::arg(format!("unknown method {other:?} (expected exact, ij or ns)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldOutcome {
    /// Position of the fold in the plan.
    pub fold: usize,
    pub indices: Vec<usize>,
    pub params: Vec<f64>,
    pub loss: f64,
    pub point_losses: Vec<f64>,
    /// False only for exact refits that hit the iteration cap.
    pub converged: bool,
    /// Seconds spent producing the parameters.
    pub param_time: f64,
    /// Seconds spent evaluating the losses.
    pub loss_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldFailure {
    pub fold: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct CvReport {
    pub method: Method,
    /// Fold index sets of the plan, in order.
    pub plan: Vec<Vec<usize>>,
    /// Completed folds in plan order.
    pub outcomes: Vec<FoldOutcome>,
    pub failures: Vec<FoldFailure>,
    /// Shared work before the fold loop, such as building the bundle.
    pub setup_time: f64,
    /// Number of refits run.
    pub refits: usize,
    /// Elapsed time of the whole call.
    pub wall_time: f64,
}

impl CvReport {
    fn empty(method: Method, plan: &FoldPlan) -> Self {
        CvReport {
            method,
            plan: plan.folds.iter().map(|f| f.indices().to_vec()).collect(),
            outcomes: Vec::new(),
            failures: Vec::new(),
            setup_time: 0.0,
            refits: 0,
            wall_time: 0.0,
        }
    }

    /// Mean fold loss over completed folds; zero for an empty report.
    pub fn mean_loss(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().map(|o| o.loss).sum::<f64>() / self.outcomes.len() as f64
    }

    pub fn param_time(&self) -> f64 {
        self.outcomes.iter().map(|o| o.param_time).sum()
    }

    pub fn loss_time(&self) -> f64 {
        self.outcomes.iter().map(|o| o.loss_time).sum()
    }

    /// Serial-equivalent cost: setup plus every fold's work.
    pub fn total_time(&self) -> f64 {
        self.setup_time + self.param_time() + self.loss_time()
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn evaluate<F: CvObjective>(f: &F, fold_id: usize, fold: &Fold, params: Vec<f64>, converged: bool, param_time: f64) -> Result<FoldOutcome> {
    let start = Instant::now();
    let loss = f.fold_loss(&params, fold)?;
    let point_losses = f.point_losses(&params, fold)?;
    Ok(FoldOutcome {
        fold: fold_id,
        indices: fold.indices().to_vec(),
        params,
        loss,
        point_losses,
        converged,
        param_time,
        loss_time: start.elapsed().as_secs_f64(),
    })
}

/// Refit every fold from `theta_hat` and evaluate its held-out loss.
///
/// Refits are preconditioned with the full-data Hessian at `theta_hat`,
/// computed once and counted as setup time. Folds run concurrently. A fold
/// whose refit fails is listed in `failures` and the remaining folds still
/// complete.
pub fn exact_cv<F: CvObjective>(f: &F, plan: &FoldPlan, theta_hat: &[f64], opts: &FitOptions) -> Result<CvReport> {
    f.check_plan(plan)?;
    let start = Instant::now();
    let pre = if plan.folds.iter().any(|f| !f.is_empty()) {
        hessian(f, theta_hat, &vec![1.0; f.num_weights()]).ok().and_then(|h| factor_negative(&h).ok()).map(|(c, _)| c)
    } else {
        None
    };
    let setup_time = start.elapsed().as_secs_f64();
    let results: Vec<Result<FoldOutcome>> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let t0 = Instant::now();
            let (params, converged) = if fold.is_empty() {
                (theta_hat.to_vec(), true)
            } else {
                let w = fold_to_weights(fold, f.num_weights())?;
                let r = fit_preconditioned(f, &w, theta_hat, opts, pre.as_ref())?;
                (r.theta_hat.into_inner(), r.converged)
            };
            evaluate(f, i, fold, params, converged, t0.elapsed().as_secs_f64())
        })
        .collect();
    let mut report = CvReport::empty(Method::Exact, plan);
    report.setup_time = setup_time;
    report.refits = plan.folds.iter().filter(|f| !f.is_empty()).count();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => report.outcomes.push(o),
            Err(e) => report.failures.push(FoldFailure {
                fold: i,
                message: e.to_string(),
            }),
        }
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// IJ or NS approximations to every refit. Any failure aborts the run.
pub fn approx_cv<F: CvObjective>(f: &F, plan: &FoldPlan, theta1: &[f64], method: Method) -> Result<CvReport> {
    let start = Instant::now();
    let bundle = match method {
        Method::Ij => {
            f.check_plan(plan)?;
            Some(build_bundle(f, theta1)?)
        }
        Method::Ns => {
            f.check_plan(plan)?;
            None
        }
        Method::Exact => return Err(Error::arg("exact CV is not an approximation; use exact_cv")),
    };
    let mut report = approx_with(f, plan, theta1, bundle.as_ref())?;
    report.setup_time = if bundle.is_some() { (start.elapsed().as_secs_f64() - report.wall_time).max(0.0) } else { 0.0 };
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// IJ with a prebuilt bundle when one is given, NS otherwise.
pub fn approx_with<F: CvObjective>(f: &F, plan: &FoldPlan, theta1: &[f64], bundle: Option<&HessianBundle>) -> Result<CvReport> {
    let start = Instant::now();
    let outcomes: Vec<FoldOutcome> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let t0 = Instant::now();
            let params = match bundle {
                Some(b) => ij_params(b, theta1, fold)?,
                None => ns_params(f, theta1, fold)?,
            };
            evaluate(f, i, fold, params.into_inner(), true, t0.elapsed().as_secs_f64())
        })
        .collect::<Result<_>>()?;
    let method = if bundle.is_some() { Method::Ij } else { Method::Ns };
    let mut report = CvReport::empty(method, plan);
    report.outcomes = outcomes;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// One left-out index scored by both methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub fold: usize,
    pub index: usize,
    pub exact: f64,
    pub approx: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method: Method,
    pub points: Vec<PointPair>,
    /// `(fold, exact loss, approximate loss, relative error)`.
    pub folds: Vec<(usize, f64, f64, f64)>,
    pub exact_mean_loss: f64,
    pub approx_mean_loss: f64,
    pub median_rel_err: f64,
    pub mean_rel_err: f64,
    pub sd_rel_err: f64,
    /// Correlation of the per-point pairs.
    pub pearson: f64,
    /// Serial-equivalent exact time over approximate time.
    pub speedup: f64,
}

/// `|approx − exact| / |exact|`.
pub fn relative_error(exact: f64, approx: f64) -> f64 {
    let diff = (approx - exact).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / exact.abs()
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn pearson(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 && syy == 0.0 && pairs.iter().all(|(x, y)| x == y) {
        return 1.0;
    }
    sxy / (sxx * syy).sqrt()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Pair two reports on the same plan. Folds missing from either side are
/// skipped.
pub fn compare_reports(exact: &CvReport, approx: &CvReport) -> Result<Comparison> {
    if exact.plan != approx.plan {
        return Err(Error::arg("reports were produced from different fold plans"));
    }
    let mut points = Vec::new();
    let mut folds = Vec::new();
    let mut j = 0;
    for e in &exact.outcomes {
        while j < approx.outcomes.len() && approx.outcomes[j].fold < e.fold {
            j += 1;
        }
        let Some(a) = approx.outcomes.get(j).filter(|a| a.fold == e.fold) else {
            continue;
        };
        folds.push((e.fold, e.loss, a.loss, relative_error(e.loss, a.loss)));
        for ((&index, &x), &y) in e.indices.iter().zip(&e.point_losses).zip(&a.point_losses) {
            points.push(PointPair {
                fold: e.fold,
                index,
                exact: x,
                approx: y,
                rel_err: relative_error(x, y),
            });
        }
    }
    if points.is_empty() {
        return Err(Error::arg("reports share no completed, non-empty folds"));
    }
    let rel: Vec<f64> = points.iter().map(|p| p.rel_err).collect();
    let (mean_rel_err, sd_rel_err) = mean_sd(&rel);
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.exact, p.approx)).collect();
    Ok(Comparison {
        method: approx.method,
        median_rel_err: median(&rel),
        mean_rel_err,
        sd_rel_err,
        pearson: pearson(&xy),
        exact_mean_loss: exact.mean_loss(),
        approx_mean_loss: approx.mean_loss(),
        speedup: exact.total_time() / approx.total_time(),
        points,
        folds,
    })
}

impl Comparison {
    /// `mean ± 2 SD` of the per-point relative errors.
    pub fn summary(&self) -> String {
        format!("{:.3} ± {:.3}", self.mean_rel_err, 2.0 * self.sd_rel_err)
    }
}
