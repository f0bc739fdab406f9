//! The `fit`, `cv`, `sweep` and `bench` commands. Each writes its files
//! under an output directory and returns a short human-readable summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use crate::config::{FoldSpec, RunConfig};
use crate::cv::{approx_cv, compare_reports, exact_cv, inexact_sweep, CvReport, Method};
use crate::data::{FoldPlan, StructuredDataset};
use crate::error::{Error, Result};
use crate::io;
use crate::model::Model;
use crate::models::AnyModel;
use crate::optimize::{fit, FitResult};
use crate::problem::Problem;

fn problem<'a>(cfg: &'a RunConfig, data: &'a StructuredDataset) -> Result<Problem<'a, AnyModel>> {
    Problem::new(&cfg.model, data, cfg.target(), cfg.scheme()?)
}

fn full_fit(cfg: &RunConfig, p: &Problem<'_, AnyModel>) -> Result<FitResult> {
    let start = match &cfg.fit.start {
        Some(s) => {
            cfg.model.check_params(s)?;
            s.clone()
        }
        None => cfg.model.initial_params(p.data),
    };
    fit(p, &p.ones(), &start, &cfg.fit.options())
}

fn require_converged(r: &FitResult) -> Result<()> {
    if r.converged {
        Ok(())
    } else {
        Err(Error::Optimization {
            message: format!("full-data fit stopped with gradient norm {:e}", r.grad_norm),
            last_iterate: r.theta_hat.to_vec(),
        })
    }
}

fn data_file(data: &StructuredDataset) -> &'static str {
    if data.structures.iter().all(|s| s.is_chain()) {
        "data.csv"
    } else {
        "data.json"
    }
}

/// Fit on all data; writes the data used, `params.csv`, `trajectory.csv`
/// and `fit.json`.
pub fn cmd_fit(cfg: &RunConfig, out: &Path) -> Result<String> {
    let data = cfg.dataset()?;
    let p = problem(cfg, &data)?;
    let r = full_fit(cfg, &p)?;
    let hash = cfg.hash();
    fs::create_dir_all(out)?;
    io::save_dataset(&data, &out.join(data_file(&data)))?;
    io::write_params(&r.theta_hat, &out.join("params.csv"))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(out.join("trajectory.csv"))?;
    let mut header = vec!["iterate".to_string(), "objective".into(), "grad_norm".into()];
    header.extend((1..=r.theta_hat.len()).map(|d| format!("theta_{d}")));
    w.write_record(&header)?;
    for (s, it) in r.trajectory.iter().enumerate() {
        let mut row = vec![(s + 1).to_string(), io::fmt_f64(it.objective), io::fmt_f64(it.grad_norm)];
        row.extend(it.theta.iter().map(|&v| io::fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    let objective = r.trajectory.last().map(|i| i.objective).unwrap_or(f64::NAN);
    io::write_json(
        &json!({
            "config_hash": hash,
            "family": cfg.model.name(),
            "converged": r.converged,
            "iterations": r.iterations(),
            "grad_norm": r.grad_norm,
            "neg_log_posterior": objective,
        }),
        &out.join("fit.json"),
    )?;
    require_converged(&r)?;
    Ok(format!(
        "fit {}: {} iterations, gradient norm {:.2e}, negative log posterior {:.6}",
        cfg.model.name(),
        r.iterations(),
        r.grad_norm,
        objective
    ))
}

fn timing_json(r: &CvReport) -> serde_json::Value {
    json!({
        "setup_seconds": r.setup_time,
        "param_seconds": r.param_time(),
        "loss_seconds": r.loss_time(),
        "total_seconds": r.total_time(),
        "wall_seconds": r.wall_time,
        "refits": r.refits,
    })
}

/// Run every configured method on the configured plan; writes
/// `report_<method>.csv`, `comparison_<method>.csv` against exact CV when
/// it ran, and `timings.json`.
pub fn cmd_cv(cfg: &RunConfig, out: &Path) -> Result<String> {
    if cfg.cv.methods.is_empty() {
        return Err(Error::arg("cv.methods is empty"));
    }
    let data = cfg.dataset()?;
    let p = problem(cfg, &data)?;
    let plan = cfg.plan(&data)?;
    let r = full_fit(cfg, &p)?;
    require_converged(&r)?;
    let hash = cfg.hash();
    fs::create_dir_all(out)?;
    let mut reports = Vec::new();
    let mut methods = cfg.cv.methods.clone();
    methods.sort();
    methods.dedup();
    for &m in &methods {
        let report = match m {
            Method::Exact => exact_cv(&p, &plan, &r.theta_hat, &cfg.fit.options())?,
            _ => approx_cv(&p, &plan, &r.theta_hat, m)?,
        };
        io::write_report(&report, &out.join(format!("report_{m}.csv")), &hash)?;
        reports.push(report);
    }
    let mut summary = String::new();
    let mut timings = serde_json::Map::new();
    for rep in &reports {
        writeln!(summary, "{:>5}: mean fold loss {:.6} over {} folds", rep.method, rep.mean_loss(), rep.outcomes.len()).unwrap();
        timings.insert(rep.method.to_string(), timing_json(rep));
    }
    if let Some(exact) = reports.iter().find(|r| r.method == Method::Exact) {
        for rep in reports.iter().filter(|r| r.method != Method::Exact) {
            let c = compare_reports(exact, rep)?;
            io::write_comparison(&c, &out.join(format!("comparison_{}.csv", rep.method)), &hash)?;
            writeln!(
                summary,
                "{:>5} vs exact: relative error {} (median {:.4}), correlation {:.4}, speedup {:.1}x",
                rep.method,
                c.summary(),
                c.median_rel_err,
                c.pearson,
                c.speedup
            )
            .unwrap();
            timings.insert(format!("speedup_{}", rep.method), json!(c.speedup));
        }
        if !exact.is_complete() {
            io::write_json(&timings, &out.join("timings.json"))?;
            return Err(Error::Optimization {
                message: format!("{} of {} refits failed; see report_exact.json", exact.failures.len(), plan.len()),
                last_iterate: r.theta_hat.to_vec(),
            });
        }
    }
    io::write_json(&timings, &out.join("timings.json"))?;
    Ok(summary.trim_end().to_string())
}

/// IJ along the full-data fit's trajectory against a stored exact report;
/// writes `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<String> {
    let path = cfg.sweep.exact_report.as_ref().ok_or_else(|| Error::arg("sweep.exact_report is not set; run `cv` with the exact method first"))?;
    if !path.exists() {
        return Err(Error::arg(format!("exact report {} does not exist", path.display())));
    }
    let exact = io::read_report(path)?;
    if exact.method != Method::Exact {
        return Err(Error::arg(format!("{} holds a {} report, not an exact one", path.display(), exact.method)));
    }
    let data = cfg.dataset()?;
    let p = problem(cfg, &data)?;
    let plan = FoldPlan::new(exact.plan.iter().map(|f| crate::data::Fold::new(f.clone())).collect(), cfg.scheme()?, cfg.target())?;
    let r = full_fit(cfg, &p)?;
    let rec = inexact_sweep(&p, &plan, &r, cfg.sweep.stride, &exact)?;
    fs::create_dir_all(out)?;
    io::write_sweep(&rec, &out.join("sweep.csv"), &cfg.hash())?;
    Ok(format!(
        "sweep: {} points ({} skipped), final error {:.3e}, slope {:.3e}, intercept {:.3e}, R² {}",
        rec.points.len(),
        rec.skipped.len(),
        rec.final_point().map_or(f64::NAN, |p| p.error),
        rec.slope,
        rec.intercept,
        rec.r_squared.map_or("n/a".into(), |v| format!("{v:.3}"))
    ))
}

/// Time each method at each configured size; writes `bench.csv`.
pub fn cmd_bench(cfg: &RunConfig, out: &Path) -> Result<String> {
    let b = &cfg.bench;
    if b.folds == 0 || b.exact_folds == 0 || b.exact_folds > b.folds {
        return Err(Error::arg("bench needs 0 < exact_folds <= folds"));
    }
    let mut rows = vec!["method,size,folds_run,folds,seconds_per_fold,total_seconds".to_string()];
    for &size in &b.sizes {
        let data = cfg.dataset_of_size(size)?;
        let p = problem(cfg, &data)?;
        let mut sized = cfg.clone();
        sized.cv.folds = match &cfg.cv.folds {
            FoldSpec::Iid { percent, .. } => FoldSpec::Iid { percent: *percent, count: b.folds },
            FoldSpec::Contiguous { percent, .. } => FoldSpec::Contiguous { percent: *percent, count: b.folds },
            other => other.clone(),
        };
        let mut plan = sized.plan(&data)?;
        plan.folds.truncate(b.folds);
        let r = full_fit(cfg, &p)?;
        require_converged(&r)?;
        for &m in &b.methods {
            let (report, run) = match m {
                Method::Exact => {
                    let mut sub = plan.clone();
                    sub.folds.truncate(b.exact_folds);
                    (exact_cv(&p, &sub, &r.theta_hat, &cfg.fit.options())?, sub.len())
                }
                _ => (approx_cv(&p, &plan, &r.theta_hat, m)?, plan.len()),
            };
            let fold_time = (report.param_time() + report.loss_time()) / run as f64;
            let total = report.setup_time + fold_time * plan.len() as f64;
            rows.push(format!("{m},{size},{run},{},{},{}", plan.len(), io::fmt_f64(fold_time), io::fmt_f64(total)));
        }
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("bench.csv"), rows.join("\n") + "\n")?;
    Ok(rows.join("\n"))
}
