//! Acceptance suite. Prints one PASS/FAIL line per criterion and a
//! summary. Set `ACCEPTANCE_STRICT=1` to exit non-zero when any fails.
//! A number argument runs that criterion alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use structacv::acv::{build_bundle, ij_params};
use structacv::autodiff::{fd_check, Objective, Scalar};
use structacv::cv::{
    approx_cv, compare_reports, exact_cv, inexact_sweep, make_folds_contiguous, make_folds_iid, make_folds_loo, Comparison,
    CvReport, Method,
};
use structacv::data::{fold_to_weights, path_edges, Fold, FoldPlan, Scheme, Target};
use structacv::cv::sweep::nnls_line;
use structacv::io;
use structacv::marginal::chain::weighted_forward;
use structacv::marginal::graph::{brute_force_weighted_marginal, eliminate_weighted};
use structacv::marginal::weighted_log_marginal;
use structacv::model::{Model, Potentials};
use structacv::models::event::EventParams;
use structacv::models::spatial::grid_edges;
use structacv::models::{AnyModel, Crf, Emission, EventHmm, Hmm, SpatialIsing};
use structacv::optimize::{fit, fit_preconditioned, FitOptions};
use structacv::problem::{CvObjective, Problem};
use structacv::Result;

type Outcome = Result<(bool, String)>;

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        text.push_str(&r.join(","));
        text.push('\n');
    }
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn f(v: f64) -> String {
    io::fmt_f64(v)
}

fn save(dir: &Path, stem: &str, report: &CvReport) -> Result<()> {
    io::write_report(report, &dir.join(format!("{stem}.csv")), stem)
}

fn save_cmp(dir: &Path, stem: &str, c: &Comparison) -> Result<()> {
    io::write_comparison(c, &dir.join(format!("{stem}.csv")), stem)
}

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sd * z
}

fn log_normalized(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(-1.5..1.5)).collect();
    let lse = f64::log_sum_exp(&raw);
    raw.iter().map(|r| r - lse).collect()
}

fn random_chain(rng: &mut ChaCha8Rng, t: usize, k: usize, normalized: bool) -> Potentials<f64> {
    let emission = (0..t * k).map(|_| rng.random_range(-4.0..0.5)).collect();
    let mut latent = vec![0.0; t * k];
    let table: Vec<f64> = if normalized {
        latent[..k].copy_from_slice(&log_normalized(rng, k));
        (0..k).flat_map(|_| log_normalized(rng, k)).collect()
    } else {
        latent.iter_mut().for_each(|l| *l = rng.random_range(-1.0..1.0));
        (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let edges = path_edges(t);
    Potentials {
        states: k,
        emission,
        latent,
        edge_table: vec![0; edges.len()],
        edges,
        tables: vec![table],
        normalized_prior: normalized,
    }
}

fn random_mrf(rng: &mut ChaCha8Rng, n: usize, k: usize, edges: Vec<(usize, usize)>) -> Potentials<f64> {
    let tables: Vec<Vec<f64>> = edges.iter().map(|_| (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    Potentials {
        states: k,
        emission: (0..n * k).map(|_| rng.random_range(-3.0..0.5)).collect(),
        latent: (0..n * k).map(|_| rng.random_range(-0.5..0.5)).collect(),
        edge_table: (0..edges.len()).collect(),
        edges,
        tables,
        normalized_prior: false,
    }
}

fn random_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|b| (rng.random_range(0..b), b)).collect();
    for a in 0..n {
        for b in a + 1..n {
            if !edges.contains(&(a, b)) && rng.random_bool(0.2) {
                edges.push((a, b));
            }
        }
    }
    edges
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        })
        .collect()
}

fn c1(dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let graph = i % 2 == 1;
        let k = rng.random_range(2..=3);
        let pot = if graph {
            let n = rng.random_range(3..=12);
            let edges = random_edges(&mut rng, n);
            random_mrf(&mut rng, n, k, edges)
        } else {
            let t = rng.random_range(1..=6);
            let normalized = rng.random_bool(0.5);
            random_chain(&mut rng, t, k, normalized)
        };
        let w = random_weights(&mut rng, pot.len());
        for scheme in [Scheme::A, Scheme::B] {
            let oracle = brute_force_weighted_marginal(&pot, &w, scheme)?;
            let elim = eliminate_weighted(&pot, &w, scheme, None)?;
            let mut row = vec![(i + 1).to_string(), scheme.to_string(), pot.len().to_string(), k.to_string(), f(oracle), f(elim)];
            worst = worst.max((elim - oracle).abs());
            if graph {
                row.push(String::new());
            } else {
                let fwd = weighted_forward(&pot, &w, scheme)?;
                worst = worst.max((fwd - oracle).abs());
                row.push(f(fwd));
            }
            rows.push(row);
        }
    }
    write_csv(dir, "c1_marginals.csv", &["instance", "scheme", "size", "states", "brute_force", "elimination", "forward"], &rows)?;
    Ok((worst <= 1e-9, format!("max |Δ log p| = {worst:.2e} over 100 instances x 2 schemes")))
}

fn c2(dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut rows = Vec::new();
    let mut worst_chain = 0.0f64;
    for i in 0..10 {
        let k = 2 + i % 2;
        let m = Hmm::new(k, 1, Emission::Gaussian);
        let theta: Vec<f64> = (0..m.num_params()).map(|_| normal(&mut rng, 0.7)).collect();
        let data = m.simulate(&theta, &[12], i as u64)?;
        let pot = m.potentials(&theta, &data.structures[0])?;
        for tp in 0..=12 {
            let w: Vec<f64> = (0..12).map(|t| if t < tp { 1.0 } else { 0.0 }).collect();
            let a = weighted_log_marginal(&pot, &w, Scheme::A)?;
            let b = weighted_log_marginal(&pot, &w, Scheme::B)?;
            worst_chain = worst_chain.max((a - b).abs());
            rows.push(vec!["chain".into(), (i + 1).to_string(), tp.to_string(), f(a), f(b)]);
        }
    }
    let ring = vec![(0, 1), (1, 2), (2, 3), (3, 0)];
    let mut largest = 0.0f64;
    for i in 0..20 {
        let pot = random_mrf(&mut rng, 4, 2, ring.clone());
        let mut w = vec![1.0; 4];
        w[i % 4] = 0.0;
        let a = eliminate_weighted(&pot, &w, Scheme::A, None)?;
        let b = eliminate_weighted(&pot, &w, Scheme::B, None)?;
        largest = largest.max((a - b).abs());
        rows.push(vec!["ring".into(), (i + 1).to_string(), (i % 4 + 1).to_string(), f(a), f(b)]);
    }
    write_csv(dir, "c2_schemes.csv", &["kind", "instance", "cut", "scheme_a", "scheme_b"], &rows)?;
    Ok((
        worst_chain <= 1e-9 && largest > 1e-3,
        format!("chain leave-future-out max |A-B| = {worst_chain:.2e}; ring max |A-B| = {largest:.3}"),
    ))
}

fn c3(dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let families: Vec<(&str, AnyModel)> = vec![
        ("hmm_gaussian", AnyModel::Hmm(Hmm::new(2, 2, Emission::Gaussian).with_dirichlet(2.0))),
        ("hmm_poisson", AnyModel::Hmm(Hmm::new(3, 1, Emission::Poisson))),
        ("hmm_categorical", AnyModel::Hmm(Hmm::new(2, 1, Emission::Categorical { symbols: 4 }))),
        ("hmm_ar", AnyModel::Hmm(Hmm::new(2, 1, Emission::Ar { order: 2 }))),
        ("event", AnyModel::Event(EventHmm { steps_per_day: 12, prior: Some(Default::default()) })),
        ("spatial", AnyModel::Spatial(SpatialIsing::new(0.4))),
        ("crf", AnyModel::Crf(Crf::new(3, 4).with_prior(2.0))),
    ];
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (name, model) in &families {
        let truth: Vec<f64> = match model {
            AnyModel::Event(m) => m.pack(&EventParams {
                lambda0: 15.0,
                delta: [1.0; 7],
                shape: 2.0,
                scale: 0.2,
                stay_normal: 0.95,
                stay_event: 0.8,
            })?,
            AnyModel::Spatial(m) => m.pack([2.0, 7.0])?,
            _ => (0..model.num_params()).map(|_| normal(&mut rng, 0.5)).collect(),
        };
        let data = match model {
            AnyModel::Hmm(m) => m.simulate(&truth, &[30], 1)?,
            AnyModel::Event(m) => m.simulate(&truth, 48, 1, 1)?,
            AnyModel::Spatial(m) => m.simulate(&truth, 9, &grid_edges(3, 3), 1)?,
            AnyModel::Crf(m) => m.simulate(&truth, &[5, 6, 7], 1)?,
        };
        let (target, scheme) = match model {
            AnyModel::Crf(_) => (Target::Structures, Scheme::A),
            AnyModel::Spatial(_) => (Target::Within { structure: 0 }, Scheme::B),
            _ => (Target::Within { structure: 0 }, Scheme::A),
        };
        let p = Problem::new(model, &data, target, scheme)?;
        let mut family_worst = 0.0f64;
        for point in 0..20 {
            let theta: Vec<f64> = truth.iter().map(|v| v + normal(&mut rng, 0.2)).collect();
            let w: Vec<f64> = (0..p.weight_len()).map(|_| rng.random_range(0.2..1.0)).collect();
            let r = fd_check(&p, &theta, &w, 1e-5)?;
            family_worst = family_worst.max(r.hessian).max(r.mixed_jacobian);
            rows.push(vec![name.to_string(), (point + 1).to_string(), f(r.gradient), f(r.hessian), f(r.mixed_jacobian)]);
        }
        worst = worst.max(family_worst);
        detail.push(format!("{name} {family_worst:.1e}"));
    }
    write_csv(dir, "c3_derivatives.csv", &["family", "point", "gradient", "hessian", "mixed_jacobian"], &rows)?;
    Ok((worst <= 1e-4, format!("max relative error of H and J: {}", detail.join(", "))))
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Unit-variance Gaussian mean with a flat prior.
struct GaussMean(Vec<f64>);

impl Objective for GaussMean {
    fn dim(&self) -> usize {
        1
    }
    fn num_weights(&self) -> usize {
        self.0.len()
    }
    fn eval<S: Scalar>(&self, theta: &[S], w: &[S]) -> Result<S> {
        let mut acc = S::zero();
        for (&y, &wn) in self.0.iter().zip(w) {
            acc -= wn * (theta[0] - y).square() * 0.5;
        }
        Ok(acc)
    }
}

impl CvObjective for GaussMean {
    fn fold_loss(&self, theta: &[f64], fold: &Fold) -> Result<f64> {
        Ok(self.point_losses(theta, fold)?.iter().sum())
    }
    fn point_losses(&self, theta: &[f64], fold: &Fold) -> Result<Vec<f64>> {
        Ok(fold.indices().iter().map(|&i| 0.5 * (self.0[i] - theta[0]).powi(2) + HALF_LN_2PI).collect())
    }
}

fn c4(dir: &Path) -> Outcome {
    let g = GaussMean(vec![1.0, 2.0, 3.0, 6.0]);
    let plan = FoldPlan::new(make_folds_loo(4), Scheme::A, Target::Structures)?;
    let opts = FitOptions::default();
    let full = fit(&g, &[1.0; 4], &[0.0], &opts)?;
    let exact = exact_cv(&g, &plan, &full.theta_hat, &opts)?;
    let ns = approx_cv(&g, &plan, &full.theta_hat, Method::Ns)?;
    let ij = approx_cv(&g, &plan, &full.theta_hat, Method::Ij)?;
    for (stem, r) in [("c4_exact", &exact), ("c4_ns", &ns), ("c4_ij", &ij)] {
        save(dir, stem, r)?;
    }
    let (e, n, i) = (exact.outcomes[3].params[0], ns.outcomes[3].params[0], ij.outcomes[3].params[0]);
    let pass = (e - 2.0).abs() <= 1e-8 && (n - e).abs() <= 1e-10 && (n - 2.0).abs() <= 1e-10 && (i - 2.25).abs() <= 1e-12;
    Ok((pass, format!("leaving out y4: exact {e:.12}, NS {n:.12}, IJ {i:.12}")))
}

/// `-½θᵀAθ + θᵀ(b + Σ w_n c_n)` with loss `½‖θ − c_n‖²` per point.
struct Quadratic {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<Vec<f64>>,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn num_weights(&self) -> usize {
        self.c.len()
    }
    fn eval<S: Scalar>(&self, theta: &[S], w: &[S]) -> Result<S> {
        let d = self.b.len();
        let mut acc = S::zero();
        for i in 0..d {
            for j in 0..d {
                acc -= theta[i] * theta[j] * (0.5 * self.a[i][j]);
            }
            acc += theta[i] * self.b[i];
            for (cn, &wn) in self.c.iter().zip(w) {
                acc += theta[i] * wn * cn[i];
            }
        }
        Ok(acc)
    }
}

impl CvObjective for Quadratic {
    fn fold_loss(&self, theta: &[f64], fold: &Fold) -> Result<f64> {
        Ok(self.point_losses(theta, fold)?.iter().sum())
    }
    fn point_losses(&self, theta: &[f64], fold: &Fold) -> Result<Vec<f64>> {
        Ok(fold
            .indices()
            .iter()
            .map(|&n| 0.5 * theta.iter().zip(&self.c[n]).map(|(t, c)| (t - c).powi(2)).sum::<f64>())
            .collect())
    }
}

fn c5(dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (d, n) = (4, 8);
    let m: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| normal(&mut rng, 1.0)).collect()).collect();
    let a: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| (0..d).map(|k| m[i][k] * m[j][k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let q = Quadratic {
        a,
        b: (0..d).map(|_| normal(&mut rng, 1.0)).collect(),
        c: (0..n).map(|_| (0..d).map(|_| normal(&mut rng, 1.0)).collect()).collect(),
    };
    let mut folds = make_folds_loo(n);
    folds.extend(make_folds_iid(n, 30.0, 4, 5)?);
    let plan = FoldPlan::new(folds, Scheme::A, Target::Structures)?;
    let opts = FitOptions { tol: 1e-12, ..FitOptions::default() };
    let full = fit(&q, &[1.0; 8], &[0.0; 4], &opts)?;
    let exact = exact_cv(&q, &plan, &full.theta_hat, &opts)?;
    let ij = approx_cv(&q, &plan, &full.theta_hat, Method::Ij)?;
    let ns = approx_cv(&q, &plan, &full.theta_hat, Method::Ns)?;
    for (stem, r) in [("c5_exact", &exact), ("c5_ij", &ij), ("c5_ns", &ns)] {
        save(dir, stem, r)?;
    }
    let mut worst = 0.0f64;
    for ((e, i), s) in exact.outcomes.iter().zip(&ij.outcomes).zip(&ns.outcomes) {
        for k in 0..d {
            worst = worst.max((e.params[k] - i.params[k]).abs()).max((e.params[k] - s.params[k]).abs());
        }
        worst = worst.max((e.loss - i.loss).abs()).max((e.loss - s.loss).abs());
    }
    let gap = (exact.mean_loss() - ij.mean_loss()).abs();
    Ok((
        exact.is_complete() && worst <= 1e-8 && gap <= 1e-8,
        format!("{} folds: max parameter/loss gap {worst:.1e}, |L_IJ - L_CV| = {gap:.1e}", plan.len()),
    ))
}

fn c6(dir: &Path) -> Outcome {
    let m = Hmm::new(2, 1, Emission::Gaussian).with_dirichlet(2.0);
    let truth = vec![0.0, 2.0, -2.0, -1.0, 1.5, 0.0, 0.0];
    let data = m.simulate(&truth, &[50], 6)?;
    let p = Problem::within(&m, &data, Scheme::A)?;
    let opts = FitOptions { tol: 1e-11, ..FitOptions::default() };
    let full = fit(&p, &p.ones(), &m.initial_params(&data), &opts)?;
    let bundle = build_bundle(&p, &full.theta_hat)?;
    let fold = make_folds_iid(50, 10.0, 1, 6)?.remove(0);
    let ij1 = ij_params(&bundle, &full.theta_hat, &fold)?;
    let o = fold_to_weights(&fold, 50)?;
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let w: Vec<f64> = o.iter().map(|&x| 1.0 - eps * (1.0 - x)).collect();
        let r = fit_preconditioned(&p, &w, &full.theta_hat, &opts, Some(&bundle.chol))?;
        let dist = r
            .theta_hat
            .iter()
            .zip(full.theta_hat.iter().zip(ij1.iter()))
            .map(|(e, (t, i))| (e - (t + eps * (i - t))).powi(2))
            .sum::<f64>()
            .sqrt();
        ratios.push(dist / (eps * eps));
        rows.push(vec![f(eps), f(dist), f(dist / (eps * eps)), r.converged.to_string()]);
    }
    write_csv(dir, "c6_taylor.csv", &["eps", "distance", "ratio", "converged"], &rows)?;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    Ok((lo > 0.0 && hi / lo <= 4.0, format!("|exact - IJ|/eps^2 = {ratios:.4?}, spread {:.3}", hi / lo)))
}

fn event_setup() -> Result<(EventHmm, structacv::data::StructuredDataset)> {
    let model = EventHmm::default();
    let truth = model.pack(&EventParams {
        lambda0: 20.0,
        delta: [1.1, 1.1, 1.0, 1.0, 1.2, 0.8, 0.8],
        shape: 2.0,
        scale: 0.1,
        stay_normal: 0.98,
        stay_event: 0.9,
    })?;
    let data = model.simulate(&truth, 5000, 0, 7)?;
    Ok((model, data))
}

fn c7(dir: &Path) -> Outcome {
    let (model, data) = event_setup()?;
    let p = Problem::within(&model, &data, Scheme::A)?;
    let opts = FitOptions::default();
    let full = fit(&p, &p.ones(), &model.initial_params(&data), &opts)?;
    let mut pass = full.converged;
    let mut detail = vec![format!("full fit gradient {:.1e}", full.grad_norm)];
    for m in [2.0, 5.0, 10.0] {
        for kind in ["iid", "contiguous"] {
            let folds = if kind == "iid" { make_folds_iid(5000, m, 10, 17)? } else { make_folds_contiguous(5000, m, 10, 17)? };
            let plan = FoldPlan::new(folds, Scheme::A, Target::Within { structure: 0 })?;
            let exact = exact_cv(&p, &plan, &full.theta_hat, &opts)?;
            let ij = approx_cv(&p, &plan, &full.theta_hat, Method::Ij)?;
            let stem = format!("c7_{kind}_m{m}");
            save(dir, &format!("{stem}_exact"), &exact)?;
            save(dir, &format!("{stem}_ij"), &ij)?;
            let c = compare_reports(&exact, &ij)?;
            save_cmp(dir, &format!("{stem}_comparison"), &c)?;
            let ok = exact.is_complete() && c.median_rel_err <= 0.05 && c.pearson >= 0.99;
            pass &= ok;
            detail.push(format!("{kind} m={m}: median {:.4}, r {:.4}, {}", c.median_rel_err, c.pearson, c.summary()));
            if !exact.is_complete() {
                detail.push(format!("{} exact refits failed: {}", exact.failures.len(), exact.failures[0].message));
            }
        }
    }
    Ok((pass, detail.join("; ")))
}

fn lscv_pair<M: Model>(dir: &Path, stem: &str, p: &Problem<'_, M>, start: &[f64]) -> Result<(bool, String)> {
    let opts = FitOptions::default();
    let full = fit(p, &p.ones(), start, &opts)?;
    let plan = FoldPlan::new(make_folds_loo(p.weight_len()), Scheme::A, Target::Structures)?;
    let exact = exact_cv(p, &plan, &full.theta_hat, &opts)?;
    let ij = approx_cv(p, &plan, &full.theta_hat, Method::Ij)?;
    save(dir, &format!("{stem}_exact"), &exact)?;
    save(dir, &format!("{stem}_ij"), &ij)?;
    let c = compare_reports(&exact, &ij)?;
    save_cmp(dir, &format!("{stem}_comparison"), &c)?;
    let ok = full.converged && exact.is_complete() && c.median_rel_err <= 0.05 && c.pearson >= 0.99;
    Ok((ok, format!("{stem}: median {:.4}, r {:.4}, {}", c.median_rel_err, c.pearson, c.summary())))
}

fn crf_setup() -> Result<(Crf, structacv::data::StructuredDataset)> {
    let model = Crf::new(3, 5).with_prior(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let truth: Vec<f64> = (0..model.num_params()).map(|_| normal(&mut rng, 1.0)).collect();
    let lengths: Vec<usize> = (0..50).map(|n| 8 + n % 8).collect();
    let data = model.simulate(&truth, &lengths, 8)?;
    Ok((model, data))
}

fn c8(dir: &Path) -> Outcome {
    let hmm = Hmm::new(2, 1, Emission::Gaussian);
    let truth = vec![0.0, 2.0, -2.0, -1.0, 1.5, 0.0, 0.0];
    let data = hmm.simulate(&truth, &[100; 30], 8)?;
    let p = Problem::across(&hmm, &data)?;
    let (a, da) = lscv_pair(dir, "c8_hmm", &p, &hmm.initial_params(&data))?;
    let (crf, cdata) = crf_setup()?;
    let p = Problem::across(&crf, &cdata)?;
    let (b, db) = lscv_pair(dir, "c8_crf", &p, &crf.initial_params(&cdata))?;
    Ok((a && b, format!("{da}; {db}")))
}

fn c9(dir: &Path) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for beta in [0.0, 0.25, 0.5, 1.0] {
        let model = SpatialIsing::new(beta);
        let truth = model.pack([2.0, 8.0])?;
        let data = model.simulate(&truth, 25, &grid_edges(5, 5), 9)?;
        let p = Problem::within(&model, &data, Scheme::B)?;
        let opts = FitOptions::default();
        let full = fit(&p, &p.ones(), &model.initial_params(&data), &opts)?;
        let plan = FoldPlan::new(make_folds_loo(25), Scheme::B, Target::Within { structure: 0 })?;
        let exact = exact_cv(&p, &plan, &full.theta_hat, &opts)?;
        let ij = approx_cv(&p, &plan, &full.theta_hat, Method::Ij)?;
        let stem = format!("c9_beta{beta}");
        save(dir, &format!("{stem}_exact"), &exact)?;
        save(dir, &format!("{stem}_ij"), &ij)?;
        let c = compare_reports(&exact, &ij)?;
        save_cmp(dir, &format!("{stem}_comparison"), &c)?;
        pass &= full.converged && exact.is_complete() && c.median_rel_err <= 0.05;
        detail.push(format!("beta={beta}: median {:.4}", c.median_rel_err));
    }
    Ok((pass, detail.join(", ")))
}

fn c10() -> Outcome {
    let (model, data) = event_setup()?;
    let p = Problem::within(&model, &data, Scheme::A)?;
    let opts = FitOptions::default();
    let full = fit(&p, &p.ones(), &model.initial_params(&data), &opts)?;
    let folds = make_folds_iid(5000, 5.0, 100, 10)?;
    let plan = FoldPlan::new(folds.clone(), Scheme::A, Target::Within { structure: 0 })?;
    let sub = FoldPlan::new(folds[..10].to_vec(), Scheme::A, Target::Within { structure: 0 })?;
    let exact = exact_cv(&p, &sub, &full.theta_hat, &opts)?;
    let ij = approx_cv(&p, &plan, &full.theta_hat, Method::Ij)?;
    let ns = approx_cv(&p, &plan, &full.theta_hat, Method::Ns)?;
    let extrapolated = exact.setup_time + 10.0 * (exact.param_time() + exact.loss_time());
    let (t_ij, t_ns) = (ij.total_time(), ns.total_time());
    Ok((
        exact.is_complete() && t_ij <= extrapolated / 10.0 && t_ns > t_ij,
        format!("exact x10 {extrapolated:.2}s, IJ {t_ij:.2}s ({:.0}x faster), NS {t_ns:.2}s", extrapolated / t_ij),
    ))
}

fn c11(dir: &Path) -> Outcome {
    let (crf, data) = crf_setup()?;
    let p = Problem::across(&crf, &data)?;
    let opts = FitOptions::default();
    let full = fit(&p, &p.ones(), &crf.initial_params(&data), &opts)?;
    let plan = FoldPlan::new(make_folds_loo(50), Scheme::A, Target::Structures)?;
    let exact = exact_cv(&p, &plan, &full.theta_hat, &opts)?;
    let ij = approx_cv(&p, &plan, &full.theta_hat, Method::Ij)?;
    let eps_ij = (ij.mean_loss() - exact.mean_loss()).abs();
    let rec = inexact_sweep(&p, &plan, &full, 1, &exact)?;
    io::write_sweep(&rec, &dir.join("c11_sweep.csv"), "c11")?;
    let last = rec.final_point().map_or(f64::NAN, |pt| pt.error);
    let final_ok = (last - eps_ij).abs() <= 2.0 * opts.tol;
    let mono = rec.tail_non_increasing(0.1, 2.0 * opts.tol);
    let fit_ok = rec.slope >= 0.0 && rec.r_squared.is_some_and(|r| r >= 0.5);
    let xs: Vec<f64> = rec.points.iter().map(|p| p.eps_theta).collect();
    let ys: Vec<f64> = rec.points.iter().map(|p| p.error).collect();
    let (c_all, b_all, _) = nnls_line(&xs, &ys);
    Ok((
        full.converged && final_ok && mono && fit_ok,
        format!(
            "{} iterates, tail {}: final error {last:.3e} vs eps_IJ {eps_ij:.3e}, tail non-increasing {mono}, \
             tail fit C {:.3e} intercept {:.3e} R² {}; all-points fit C {c_all:.3e} intercept {b_all:.3e}",
            rec.points.len(),
            rec.tail_len,
            rec.slope,
            rec.intercept,
            rec.r_squared.map_or("n/a".into(), |r| format!("{r:.3}"))
        ),
    ))
}

type Criterion = fn(&Path) -> Outcome;

const REPEATED: [(usize, Criterion); 9] = [(1, c1), (2, c2), (3, c3), (4, c4), (5, c5), (6, c6), (7, c7), (8, c8), (9, c9)];

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).map(|r| r.filter_map(|e| e.ok().map(|e| e.path())).collect()).unwrap_or_default();
    v.sort();
    v
}

fn c12(first: &Path, second: &Path) -> Outcome {
    for (_, c) in REPEATED {
        c(second)?;
    }
    let (a, b) = (files(first), files(second));
    let names = |v: &[PathBuf]| v.iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    if names(&a) != names(&b) {
        return Ok((false, "the two runs wrote different file sets".into()));
    }
    let differing: Vec<String> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| fs::read(x).ok() != fs::read(y).ok())
        .map(|(x, _)| x.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    Ok((differing.is_empty(), format!("{} files compared, differing: {differing:?}", a.len())))
}

fn report(n: usize, started: Instant, outcome: Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("criterion {n:>2}: {} ({secs:.1}s) {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() {
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let root = tempfile::tempdir().expect("temporary directory");
    let (first, second) = (root.path().join("run1"), root.path().join("run2"));
    fs::create_dir_all(&first).unwrap();
    fs::create_dir_all(&second).unwrap();
    let wanted = |n: usize| filter.is_none_or(|f| f == n);
    let mut results = Vec::new();
    for (n, c) in REPEATED {
        if wanted(n) {
            let t = Instant::now();
            results.push(report(n, t, c(&first)));
        }
    }
    if wanted(10) {
        let t = Instant::now();
        results.push(report(10, t, c10()));
    }
    if wanted(11) {
        let t = Instant::now();
        let dir = root.path().join("sweep");
        fs::create_dir_all(&dir).unwrap();
        results.push(report(11, t, c11(&dir)));
    }
    if filter.is_none() {
        let t = Instant::now();
        results.push(report(12, t, c12(&first, &second)));
    }
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed} of {} criteria passed", results.len());
    if passed < results.len() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
