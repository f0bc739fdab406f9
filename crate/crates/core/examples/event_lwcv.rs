//! Leave-within-sequence-out CV on a simulated traffic-count series with
//! occasional events: exact refits against IJ and NS.
//!
//! `cargo run --release --example event_lwcv -- [T] [percent] [folds]`

use std::time::Instant;

use structacv::cv::{approx_cv, compare_reports, exact_cv, make_folds_contiguous, make_folds_iid, Method};
use structacv::data::{FoldPlan, Scheme, Target};
use structacv::model::Model;
use structacv::models::event::EventParams;
use structacv::models::EventHmm;
use structacv::optimize::{fit, FitOptions};
use structacv::problem::Problem;

fn main() -> structacv::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let t: usize = args.first().map_or(5000, |s| s.parse().expect("T"));
    let m: f64 = args.get(1).map_or(5.0, |s| s.parse().expect("percent"));
    let n_folds: usize = args.get(2).map_or(10, |s| s.parse().expect("folds"));

    let model = EventHmm::default();
    let truth = model.pack(&EventParams {
        lambda0: 20.0,
        delta: [1.1, 1.1, 1.0, 1.0, 1.2, 0.8, 0.8],
        shape: 2.0,
        scale: 0.1,
        stay_normal: 0.98,
        stay_event: 0.9,
    })?;
    let data = model.simulate(&truth, t, 0, 7)?;
    let problem = Problem::within(&model, &data, Scheme::A)?;

    let t0 = Instant::now();
    let full = fit(&problem, &problem.ones(), &model.initial_params(&data), &FitOptions::default())?;
    println!(
        "full fit: {} iterations in {:.2}s, gradient norm {:.1e}",
        full.iterations(),
        t0.elapsed().as_secs_f64(),
        full.grad_norm
    );
    println!("fitted: {:?}", model.unpack(&full.theta_hat)?);

    for (name, folds) in [
        ("iid", make_folds_iid(t, m, n_folds, 1)?),
        ("contiguous", make_folds_contiguous(t, m, n_folds, 1)?),
    ] {
        let plan = FoldPlan::new(folds, Scheme::A, Target::Within { structure: 0 })?;
        let exact = exact_cv(&problem, &plan, &full.theta_hat, &FitOptions::default())?;
        for method in [Method::Ij, Method::Ns] {
            let approx = approx_cv(&problem, &plan, &full.theta_hat, method)?;
            let c = compare_reports(&exact, &approx)?;
            println!(
                "{name:>10} {method}: rel. error {} (median {:.4}), correlation {:.4}, exact {:.2}s vs {:.2}s",
                c.summary(),
                c.median_rel_err,
                c.pearson,
                exact.total_time(),
                approx.total_time()
            );
        }
    }
    Ok(())
}
