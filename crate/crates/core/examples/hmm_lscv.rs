//! Leave-one-sequence-out CV for a Gaussian HMM fit to 30 sequences.

use structacv::cv::{approx_cv, compare_reports, exact_cv, make_folds_loo, Method};
use structacv::data::{FoldPlan, Scheme, Target};
use structacv::model::Model;
use structacv::models::{Emission, Hmm};
use structacv::optimize::{fit, FitOptions};
use structacv::problem::Problem;

fn main() -> structacv::Result<()> {
    let model = Hmm::new(2, 1, Emission::Gaussian);
    let truth = vec![0.0, 2.0, -2.0, -1.0, 1.5, 0.0, 0.0];
    let data = model.simulate(&truth, &[100; 30], 8)?;
    let p = Problem::across(&model, &data)?;
    let opts = FitOptions::default();
    let full = fit(&p, &p.ones(), &model.initial_params(&data), &opts)?;
    println!("fitted {:?}", model.unpack(&full.theta_hat)?);

    let plan = FoldPlan::new(make_folds_loo(30), Scheme::A, Target::Structures)?;
    let exact = exact_cv(&p, &plan, &full.theta_hat, &opts)?;
    println!("exact LSCV loss {:.6} in {:.2}s", exact.mean_loss(), exact.total_time());
    for method in [Method::Ij, Method::Ns] {
        let approx = approx_cv(&p, &plan, &full.theta_hat, method)?;
        let c = compare_reports(&exact, &approx)?;
        println!(
            "{method}: loss {:.6} in {:.3}s, per-fold rel. error {}, correlation {:.5}",
            approx.mean_loss(),
            approx.total_time(),
            c.summary(),
            c.pearson
        );
    }
    Ok(())
}
