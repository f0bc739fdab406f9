//! Leave-one-sentence-out CV for a linear-chain CRF on synthetic tagged
//! sentences, with a standard-normal prior on every weight.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use structacv::cv::{approx_cv, compare_reports, exact_cv, make_folds_loo, Method};
use structacv::data::{FoldPlan, Scheme, Target};
use structacv::model::Model;
use structacv::models::Crf;
use structacv::optimize::{fit, FitOptions};
use structacv::problem::Problem;

fn main() -> structacv::Result<()> {
    let model = Crf::new(3, 5).with_prior(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let truth: Vec<f64> = (0..model.num_params()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let lengths: Vec<usize> = (0..50).map(|n| 8 + n % 8).collect();
    let data = model.simulate(&truth, &lengths, 8)?;
    let p = Problem::across(&model, &data)?;
    let opts = FitOptions::default();
    let full = fit(&p, &p.ones(), &model.initial_params(&data), &opts)?;
    println!("{} weights fit in {} iterations", model.num_params(), full.iterations());

    let plan = FoldPlan::new(make_folds_loo(data.len()), Scheme::A, Target::Structures)?;
    let exact = exact_cv(&p, &plan, &full.theta_hat, &opts)?;
    let ij = approx_cv(&p, &plan, &full.theta_hat, Method::Ij)?;
    let c = compare_reports(&exact, &ij)?;
    println!("exact {:.5} ({:.2}s), IJ {:.5} ({:.3}s)", exact.mean_loss(), exact.total_time(), ij.mean_loss(), ij.total_time());
    println!("per-sentence rel. error {}, median {:.4}, correlation {:.5}", c.summary(), c.median_rel_err, c.pearson);
    Ok(())
}
