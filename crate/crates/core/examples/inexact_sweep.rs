//! IJ evaluated at every iterate of the optimizer instead of the optimum.
//! The gap to exact CV is tracked against the distance to the final
//! parameters, with a non-negative line fitted over the last decade.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use structacv::cv::sweep::nnls_line;
use structacv::cv::{exact_cv, inexact_sweep, make_folds_loo};
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
    let plan = FoldPlan::new(make_folds_loo(data.len()), Scheme::A, Target::Structures)?;
    let exact = exact_cv(&p, &plan, &full.theta_hat, &opts)?;

    let rec = inexact_sweep(&p, &plan, &full, 2, &exact)?;
    println!("{:>5} {:>12} {:>12}", "iter", "eps_theta", "|L_IJ - L_CV|");
    for pt in &rec.points {
        println!("{:>5} {:>12.4e} {:>12.4e}", pt.iterate, pt.eps_theta, pt.error);
    }
    println!(
        "last decade ({} points): slope {:.3e}, intercept {:.3e}, R² {}",
        rec.tail_len,
        rec.slope,
        rec.intercept,
        rec.r_squared.map_or("n/a".into(), |r| format!("{r:.3}"))
    );
    let xs: Vec<f64> = rec.points.iter().map(|p| p.eps_theta).collect();
    let ys: Vec<f64> = rec.points.iter().map(|p| p.error).collect();
    let (c, b, rss) = nnls_line(&xs, &ys);
    println!("all points: slope {c:.3e}, intercept {b:.3e}, residual sum of squares {rss:.3e}");
    Ok(())
}
