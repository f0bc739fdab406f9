//! Leave-one-out on a unit-variance Gaussian mean, where every method has a
//! closed form. Leaving out y = 6 from (1, 2, 3, 6), the refit mean is 2,
//! the Newton step lands on it exactly, and the IJ linearization gives 2.25.
//! Also shows how to plug a custom objective into the CV machinery.

use structacv::autodiff::{Objective, Scalar};
use structacv::cv::{approx_cv, exact_cv, make_folds_loo, Method};
use structacv::data::{Fold, FoldPlan, Scheme, Target};
use structacv::optimize::{fit, FitOptions};
use structacv::problem::CvObjective;

struct GaussMean(Vec<f64>);

impl Objective for GaussMean {
    fn dim(&self) -> usize {
        1
    }
    fn num_weights(&self) -> usize {
        self.0.len()
    }
    fn eval<S: Scalar>(&self, theta: &[S], w: &[S]) -> structacv::Result<S> {
        let mut acc = S::zero();
        for (&y, &wn) in self.0.iter().zip(w) {
            acc -= wn * (theta[0] - y).square() * 0.5;
        }
        Ok(acc)
    }
}

impl CvObjective for GaussMean {
    fn fold_loss(&self, theta: &[f64], fold: &Fold) -> structacv::Result<f64> {
        Ok(self.point_losses(theta, fold)?.iter().sum())
    }
    fn point_losses(&self, theta: &[f64], fold: &Fold) -> structacv::Result<Vec<f64>> {
        let c = 0.5 * (2.0 * std::f64::consts::PI).ln();
        Ok(fold.indices().iter().map(|&i| 0.5 * (self.0[i] - theta[0]).powi(2) + c).collect())
    }
}

fn main() -> structacv::Result<()> {
    let g = GaussMean(vec![1.0, 2.0, 3.0, 6.0]);
    let opts = FitOptions::default();
    let full = fit(&g, &[1.0; 4], &[0.0], &opts)?;
    println!("full-data mean {:.6}", full.theta_hat[0]);
    let plan = FoldPlan::new(make_folds_loo(4), Scheme::A, Target::Structures)?;
    let exact = exact_cv(&g, &plan, &full.theta_hat, &opts)?;
    let ns = approx_cv(&g, &plan, &full.theta_hat, Method::Ns)?;
    let ij = approx_cv(&g, &plan, &full.theta_hat, Method::Ij)?;
    println!("left out   exact       NS          IJ");
    for i in 0..4 {
        println!(
            "y = {}     {:.6}  {:.6}  {:.6}",
            g.0[i], exact.outcomes[i].params[0], ns.outcomes[i].params[0], ij.outcomes[i].params[0]
        );
    }
    println!("mean loss: exact {:.6}, NS {:.6}, IJ {:.6}", exact.mean_loss(), ns.mean_loss(), ij.mean_loss());
    Ok(())
}
