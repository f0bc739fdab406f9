//! Leave-future-out on a single HMM sequence. When the held-out positions
//! form a suffix, both weighting schemes give the same marginal, so exact
//! CV does not depend on the scheme. IJ does a little: the schemes agree at
//! 0/1 weights but not in their derivatives with respect to the weights.

use structacv::cv::{approx_cv, exact_cv, make_folds_future, Method};
use structacv::data::{FoldPlan, Scheme, Target};
use structacv::model::Model;
use structacv::models::{Emission, Hmm};
use structacv::optimize::{fit, FitOptions};
use structacv::problem::Problem;

fn main() -> structacv::Result<()> {
    let model = Hmm::new(2, 1, Emission::Gaussian).with_dirichlet(2.0);
    let truth = vec![0.0, 2.0, -2.0, -1.0, 1.5, 0.0, 0.0];
    let data = model.simulate(&truth, &[200], 4)?;
    let opts = FitOptions::default();
    for scheme in [Scheme::A, Scheme::B] {
        let p = Problem::within(&model, &data, scheme)?;
        let full = fit(&p, &p.ones(), &model.initial_params(&data), &opts)?;
        let mut folds = Vec::new();
        for start in (150..200).step_by(10) {
            folds.extend(make_folds_future(200, start)?);
        }
        let plan = FoldPlan::new(folds, scheme, Target::Within { structure: 0 })?;
        let exact = exact_cv(&p, &plan, &full.theta_hat, &opts)?;
        let ij = approx_cv(&p, &plan, &full.theta_hat, Method::Ij)?;
        println!(
            "scheme {scheme:?}: {} folds, exact {:.8}, IJ {:.8}",
            plan.len(),
            exact.mean_loss(),
            ij.mean_loss()
        );
    }
    Ok(())
}
