//! Exact gradients, Hessians and weight Jacobians by forward-mode dual
//! numbers, checked against central finite differences.

use structacv::autodiff::{fd_check, hessian, mixed_jacobian, value_and_gradient};
use structacv::data::Scheme;
use structacv::models::{Emission, Hmm};
use structacv::problem::Problem;

fn main() -> structacv::Result<()> {
    let model = Hmm::new(2, 1, Emission::Poisson);
    let truth = vec![0.0, 2.0, -2.0, 1.0, 2.5];
    let data = model.simulate(&truth, &[40], 3)?;
    let p = Problem::within(&model, &data, Scheme::A)?;
    let w: Vec<f64> = (0..40).map(|t| if t % 5 == 0 { 0.0 } else { 1.0 }).collect();

    let (value, grad) = value_and_gradient(&p, &truth, &w)?;
    println!("weighted log-likelihood {value:.6}");
    println!("gradient {grad:.4?}");
    let h = hessian(&p, &truth, &w)?;
    println!("Hessian diagonal {:.3?}", h.diagonal().as_slice());
    let j = mixed_jacobian(&p, &truth, &w)?;
    println!("weight Jacobian is {}x{}", j.nrows(), j.ncols());
    let r = fd_check(&p, &truth, &w, 1e-5)?;
    println!(
        "finite-difference relative errors: gradient {:.1e}, Hessian {:.1e}, Jacobian {:.1e}",
        r.gradient, r.hessian, r.mixed_jacobian
    );
    Ok(())
}
