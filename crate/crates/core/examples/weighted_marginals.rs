//! Weighted log marginals on a chain and on a grid: the forward recursion,
//! variable elimination and brute-force enumeration agree, and the two
//! weighting schemes differ once a latent variable is down-weighted.

use structacv::data::{path_edges, Scheme};
use structacv::marginal::chain::weighted_forward;
use structacv::marginal::graph::{brute_force_weighted_marginal, eliminate_weighted, induced_width, minfill_order};
use structacv::model::Model;
use structacv::models::spatial::grid_edges;
use structacv::models::{Emission, Hmm, SpatialIsing};

fn main() -> structacv::Result<()> {
    let hmm = Hmm::new(2, 1, Emission::Gaussian);
    let theta = vec![0.0, 1.5, -1.5, -1.0, 1.0, 0.0, 0.0];
    let data = hmm.simulate(&theta, &[8], 1)?;
    let pot = hmm.potentials(&theta, &data.structures[0])?;
    let w = [1.0, 1.0, 0.5, 0.0, 1.0, 1.0, 0.25, 1.0];
    println!("chain of 8, weights {w:?}");
    for scheme in [Scheme::A, Scheme::B] {
        let fwd = weighted_forward(&pot, &w, scheme)?;
        let elim = eliminate_weighted(&pot, &w, scheme, None)?;
        let brute = brute_force_weighted_marginal(&pot, &w, scheme)?;
        println!("  scheme {scheme:?}: forward {fwd:.12}, elimination {elim:.12}, brute force {brute:.12}");
    }

    let edges = grid_edges(3, 3);
    let order = minfill_order(9, &edges);
    println!("3x3 grid: min-fill order {order:?}, induced width {}", induced_width(9, &edges, &order));
    println!("path of 9: induced width {}", induced_width(9, &path_edges(9), &minfill_order(9, &path_edges(9))));
    let ising = SpatialIsing::new(0.5);
    let theta = ising.pack([2.0, 8.0])?;
    let grid = ising.simulate(&theta, 9, &edges, 2)?;
    let pot = ising.potentials(&theta, &grid.structures[0])?;
    let mut w = vec![1.0; 9];
    w[4] = 0.0;
    for scheme in [Scheme::A, Scheme::B] {
        let elim = eliminate_weighted(&pot, &w, scheme, Some(&order))?;
        let brute = brute_force_weighted_marginal(&pot, &w, scheme)?;
        println!("  centre left out, scheme {scheme:?}: elimination {elim:.12}, brute force {brute:.12}");
    }
    Ok(())
}
