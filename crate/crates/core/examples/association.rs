//! Probabilistic data association by loopy belief propagation.

use mvaslam::association::{feature_marginals, run_association, AssociationInput, Table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two paths, two measurements. Row k of beta: [missed, meas 1, meas 2].
    let beta = Table::from_rows(&[vec![0.1, 4.0, 0.5], vec![0.2, 3.0, 3.0]], 3)?;
    // Row m of xi: [clutter or new surface, path 1, path 2].
    let xi = Table::from_rows(&[vec![1.0, 1.0, 1.0], vec![1.2, 1.0, 1.0]], 3)?;
    let input = AssociationInput::new(beta, xi)?;
    let out = run_association(&input, 20, 1e-9)?;
    println!("converged: {} after {} iterations", out.converged, out.iterations_used);
    // Approximate posterior of each path's association: [missed, meas 1, meas 2].
    for (k, row) in feature_marginals(&input, &out).to_rows().iter().enumerate() {
        println!("path {k}: {row:.3?}");
    }
    Ok(())
}
