//! Densifies a sparse, partly corrupted displacement set with and without
//! certainty weights.
//!
//! `cargo run --example kernel_regression`

use jssreg::block_match::{SparseDisplacements, SparseSample};
use jssreg::regression::densify_detailed;
use jssreg::synthetic::texture;
use jssreg::tensor::{LocalStructure, LST_RADIUS, LST_SIGMA};
use jssreg::{Dims, RegressionConfig};

fn main() -> jssreg::Result<()> {
    let dims = Dims::new2(64, 64);
    let structure = LocalStructure::compute(&texture(dims, 5), LST_SIGMA, LST_RADIUS)?;
    let truth = |x: usize, y: usize| [2.0 * (x as f64 / 20.0).sin(), 1.5 * (y as f64 / 25.0).cos(), 0.0];

    // every fifth sample is a bad match with low certainty
    let mut samples = Vec::new();
    for (k, (x, y)) in (2..64).step_by(4).flat_map(|y| (2..64).step_by(4).map(move |x| (x, y))).enumerate() {
        let bad = k % 5 == 0;
        let displacement = if bad { [-5.0, 5.0, 0.0] } else { truth(x, y) };
        samples.push(SparseSample { position: [x, y, 0], displacement, certainty: if bad { 0.02 } else { 0.9 } });
    }
    let weighted = SparseDisplacements::new(dims, samples)?.with_spacing(4)?;
    let uniform = weighted.with_uniform_certainty(1.0);

    for order in 0..=2 {
        let cfg = RegressionConfig { order, ..RegressionConfig::default() };
        for (name, sparse) in [("certainty-weighted", &weighted), ("uniform", &uniform)] {
            let dense = densify_detailed(sparse, &structure, &cfg)?;
            let err: f64 = (0..dims.len())
                .map(|i| {
                    let p = dims.point(i);
                    let (u, t) = (dense.field.at(i), truth(p[0], p[1]));
                    ((u[0] - t[0]).powi(2) + (u[1] - t[1]).powi(2)).sqrt()
                })
                .sum::<f64>()
                / dims.len() as f64;
            println!("order {order}, {name:>18}: mean error {err:.3} px, {} low-confidence points", dense.low_confidence_count());
        }
    }
    Ok(())
}
