//! Gradient and local structure tensors of a synthetic image, their
//! eigenvalues, and the two tensor distances.
//!
//! `cargo run --example structure_tensors`

use jssreg::tensor::{tensor_distance_d, tensor_distance_l, LocalStructure, SymTensor, LST_RADIUS, LST_SIGMA};
use jssreg::{Dims, ScalarImage};

fn main() -> jssreg::Result<()> {
    // vertical step edge at x = 16 plus a bright corner square
    let dims = Dims::new2(32, 32);
    let img = ScalarImage::from_fn(dims, |p| {
        let edge = if p[0] >= 16 { 0.6 } else { 0.0 };
        let corner = if p[0] < 8 && p[1] < 8 { 0.4 } else { 0.0 };
        edge + corner
    });
    let st = LocalStructure::compute(&img, LST_SIGMA, LST_RADIUS)?;

    for (name, p) in [("flat", [24, 24, 0]), ("edge", [16, 20, 0]), ("corner", [8, 8, 0])] {
        let t = st.lst.at(dims.index(p));
        let e = t.eigenvalues();
        let u = t.eigenvector(0);
        println!("{name:>6} {p:?}: λ = ({:.4}, {:.4}), u = ({:.3}, {:.3})", e[0], e[1], u[0], u[1]);
    }

    let a = SymTensor::new2(2.0, 0.0, 0.5);
    let b = SymTensor::new2(0.5, 0.0, 2.0);
    let c = SymTensor::new2(4.0, 0.0, 1.0);
    println!("rotated by 90°: D = {:.4}, L = {:.4}", tensor_distance_d(&a, &b), tensor_distance_l(&a, &b));
    println!("scaled by 2:    D = {:.4}, L = {:.4}", tensor_distance_d(&a, &c), tensor_distance_l(&a, &c));

    let v = SymTensor::new3(3.0, 0.0, 0.0, 1.0, 0.0, 0.5);
    println!("3D eigenvalues {:?}", v.eigenvalues());
    Ok(())
}
