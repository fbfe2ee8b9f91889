//! Mutual-information block matching on a translated texture.
//!
//! `cargo run --release --example block_matching`

use jssreg::synthetic::{texture, translate};
use jssreg::{match_blocks, mutual_information, BlockMatchParams, Dims, JointSaliencyMap};

fn main() -> jssreg::Result<()> {
    let dims = Dims::new2(96, 96);
    let reference = texture(dims, 2);
    let moving = translate(&reference, [3, -2, 0]);

    let params = BlockMatchParams::default();
    let sparse = match_blocks(&reference, &moving, &JointSaliencyMap::uniform(dims), &params)?;
    let exact = sparse.samples.iter().filter(|s| s.displacement == [3.0, -2.0, 0.0]).count();
    println!("{} samples on a {}-pixel lattice, {exact} found the true shift (3, -2)", sparse.len(), sparse.spacing);

    let block = |img: &jssreg::ScalarImage, x0: usize| -> Vec<f64> {
        (0..11).flat_map(|y| (0..11).map(move |x| (x0 + x, 40 + y))).map(|(x, y)| img.get([x, y, 0])).collect()
    };
    let a = block(&reference, 40);
    let inverted: Vec<f64> = a.iter().map(|v| 1.0 - v).collect();
    println!("MI with itself       {:.4}", mutual_information(&a, &a, params.bins)?);
    println!("MI with its negative {:.4}", mutual_information(&a, &inverted, params.bins)?);
    println!("MI with another spot {:.4}", mutual_information(&a, &block(&reference, 10), params.bins)?);
    Ok(())
}
