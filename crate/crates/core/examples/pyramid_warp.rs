//! Builds a Gaussian pyramid, warps an image by a smooth field and composes
//! two translations.
//!
//! `cargo run --example pyramid_warp -- [out_dir]`

use std::path::PathBuf;

use jssreg::io::save_image;
use jssreg::synthetic::texture;
use jssreg::{build_pyramid, compose, warp, Dims, DisplacementField};

fn main() -> jssreg::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("jssreg-examples"));
    std::fs::create_dir_all(&out)?;
    let dims = Dims::new2(128, 96);
    let img = texture(dims, 3);

    for level in build_pyramid(&img, 4)? {
        let d = level.image.dims();
        println!("level {}: {d} (x{} downsampled), mean {:.4}", level.level_index, level.scale_factor, level.image.mean());
        save_image(&out.join(format!("pyramid_{}.png", level.level_index)), &level.image)?;
    }

    let swirl = DisplacementField::from_fn(dims, |p| {
        let (x, y) = (p[0] as f64 - 64.0, p[1] as f64 - 48.0);
        let g = 6.0 * (-(x * x + y * y) / 800.0).exp();
        [-y / 48.0 * g, x / 48.0 * g, 0.0]
    });
    save_image(&out.join("swirled.png"), &warp(&img, &swirl)?)?;

    // applying a then b equals one shift by a + b
    let a = DisplacementField::uniform(dims, [2.0, -1.0, 0.0]);
    let b = DisplacementField::uniform(dims, [0.5, 3.0, 0.0]);
    println!("composed shift {:?}", compose(&a, &b)?.at(0));
    println!("images written to {}", out.display());
    Ok(())
}
