//! Shapes of the structure-adaptive kernel across a flat region, an edge and
//! a corner, and how the scales respond to the anisotropy.
//!
//! `cargo run --example adaptive_kernels -- [out_dir]`

use std::path::PathBuf;

use jssreg::io::save_heatmap;
use jssreg::kernel::{anisotropy_2d, scales_2d, KernelParams, KernelSpec};
use jssreg::tensor::{LocalStructure, LST_RADIUS, LST_SIGMA};
use jssreg::{Dims, ScalarImage};

fn main() -> jssreg::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("jssreg-examples"));
    std::fs::create_dir_all(&out)?;
    let params = KernelParams::default();

    println!("anisotropy  σu      σv      (α = {}, σc = {})", params.alpha, params.sigma_c);
    for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let (su, sv) = scales_2d(a, params.alpha, params.sigma_c)?;
        println!("{a:>10.2}  {su:.4}  {sv:.4}");
    }

    // diagonal edge
    let dims = Dims::new2(41, 41);
    let img = ScalarImage::from_fn(dims, |p| if p[0] + p[1] > 40 { 1.0 } else { 0.0 });
    let st = LocalStructure::compute(&img, LST_SIGMA, LST_RADIUS)?;
    for (name, p) in [("flat", [6, 6, 0]), ("edge", [20, 20, 0])] {
        let idx = dims.index(p);
        let k = KernelSpec::at_point(&st, idx, &params)?;
        println!("{name}: anisotropy {:.3}, scales ({:.3}, {:.3}), support radius {}", anisotropy_2d(st.lst.at(idx)), k.scales[0], k.scales[1], k.support_radius);
        let weights: Vec<f64> = (0..dims.len())
            .map(|i| {
                let q = dims.point(i);
                let c = [q[0] as f64 - 20.0 + k.center[0], q[1] as f64 - 20.0 + k.center[1], 0.0];
                k.weight(c)
            })
            .collect();
        save_heatmap(&out.join(format!("kernel_{name}.png")), dims, &weights)?;
    }
    println!("kernels written to {}", out.display());
    Ok(())
}
