//! Saliency maps of two images and their joint saliency map, written as
//! false-colour heatmaps.
//!
//! `cargo run --example saliency_jsm -- [out_dir]`

use std::path::PathBuf;

use jssreg::io::save_heatmap;
use jssreg::synthetic::{paint_box, DeformedPair};
use jssreg::tensor::{LocalStructure, LST_RADIUS, LST_SIGMA};
use jssreg::{jsm, saliency, warp, Dims};

fn main() -> jssreg::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("jssreg-examples"));
    std::fs::create_dir_all(&out)?;
    let dims = Dims::new2(128, 128);
    let pair = DeformedPair::bump(dims, 1);
    // a flat patch in the moving image has no counterpart in the reference
    let moving = paint_box(&pair.moving, [54, 54, 0], [74, 74, 1], 0.5);
    let aligned = warp(&moving, &pair.truth)?;

    let r = LocalStructure::compute(&pair.reference, LST_SIGMA, LST_RADIUS)?;
    let m = LocalStructure::compute(&aligned, LST_SIGMA, LST_RADIUS)?;
    let (sr, sm) = (saliency(&r.lst, 1), saliency(&m.lst, 1));
    let joint = jsm(&sr, &sm, &r.lst, &m.lst)?;

    save_heatmap(&out.join("saliency_ref.png"), dims, sr.values())?;
    save_heatmap(&out.join("saliency_mov.png"), dims, sm.values())?;
    save_heatmap(&out.join("jsm.png"), dims, joint.values())?;

    let patch: Vec<f64> = (0..dims.len())
        .filter(|&i| {
            let p = dims.point(i);
            (58..70).contains(&p[0]) && (58..70).contains(&p[1])
        })
        .map(|i| joint.at(i))
        .collect();
    println!("mean saliency: reference {:.3}, moving {:.3}", sr.mean(), sm.mean());
    println!("mean JSM: whole image {:.3}, inside the flat patch {:.3}", joint.mean(), patch.iter().sum::<f64>() / patch.len() as f64);
    println!("heatmaps written to {}", out.display());
    Ok(())
}
