//! Landmark MRE/SD, a landmark CSV round trip and a difference image.
//!
//! `cargo run --release --example landmark_eval -- [out_dir]`

use std::path::PathBuf;

use jssreg::io::{read_landmarks, save_image, write_landmarks};
use jssreg::synthetic::DeformedPair;
use jssreg::{difference_image, landmark_error, register, Dims, DisplacementField, LandmarkPair, LandmarkSet, RegistrationConfig};

fn main() -> jssreg::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("jssreg-examples"));
    std::fs::create_dir_all(&out)?;
    let dims = Dims::new2(128, 128);
    let pair = DeformedPair::bump(dims, 4);

    // moving landmarks are the reference points pushed through the true deformation
    let bump = pair.bump;
    let mut pairs = Vec::new();
    for y in (16..112).step_by(12) {
        for x in (16..112).step_by(12) {
            let r = [x as f64, y as f64, 0.0];
            let u = bump.eval(r);
            pairs.push(LandmarkPair { reference: r, moving: [r[0] + u[0], r[1] + u[1], 0.0] });
        }
    }
    let csv = out.join("landmarks.csv");
    write_landmarks(&csv, &LandmarkSet::new(pairs), 2)?;
    let set = read_landmarks(&csv)?;

    let before = landmark_error(&set, &DisplacementField::zeros(dims))?;
    let result = register(&pair.reference, &pair.moving, &RegistrationConfig::default())?;
    let after = landmark_error(&set, &result.field)?;
    println!("{} landmarks", set.len());
    println!("before registration: MRE {:.3} ± {:.3} px", before.mre, before.sd);
    println!("after registration:  MRE {:.3} ± {:.3} px", after.mre, after.sd);

    save_image(&out.join("diff_before.png"), &difference_image(&pair.reference, &pair.moving)?)?;
    save_image(&out.join("diff_after.png"), &difference_image(&pair.reference, &result.warped)?)?;
    println!("outputs written to {}", out.display());
    Ok(())
}
