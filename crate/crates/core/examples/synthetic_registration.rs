//! Registers a textured image deformed by a known Gaussian bump and reports
//! the endpoint error against the ground truth.
//!
//! `cargo run --release --example synthetic_registration -- [seed]`

use jssreg::eval::{endpoint_error, interior};
use jssreg::synthetic::DeformedPair;
use jssreg::{register, Dims, RegistrationConfig};

fn main() -> jssreg::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let dims = Dims::new2(128, 128);
    let pair = DeformedPair::bump(dims, seed);

    let result = register(&pair.reference, &pair.moving, &RegistrationConfig::default())?;

    for d in &result.diagnostics {
        println!(
            "level {} iter {}: mean |u| {:.3}, mean JSM {:.3}, {} samples, {} low-confidence",
            d.level, d.iteration, d.mean_displacement, d.mean_jsm, d.samples, d.low_confidence_points
        );
    }
    let epe = endpoint_error(&result.field, &pair.truth, interior(dims, 8))?;
    println!("interior endpoint error: mean {:.3} px, max {:.3} px", epe.mean, epe.max);
    println!("runtime {:.2} s", result.timings.total);
    Ok(())
}
