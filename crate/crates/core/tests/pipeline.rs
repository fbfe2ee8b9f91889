use jssreg::block_match::{match_blocks, BlockMatchParams};
use jssreg::eval::{endpoint_error, interior};
use jssreg::synthetic::{texture, translate, DeformedPair};
use jssreg::{register, upsample_field, Dims, DisplacementField, JointSaliencyMap, RegistrationConfig};

const DIMS: Dims = Dims::new2(128, 128);

#[test]
fn identity_pair_stays_near_zero() {
    let img = texture(DIMS, 5);
    let res = register(&img, &img, &RegistrationConfig::default()).unwrap();
    let stats = endpoint_error(&res.field, &DisplacementField::zeros(DIMS), |_| true).unwrap();
    assert!(stats.mean < 0.25, "mean {}", stats.mean);
}

#[test]
fn no_op_registration_barely_changes_the_image() {
    let img = texture(DIMS, 6);
    let res = register(&img, &img, &RegistrationConfig::default()).unwrap();
    let change: f64 =
        img.data().iter().zip(res.warped.data()).map(|(a, b)| (a - b).abs()).sum::<f64>() / img.data().len() as f64;
    assert!(change < 0.01, "mean abs change {change}");
}

#[test]
fn translation_is_recovered_with_four_levels() {
    let reference = texture(DIMS, 7);
    let moving = translate(&reference, [6, 4, 0]);
    let cfg = RegistrationConfig { levels: 4, ..RegistrationConfig::default() };
    let res = register(&reference, &moving, &cfg).unwrap();
    let truth = DisplacementField::uniform(DIMS, [6.0, 4.0, 0.0]);
    let stats = endpoint_error(&res.field, &truth, interior(DIMS, 16)).unwrap();
    assert!(stats.mean < 1.0, "mean EPE {}", stats.mean);
}

#[test]
fn single_level_single_iteration_is_one_pass() {
    let pair = DeformedPair::bump(Dims::new2(64, 64), 2);
    let cfg = RegistrationConfig { levels: 1, iterations_per_level: 1, ..RegistrationConfig::default() };
    let res = register(&pair.reference, &pair.moving, &cfg).unwrap();
    assert_eq!(res.diagnostics.len(), 1);
    assert_eq!((res.diagnostics[0].level, res.diagnostics[0].iteration), (0, 0));
}

#[test]
fn outputs_are_finite_and_in_range() {
    for seed in 0..3 {
        let pair = DeformedPair::bump(DIMS, seed);
        let res = register(&pair.reference, &pair.moving, &RegistrationConfig::default()).unwrap();
        assert!(res.field.data().iter().flatten().all(|c| c.is_finite()));
        assert!(res.warped.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

/// Endpoint error of each level-entry field and of the final field, all
/// measured at full resolution.
fn entry_errors(seed: u64) -> Vec<f64> {
    let pair = DeformedPair::bump(DIMS, seed);
    let cfg = RegistrationConfig { record_level_fields: true, ..RegistrationConfig::default() };
    let res = register(&pair.reference, &pair.moving, &cfg).unwrap();
    let keep = interior(DIMS, 8);
    let mut errors: Vec<f64> = res
        .level_entry_fields
        .iter()
        .map(|f| endpoint_error(&upsample_field(f, DIMS).unwrap(), &pair.truth, &keep).unwrap().mean)
        .collect();
    errors.push(endpoint_error(&res.field, &pair.truth, &keep).unwrap().mean);
    errors
}

#[test]
fn endpoint_error_mostly_falls_from_level_to_level() {
    let (mut good, mut total) = (0, 0);
    for seed in 0..10 {
        let e = entry_errors(seed);
        for w in e.windows(2) {
            total += 1;
            if w[1] <= w[0] {
                good += 1;
            }
        }
    }
    assert!(good as f64 >= 0.8 * total as f64, "{good}/{total} level transitions improved");
}

#[test]
fn block_matches_are_deterministic_and_bounded() {
    let pair = DeformedPair::bump(DIMS, 3);
    let params = BlockMatchParams::default();
    let uniform = JointSaliencyMap::uniform(DIMS);
    let a = match_blocks(&pair.reference, &pair.moving, &uniform, &params).unwrap();
    let b = match_blocks(&pair.reference, &pair.moving, &uniform, &params).unwrap();
    assert_eq!(a, b);
    let r = params.search_radius as f64;
    assert!(a.samples.iter().all(|s| s.displacement.iter().all(|c| c.abs() <= r)));
}
