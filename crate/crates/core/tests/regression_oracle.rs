use nalgebra::{Matrix2, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jssreg::block_match::{SparseDisplacements, SparseSample};
use jssreg::kernel::KernelSpec;
use jssreg::regression::{densify_detailed, fit_local, FitStatus, KernelUnits, RegressionConfig};
use jssreg::synthetic::texture;
use jssreg::tensor::{LocalStructure, LST_RADIUS, LST_SIGMA};
use jssreg::Dims;

/// Random lattice samples with certainties in `[0.05, 1]`.
fn random_sparse(dims: Dims, spacing: usize, seed: u64) -> SparseDisplacements {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for y in (spacing / 2..dims.extent(1)).step_by(spacing) {
        for x in (spacing / 2..dims.extent(0)).step_by(spacing) {
            samples.push(SparseSample {
                position: [x, y, 0],
                displacement: [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), 0.0],
                certainty: rng.gen_range(0.05..=1.0),
            });
        }
    }
    SparseDisplacements::new(dims, samples).unwrap().with_spacing(spacing).unwrap()
}

/// Order-0 estimate by direct summation, with the kernel built from a
/// nalgebra eigendecomposition of the reference LST.
fn oracle(
    sparse: &SparseDisplacements,
    structure: &LocalStructure,
    cfg: &RegressionConfig,
    unit: f64,
    p: [usize; 3],
) -> [f64; 2] {
    let dims = sparse.level_dims;
    let m = structure.lst.at(dims.index(p)).matrix();
    let eig = SymmetricEigen::new(Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]));
    let (l0, l1) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    let (lu, lv, iu) = if l0 >= l1 { (l0, l1, 0) } else { (l1, l0, 1) };
    let (lu, lv) = (lu.max(0.0), lv.max(0.0));
    let a = if lu + lv > 0.0 { (lu - lv) / (lu + lv) } else { 0.0 };
    let su = cfg.alpha / (cfg.alpha + a) * cfg.sigma_c;
    let sv = (cfg.alpha + a) / cfg.alpha * cfg.sigma_c;
    let u = eig.eigenvectors.column(iu);
    let v = eig.eigenvectors.column(1 - iu);
    let radius = ((3.0 * su.max(sv).sqrt()).ceil() as usize).clamp(1, 15) as f64 * unit;

    let (mut num, mut den) = ([0.0; 2], 0.0);
    for s in &sparse.samples {
        let d = [s.position[0] as f64 - p[0] as f64, s.position[1] as f64 - p[1] as f64];
        if d[0].abs() > radius || d[1].abs() > radius {
            continue;
        }
        let d = [d[0] / unit, d[1] / unit];
        let pu = d[0] * u[0] + d[1] * u[1];
        let pv = d[0] * v[0] + d[1] * v[1];
        let w = (-(pu * pu / (2.0 * su) + pv * pv / (2.0 * sv))).exp() / (su * sv) * s.certainty;
        num[0] += w * s.displacement[0];
        num[1] += w * s.displacement[1];
        den += w;
    }
    [num[0] / den, num[1] / den]
}

fn check_against_oracle(units: KernelUnits, spacing: usize, seed: u64) -> f64 {
    let dims = Dims::new2(40, 36);
    let img = texture(dims, seed);
    let structure = LocalStructure::compute(&img, LST_SIGMA, LST_RADIUS).unwrap();
    let sparse = random_sparse(dims, spacing, seed + 100);
    let cfg = RegressionConfig { kernel_units: units, ..RegressionConfig::default() };
    let unit = match units {
        KernelUnits::Lattice => spacing as f64,
        KernelUnits::Pixel => 1.0,
    };
    let out = densify_detailed(&sparse, &structure, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for idx in 0..dims.len() {
        assert_eq!(out.status[idx], FitStatus::Weighted, "point {idx}");
        let expect = oracle(&sparse, &structure, &cfg, unit, dims.point(idx));
        let got = out.field.at(idx);
        worst = worst.max((got[0] - expect[0]).abs()).max((got[1] - expect[1]).abs());
    }
    worst
}

#[test]
fn densify_matches_direct_summation_in_lattice_units() {
    for seed in 0..3 {
        let err = check_against_oracle(KernelUnits::Lattice, 4, seed);
        assert!(err < 1e-12, "seed {seed}: {err:e}");
    }
}

#[test]
fn densify_matches_direct_summation_in_pixel_units() {
    for seed in 0..3 {
        let err = check_against_oracle(KernelUnits::Pixel, 2, seed);
        assert!(err < 1e-12, "seed {seed}: {err:e}");
    }
}

fn window() -> impl Strategy<Value = Vec<SparseSample>> {
    prop::collection::vec((-3i64..=3, -3i64..=3, -10.0f64..10.0, -10.0f64..10.0, 0.01f64..=1.0), 1..20).prop_map(
        |raw| {
            let mut seen = std::collections::HashSet::new();
            raw.into_iter()
                .filter(|r| seen.insert((r.0, r.1)))
                .map(|(dx, dy, a, b, c)| SparseSample {
                    position: [(10 + dx) as usize, (10 + dy) as usize, 0],
                    displacement: [a, b, 0.0],
                    certainty: c,
                })
                .collect()
        },
    )
}

fn kernel() -> KernelSpec {
    KernelSpec::isotropic(2, 1.5, [10.0, 10.0, 0.0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn order_zero_is_a_convex_combination(samples in window()) {
        let cfg = RegressionConfig::default();
        let fit = fit_local(&samples, &kernel(), &cfg, [10.0, 10.0, 0.0]);
        for k in 0..2 {
            let lo = samples.iter().map(|s| s.displacement[k]).fold(f64::INFINITY, f64::min);
            let hi = samples.iter().map(|s| s.displacement[k]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(fit.value[k] >= lo - 1e-12 && fit.value[k] <= hi + 1e-12);
        }
    }

    #[test]
    fn raising_a_certainty_pulls_toward_that_sample(samples in window(), pick in any::<prop::sample::Index>(), bump in 0.01f64..1.0) {
        let cfg = RegressionConfig::default();
        let x = [10.0, 10.0, 0.0];
        let j = pick.index(samples.len());
        prop_assume!(samples[j].certainty < 1.0);
        let before = fit_local(&samples, &kernel(), &cfg, x).value;
        let mut raised = samples.clone();
        raised[j].certainty = (samples[j].certainty + bump).min(1.0);
        let after = fit_local(&raised, &kernel(), &cfg, x).value;
        let y = samples[j].displacement;
        for k in 0..2 {
            if (y[k] - before[k]).abs() > 1e-9 {
                prop_assert!((y[k] - after[k]).abs() < (y[k] - before[k]).abs());
            }
        }
    }

    #[test]
    fn common_weight_factor_cancels(samples in window(), factor in 0.01f64..=1.0) {
        let cfg = RegressionConfig::default();
        let x = [10.0, 10.0, 0.0];
        let before = fit_local(&samples, &kernel(), &cfg, x).value;
        let scaled: Vec<SparseSample> =
            samples.iter().map(|s| SparseSample { certainty: s.certainty * factor, ..*s }).collect();
        let after = fit_local(&scaled, &kernel(), &cfg, x).value;
        for k in 0..2 {
            prop_assert!((before[k] - after[k]).abs() <= 1e-12 * (1.0 + before[k].abs()));
        }
    }
}
