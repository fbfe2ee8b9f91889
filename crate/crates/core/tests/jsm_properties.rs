use proptest::prelude::*;

use jssreg::saliency::{jsm, saliency, SaliencyMap};
use jssreg::synthetic::texture;
use jssreg::tensor::{tensor_distance_d, LocalStructure, SymTensor, SymTensorField, LST_RADIUS, LST_SIGMA};
use jssreg::{Dims, ScalarImage};

const N: usize = 6;

fn dims() -> Dims {
    Dims::new2(N, 1)
}

fn tensor() -> impl Strategy<Value = SymTensor> {
    (0.0f64..2.0, 0.0f64..2.0, -1.0f64..1.0).prop_map(|(a, b, c)| {
        // M Mᵀ keeps the tensor positive semidefinite
        let (m00, m01, m11) = (a, c, b);
        SymTensor::new2(m00 * m00 + m01 * m01, m01 * m11, m11 * m11)
    })
}

fn field(ts: Vec<SymTensor>) -> SymTensorField {
    SymTensorField::new(dims(), ts).unwrap()
}

fn smap(v: Vec<f64>) -> SaliencyMap {
    SaliencyMap::from_values(dims(), v).unwrap()
}

/// Raw joint saliency at point `i` of the map, recovered by undoing the max
/// normalization through a reference point whose raw value is known.
fn raw_ratio(s_r: &[f64], s_m: &[f64], r: &[SymTensor], m: &[SymTensor], i: usize, j: usize) -> f64 {
    let map = jsm(&smap(s_r.to_vec()), &smap(s_m.to_vec()), &field(r.to_vec()), &field(m.to_vec())).unwrap();
    map.at(i) / map.at(j)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn values_lie_in_unit_interval(
        s_r in prop::collection::vec(0.0f64..=1.0, N),
        s_m in prop::collection::vec(0.0f64..=1.0, N),
        r in prop::collection::vec(tensor(), N),
        m in prop::collection::vec(tensor(), N),
    ) {
        let map = jsm(&smap(s_r), &smap(s_m), &field(r), &field(m)).unwrap();
        prop_assert!(map.values().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    }

    #[test]
    fn raising_saliency_never_lowers_raw_jsm(
        s_r in prop::collection::vec(0.05f64..=0.9, N),
        s_m in prop::collection::vec(0.05f64..=0.9, N),
        r in prop::collection::vec(tensor(), N),
        m in prop::collection::vec(tensor(), N),
        extra in 0.0f64..0.1,
    ) {
        // point 0 carries the largest raw value in both runs, so ratios to it are raw ratios
        let mut s_r = s_r;
        let mut s_m = s_m;
        s_r[0] = 1.0;
        s_m[0] = 1.0;
        let mut m = m;
        m[0] = r[0];
        let before = raw_ratio(&s_r, &s_m, &r, &m, 1, 0);
        let mut raised = s_r.clone();
        raised[1] = (raised[1] + extra).min(1.0);
        let after = raw_ratio(&raised, &s_m, &r, &m, 1, 0);
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn raw_jsm_decreases_with_tensor_distance(t in tensor(), k1 in 0.0f64..3.0, k2 in 0.0f64..3.0) {
        prop_assume!((k1 - k2).abs() > 1e-3);
        prop_assume!(t.trace() > 1e-3);
        // points 1 and 2 share saliency; their moving tensors are scaled copies
        // of the reference tensor at different distances
        let scale = |k: f64| SymTensor::from_matrix(2, t.matrix().map(|row| row.map(|v| v * k)));
        let r = vec![t; N];
        let mut m = vec![t; N];
        m[1] = scale(1.0 + k1);
        m[2] = scale(1.0 + k2);
        let d1 = tensor_distance_d(&r[1], &m[1]);
        let d2 = tensor_distance_d(&r[2], &m[2]);
        prop_assume!((d1 - d2).abs() > 1e-9);
        let s = vec![0.5; N];
        let map = jsm(&smap(s.clone()), &smap(s), &field(r), &field(m)).unwrap();
        if d1 < d2 {
            prop_assert!(map.at(1) > map.at(2));
        } else {
            prop_assert!(map.at(1) < map.at(2));
        }
    }
}

#[test]
fn identical_fields_reduce_to_min_saliency() {
    let d = dims();
    let t = SymTensor::new2(1.0, 0.2, 0.5);
    let s_r = vec![0.1, 0.4, 0.8, 1.0, 0.3, 0.0];
    let s_m = vec![0.2, 0.2, 1.0, 0.9, 0.6, 0.5];
    let map = jsm(&smap(s_r.clone()), &smap(s_m.clone()), &field(vec![t; N]), &field(vec![t; N])).unwrap();
    let mins: Vec<f64> = s_r.iter().zip(&s_m).map(|(a, b)| a.min(*b)).collect();
    let max = mins.iter().copied().fold(0.0, f64::max);
    for i in 0..d.len() {
        assert!((map.at(i) - mins[i] / max).abs() < 1e-12);
    }
}

#[test]
fn constant_images_have_zero_maps() {
    let d = Dims::new2(24, 20);
    let img = ScalarImage::constant(d, 0.3).unwrap();
    let st = LocalStructure::compute(&img, LST_SIGMA, LST_RADIUS).unwrap();
    let s = saliency(&st.lst, 1);
    assert!(s.values().iter().all(|&v| v == 0.0));
    let j = jsm(&s, &s, &st.lst, &st.lst).unwrap();
    assert!(j.values().iter().all(|&v| v == 0.0));
}

#[test]
fn textured_self_pair_has_no_nans() {
    let img = texture(Dims::new2(48, 48), 4);
    let st = LocalStructure::compute(&img, LST_SIGMA, LST_RADIUS).unwrap();
    let s = saliency(&st.lst, 1);
    let j = jsm(&s, &s, &st.lst, &st.lst).unwrap();
    assert!(j.values().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    assert!((j.values().iter().copied().fold(0.0, f64::max) - 1.0).abs() < 1e-12);
}
