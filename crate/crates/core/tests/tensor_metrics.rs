use proptest::prelude::*;

use jssreg::grid::gaussian_blur;
use jssreg::synthetic::texture;
use jssreg::tensor::{gst, lst, tensor_distance_d, tensor_distance_l, SymTensor};
use jssreg::Dims;

fn psd2() -> impl Strategy<Value = SymTensor> {
    (0.0f64..3.0, 0.0f64..3.0, 0.0f64..std::f64::consts::PI).prop_map(|(a, b, th)| rotate2(&SymTensor::new2(a, 0.0, b), th))
}

fn psd3() -> impl Strategy<Value = SymTensor> {
    prop::array::uniform9(-1.5f64..1.5).prop_map(|m| {
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = (0..3).map(|k| m[3 * i + k] * m[3 * j + k]).sum();
            }
        }
        SymTensor::from_matrix(3, s)
    })
}

fn rotate2(t: &SymTensor, th: f64) -> SymTensor {
    let (c, s) = (th.cos(), th.sin());
    let r = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    conjugate(t, &r)
}

/// `R T Rᵀ`.
fn conjugate(t: &SymTensor, r: &[[f64; 3]; 3]) -> SymTensor {
    let m = t.matrix();
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).flat_map(|k| (0..3).map(move |l| (k, l))).map(|(k, l)| r[i][k] * m[k][l] * r[j][l]).sum();
        }
    }
    SymTensor::from_matrix(t.order(), out)
}

/// Rotation about a unit axis by Rodrigues' formula.
fn rotation3(axis: [f64; 3], th: f64) -> [[f64; 3]; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|a| a / n);
    let (c, s) = (th.cos(), th.sin());
    let k = 1.0 - c;
    [
        [c + x * x * k, x * y * k - z * s, x * z * k + y * s],
        [y * x * k + z * s, c + y * y * k, y * z * k - x * s],
        [z * x * k - y * s, z * y * k + x * s, c + z * z * k],
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn metric_axioms_2d(a in psd2(), b in psd2(), th in 0.0f64..6.3) {
        let (d, l) = (tensor_distance_d(&a, &b), tensor_distance_l(&a, &b));
        prop_assert!(d >= 0.0 && l >= 0.0);
        prop_assert!(d <= l + 1e-12);
        prop_assert!((d - tensor_distance_d(&b, &a)).abs() < 1e-12);
        prop_assert!((l - tensor_distance_l(&b, &a)).abs() < 1e-12);
        let (ra, rb) = (rotate2(&a, th), rotate2(&b, th));
        prop_assert!((tensor_distance_d(&ra, &rb) - d).abs() < 1e-9);
        prop_assert!((tensor_distance_l(&ra, &rb) - l).abs() < 1e-9);
        prop_assert_eq!(tensor_distance_d(&a, &a), 0.0);
        prop_assert_eq!(tensor_distance_l(&a, &a), 0.0);
    }

    #[test]
    fn metric_axioms_3d(a in psd3(), b in psd3(), axis in prop::array::uniform3(0.1f64..1.0), th in 0.0f64..6.3) {
        let (d, l) = (tensor_distance_d(&a, &b), tensor_distance_l(&a, &b));
        prop_assert!(d >= 0.0 && d <= l + 1e-12);
        prop_assert!((d - tensor_distance_d(&b, &a)).abs() < 1e-12);
        let r = rotation3(axis, th);
        let (ra, rb) = (conjugate(&a, &r), conjugate(&b, &r));
        prop_assert!((tensor_distance_d(&ra, &rb) - d).abs() < 1e-9 * (1.0 + d));
        prop_assert!((tensor_distance_l(&ra, &rb) - l).abs() < 1e-9 * (1.0 + l));
    }

    #[test]
    fn decomposition_reconstructs(t in psd3()) {
        let back = t.reconstruct();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((back[i][j] - t.matrix()[i][j]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn lst_trace_is_smoothed_gst_trace() {
    for (dims, seed) in [(Dims::new2(40, 32), 1), (Dims::new3(14, 12, 10), 2)] {
        let img = texture(dims, seed);
        let g = gst(&img).unwrap();
        let l = lst(&g, 1.5, 1).unwrap();
        let smoothed = gaussian_blur(dims, &g.traces(), 1.5, 1);
        for (a, b) in l.traces().iter().zip(&smoothed) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(l.tensors().iter().all(|t| t.eigenvalues().iter().all(|&e| e >= 0.0)));
    }
}

#[test]
fn gst_has_one_nonzero_eigenvalue_equal_to_gradient_energy() {
    let img = texture(Dims::new2(32, 32), 3);
    let g = gst(&img).unwrap();
    let grads = jssreg::tensor::gradient(&img).unwrap();
    for (t, d) in g.tensors().iter().zip(&grads) {
        let e = t.eigenvalues();
        let energy = d[0] * d[0] + d[1] * d[1];
        assert!((e[0] - energy).abs() < 1e-9);
        assert!(e[1].abs() < 1e-9);
    }
}
