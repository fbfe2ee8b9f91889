//! Gradient and local structure tensors with cached eigen-decomposition, plus
//! the two diffusion-tensor dissimilarity metrics used by the saliency
//! operator.
//!
//! Tensors of order 2 are stored in the upper-left block of a 3×3 matrix; the
//! remaining entries are zero, which leaves traces and Frobenius norms (and
//! therefore both metrics) unchanged.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{RegError, Result};
use crate::grid::{gaussian_blur, Dims, ScalarImage};

/// Default LST smoothing scale (half of the 3-point window).
pub const LST_SIGMA: f64 = 1.5;
/// Default LST window radius (3×3 / 3×3×3).
pub const LST_RADIUS: usize = 1;

const METRIC_SCALE: f64 = 8.0 * PI / 15.0;
const AXES: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Symmetric positive semi-definite 2×2 or 3×3 tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymTensor {
    order: usize,
    m: [[f64; 3]; 3],
    eigenvalues: [f64; 3],
    eigenvectors: [[f64; 3]; 3],
}

impl SymTensor {
    pub fn zero(order: usize) -> Self {
        assert!(order == 2 || order == 3, "tensor order must be 2 or 3");
        SymTensor { order, m: [[0.0; 3]; 3], eigenvalues: [0.0; 3], eigenvectors: AXES }
    }

    pub fn new2(xx: f64, xy: f64, yy: f64) -> Self {
        Self::from_matrix(2, [[xx, xy, 0.0], [xy, yy, 0.0], [0.0, 0.0, 0.0]])
    }

    pub fn new3(xx: f64, xy: f64, xz: f64, yy: f64, yz: f64, zz: f64) -> Self {
        Self::from_matrix(3, [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])
    }

    /// Outer product `g gᵀ` restricted to the first `order` components.
    pub fn outer(order: usize, g: [f64; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..order {
            for j in 0..order {
                m[i][j] = g[i] * g[j];
            }
        }
        Self::from_matrix(order, m)
    }

    /// Builds a tensor from the upper triangle of `m` and decomposes it.
    pub fn from_matrix(order: usize, mut m: [[f64; 3]; 3]) -> Self {
        assert!(order == 2 || order == 3, "tensor order must be 2 or 3");
        for i in 0..3 {
            for j in 0..3 {
                if i >= order || j >= order {
                    m[i][j] = 0.0;
                } else if j < i {
                    m[i][j] = m[j][i];
                }
            }
        }
        let (eigenvalues, eigenvectors) = if order == 2 { eigen2(&m) } else { eigen3(&m) };
        SymTensor { order, m, eigenvalues, eigenvectors }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    /// Eigenvalues sorted descending (`λu ≥ λv (≥ λw)`).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.order]
    }

    /// Unit eigenvector `k` (0 = u, 1 = v, 2 = w), matching [`Self::eigenvalues`].
    #[inline]
    pub fn eigenvector(&self, k: usize) -> [f64; 3] {
        self.eigenvectors[k]
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.m[i][i]).sum()
    }

    /// `Σ λk ek ekᵀ`, for checking the decomposition.
    pub fn reconstruct(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for k in 0..self.order {
            let (l, e) = (self.eigenvalues[k], self.eigenvectors[k]);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += l * e[i] * e[j];
                }
            }
        }
        out
    }
}

fn fix_sign(mut v: [f64; 3]) -> [f64; 3] {
    if let Some(c) = v.iter().find(|c| c.abs() > 1e-12) {
        if *c < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
    v
}

fn clamp_eigenvalue(l: f64, scale: f64) -> f64 {
    if l < 0.0 && l >= -1e-12 * scale.max(1.0) {
        0.0
    } else {
        l
    }
}

fn eigen2(m: &[[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let r = half_diff.hypot(b);
    let scale = a.abs().max(c.abs()).max(b.abs());
    let l1 = clamp_eigenvalue(mean + r, scale);
    let l2 = clamp_eigenvalue(mean - r, scale);
    if r <= 1e-15 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
        return ([l1, l2, 0.0], AXES);
    }
    let theta = 0.5 * b.atan2(half_diff);
    let (s, co) = theta.sin_cos();
    let u = fix_sign([co, s, 0.0]);
    let v = fix_sign([-s, co, 0.0]);
    ([l1, l2, 0.0], [u, v, [0.0, 0.0, 1.0]])
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = dot(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Null vector of `m - λI` from the best-conditioned row cross product.
fn null_vector(m: &[[f64; 3]; 3], l: f64) -> Option<[f64; 3]> {
    let r0 = [m[0][0] - l, m[0][1], m[0][2]];
    let r1 = [m[1][0], m[1][1] - l, m[1][2]];
    let r2 = [m[2][0], m[2][1], m[2][2] - l];
    [cross(r0, r1), cross(r0, r2), cross(r1, r2)]
        .into_iter()
        .map(|c| (dot(c, c), c))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|(n, _)| *n > 0.0)
        .map(|(_, c)| normalize(c))
}

/// Closed-form trigonometric eigenvalues; Jacobi sweeps when two eigenvalues
/// nearly coincide.
fn eigen3(m: &[[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let scale = m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    if scale == 0.0 {
        return ([0.0; 3], AXES);
    }
    let p = (p2 / 6.0).sqrt();
    if p <= 1e-14 * scale {
        let l = clamp_eigenvalue(q, scale);
        return ([l, l, l], AXES);
    }
    if p1 == 0.0 {
        // already diagonal: no rotation needed, keeps the values exact
        return jacobi3(m, scale);
    }
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (0.5 * det).clamp(-1.0, 1.0).acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;

    let gap = (l1 - l2).min(l2 - l3);
    if gap <= 1e-4 * p {
        return jacobi3(m, scale);
    }
    let (Some(u), Some(w)) = (null_vector(m, l1), null_vector(m, l3)) else {
        return jacobi3(m, scale);
    };
    let v = normalize(cross(w, u));
    let vals = [l1, l2, l3].map(|l| clamp_eigenvalue(l, scale));
    (vals, [fix_sign(u), fix_sign(v), fix_sign(w)])
}

fn jacobi3(m: &[[f64; 3]; 3], scale: f64) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = *m;
    let mut v = AXES;
    for _ in 0..64 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off <= 1e-30 * scale * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q].abs() <= f64::MIN_POSITIVE {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    // columns of v are eigenvectors
    let mut pairs: Vec<(f64, [f64; 3])> = (0..3)
        .map(|k| (a[k][k], [v[0][k], v[1][k], v[2][k]]))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let vals = [pairs[0].0, pairs[1].0, pairs[2].0].map(|l| clamp_eigenvalue(l, scale));
    let u = normalize(pairs[0].1);
    let w = normalize(pairs[2].1);
    // re-orthogonalise v against u and w to keep a right-handed, orthonormal frame
    let vv = normalize(cross(w, u));
    (vals, [fix_sign(u), fix_sign(vv), fix_sign(w)])
}

/// Per-point tensor field on a grid.
#[derive(Clone, Debug)]
pub struct SymTensorField {
    dims: Dims,
    tensors: Vec<SymTensor>,
}

impl SymTensorField {
    pub fn new(dims: Dims, tensors: Vec<SymTensor>) -> Result<Self> {
        if tensors.len() != dims.len() {
            return Err(RegError::Invalid(format!(
                "{} tensors for a {dims} grid",
                tensors.len()
            )));
        }
        if tensors.iter().any(|t| t.order() != dims.ndim()) {
            return Err(RegError::Invalid("tensor order differs from grid dimensionality".into()));
        }
        Ok(SymTensorField { dims, tensors })
    }

    pub fn uniform(dims: Dims, t: SymTensor) -> Result<Self> {
        Self::new(dims, vec![t; dims.len()])
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &SymTensor {
        &self.tensors[idx]
    }

    pub fn tensors(&self) -> &[SymTensor] {
        &self.tensors
    }

    pub fn traces(&self) -> Vec<f64> {
        self.tensors.iter().map(SymTensor::trace).collect()
    }
}

/// Intensity gradient per point: central differences inside, one-sided on borders.
pub fn gradient(image: &ScalarImage) -> Result<Vec<[f64; 3]>> {
    let dims = image.dims();
    if dims.min_extent() < 3 {
        return Err(RegError::TooSmall { dims, min: 3 });
    }
    let data = image.data();
    Ok((0..dims.len())
        .into_par_iter()
        .map(|i| {
            let p = dims.point(i);
            let mut g = [0.0; 3];
            for (a, ga) in g.iter_mut().enumerate().take(dims.ndim()) {
                let n = dims.extent(a);
                let at = |c: usize| {
                    let mut q = p;
                    q[a] = c;
                    data[dims.index(q)]
                };
                *ga = if p[a] == 0 {
                    at(1) - at(0)
                } else if p[a] == n - 1 {
                    at(n - 1) - at(n - 2)
                } else {
                    0.5 * (at(p[a] + 1) - at(p[a] - 1))
                };
            }
            g
        })
        .collect())
}

/// Gradient structure tensor `∇I ∇Iᵀ` per point.
pub fn gst(image: &ScalarImage) -> Result<SymTensorField> {
    let dims = image.dims();
    let grads = gradient(image)?;
    let tensors = grads.par_iter().map(|g| SymTensor::outer(dims.ndim(), *g)).collect();
    Ok(SymTensorField { dims, tensors })
}

/// Local structure tensor: every GST entry smoothed by a Gaussian of scale
/// `sigma` truncated to `radius`, then re-decomposed.
pub fn lst(gst_field: &SymTensorField, sigma: f64, radius: usize) -> Result<SymTensorField> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(RegError::NonPositiveParam { name: "sigma", value: sigma });
    }
    let dims = gst_field.dims();
    let order = dims.ndim();
    let mut channels: Vec<((usize, usize), Vec<f64>)> = Vec::new();
    for i in 0..order {
        for j in i..order {
            let raw: Vec<f64> = gst_field.tensors.iter().map(|t| t.m[i][j]).collect();
            channels.push(((i, j), gaussian_blur(dims, &raw, sigma, radius)));
        }
    }
    let tensors = (0..dims.len())
        .into_par_iter()
        .map(|k| {
            let mut m = [[0.0; 3]; 3];
            for ((i, j), ch) in &channels {
                m[*i][*j] = ch[k];
            }
            SymTensor::from_matrix(order, m)
        })
        .collect();
    Ok(SymTensorField { dims, tensors })
}

/// Reference-side structure needed to shape regression kernels.
#[derive(Clone, Debug)]
pub struct LocalStructure {
    pub lst: SymTensorField,
    /// `|∇I|²` per point.
    pub grad_sq: Vec<f64>,
}

impl LocalStructure {
    pub fn compute(image: &ScalarImage, sigma: f64, radius: usize) -> Result<Self> {
        let g = gst(image)?;
        let grad_sq = g.traces();
        let lst = lst(&g, sigma, radius)?;
        Ok(LocalStructure { lst, grad_sq })
    }

    pub fn dims(&self) -> Dims {
        self.lst.dims()
    }
}

fn difference_invariants(t1: &SymTensor, t2: &SymTensor) -> (f64, f64) {
    let mut frob2 = 0.0;
    let mut trace = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d = t1.m[i][j] - t2.m[i][j];
            frob2 += d * d;
        }
        trace += t1.m[i][i] - t2.m[i][i];
    }
    (frob2, trace)
}

/// Diffusion-tensor distance `sqrt(8π/15 (‖Δ‖_C² + ½ Tr²Δ))`.
pub fn tensor_distance_l(t1: &SymTensor, t2: &SymTensor) -> f64 {
    debug_assert_eq!(t1.order, t2.order);
    let (frob2, tr) = difference_invariants(t1, t2);
    (METRIC_SCALE * (frob2 + 0.5 * tr * tr)).sqrt()
}

/// Anisotropic-part distance `sqrt(8π/15 (‖Δ‖_C² − ⅓ Tr²Δ))`.
pub fn tensor_distance_d(t1: &SymTensor, t2: &SymTensor) -> f64 {
    debug_assert_eq!(t1.order, t2.order);
    let (frob2, tr) = difference_invariants(t1, t2);
    (METRIC_SCALE * (frob2 - tr * tr / 3.0)).max(0.0).sqrt()
}
