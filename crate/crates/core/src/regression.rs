//! Certainty-weighted local kernel regression: turns sparse block-matching
//! displacements into a dense deformation field.
//!
//! At every grid point a kernel is shaped by the reference image's local
//! structure and the sample displacements inside its window are fitted by a
//! weighted local polynomial. Order 0 is the certainty-weighted
//! Nadaraya-Watson quotient (normalized convolution); orders 1 and 2 solve the
//! weighted least-squares problem and keep the constant term.
//!
//! Each displacement component is regressed independently.
//!
//! By default kernel offsets are measured in units of the sample lattice step,
//! so `sigma_c` counts neighbouring displacement vectors rather than pixels and
//! keeps the same reach whatever the block-matching spacing.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_match::{SparseDisplacements, SparseSample};
use crate::error::{RegError, Result};
use crate::grid::{ensure_same_dims, DisplacementField};
use crate::kernel::{KernelParams, KernelShape, KernelSpec};
use crate::tensor::LocalStructure;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionConfig {
    /// Local polynomial order (0, 1 or 2).
    pub order: usize,
    pub alpha: f64,
    pub sigma_c: f64,
    /// Denominators below this fall back to the next estimator.
    pub min_total_weight: f64,
    pub kernel_shape: KernelShape,
    pub kernel_units: KernelUnits,
}

/// Length unit of the kernel offsets `x_i − x`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelUnits {
    /// One unit per sample-lattice step.
    #[default]
    Lattice,
    /// One unit per pixel.
    Pixel,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            order: 0,
            alpha: 0.5,
            sigma_c: 1.5,
            min_total_weight: 1e-8,
            kernel_shape: KernelShape::Adaptive,
            kernel_units: KernelUnits::Lattice,
        }
    }
}

impl RegressionConfig {
    pub fn kernel_params(&self) -> KernelParams {
        KernelParams { alpha: self.alpha, sigma_c: self.sigma_c, shape: self.kernel_shape }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order > 2 {
            return Err(RegError::Invalid(format!("regression order {} not in 0..=2", self.order)));
        }
        if !(self.min_total_weight > 0.0) {
            return Err(RegError::NonPositiveParam { name: "min_total_weight", value: self.min_total_weight });
        }
        self.kernel_params().validate()
    }
}

/// Which estimator produced a local fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStatus {
    /// Kernel × certainty weights.
    Weighted,
    /// Certainties too small; kernel weights alone.
    Unweighted,
    /// No usable weight in the window; value is zero.
    LowConfidence,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFit {
    pub value: [f64; 3],
    pub status: FitStatus,
    /// Polynomial order actually solved (a singular system drops to 0).
    pub order_used: usize,
}

/// Number of polynomial terms for `order` in `ndim` dimensions.
pub fn basis_len(order: usize, ndim: usize) -> usize {
    match order {
        0 => 1,
        1 => 1 + ndim,
        _ => 1 + ndim + ndim * (ndim + 1) / 2,
    }
}

fn basis(order: usize, ndim: usize, d: [f64; 3], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if order >= 1 {
        out.extend_from_slice(&d[..ndim]);
    }
    if order >= 2 {
        for i in 0..ndim {
            for j in i..ndim {
                out.push(d[i] * d[j]);
            }
        }
    }
}

/// Solves `m x = rhs` (3 right-hand sides) by Gaussian elimination with
/// partial pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<[f64; 3]>) -> Result<[f64; 3]> {
    let n = m.len();
    let scale = (0..n).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(RegError::SingularSystem);
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        if m[piv][col].abs() <= 1e-12 * scale {
            return Err(RegError::SingularSystem);
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            for k in 0..3 {
                rhs[r][k] -= f * rhs[col][k];
            }
        }
    }
    let mut x = vec![[0.0; 3]; n];
    for r in (0..n).rev() {
        for k in 0..3 {
            let mut acc = rhs[r][k];
            for c in r + 1..n {
                acc -= m[r][c] * x[c][k];
            }
            x[r][k] = acc / m[r][r];
        }
    }
    Ok(x[0])
}

fn weighted_mean(samples: &[SparseSample], weights: &[f64]) -> ([f64; 3], f64) {
    let mut num = [0.0; 3];
    let mut den = 0.0;
    for (s, &w) in samples.iter().zip(weights) {
        for k in 0..3 {
            num[k] += w * s.displacement[k];
        }
        den += w;
    }
    ([num[0] / den, num[1] / den, num[2] / den], den)
}

fn weighted_polynomial(
    samples: &[SparseSample],
    weights: &[f64],
    x: [f64; 3],
    order: usize,
    ndim: usize,
) -> Result<[f64; 3]> {
    let n = basis_len(order, ndim);
    if weights.iter().filter(|&&w| w > 0.0).count() < n {
        return Err(RegError::SingularSystem);
    }
    let mut xtwx = vec![vec![0.0; n]; n];
    let mut xtwy = vec![[0.0; 3]; n];
    let mut phi = Vec::with_capacity(n);
    for (s, &w) in samples.iter().zip(weights) {
        if w <= 0.0 {
            continue;
        }
        let p = s.position;
        let d = [p[0] as f64 - x[0], p[1] as f64 - x[1], p[2] as f64 - x[2]];
        basis(order, ndim, d, &mut phi);
        for i in 0..n {
            let wi = w * phi[i];
            for j in 0..n {
                xtwx[i][j] += wi * phi[j];
            }
            for k in 0..3 {
                xtwy[i][k] += wi * s.displacement[k];
            }
        }
    }
    solve(xtwx, xtwy)
}

fn fit_with_weights(
    samples: &[SparseSample],
    weights: &[f64],
    x: [f64; 3],
    order: usize,
    ndim: usize,
) -> ([f64; 3], usize) {
    if order > 0 {
        if let Ok(v) = weighted_polynomial(samples, weights, x, order, ndim) {
            return (v, order);
        }
    }
    (weighted_mean(samples, weights).0, 0)
}

/// Local regression at `x` from the samples of one window.
///
/// Kernel weights are `K(x_i − x)` with the shape of `kernel`; combined weights
/// are `K · c_i`. When their sum is below `min_total_weight` the certainties
/// are dropped, and when the kernel mass alone is too small the fit is zero
/// and flagged [`FitStatus::LowConfidence`].
pub fn fit_local(samples: &[SparseSample], kernel: &KernelSpec, config: &RegressionConfig, x: [f64; 3]) -> LocalFit {
    fit_local_scaled(samples, kernel, config, x, 1.0)
}

/// [`fit_local`] with kernel offsets divided by `unit` pixels.
pub fn fit_local_scaled(
    samples: &[SparseSample],
    kernel: &KernelSpec,
    config: &RegressionConfig,
    x: [f64; 3],
    unit: f64,
) -> LocalFit {
    let kw: Vec<f64> = samples
        .iter()
        .map(|s| {
            let p = s.position;
            kernel.weight([
                kernel.center[0] + (p[0] as f64 - x[0]) / unit,
                kernel.center[1] + (p[1] as f64 - x[1]) / unit,
                kernel.center[2] + (p[2] as f64 - x[2]) / unit,
            ])
        })
        .collect();
    let cw: Vec<f64> = kw.iter().zip(samples).map(|(k, s)| k * s.certainty).collect();
    let ndim = kernel.ndim;
    if cw.iter().sum::<f64>() >= config.min_total_weight {
        let (value, order_used) = fit_with_weights(samples, &cw, x, config.order, ndim);
        return LocalFit { value, status: FitStatus::Weighted, order_used };
    }
    if kw.iter().sum::<f64>() >= config.min_total_weight {
        let (value, order_used) = fit_with_weights(samples, &kw, x, config.order, ndim);
        return LocalFit { value, status: FitStatus::Unweighted, order_used };
    }
    LocalFit { value: [0.0; 3], status: FitStatus::LowConfidence, order_used: 0 }
}

/// Dense field plus per-point fit statuses.
#[derive(Clone, Debug)]
pub struct Densified {
    pub field: DisplacementField,
    pub status: Vec<FitStatus>,
}

impl Densified {
    pub fn low_confidence_count(&self) -> usize {
        self.status.iter().filter(|s| **s == FitStatus::LowConfidence).count()
    }
}

/// Samples whose lattice position lies within `radius` (∞-norm) of `p`.
fn gather(
    sparse: &SparseDisplacements,
    slots: &[u32],
    p: [usize; 3],
    radius: usize,
    out: &mut Vec<SparseSample>,
) {
    out.clear();
    let dims = sparse.level_dims;
    let r = radius as i64;
    let rz = if dims.ndim() == 3 { r } else { 0 };
    let ext = dims.extents3();
    let range = |c: usize, r: i64, n: usize| {
        let lo = (c as i64 - r).max(0) as usize;
        let hi = ((c as i64 + r) as usize).min(n - 1);
        lo..=hi
    };
    for z in range(p[2], rz, ext[2]) {
        for y in range(p[1], r, ext[1]) {
            for x in range(p[0], r, ext[0]) {
                let slot = slots[dims.index([x, y, z])];
                if slot != 0 {
                    out.push(sparse.samples[slot as usize - 1]);
                }
            }
        }
    }
}

/// Densifies `sparse` over its grid using kernels shaped by `structure`.
pub fn densify(sparse: &SparseDisplacements, structure: &LocalStructure, config: &RegressionConfig) -> Result<DisplacementField> {
    densify_detailed(sparse, structure, config).map(|d| d.field)
}

pub fn densify_detailed(
    sparse: &SparseDisplacements,
    structure: &LocalStructure,
    config: &RegressionConfig,
) -> Result<Densified> {
    config.validate()?;
    let dims = sparse.level_dims;
    ensure_same_dims(&dims, &structure.dims())?;
    if !sparse.samples.iter().any(|s| s.certainty > 0.0) {
        return Err(RegError::EmptySamples);
    }
    let mut slots = vec![0u32; dims.len()];
    for (i, s) in sparse.samples.iter().enumerate() {
        slots[dims.index(s.position)] = i as u32 + 1;
    }
    let params = config.kernel_params();
    let unit = match config.kernel_units {
        KernelUnits::Lattice => sparse.spacing.max(1),
        KernelUnits::Pixel => 1,
    };
    let fits: Vec<LocalFit> = (0..dims.len())
        .into_par_iter()
        .map_init(Vec::new, |window, idx| {
            let kernel = KernelSpec::at_point(structure, idx, &params)?;
            let p = dims.point(idx);
            gather(sparse, &slots, p, kernel.support_radius * unit, window);
            Ok(fit_local_scaled(window, &kernel, config, kernel.center, unit as f64))
        })
        .collect::<Result<_>>()?;

    let mut values: Vec<[f64; 3]> = fits.iter().map(|f| f.value).collect();
    let status: Vec<FitStatus> = fits.iter().map(|f| f.status).collect();
    fill_low_confidence(dims, &status, &mut values);
    Ok(Densified { field: DisplacementField::new(dims, values)?, status })
}

/// Breadth-first fill of low-confidence points: each ring takes the mean of
/// its already-filled face neighbours.
fn fill_low_confidence(dims: crate::grid::Dims, status: &[FitStatus], values: &mut [[f64; 3]]) {
    let mut filled: Vec<bool> = status.iter().map(|s| *s != FitStatus::LowConfidence).collect();
    if filled.iter().all(|&f| f) || !filled.iter().any(|&f| f) {
        return;
    }
    let mut faces: Vec<[i64; 3]> = Vec::new();
    for a in 0..dims.ndim() {
        for s in [-1i64, 1] {
            let mut o = [0i64; 3];
            o[a] = s;
            faces.push(o);
        }
    }
    let neighbours = |idx: usize| {
        let p = dims.point(idx);
        faces
            .iter()
            .map(move |o| [p[0] as i64 + o[0], p[1] as i64 + o[1], p[2] as i64 + o[2]])
            .filter(|q| dims.contains(*q))
            .map(|q| dims.index([q[0] as usize, q[1] as usize, q[2] as usize]))
    };
    let mut frontier: VecDeque<usize> = VecDeque::new();
    let mut queued = filled.clone();
    for idx in 0..dims.len() {
        if !filled[idx] && neighbours(idx).any(|n| filled[n]) {
            frontier.push_back(idx);
            queued[idx] = true;
        }
    }
    while !frontier.is_empty() {
        let ring: Vec<usize> = frontier.drain(..).collect();
        let updates: Vec<[f64; 3]> = ring
            .iter()
            .map(|&idx| {
                let mut acc = [0.0; 3];
                let mut n = 0.0;
                for nb in neighbours(idx).filter(|&nb| filled[nb]) {
                    for k in 0..3 {
                        acc[k] += values[nb][k];
                    }
                    n += 1.0;
                }
                [acc[0] / n, acc[1] / n, acc[2] / n]
            })
            .collect();
        for (&idx, v) in ring.iter().zip(updates) {
            values[idx] = v;
            filled[idx] = true;
        }
        for &idx in &ring {
            for nb in neighbours(idx) {
                if !queued[nb] {
                    queued[nb] = true;
                    frontier.push_back(nb);
                }
            }
        }
    }
}
