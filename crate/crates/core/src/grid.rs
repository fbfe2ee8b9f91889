//! Regular 2D/3D grids: intensity images, displacement fields, Gaussian
//! smoothing, the multiresolution pyramid, interpolation, warping and field
//! composition.
//!
//! Every grid is stored x-fastest. 2D grids carry a unit z extent so that the
//! same code paths serve both dimensionalities; displacement vectors are kept
//! as `[f64; 3]` with the z component pinned to zero in 2D.
//!
//! Out-of-domain reads always replicate the nearest edge value.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RegError, Result};

/// Grid extents of a 2D or 3D image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    ndim: usize,
    ext: [usize; 3],
}

impl Dims {
    pub const fn new2(width: usize, height: usize) -> Self {
        Dims { ndim: 2, ext: [width, height, 1] }
    }

    pub const fn new3(width: usize, height: usize, depth: usize) -> Self {
        Dims { ndim: 3, ext: [width, height, depth] }
    }

    /// Builds dims from 2 or 3 extents; every extent must be non-zero.
    pub fn from_slice(extents: &[usize]) -> Result<Self> {
        if extents.iter().any(|&e| e == 0) {
            return Err(RegError::Invalid(format!("zero extent in {extents:?}")));
        }
        match *extents {
            [w, h] => Ok(Dims::new2(w, h)),
            [w, h, d] => Ok(Dims::new3(w, h, d)),
            _ => Err(RegError::Invalid(format!(
                "expected 2 or 3 extents, got {}",
                extents.len()
            ))),
        }
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.ndim
    }

    #[inline]
    pub fn extent(&self, axis: usize) -> usize {
        self.ext[axis]
    }

    /// Extents padded to three axes (z = 1 in 2D).
    #[inline]
    pub fn extents3(&self) -> [usize; 3] {
        self.ext
    }

    /// Extents of the active axes only.
    pub fn extents(&self) -> &[usize] {
        &self.ext[..self.ndim]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ext[0] * self.ext[1] * self.ext[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_extent(&self) -> usize {
        self.extents().iter().copied().min().unwrap_or(0)
    }

    #[inline]
    pub fn index(&self, p: [usize; 3]) -> usize {
        (p[2] * self.ext[1] + p[1]) * self.ext[0] + p[0]
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.ext[0];
        let rest = idx / self.ext[0];
        [x, rest % self.ext[1], rest / self.ext[1]]
    }

    /// Index of the point nearest to `p` inside the grid.
    #[inline]
    pub fn clamped_index(&self, p: [i64; 3]) -> usize {
        let c = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
        self.index([c(p[0], self.ext[0]), c(p[1], self.ext[1]), c(p[2], self.ext[2])])
    }

    pub fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.ext[a])
    }

    /// All integer offsets with `|o|_inf <= radius` on the active axes.
    pub fn offsets(&self, radius: usize) -> Vec<[i64; 3]> {
        let r = radius as i64;
        let rz = if self.ndim == 3 { r } else { 0 };
        let mut out = Vec::new();
        for dz in -rz..=rz {
            for dy in -r..=r {
                for dx in -r..=r {
                    out.push([dx, dy, dz]);
                }
            }
        }
        out
    }

    fn check_same(&self, other: &Dims) -> Result<()> {
        if self != other {
            return Err(RegError::DimMismatch { expected: *self, found: *other });
        }
        Ok(())
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.extents().iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

/// Ensures two grids have identical extents.
pub fn ensure_same_dims(expected: &Dims, found: &Dims) -> Result<()> {
    expected.check_same(found)
}

/// Intensity image with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarImage {
    dims: Dims,
    data: Vec<f64>,
}

impl ScalarImage {
    /// Wraps already-normalized intensities; fails on out-of-range or
    /// non-finite values.
    pub fn new(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(RegError::Invalid(format!(
                "{} intensities for a {dims} grid",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(RegError::Invalid(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(ScalarImage { dims, data })
    }

    /// Min-max normalizes raw intensities into `[0, 1]`. A constant input maps to zero.
    pub fn normalized(dims: Dims, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != dims.len() {
            return Err(RegError::Invalid(format!(
                "{} intensities for a {dims} grid",
                raw.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(RegError::Invalid("non-finite intensity".into()));
        }
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let data = if span > 0.0 {
            raw.iter().map(|v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
        } else {
            vec![0.0; raw.len()]
        };
        Ok(ScalarImage { dims, data })
    }

    pub fn constant(dims: Dims, value: f64) -> Result<Self> {
        Self::new(dims, vec![value; dims.len()])
    }

    /// Evaluates `f` at every grid point. Values are clamped into `[0, 1]`.
    pub fn from_fn(dims: Dims, f: impl Fn([usize; 3]) -> f64 + Sync) -> Self {
        let data = (0..dims.len())
            .into_par_iter()
            .map(|i| f(dims.point(i)).clamp(0.0, 1.0))
            .collect();
        ScalarImage { dims, data }
    }

    /// Internal constructor for values produced by convex operations on valid images.
    pub(crate) fn from_vec_clamped(dims: Dims, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.len());
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        ScalarImage { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, p: [usize; 3]) -> f64 {
        self.data[self.dims.index(p)]
    }

    #[inline]
    pub fn clamped(&self, p: [i64; 3]) -> f64 {
        self.data[self.dims.clamped_index(p)]
    }

    /// Bilinear (2D) or trilinear (3D) interpolation with edge clamping.
    pub fn sample(&self, pos: [f64; 3]) -> f64 {
        interpolate(&self.dims, pos, |i| self.data[i], |a, b, t| a + t * (b - a))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Dense per-point displacement vectors, in pixels of the grid they live on.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    dims: Dims,
    data: Vec<[f64; 3]>,
}

impl DisplacementField {
    pub fn zeros(dims: Dims) -> Self {
        DisplacementField { dims, data: vec![[0.0; 3]; dims.len()] }
    }

    pub fn uniform(dims: Dims, v: [f64; 3]) -> Self {
        Self::from_fn(dims, |_| v)
    }

    /// Validates finiteness; z components of 2D fields are forced to zero.
    pub fn new(dims: Dims, mut data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(RegError::Invalid(format!(
                "{} vectors for a {dims} grid",
                data.len()
            )));
        }
        if data.iter().flatten().any(|c| !c.is_finite()) {
            return Err(RegError::Invalid("non-finite displacement component".into()));
        }
        if dims.ndim() == 2 {
            data.iter_mut().for_each(|v| v[2] = 0.0);
        }
        Ok(DisplacementField { dims, data })
    }

    pub fn from_fn(dims: Dims, f: impl Fn([usize; 3]) -> [f64; 3] + Sync) -> Self {
        let planar = dims.ndim() == 2;
        let data = (0..dims.len())
            .into_par_iter()
            .map(|i| {
                let mut v = f(dims.point(i));
                if planar {
                    v[2] = 0.0;
                }
                v
            })
            .collect();
        DisplacementField { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        self.data[idx]
    }

    #[inline]
    pub fn get(&self, p: [usize; 3]) -> [f64; 3] {
        self.data[self.dims.index(p)]
    }

    /// Vector at `idx` restricted to the active axes.
    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.data[idx][..self.dims.ndim()]
    }

    /// Component-wise multilinear interpolation with edge clamping.
    pub fn sample(&self, pos: [f64; 3]) -> [f64; 3] {
        interpolate(&self.dims, pos, |i| self.data[i], |a, b, t| {
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
        })
    }

    pub fn mean_magnitude(&self) -> f64 {
        self.data.iter().map(|v| norm(*v)).sum::<f64>() / self.data.len() as f64
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Nested-lerp interpolation. Exact at grid nodes and on constant data.
fn interpolate<T: Copy>(
    dims: &Dims,
    pos: [f64; 3],
    fetch: impl Fn(usize) -> T,
    lerp: impl Fn(T, T, f64) -> T,
) -> T {
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut t = [0.0f64; 3];
    for a in 0..dims.ndim() {
        let n = dims.extent(a);
        let max = (n - 1) as f64;
        let c = if pos[a].is_nan() { 0.0 } else { pos[a].clamp(0.0, max) };
        let f = c.floor();
        lo[a] = f as usize;
        hi[a] = (lo[a] + 1).min(n - 1);
        t[a] = c - f;
    }
    let at = |x: usize, y: usize, z: usize| fetch(dims.index([x, y, z]));
    let plane = |z: usize| {
        let r0 = lerp(at(lo[0], lo[1], z), at(hi[0], lo[1], z), t[0]);
        let r1 = lerp(at(lo[0], hi[1], z), at(hi[0], hi[1], z), t[0]);
        lerp(r0, r1, t[1])
    };
    if dims.ndim() == 3 {
        lerp(plane(lo[2]), plane(hi[2]), t[2])
    } else {
        plane(0)
    }
}

/// Normalized 1D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Separable Gaussian smoothing with replicate-edge boundaries.
///
/// Each output is `v0 + sum_i w_i (v_i - v0)`, so constant neighbourhoods are
/// reproduced bit-exactly.
pub fn gaussian_blur(dims: Dims, data: &[f64], sigma: f64, radius: usize) -> Vec<f64> {
    let taps = gaussian_taps(sigma, radius);
    let mut cur = data.to_vec();
    for axis in 0..dims.ndim() {
        cur = blur_axis(dims, &cur, &taps, axis);
    }
    cur
}

fn blur_axis(dims: Dims, data: &[f64], taps: &[f64], axis: usize) -> Vec<f64> {
    let r = (taps.len() / 2) as i64;
    (0..dims.len())
        .into_par_iter()
        .map(|i| {
            let p = dims.point(i);
            let center = data[i];
            let mut acc = 0.0;
            for (k, w) in taps.iter().enumerate() {
                let mut q = [p[0] as i64, p[1] as i64, p[2] as i64];
                q[axis] += k as i64 - r;
                acc += w * (data[dims.clamped_index(q)] - center);
            }
            center + acc
        })
        .collect()
}

/// Smoothing scale applied before each factor-2 decimation.
pub const PYRAMID_SIGMA: f64 = 0.8;

/// One resolution of the image pyramid; level 0 is the coarsest.
#[derive(Clone, Debug)]
pub struct PyramidLevel {
    pub level_index: usize,
    pub image: ScalarImage,
    /// Full-resolution pixels per pixel of this level.
    pub scale_factor: usize,
}

/// Builds a Gaussian pyramid with `levels` entries, coarsest first.
pub fn build_pyramid(image: &ScalarImage, levels: usize) -> Result<Vec<PyramidLevel>> {
    if levels == 0 {
        return Err(RegError::Invalid("levels must be at least 1".into()));
    }
    let dims = image.dims();
    if levels > 1 {
        let div = 1usize << (levels - 1);
        for &e in dims.extents() {
            if e.div_ceil(div) < 4 {
                return Err(RegError::LevelsExceedResolution { levels, extent: e });
            }
        }
    }
    let mut chain = vec![image.clone()];
    for _ in 1..levels {
        let next = decimate(chain.last().unwrap());
        chain.push(next);
    }
    chain.reverse();
    Ok(chain
        .into_iter()
        .enumerate()
        .map(|(i, image)| PyramidLevel {
            level_index: i,
            image,
            scale_factor: 1 << (levels - 1 - i),
        })
        .collect())
}

fn decimate(image: &ScalarImage) -> ScalarImage {
    let dims = image.dims();
    let radius = (3.0 * PYRAMID_SIGMA).ceil() as usize;
    let smooth = gaussian_blur(dims, image.data(), PYRAMID_SIGMA, radius);
    let half = |a: usize| dims.extent(a).div_ceil(2);
    let coarse = if dims.ndim() == 3 {
        Dims::new3(half(0), half(1), half(2))
    } else {
        Dims::new2(half(0), half(1))
    };
    let data = (0..coarse.len())
        .map(|i| {
            let p = coarse.point(i);
            let z = if dims.ndim() == 3 { 2 * p[2] } else { 0 };
            smooth[dims.index([2 * p[0], 2 * p[1], z])]
        })
        .collect();
    ScalarImage::from_vec_clamped(coarse, data)
}

fn point_f64(p: [usize; 3]) -> [f64; 3] {
    [p[0] as f64, p[1] as f64, p[2] as f64]
}

#[inline]
fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Backward warp: `out(x) = image(x + field(x))`.
pub fn warp(image: &ScalarImage, field: &DisplacementField) -> Result<ScalarImage> {
    ensure_same_dims(&image.dims(), &field.dims())?;
    let dims = image.dims();
    let data = (0..dims.len())
        .into_par_iter()
        .map(|i| image.sample(add(point_f64(dims.point(i)), field.at(i))))
        .collect();
    Ok(ScalarImage::from_vec_clamped(dims, data))
}

/// Composes two backward fields: `out(x) = current(x) + initial(x + current(x))`.
///
/// Warping by the result equals warping by `initial` and then by `current`.
pub fn compose(initial: &DisplacementField, current: &DisplacementField) -> Result<DisplacementField> {
    ensure_same_dims(&initial.dims(), &current.dims())?;
    let dims = current.dims();
    let data = (0..dims.len())
        .into_par_iter()
        .map(|i| {
            let c = current.at(i);
            add(c, initial.sample(add(point_f64(dims.point(i)), c)))
        })
        .collect();
    Ok(DisplacementField { dims, data })
}

/// Coordinate ratio between a fine and a coarse axis. Pyramid neighbours
/// (`fine = 2c` or `2c - 1`) are related by exactly 2.
fn axis_ratio(fine: usize, coarse: usize) -> f64 {
    if fine == 2 * coarse || fine + 1 == 2 * coarse {
        2.0
    } else {
        fine as f64 / coarse as f64
    }
}

/// Resamples a coarse field onto `target` and rescales vectors into target pixels.
pub fn upsample_field(field: &DisplacementField, target: Dims) -> Result<DisplacementField> {
    let src = field.dims();
    if src.ndim() != target.ndim() {
        return Err(RegError::DimMismatch { expected: target, found: src });
    }
    let mut ratio = [1.0; 3];
    for (a, r) in ratio.iter_mut().enumerate().take(src.ndim()) {
        *r = axis_ratio(target.extent(a), src.extent(a));
    }
    let data = (0..target.len())
        .into_par_iter()
        .map(|i| {
            let p = point_f64(target.point(i));
            let v = field.sample([p[0] / ratio[0], p[1] / ratio[1], p[2] / ratio[2]]);
            [v[0] * ratio[0], v[1] * ratio[1], v[2] * ratio[2]]
        })
        .collect();
    Ok(DisplacementField { dims: target, data })
}
