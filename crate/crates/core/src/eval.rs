//! Landmark-based accuracy evaluation and difference images.

use serde::{Deserialize, Serialize};

use crate::error::{RegError, Result};
use crate::grid::{ensure_same_dims, DisplacementField, Dims, ScalarImage};

/// A corresponding point pair in full-resolution pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkPair {
    pub reference: [f64; 3],
    pub moving: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LandmarkSet {
    pub pairs: Vec<LandmarkPair>,
}

impl LandmarkSet {
    pub fn new(pairs: Vec<LandmarkPair>) -> Self {
        LandmarkSet { pairs }
    }

    /// Identity pairs on a regular lattice with `margin` pixels kept clear of
    /// the borders; a perfect registration of an image to itself scores zero.
    pub fn identity_grid(dims: Dims, spacing: usize, margin: usize) -> Self {
        let spacing = spacing.max(1);
        let axis = |a: usize| -> Vec<usize> {
            if a >= dims.ndim() {
                return vec![0];
            }
            let n = dims.extent(a);
            if n <= 2 * margin {
                return vec![n / 2];
            }
            (margin..n - margin).step_by(spacing).collect()
        };
        let (xs, ys, zs) = (axis(0), axis(1), axis(2));
        let mut pairs = Vec::new();
        for &z in &zs {
            for &y in &ys {
                for &x in &xs {
                    let p = [x as f64, y as f64, z as f64];
                    pairs.push(LandmarkPair { reference: p, moving: p });
                }
            }
        }
        LandmarkSet { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkReport {
    /// Mean registration error, pixels.
    pub mre: f64,
    /// Population standard deviation of the errors, pixels.
    pub sd: f64,
    pub errors: Vec<f64>,
}

/// Mean and population standard deviation.
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn inside(dims: &Dims, p: [f64; 3]) -> bool {
    (0..3).all(|a| {
        let max = if a < dims.ndim() { (dims.extent(a) - 1) as f64 } else { 0.0 };
        p[a] >= 0.0 && p[a] <= max
    })
}

/// Distance between each moving landmark and the position the field assigns
/// to its reference partner, `|r + field(r) − m|`.
pub fn landmark_error(landmarks: &LandmarkSet, field: &DisplacementField) -> Result<LandmarkReport> {
    if landmarks.is_empty() {
        return Err(RegError::EmptyLandmarks);
    }
    let dims = field.dims();
    let mut errors = Vec::with_capacity(landmarks.len());
    for pair in &landmarks.pairs {
        if !inside(&dims, pair.reference) || !inside(&dims, pair.moving) {
            return Err(RegError::Invalid(format!("landmark pair {pair:?} outside the {dims} grid")));
        }
        let u = field.sample(pair.reference);
        let e: f64 = (0..3).map(|a| (pair.reference[a] + u[a] - pair.moving[a]).powi(2)).sum();
        errors.push(e.sqrt());
    }
    let (mre, sd) = mean_and_sd(&errors);
    Ok(LandmarkReport { mre, sd, errors })
}

/// Endpoint-error summary of a field against a known field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointStats {
    pub mean: f64,
    pub max: f64,
    pub count: usize,
}

/// `|field − truth|` over the grid points selected by `keep`.
pub fn endpoint_error(
    field: &DisplacementField,
    truth: &DisplacementField,
    keep: impl Fn([usize; 3]) -> bool,
) -> Result<EndpointStats> {
    let dims = field.dims();
    ensure_same_dims(&dims, &truth.dims())?;
    let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0usize);
    for i in 0..dims.len() {
        if !keep(dims.point(i)) {
            continue;
        }
        let (a, b) = (field.at(i), truth.at(i));
        let e = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        sum += e;
        max = max.max(e);
        count += 1;
    }
    if count == 0 {
        return Err(RegError::Invalid("no grid points selected".into()));
    }
    Ok(EndpointStats { mean: sum / count as f64, max, count })
}

/// Selects points at least `margin` pixels from every border.
pub fn interior(dims: Dims, margin: usize) -> impl Fn([usize; 3]) -> bool {
    move |p| (0..dims.ndim()).all(|a| p[a] >= margin && p[a] + margin < dims.extent(a))
}

/// Per-pixel absolute intensity difference.
pub fn difference_image(reference: &ScalarImage, warped: &ScalarImage) -> Result<ScalarImage> {
    ensure_same_dims(&reference.dims(), &warped.dims())?;
    let data = reference.data().iter().zip(warped.data()).map(|(a, b)| (a - b).abs()).collect();
    ScalarImage::new(reference.dims(), data)
}
