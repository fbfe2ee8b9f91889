//! Structure saliency from the contrast between neighbouring local structure
//! tensors, and the joint saliency map that couples the reference image with
//! the currently warped moving image.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{ensure_same_dims, Dims};
use crate::tensor::{tensor_distance_d, SymTensorField};

/// Scale constant `A` of the joint saliency quotient.
pub const JSM_SCALE: f64 = 10.0;

/// Per-point saliency in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    dims: Dims,
    values: Vec<f64>,
}

/// Per-point joint saliency in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSaliencyMap {
    dims: Dims,
    values: Vec<f64>,
}

macro_rules! map_accessors {
    ($t:ty) => {
        impl $t {
            /// Wraps precomputed values; they are clamped into `[0, 1]`.
            pub fn from_values(dims: Dims, mut values: Vec<f64>) -> crate::error::Result<Self> {
                if values.len() != dims.len() {
                    return Err(crate::error::RegError::Invalid(format!(
                        "{} values for a {dims} grid",
                        values.len()
                    )));
                }
                values.iter_mut().for_each(|v| *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
                Ok(Self { dims, values })
            }

            #[inline]
            pub fn dims(&self) -> Dims {
                self.dims
            }

            #[inline]
            pub fn values(&self) -> &[f64] {
                &self.values
            }

            #[inline]
            pub fn at(&self, idx: usize) -> f64 {
                self.values[idx]
            }

            pub fn mean(&self) -> f64 {
                self.values.iter().sum::<f64>() / self.values.len() as f64
            }
        }
    };
}

map_accessors!(SaliencyMap);
map_accessors!(JointSaliencyMap);

impl JointSaliencyMap {
    /// Map with every value equal to one; used to disable certainty weighting.
    pub fn uniform(dims: Dims) -> Self {
        JointSaliencyMap { dims, values: vec![1.0; dims.len()] }
    }
}

/// Divides by the maximum; an all-zero map stays zero.
fn normalize_by_max(values: &mut [f64]) {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        values.iter_mut().for_each(|v| *v = (*v / max).min(1.0));
    }
}

/// Mean anisotropic tensor distance between each point and its neighbours
/// within `radius` (centre excluded, edges replicated), min-max normalized
/// over the map.
pub fn saliency(lst_field: &SymTensorField, radius: usize) -> SaliencyMap {
    let dims = lst_field.dims();
    let radius = radius.max(1);
    let offsets: Vec<[i64; 3]> = dims.offsets(radius).into_iter().filter(|o| *o != [0, 0, 0]).collect();
    let count = offsets.len() as f64;
    let mut raw: Vec<f64> = (0..dims.len())
        .into_par_iter()
        .map(|i| {
            let p = dims.point(i);
            let centre = lst_field.at(i);
            let sum: f64 = offsets
                .iter()
                .map(|o| {
                    let q = [p[0] as i64 + o[0], p[1] as i64 + o[1], p[2] as i64 + o[2]];
                    tensor_distance_d(lst_field.at(dims.clamped_index(q)), centre)
                })
                .sum();
            sum / count
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        raw.iter_mut().for_each(|v| *v = ((*v - lo) / (hi - lo)).clamp(0.0, 1.0));
    } else {
        raw.iter_mut().for_each(|v| *v = 0.0);
    }
    SaliencyMap { dims, values: raw }
}

/// Joint saliency of the reference and the warped moving image:
/// `min(S_R, S_M) · A·B / (B + d_D(LST_R, LST_M))` with `B` half the largest
/// tensor distance, then divided by the map maximum.
pub fn jsm(
    ref_saliency: &SaliencyMap,
    mov_saliency: &SaliencyMap,
    ref_lst: &SymTensorField,
    mov_lst: &SymTensorField,
) -> Result<JointSaliencyMap> {
    let dims = ref_saliency.dims();
    ensure_same_dims(&dims, &mov_saliency.dims())?;
    ensure_same_dims(&dims, &ref_lst.dims())?;
    ensure_same_dims(&dims, &mov_lst.dims())?;

    let dist: Vec<f64> = (0..dims.len())
        .into_par_iter()
        .map(|i| tensor_distance_d(ref_lst.at(i), mov_lst.at(i)))
        .collect();
    let b = 0.5 * dist.iter().copied().fold(0.0, f64::max);
    let mut values: Vec<f64> = (0..dims.len())
        .into_par_iter()
        .map(|i| {
            let factor = if b > 0.0 { JSM_SCALE * b / (b + dist[i]) } else { JSM_SCALE };
            ref_saliency.values[i].min(mov_saliency.values[i]) * factor
        })
        .collect();
    normalize_by_max(&mut values);
    Ok(JointSaliencyMap { dims, values })
}
