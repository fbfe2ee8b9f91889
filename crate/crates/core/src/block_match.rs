//! Exhaustive integer block matching under a histogram mutual-information
//! similarity. Produces the sparse, irregular displacement samples that the
//! kernel regression densifies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RegError, Result};
use crate::grid::{ensure_same_dims, Dims, ScalarImage};
use crate::saliency::JointSaliencyMap;

/// Block matching configuration, in level-local pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockMatchParams {
    /// Lattice step between matched block centres.
    pub spacing: usize,
    /// Half width of the matched block (5 gives 11×11).
    pub block_radius: usize,
    /// Maximum displacement per axis.
    pub search_radius: usize,
    /// Histogram bins per image for the MI estimate.
    pub bins: usize,
}

impl Default for BlockMatchParams {
    fn default() -> Self {
        BlockMatchParams { spacing: 4, block_radius: 5, search_radius: 5, bins: 16 }
    }
}

impl BlockMatchParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str| Err(RegError::Invalid(format!("block matching `{name}` must be at least 1")));
        if self.spacing == 0 {
            return bad("spacing");
        }
        if self.block_radius == 0 {
            return bad("block_radius");
        }
        if self.search_radius == 0 {
            return bad("search_radius");
        }
        if self.bins < 2 {
            return Err(RegError::Invalid("MI needs at least 2 bins".into()));
        }
        Ok(())
    }
}

/// One matched block: lattice position, integer displacement and certainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSample {
    pub position: [usize; 3],
    pub displacement: [f64; 3],
    pub certainty: f64,
}

/// Sparse displacement samples on one pyramid level.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDisplacements {
    pub level_dims: Dims,
    pub samples: Vec<SparseSample>,
    /// Lattice step between neighbouring samples, pixels (1 for arbitrary sets).
    pub spacing: usize,
}

impl SparseDisplacements {
    /// Validates that positions are unique and in range and certainties lie in `[0, 1]`.
    pub fn new(level_dims: Dims, samples: Vec<SparseSample>) -> Result<Self> {
        let mut seen = vec![false; level_dims.len()];
        for s in &samples {
            let p = s.position;
            if !level_dims.contains([p[0] as i64, p[1] as i64, p[2] as i64]) {
                return Err(RegError::Invalid(format!("sample {p:?} outside {level_dims}")));
            }
            let idx = level_dims.index(p);
            if std::mem::replace(&mut seen[idx], true) {
                return Err(RegError::Invalid(format!("duplicate sample at {p:?}")));
            }
            if !(0.0..=1.0).contains(&s.certainty) {
                return Err(RegError::Invalid(format!("certainty {} outside [0, 1]", s.certainty)));
            }
            if s.displacement.iter().any(|c| !c.is_finite()) {
                return Err(RegError::Invalid("non-finite sample displacement".into()));
            }
        }
        Ok(SparseDisplacements { level_dims, samples, spacing: 1 })
    }

    /// Declares the samples to lie on a lattice with step `spacing`.
    pub fn with_spacing(mut self, spacing: usize) -> Result<Self> {
        if spacing == 0 {
            return Err(RegError::Invalid("sample spacing must be at least 1".into()));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Copy with every certainty replaced by `c`.
    pub fn with_uniform_certainty(&self, c: f64) -> Self {
        let samples = self.samples.iter().map(|s| SparseSample { certainty: c, ..*s }).collect();
        SparseDisplacements { level_dims: self.level_dims, samples, spacing: self.spacing }
    }
}

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    ((v * bins as f64) as usize).min(bins - 1)
}

/// `c ln c` for every count up to `n`.
fn xlnx_table(n: usize) -> Vec<f64> {
    (0..=n).map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).ln() }).collect()
}

/// Histogram MI from pre-binned samples; `scratch` must hold `bins²` zeros and
/// is returned zeroed.
fn mi_binned(a: &[u16], b: &[u16], bins: usize, xlnx: &[f64], scratch: &mut [u32], sum_a: f64) -> f64 {
    let n = a.len();
    let (joint, marg) = scratch.split_at_mut(bins * bins);
    for (&x, &y) in a.iter().zip(b) {
        joint[x as usize * bins + y as usize] += 1;
        marg[y as usize] += 1;
    }
    let mut sum_joint = 0.0;
    let mut sum_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let j = &mut joint[x as usize * bins + y as usize];
        if *j > 0 {
            sum_joint += xlnx[*j as usize];
            *j = 0;
        }
        let m = &mut marg[y as usize];
        if *m > 0 {
            sum_b += xlnx[*m as usize];
            *m = 0;
        }
    }
    // H = ln n - Σ c ln c / n
    let nf = n as f64;
    (nf.ln() - (sum_a + sum_b - sum_joint) / nf).max(0.0)
}

fn marginal_xlnx(a: &[u16], bins: usize, xlnx: &[f64]) -> f64 {
    let mut counts = vec![0usize; bins];
    for &x in a {
        counts[x as usize] += 1;
    }
    counts.iter().map(|&c| xlnx[c]).sum()
}

/// Histogram mutual information `H(a) + H(b) − H(a, b)` (natural log) with
/// `bins` equal-width bins on `[0, 1]`.
pub fn mutual_information(block_a: &[f64], block_b: &[f64], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(RegError::Invalid("MI needs at least 2 bins".into()));
    }
    if block_a.len() != block_b.len() {
        return Err(RegError::Invalid(format!(
            "blocks differ in size: {} vs {}",
            block_a.len(),
            block_b.len()
        )));
    }
    if block_a.len() < bins {
        return Err(RegError::TooFewSamples { needed: bins, got: block_a.len() });
    }
    let a: Vec<u16> = block_a.iter().map(|&v| bin_of(v, bins) as u16).collect();
    let b: Vec<u16> = block_b.iter().map(|&v| bin_of(v, bins) as u16).collect();
    let xlnx = xlnx_table(a.len());
    let mut scratch = vec![0u32; bins * bins + bins];
    let sum_a = marginal_xlnx(&a, bins, &xlnx);
    Ok(mi_binned(&a, &b, bins, &xlnx, &mut scratch, sum_a))
}

/// Lattice positions `spacing/2, spacing/2 + spacing, …` on every active axis.
pub fn lattice(dims: Dims, spacing: usize) -> Vec<[usize; 3]> {
    let start = spacing / 2;
    let axis = |a: usize| -> Vec<usize> {
        if a >= dims.ndim() {
            return vec![0];
        }
        let n = dims.extent(a);
        let s = start.min(n - 1);
        (s..n).step_by(spacing).collect()
    };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &z in &zs {
        for &y in &ys {
            for &x in &xs {
                out.push([x, y, z]);
            }
        }
    }
    out
}

/// Integer search displacements ordered by `|d|²`, then lexicographically.
fn candidates(dims: Dims, radius: usize) -> Vec<[i64; 3]> {
    let mut c = dims.offsets(radius);
    c.sort_by_key(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2], d[0], d[1], d[2]));
    c
}

/// Matches the reference block at every lattice site against the warped
/// moving image, maximizing MI over all integer displacements in the search
/// box. Certainty is the joint saliency at the site.
pub fn match_blocks(
    reference: &ScalarImage,
    moving_warped: &ScalarImage,
    jsm: &JointSaliencyMap,
    params: &BlockMatchParams,
) -> Result<SparseDisplacements> {
    params.validate()?;
    let dims = reference.dims();
    ensure_same_dims(&dims, &moving_warped.dims())?;
    ensure_same_dims(&dims, &jsm.dims())?;
    let bins = params.bins;
    let block = dims.offsets(params.block_radius);
    if block.len() < bins {
        return Err(RegError::TooFewSamples { needed: bins, got: block.len() });
    }
    let ref_bins: Vec<u16> = reference.data().iter().map(|&v| bin_of(v, bins) as u16).collect();
    let mov_bins: Vec<u16> = moving_warped.data().iter().map(|&v| bin_of(v, bins) as u16).collect();
    let xlnx = xlnx_table(block.len());
    let search = candidates(dims, params.search_radius);

    let samples = lattice(dims, params.spacing)
        .into_par_iter()
        .map(|site| {
            let s = [site[0] as i64, site[1] as i64, site[2] as i64];
            let a: Vec<u16> = block
                .iter()
                .map(|o| ref_bins[dims.clamped_index([s[0] + o[0], s[1] + o[1], s[2] + o[2]])])
                .collect();
            let sum_a = marginal_xlnx(&a, bins, &xlnx);
            let mut scratch = vec![0u32; bins * bins + bins];
            let mut b = vec![0u16; block.len()];
            let mut best = (f64::NEG_INFINITY, [0i64; 3]);
            for d in &search {
                for (slot, o) in b.iter_mut().zip(&block) {
                    *slot = mov_bins[dims.clamped_index([s[0] + d[0] + o[0], s[1] + d[1] + o[1], s[2] + d[2] + o[2]])];
                }
                let mi = mi_binned(&a, &b, bins, &xlnx, &mut scratch, sum_a);
                if mi > best.0 + 1e-12 {
                    best = (mi, *d);
                }
            }
            let d = best.1;
            SparseSample {
                position: site,
                displacement: [d[0] as f64, d[1] as f64, d[2] as f64],
                certainty: jsm.at(dims.index(site)),
            }
        })
        .collect();
    Ok(SparseDisplacements { level_dims: dims, samples, spacing: params.spacing })
}
