//! Structure-adaptive anisotropic Gaussian kernels.
//!
//! A kernel is centred on a grid point and oriented by the eigenvectors of the
//! reference image's local structure tensor there: it stretches along the
//! structure (the `v` axis in 2D, `w` in 3D) and contracts across it. The
//! scales enter the exponent as `d²/(2σ)`, i.e. they act as variances.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{RegError, Result};
use crate::tensor::{LocalStructure, SymTensor};

/// Smallest admissible 3D kernel scale.
pub const SCALE_FLOOR: f64 = 1e-3;
/// Largest window radius a kernel may request.
pub const MAX_SUPPORT_RADIUS: usize = 15;

const AXES: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// How kernels react to local structure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    /// Oriented and scaled by the reference LST.
    #[default]
    Adaptive,
    /// Anisotropy forced to zero: every kernel is an isotropic Gaussian of scale `σ_c`.
    Isotropic,
}

/// Parameters shared by every kernel of a regression pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelParams {
    /// Eccentricity control (2D).
    pub alpha: f64,
    /// Local scale.
    pub sigma_c: f64,
    pub shape: KernelShape,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams { alpha: 0.5, sigma_c: 1.5, shape: KernelShape::Adaptive }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        positive("alpha", self.alpha)?;
        positive("sigma_c", self.sigma_c)
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(RegError::NonPositiveParam { name, value })
    }
}

/// A fully specified kernel centred on a grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub center: [f64; 3],
    pub ndim: usize,
    /// Orthonormal axes `u, v (, w)`.
    pub axes: [[f64; 3]; 3],
    /// Per-axis scales `σu, σv (, σw)`.
    pub scales: [f64; 3],
    pub support_radius: usize,
}

impl KernelSpec {
    fn with_support(mut self) -> Self {
        self.support_radius = support_radius(&self);
        self
    }

    pub fn isotropic(ndim: usize, sigma_c: f64, center: [f64; 3]) -> Result<Self> {
        positive("sigma_c", sigma_c)?;
        let s = if ndim == 3 { [sigma_c; 3] } else { [sigma_c, sigma_c, 1.0] };
        Ok(KernelSpec { center, ndim, axes: AXES, scales: s, support_radius: 0 }.with_support())
    }

    /// 2D kernel from an LST via its anisotropy.
    pub fn adaptive_2d(lst: &SymTensor, alpha: f64, sigma_c: f64, center: [f64; 3]) -> Result<Self> {
        let (su, sv) = scales_2d(anisotropy_2d(lst), alpha, sigma_c)?;
        Ok(KernelSpec {
            center,
            ndim: 2,
            axes: [lst.eigenvector(0), lst.eigenvector(1), [0.0, 0.0, 1.0]],
            scales: [su, sv, 1.0],
            support_radius: 0,
        }
        .with_support())
    }

    /// 3D kernel from an LST and the squared gradient magnitude at the centre.
    pub fn adaptive_3d(lst: &SymTensor, grad_sq: f64, sigma_c: f64, center: [f64; 3]) -> Result<Self> {
        let scales = scales_3d(lst, grad_sq, sigma_c)?;
        Ok(KernelSpec {
            center,
            ndim: 3,
            axes: [lst.eigenvector(0), lst.eigenvector(1), lst.eigenvector(2)],
            scales,
            support_radius: 0,
        }
        .with_support())
    }

    /// Kernel for grid point `idx` of the reference structure.
    pub fn at_point(structure: &LocalStructure, idx: usize, params: &KernelParams) -> Result<Self> {
        let dims = structure.dims();
        let p = dims.point(idx);
        let center = [p[0] as f64, p[1] as f64, p[2] as f64];
        match (params.shape, dims.ndim()) {
            (KernelShape::Isotropic, nd) => Self::isotropic(nd, params.sigma_c, center),
            (KernelShape::Adaptive, 2) => Self::adaptive_2d(structure.lst.at(idx), params.alpha, params.sigma_c, center),
            (KernelShape::Adaptive, _) => {
                Self::adaptive_3d(structure.lst.at(idx), structure.grad_sq[idx], params.sigma_c, center)
            }
        }
    }

    /// Kernel weight at `query`.
    pub fn weight(&self, query: [f64; 3]) -> f64 {
        let d = [query[0] - self.center[0], query[1] - self.center[1], query[2] - self.center[2]];
        let mut exponent = 0.0;
        let mut scale_product = 1.0;
        for k in 0..self.ndim {
            let a = self.axes[k];
            let proj = d[0] * a[0] + d[1] * a[1] + d[2] * a[2];
            exponent += proj * proj / (2.0 * self.scales[k]);
            scale_product *= self.scales[k];
        }
        let norm = if self.ndim == 3 { (8.0 * PI.powi(3)).sqrt() } else { 2.0 * PI };
        (-exponent).exp() / (norm * scale_product)
    }

    pub fn max_scale(&self) -> f64 {
        self.scales[..self.ndim].iter().copied().fold(0.0, f64::max)
    }
}

/// `(λu − λv)/(λu + λv)`, zero in homogeneous regions.
pub fn anisotropy_2d(lst: &SymTensor) -> f64 {
    let ev = lst.eigenvalues();
    let sum = ev[0] + ev[1];
    if sum < 1e-12 {
        0.0
    } else {
        ((ev[0] - ev[1]) / sum).clamp(0.0, 1.0)
    }
}

/// `(σu, σv) = (α/(α+A) σ_c, (α+A)/α σ_c)`.
pub fn scales_2d(anisotropy: f64, alpha: f64, sigma_c: f64) -> Result<(f64, f64)> {
    positive("alpha", alpha)?;
    positive("sigma_c", sigma_c)?;
    Ok((alpha / (alpha + anisotropy) * sigma_c, (alpha + anisotropy) / alpha * sigma_c))
}

/// Weight of the 2D adaptive kernel built from `lst` at `center`, evaluated at `query`.
pub fn kernel_2d(lst: &SymTensor, alpha: f64, sigma_c: f64, center: [f64; 3], query: [f64; 3]) -> Result<f64> {
    Ok(KernelSpec::adaptive_2d(lst, alpha, sigma_c, center)?.weight(query))
}

/// `(a_vw, a_uw)`, both zero when the eigenvalue sum vanishes.
pub fn anisotropy_3d(lst: &SymTensor) -> (f64, f64) {
    let ev = lst.eigenvalues();
    let sum = ev[0] + ev[1] + ev[2];
    if sum < 1e-12 {
        (0.0, 0.0)
    } else {
        ((ev[1] - ev[2]) / sum, (ev[0] - ev[2]) / sum)
    }
}

/// `σu = σ_c(1−a_vw−a_uw)/(1+C)`, `σv = σ_c(1−2a_vw)/(1+C)`, `σw = σ_c/(1+C)` with
/// corner strength `C = (1−a_vw−a_uw)|∇I|²`; every scale floored at [`SCALE_FLOOR`].
pub fn scales_3d(lst: &SymTensor, grad_sq: f64, sigma_c: f64) -> Result<[f64; 3]> {
    positive("sigma_c", sigma_c)?;
    let (a_vw, a_uw) = anisotropy_3d(lst);
    let c = (1.0 - a_vw - a_uw) * grad_sq.max(0.0);
    let denom = 1.0 + c;
    let floor = |s: f64| if s.is_finite() { s.max(SCALE_FLOOR) } else { SCALE_FLOOR };
    Ok([
        floor(sigma_c * (1.0 - a_vw - a_uw) / denom),
        floor(sigma_c * (1.0 - 2.0 * a_vw) / denom),
        floor(sigma_c / denom),
    ])
}

/// Weight of the 3D adaptive kernel built from `lst` at `center`, evaluated at `query`.
pub fn kernel_3d(
    lst: &SymTensor,
    grad_mag_sq: f64,
    sigma_c: f64,
    center: [f64; 3],
    query: [f64; 3],
) -> Result<f64> {
    Ok(KernelSpec::adaptive_3d(lst, grad_mag_sq, sigma_c, center)?.weight(query))
}

/// `ceil(3·sqrt(max scale))`, capped at [`MAX_SUPPORT_RADIUS`].
pub fn support_radius(spec: &KernelSpec) -> usize {
    let r = (3.0 * spec.max_scale().sqrt()).ceil();
    if r.is_finite() {
        (r as usize).clamp(1, MAX_SUPPORT_RADIUS)
    } else {
        MAX_SUPPORT_RADIUS
    }
}
