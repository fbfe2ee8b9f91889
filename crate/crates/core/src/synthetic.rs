//! Reproducible synthetic images and deformations with known ground truth,
//! used by the examples, tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{DisplacementField, Dims, ScalarImage};

/// Random sum of Gaussian blobs, squashed into `(0, 1)` by `½ + ½ tanh`.
/// Evaluable at any continuous position.
#[derive(Clone, Debug)]
pub struct BlobTexture {
    ndim: usize,
    blobs: Vec<([f64; 3], f64, f64)>,
}

impl BlobTexture {
    /// About one blob per 40 pixels (2D) or 300 voxels (3D), widths 1.5–4.5 px.
    pub fn random(dims: Dims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ext = dims.extents3();
        let density = if dims.ndim() == 3 { 300.0 } else { 40.0 };
        let count = ((dims.len() as f64 / density).ceil() as usize).max(4);
        let blobs = (0..count)
            .map(|_| {
                let mut c = [0.0; 3];
                for a in 0..dims.ndim() {
                    c[a] = rng.gen_range(-4.0..ext[a] as f64 + 4.0);
                }
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                (c, rng.gen_range(1.5..4.5), sign * rng.gen_range(0.6..1.6))
            })
            .collect();
        BlobTexture { ndim: dims.ndim(), blobs }
    }

    pub fn eval(&self, p: [f64; 3]) -> f64 {
        let mut sum = 0.0;
        for (c, s, amp) in &self.blobs {
            let mut r2 = 0.0;
            for a in 0..self.ndim {
                r2 += (p[a] - c[a]).powi(2);
            }
            if r2 < 25.0 * s * s {
                sum += amp * (-r2 / (2.0 * s * s)).exp();
            }
        }
        0.5 + 0.5 * sum.tanh()
    }

    pub fn render(&self, dims: Dims) -> ScalarImage {
        ScalarImage::from_fn(dims, |p| self.eval([p[0] as f64, p[1] as f64, p[2] as f64]))
    }

    /// Renders the texture deformed so that `moving(x + u(x)) = texture(x)`.
    pub fn render_deformed(&self, dims: Dims, u: &(impl Fn([f64; 3]) -> [f64; 3] + Sync)) -> ScalarImage {
        ScalarImage::from_fn(dims, |p| {
            let y = [p[0] as f64, p[1] as f64, p[2] as f64];
            self.eval(invert_point(y, u))
        })
    }
}

/// Solves `x + u(x) = y` by fixed-point iteration (contractive for `|∇u| < 1`).
pub fn invert_point(y: [f64; 3], u: &impl Fn([f64; 3]) -> [f64; 3]) -> [f64; 3] {
    let mut x = y;
    for _ in 0..60 {
        let d = u(x);
        let next = [y[0] - d[0], y[1] - d[1], y[2] - d[2]];
        let delta = (0..3).map(|a| (next[a] - x[a]).abs()).fold(0.0, f64::max);
        x = next;
        if delta < 1e-12 {
            break;
        }
    }
    x
}

/// Rendered random blob texture.
pub fn texture(dims: Dims, seed: u64) -> ScalarImage {
    BlobTexture::random(dims, seed).render(dims)
}

/// Smooth Gaussian-bump displacement `amplitude · exp(−|x − c|² / 2s²)`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianBump {
    pub center: [f64; 3],
    pub amplitude: [f64; 3],
    pub sigma: f64,
}

impl GaussianBump {
    pub fn eval(&self, p: [f64; 3]) -> [f64; 3] {
        let r2: f64 = (0..3).map(|a| (p[a] - self.center[a]).powi(2)).sum();
        let g = (-r2 / (2.0 * self.sigma * self.sigma)).exp();
        [self.amplitude[0] * g, self.amplitude[1] * g, self.amplitude[2] * g]
    }

    pub fn field(&self, dims: Dims) -> DisplacementField {
        DisplacementField::from_fn(dims, |p| self.eval([p[0] as f64, p[1] as f64, p[2] as f64]))
    }
}

/// Textured reference, its bump-deformed copy and the true backward field.
#[derive(Clone, Debug)]
pub struct DeformedPair {
    pub reference: ScalarImage,
    pub moving: ScalarImage,
    pub truth: DisplacementField,
    pub bump: GaussianBump,
}

impl DeformedPair {
    /// Centred bump of peak magnitude about 8 px and width `σ = 9/64` of the image width.
    pub fn bump(dims: Dims, seed: u64) -> Self {
        let ext = dims.extents3();
        let mut center = [0.0; 3];
        for a in 0..dims.ndim() {
            center[a] = ext[a] as f64 / 2.0;
        }
        let amplitude = if dims.ndim() == 3 { [4.8, -4.0, 4.8] } else { [6.4, -4.8, 0.0] };
        let bump = GaussianBump { center, amplitude, sigma: ext[0] as f64 * 9.0 / 64.0 };
        let tex = BlobTexture::random(dims, seed);
        DeformedPair {
            reference: tex.render(dims),
            moving: tex.render_deformed(dims, &|p| bump.eval(p)),
            truth: bump.field(dims),
            bump,
        }
    }
}

/// Translates content by `shift` pixels: `out(x) = image(x − shift)`, edges replicated.
pub fn translate(image: &ScalarImage, shift: [i64; 3]) -> ScalarImage {
    ScalarImage::from_fn(image.dims(), |p| {
        image.clamped([p[0] as i64 - shift[0], p[1] as i64 - shift[1], p[2] as i64 - shift[2]])
    })
}

/// Overwrites the axis-aligned box `[lo, hi)` with `value`.
pub fn paint_box(image: &ScalarImage, lo: [usize; 3], hi: [usize; 3], value: f64) -> ScalarImage {
    ScalarImage::from_fn(image.dims(), |p| {
        if (0..3).all(|a| p[a] >= lo[a] && p[a] < hi[a]) {
            value
        } else {
            image.get(p)
        }
    })
}

/// A thin dark horizontal line on a flat band, sandwiched between two
/// textured regions. The line and the regions move vertically by their own
/// integer shifts, so displacements across the band conflict. The line is
/// drawn over the regions where they overlap.
#[derive(Clone, Debug)]
pub struct LineSandwich {
    pub texture: BlobTexture,
    /// First row of the line in the reference.
    pub line_row: i64,
    pub line_width: i64,
    /// Flat rows between the line and each region.
    pub gap: i64,
    pub line_shift: i64,
    pub region_shift: i64,
}

impl LineSandwich {
    /// 2-px line at the vertical centre moving by `line_shift`, regions by `region_shift`.
    pub fn new(dims: Dims, seed: u64, gap: i64, line_shift: i64, region_shift: i64) -> Self {
        LineSandwich {
            texture: BlobTexture::random(dims, seed),
            line_row: dims.extent(1) as i64 / 2 - 2,
            line_width: 2,
            gap,
            line_shift,
            region_shift,
        }
    }

    fn render_shifted(&self, dims: Dims, line_shift: i64, region_shift: i64) -> ScalarImage {
        let above = self.line_row - self.gap;
        let below = self.line_row + self.line_width + self.gap;
        let (x_lo, x_hi) = (8, dims.extent(0) as i64 - 8);
        ScalarImage::from_fn(dims, |p| {
            let (x, y) = (p[0] as i64, p[1] as i64);
            let yl = y - line_shift - self.line_row;
            if (0..self.line_width).contains(&yl) && (x_lo..x_hi).contains(&x) {
                return 0.0;
            }
            let yr = y - region_shift;
            if yr < above || yr >= below {
                self.texture.eval([x as f64, yr as f64, 0.0])
            } else {
                0.5
            }
        })
    }

    pub fn reference(&self, dims: Dims) -> ScalarImage {
        self.render_shifted(dims, 0, 0)
    }

    pub fn moving(&self, dims: Dims) -> ScalarImage {
        self.render_shifted(dims, self.line_shift, self.region_shift)
    }

    /// Reference-grid pixels on the line, away from its ends.
    pub fn line_pixels(&self, dims: Dims) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for y in self.line_row..self.line_row + self.line_width {
            for x in 8..dims.extent(0) - 8 {
                out.push([x, y as usize, 0]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn texture_is_reproducible_and_in_range() {
        let dims = Dims::new2(32, 32);
        let a = texture(dims, 7);
        assert_eq!(a, texture(dims, 7));
        assert_ne!(a, texture(dims, 8));
        let spread = a.data().iter().fold(0.0f64, |m, v| m.max((v - 0.5).abs()));
        assert!(spread > 0.2);
    }

    #[test]
    fn deformation_inverts_bump() {
        let dims = Dims::new2(48, 48);
        let tex = BlobTexture::random(dims, 1);
        let bump = GaussianBump { center: [24.0, 24.0, 0.0], amplitude: [4.0, -3.0, 0.0], sigma: 10.0 };
        let moving = tex.render_deformed(dims, &|p| bump.eval(p));
        let reference = tex.render(dims);
        // moving(x + u(x)) = reference(x) up to interpolation error
        let back = crate::grid::warp(&moving, &bump.field(dims)).unwrap();
        let err: f64 = (0..dims.len())
            .filter(|&i| {
                let p = dims.point(i);
                (8..40).contains(&p[0]) && (8..40).contains(&p[1])
            })
            .map(|i| (back.data()[i] - reference.data()[i]).abs())
            .sum::<f64>()
            / (32.0 * 32.0);
        assert!(err < 0.02, "mean abs error {err}");
        let x = invert_point([30.0, 20.0, 0.0], &|p| bump.eval(p));
        let u = bump.eval(x);
        assert!((x[0] + u[0] - 30.0).abs() < 1e-9 && (x[1] + u[1] - 20.0).abs() < 1e-9);
    }

    #[test]
    fn line_sandwich_layout() {
        let dims = Dims::new2(64, 64);
        let scene = LineSandwich::new(dims, 3, 4, -2, 3);
        let (r, m) = (scene.reference(dims), scene.moving(dims));
        assert_eq!(r.get([20, 30, 0]), 0.0);
        assert_eq!(r.get([20, 31, 0]), 0.0);
        assert_eq!(r.get([20, 33, 0]), 0.5);
        assert_eq!(m.get([20, 28, 0]), 0.0);
        assert_eq!(m.get([20, 30, 0]), 0.5);
        // the region below the band moves down by 3
        assert_eq!(m.get([20, 40, 0]), r.get([20, 37, 0]));
        assert_eq!(scene.line_pixels(dims).len(), 2 * 48);
    }
}
