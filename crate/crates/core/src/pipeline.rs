//! Coarse-to-fine registration driver.
//!
//! Per pyramid level the global field from the previous level is upsampled,
//! then each iteration warps the original moving level image by the global
//! field, rebuilds the joint saliency map against the reference, block-matches,
//! densifies the sparse matches with structure-adaptive kernel regression and
//! composes the result into the global field.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::block_match::{match_blocks, BlockMatchParams};
use crate::error::{RegError, Result};
use crate::grid::{build_pyramid, compose, ensure_same_dims, upsample_field, warp, DisplacementField, ScalarImage};
use crate::regression::{densify_detailed, RegressionConfig};
use crate::saliency::{jsm, saliency, JointSaliencyMap};
use crate::tensor::{LocalStructure, LST_RADIUS, LST_SIGMA};

/// Source of the per-sample certainties fed to the regression.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertaintyMode {
    /// Joint saliency of reference and warped moving image.
    #[default]
    JointSaliency,
    /// Every sample has certainty 1.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StructureParams {
    pub lst_sigma: f64,
    pub lst_radius: usize,
    /// Neighbourhood radius of the saliency operator.
    pub saliency_radius: usize,
}

impl Default for StructureParams {
    fn default() -> Self {
        StructureParams { lst_sigma: LST_SIGMA, lst_radius: LST_RADIUS, saliency_radius: 1 }
    }
}

/// Registration settings. Every field has a default, so a partial JSON
/// document is a valid config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationConfig {
    pub levels: usize,
    pub iterations_per_level: usize,
    pub block_match: BlockMatchParams,
    pub regression: RegressionConfig,
    pub structure: StructureParams,
    pub certainty: CertaintyMode,
    /// Keep the upsampled global field at the entry of every level.
    pub record_level_fields: bool,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        RegistrationConfig {
            levels: 5,
            iterations_per_level: 2,
            block_match: BlockMatchParams::default(),
            regression: RegressionConfig::default(),
            structure: StructureParams::default(),
            certainty: CertaintyMode::JointSaliency,
            record_level_fields: false,
        }
    }
}

impl RegistrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(RegError::Invalid("levels must be at least 1".into()));
        }
        if self.iterations_per_level == 0 {
            return Err(RegError::Invalid("iterations_per_level must be at least 1".into()));
        }
        if !(self.structure.lst_sigma > 0.0) {
            return Err(RegError::NonPositiveParam { name: "lst_sigma", value: self.structure.lst_sigma });
        }
        self.block_match.validate()?;
        self.regression.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RegistrationConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One row per (level, iteration).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    pub level: usize,
    pub iteration: usize,
    /// Mean magnitude of the global field after this iteration, level pixels.
    pub mean_displacement: f64,
    pub mean_jsm: f64,
    pub samples: usize,
    pub low_confidence_points: usize,
}

/// Wall-clock seconds spent per stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub pyramid: f64,
    pub structure: f64,
    pub saliency_jsm: f64,
    pub block_match: f64,
    pub regression: f64,
    pub warp_compose: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct RegistrationResult {
    /// Full-resolution backward field: `warped(x) = moving(x + field(x))`.
    pub field: DisplacementField,
    pub warped: ScalarImage,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub timings: StageTimings,
    /// Upsampled global field at the entry of each level (coarsest first), if recorded.
    pub level_entry_fields: Vec<DisplacementField>,
}

fn lap(t: &mut Instant) -> f64 {
    let now = Instant::now();
    let dt = now.duration_since(*t).as_secs_f64();
    *t = now;
    dt
}

/// Registers `moving` onto `reference`.
pub fn register(reference: &ScalarImage, moving: &ScalarImage, config: &RegistrationConfig) -> Result<RegistrationResult> {
    config.validate()?;
    ensure_same_dims(&reference.dims(), &moving.dims())?;
    let start = Instant::now();
    let mut clock = start;
    let mut timings = StageTimings::default();

    let ref_pyr = build_pyramid(reference, config.levels)?;
    let mov_pyr = build_pyramid(moving, config.levels)?;
    timings.pyramid += lap(&mut clock);

    let sp = config.structure;
    let mut global: Option<DisplacementField> = None;
    let mut diagnostics = Vec::new();
    let mut level_entry_fields = Vec::new();

    for (ref_level, mov_level) in ref_pyr.iter().zip(&mov_pyr) {
        let fixed = &ref_level.image;
        let dims = fixed.dims();
        let mut field = match global.take() {
            None => DisplacementField::zeros(dims),
            Some(prev) => upsample_field(&prev, dims)?,
        };
        if config.record_level_fields {
            level_entry_fields.push(field.clone());
        }
        timings.warp_compose += lap(&mut clock);

        let ref_structure = LocalStructure::compute(fixed, sp.lst_sigma, sp.lst_radius)?;
        timings.structure += lap(&mut clock);
        let ref_saliency = saliency(&ref_structure.lst, sp.saliency_radius);
        timings.saliency_jsm += lap(&mut clock);

        for iteration in 0..config.iterations_per_level {
            let warped = warp(&mov_level.image, &field)?;
            timings.warp_compose += lap(&mut clock);

            let mov_structure = LocalStructure::compute(&warped, sp.lst_sigma, sp.lst_radius)?;
            timings.structure += lap(&mut clock);
            let mov_saliency = saliency(&mov_structure.lst, sp.saliency_radius);
            let joint = jsm(&ref_saliency, &mov_saliency, &ref_structure.lst, &mov_structure.lst)?;
            let mean_jsm = joint.mean();
            let certainty = match config.certainty {
                CertaintyMode::JointSaliency => joint,
                CertaintyMode::Uniform => JointSaliencyMap::uniform(dims),
            };
            timings.saliency_jsm += lap(&mut clock);

            let sparse = match_blocks(fixed, &warped, &certainty, &config.block_match)?;
            timings.block_match += lap(&mut clock);

            let (increment, low_confidence_points) = match densify_detailed(&sparse, &ref_structure, &config.regression) {
                Ok(d) => {
                    let low = d.low_confidence_count();
                    (Some(d.field), low)
                }
                // nothing trustworthy to regress this round
                Err(RegError::EmptySamples) => (None, 0),
                Err(e) => return Err(e),
            };
            timings.regression += lap(&mut clock);

            if let Some(inc) = increment {
                field = compose(&field, &inc)?;
            }
            timings.warp_compose += lap(&mut clock);

            diagnostics.push(IterationDiagnostics {
                level: ref_level.level_index,
                iteration,
                mean_displacement: field.mean_magnitude(),
                mean_jsm,
                samples: sparse.len(),
                low_confidence_points,
            });
        }
        global = Some(field);
    }

    let field = global.expect("at least one level");
    let warped = warp(moving, &field)?;
    timings.warp_compose += lap(&mut clock);
    timings.total = start.elapsed().as_secs_f64();
    Ok(RegistrationResult { field, warped, diagnostics, timings, level_entry_fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Dims;
    use crate::synthetic::texture;

    #[test]
    fn config_json_defaults_and_overrides() {
        let cfg = RegistrationConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RegistrationConfig::default());
        let cfg = RegistrationConfig::from_json(r#"{"levels": 3, "block_match": {"search_radius": 2}, "certainty": "uniform"}"#).unwrap();
        assert_eq!(cfg.levels, 3);
        assert_eq!(cfg.block_match.search_radius, 2);
        assert_eq!(cfg.block_match.spacing, 4);
        assert_eq!(cfg.certainty, CertaintyMode::Uniform);
        assert!(RegistrationConfig::from_json(r#"{"iterations_per_level": 0}"#).is_err());
    }

    #[test]
    fn single_level_single_iteration() {
        let dims = Dims::new2(32, 32);
        let img = texture(dims, 5);
        let cfg = RegistrationConfig { levels: 1, iterations_per_level: 1, ..Default::default() };
        let res = register(&img, &img, &cfg).unwrap();
        assert_eq!(res.diagnostics.len(), 1);
        assert_eq!(res.diagnostics[0].samples, 64);
        assert!(res.field.max_magnitude() < 1e-12);
    }

    #[test]
    fn dims_must_agree() {
        let a = texture(Dims::new2(32, 32), 1);
        let b = texture(Dims::new2(32, 30), 1);
        assert!(matches!(register(&a, &b, &RegistrationConfig::default()), Err(RegError::DimMismatch { .. })));
    }

    #[test]
    fn flat_images_register_to_zero() {
        let dims = Dims::new2(32, 32);
        let flat = ScalarImage::constant(dims, 0.5).unwrap();
        let res = register(&flat, &flat, &RegistrationConfig { levels: 2, ..Default::default() }).unwrap();
        assert_eq!(res.field.max_magnitude(), 0.0);
    }
}
