//! Nonrigid image registration that stays robust to outliers such as missing
//! correspondences and local large deformations.
//!
//! A coarse-to-fine block matcher produces sparse displacement samples under a
//! mutual-information similarity. The samples are densified by local kernel
//! regression whose kernels follow the reference image's local structure
//! tensors, while a joint saliency map of the two images weights each sample
//! by how confidently the same structure appears in both.
//!
//! # Quick start
//! ```no_run
//! use jssreg::{io, register, RegistrationConfig};
//! # fn main() -> jssreg::Result<()> {
//! let fixed = io::load_image("reference.png".as_ref())?;
//! let moving = io::load_image("moving.png".as_ref())?;
//! let result = register(&fixed, &moving, &RegistrationConfig::default())?;
//! io::save_field("field.json".as_ref(), &result.field)?;
//! # Ok(())
//! # }
//! ```
//!
//! # Modules
//! - [`grid`]: images, fields, pyramid, interpolation, warping, composition.
//! - [`tensor`]: gradient / local structure tensors and tensor metrics.
//! - [`saliency`]: structure saliency and joint saliency maps.
//! - [`kernel`]: structure-adaptive anisotropic Gaussian kernels.
//! - [`block_match`]: MI block matching into sparse samples.
//! - [`regression`]: certainty-weighted kernel regression.
//! - [`pipeline`]: the coarse-to-fine driver.
//! - [`eval`] and [`io`]: landmark errors, difference images, file formats.
//!
//! Runnable walkthroughs for each stage live in the crate's `examples/`.

pub mod block_match;
pub mod error;
pub mod eval;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod pipeline;
pub mod regression;
pub mod saliency;
pub mod synthetic;
pub mod tensor;

pub use block_match::{match_blocks, mutual_information, BlockMatchParams, SparseDisplacements, SparseSample};
pub use error::{RegError, Result};
pub use eval::{difference_image, endpoint_error, landmark_error, LandmarkPair, LandmarkReport, LandmarkSet};
pub use grid::{build_pyramid, compose, upsample_field, warp, Dims, DisplacementField, PyramidLevel, ScalarImage};
pub use kernel::{KernelParams, KernelShape, KernelSpec};
pub use pipeline::{register, CertaintyMode, RegistrationConfig, RegistrationResult};
pub use regression::{densify, fit_local, KernelUnits, RegressionConfig};
pub use saliency::{jsm, saliency, JointSaliencyMap, SaliencyMap};
pub use tensor::{gst, lst, tensor_distance_d, tensor_distance_l, LocalStructure, SymTensor, SymTensorField};
