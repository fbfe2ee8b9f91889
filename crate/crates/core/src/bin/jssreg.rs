//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid input, 4 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use jssreg::eval::LandmarkReport;
use jssreg::io;
use jssreg::kernel::KernelSpec;
use jssreg::pipeline::{IterationDiagnostics, StageTimings};
use jssreg::{
    difference_image, jsm, landmark_error, match_blocks, register, saliency, warp, LandmarkSet,
    LocalStructure, RegError, RegistrationConfig, Result, ScalarImage,
};

#[derive(Parser)]
#[command(name = "jssreg", version, about = "Nonrigid image registration with saliency-weighted, structure-adaptive kernel regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register <mov> onto <ref>.
    Register {
        reference: PathBuf,
        moving: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_field: Option<PathBuf>,
        #[arg(long)]
        out_warped: Option<PathBuf>,
        /// JSON report with MRE/SD, per-iteration diagnostics and stage timings.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Landmark CSV for the report; identity grid landmarks when omitted.
        #[arg(long)]
        landmarks: Option<PathBuf>,
        /// Dump the final full-resolution block matches as CSV.
        #[arg(long)]
        dump_samples: Option<PathBuf>,
    },
    /// Landmark error of a field file.
    Eval {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        landmarks: PathBuf,
    },
    /// Saliency heatmap of one image.
    Saliency {
        image: PathBuf,
        #[arg(long, default_value = "saliency.png")]
        out: PathBuf,
        /// Also write anisotropy and largest-eigenvalue heatmaps with this prefix.
        #[arg(long)]
        tensor_maps: Option<PathBuf>,
    },
    /// Joint saliency heatmap of two images, optionally after warping <mov>.
    Jsm {
        reference: PathBuf,
        moving: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value = "jsm.png")]
        out: PathBuf,
    },
    /// Warp an image by a field file.
    Warp {
        image: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "warped.png")]
        out: PathBuf,
    },
    /// Absolute difference image.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "diff.png")]
        out: PathBuf,
    },
    /// Rasterize the adaptive kernel centred at a pixel.
    KernelDebug {
        image: PathBuf,
        #[arg(long, value_parser = parse_point)]
        at: [usize; 3],
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "kernel.png")]
        out: PathBuf,
    },
}

fn parse_point(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if !(2..=3).contains(&parts.len()) {
        return Err("expected X,Y or X,Y,Z".into());
    }
    let mut p = [0; 3];
    for (slot, part) in p.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|e| format!("`{part}`: {e}"))?;
    }
    Ok(p)
}

#[derive(Serialize)]
struct RegisterReport {
    dims: Vec<usize>,
    landmarks: LandmarkReport,
    diagnostics: Vec<IterationDiagnostics>,
    timings: StageTimings,
}

fn load_config(path: Option<&Path>) -> Result<RegistrationConfig> {
    match path {
        Some(p) => RegistrationConfig::from_json(&std::fs::read_to_string(p)?),
        None => Ok(RegistrationConfig::default()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Register { reference, moving, config, out_field, out_warped, report, landmarks, dump_samples } => {
            let cfg = load_config(config.as_deref())?;
            let fixed = io::load_image(&reference)?;
            let mov = io::load_image(&moving)?;
            let result = register(&fixed, &mov, &cfg)?;
            if let Some(p) = &out_field {
                io::save_field(p, &result.field)?;
            }
            if let Some(p) = &out_warped {
                io::save_image(p, &result.warped)?;
            }
            if let Some(p) = &dump_samples {
                let joint = joint_map(&fixed, &result.warped)?;
                let sparse = match_blocks(&fixed, &result.warped, &joint, &cfg.block_match)?;
                io::write_samples_csv(p, &sparse)?;
            }
            let dims = fixed.dims();
            let set = match &landmarks {
                Some(p) => io::read_landmarks(p)?,
                None => LandmarkSet::identity_grid(dims, 8, 8),
            };
            let lm = landmark_error(&set, &result.field)?;
            println!("MRE {:.4} px  SD {:.4} px  ({} landmarks, {:.2} s)", lm.mre, lm.sd, lm.errors.len(), result.timings.total);
            if let Some(p) = &report {
                let r = RegisterReport {
                    dims: dims.extents().to_vec(),
                    landmarks: lm,
                    diagnostics: result.diagnostics,
                    timings: result.timings,
                };
                write_json(p, &r)?;
            }
        }
        Command::Eval { field, landmarks } => {
            let field = io::load_field(&field)?;
            let set = io::read_landmarks(&landmarks)?;
            let r = landmark_error(&set, &field)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        Command::Saliency { image, out, tensor_maps } => {
            let img = io::load_image(&image)?;
            let structure = LocalStructure::compute(&img, jssreg::tensor::LST_SIGMA, jssreg::tensor::LST_RADIUS)?;
            let s = saliency(&structure.lst, 1);
            io::save_heatmap(&out, img.dims(), s.values())?;
            if let Some(prefix) = tensor_maps {
                let tensors = structure.lst.tensors();
                let largest: Vec<f64> = tensors.iter().map(|t| t.eigenvalues()[0]).collect();
                let aniso: Vec<f64> = tensors
                    .iter()
                    .map(|t| if t.order() == 2 { jssreg::kernel::anisotropy_2d(t) } else { jssreg::kernel::anisotropy_3d(t).0 })
                    .collect();
                io::save_heatmap(&with_suffix(&prefix, "anisotropy"), img.dims(), &aniso)?;
                io::save_heatmap(&with_suffix(&prefix, "eigenvalue"), img.dims(), &largest)?;
            }
        }
        Command::Jsm { reference, moving, field, out } => {
            let fixed = io::load_image(&reference)?;
            let mut mov = io::load_image(&moving)?;
            if let Some(f) = field {
                mov = warp(&mov, &io::load_field(&f)?)?;
            }
            let joint = joint_map(&fixed, &mov)?;
            io::save_heatmap(&out, fixed.dims(), joint.values())?;
            println!("mean JSM {:.6}", joint.mean());
        }
        Command::Warp { image, field, out } => {
            let img = io::load_image(&image)?;
            let warped = warp(&img, &io::load_field(&field)?)?;
            io::save_image(&out, &warped)?;
        }
        Command::Diff { a, b, out } => {
            let d = difference_image(&io::load_image(&a)?, &io::load_image(&b)?)?;
            io::save_image(&out, &d)?;
        }
        Command::KernelDebug { image, at, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let img = io::load_image(&image)?;
            let dims = img.dims();
            if !dims.contains([at[0] as i64, at[1] as i64, at[2] as i64]) {
                return Err(RegError::Invalid(format!("point {at:?} outside the {dims} image")));
            }
            let s = cfg.structure;
            let structure = LocalStructure::compute(&img, s.lst_sigma, s.lst_radius)?;
            let kernel = KernelSpec::at_point(&structure, dims.index(at), &cfg.regression.kernel_params())?;
            let weights: Vec<f64> = (0..dims.len())
                .map(|i| {
                    let p = dims.point(i);
                    kernel.weight([p[0] as f64, p[1] as f64, p[2] as f64])
                })
                .collect();
            io::save_heatmap(&out, dims, &weights)?;
            println!("scales {:?}  support radius {}", &kernel.scales[..dims.ndim()], kernel.support_radius);
        }
    }
    Ok(())
}

fn joint_map(fixed: &ScalarImage, mov: &ScalarImage) -> Result<jssreg::JointSaliencyMap> {
    use jssreg::tensor::{LST_RADIUS, LST_SIGMA};
    let a = LocalStructure::compute(fixed, LST_SIGMA, LST_RADIUS)?;
    let b = LocalStructure::compute(mov, LST_SIGMA, LST_RADIUS)?;
    jsm(&saliency(&a.lst, 1), &saliency(&b.lst, 1), &a.lst, &b.lst)
}

fn with_suffix(prefix: &Path, tag: &str) -> PathBuf {
    let stem = prefix.file_stem().and_then(|s| s.to_str()).unwrap_or("tensor");
    prefix.with_file_name(format!("{stem}_{tag}.png"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 4 } else { 3 })
        }
    }
}
