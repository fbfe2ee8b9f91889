//! File formats: 8/16-bit grayscale PNG and PGM for 2D images, a JSON header
//! plus raw binary pair for volumes and displacement fields, CSV landmarks and
//! sparse-sample dumps, and false-colour heatmaps.
//!
//! For the two-file formats the header path ends in `.json` and the binary
//! payload sits next to it with the extension `.raw`. Payloads are x-fastest;
//! field payloads interleave the components of each point.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::block_match::SparseDisplacements;
use crate::error::{RegError, Result};
use crate::eval::{LandmarkPair, LandmarkSet};
use crate::grid::{DisplacementField, Dims, ScalarImage};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: Vec<usize>,
    pub dtype: String,
    pub byte_order: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dims: Vec<usize>,
    pub components: usize,
    pub dtype: String,
}

/// Path of the binary payload belonging to a `.json` header.
pub fn raw_path(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn is_header(path: &Path) -> bool {
    extension(path) == "json"
}

/// Loads a 2D image or a volume and min-max normalizes it into `[0, 1]`.
pub fn load_image(path: &Path) -> Result<ScalarImage> {
    if is_header(path) {
        return load_volume(path);
    }
    match extension(path).as_str() {
        "png" | "pgm" | "pnm" => {}
        other => return Err(RegError::Format(format!("unsupported image extension `{other}`"))),
    }
    let gray = image::open(path)?.into_luma16();
    let (w, h) = gray.dimensions();
    let raw = gray.pixels().map(|p| p.0[0] as f64).collect();
    ScalarImage::normalized(Dims::new2(w as usize, h as usize), raw)
}

fn load_volume(path: &Path) -> Result<ScalarImage> {
    let header: VolumeHeader = serde_json::from_str(&fs::read_to_string(path)?)?;
    if header.byte_order != "little" {
        return Err(RegError::Format(format!("unsupported byte order `{}`", header.byte_order)));
    }
    let dims = Dims::from_slice(&header.dims)?;
    let bytes = fs::read(raw_path(path))?;
    let width = match header.dtype.as_str() {
        "u8" => 1,
        "u16" => 2,
        "f32" => 4,
        other => return Err(RegError::Format(format!("unsupported dtype `{other}`"))),
    };
    if bytes.len() != dims.len() * width {
        return Err(RegError::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            dims.len() * width
        )));
    }
    let raw: Vec<f64> = match width {
        1 => bytes.iter().map(|&b| b as f64).collect(),
        2 => bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]]) as f64).collect(),
        _ => bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect(),
    };
    ScalarImage::normalized(dims, raw)
}

/// Writes a 2D image as 16-bit PNG/PGM, or a volume as `f32` header + raw.
pub fn save_image(path: &Path, image: &ScalarImage) -> Result<()> {
    let dims = image.dims();
    if is_header(path) {
        let header = VolumeHeader { dims: dims.extents().to_vec(), dtype: "f32".into(), byte_order: "little".into() };
        let mut bytes = Vec::with_capacity(dims.len() * 4);
        for &v in image.data() {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        fs::write(path, serde_json::to_string_pretty(&header)?)?;
        fs::write(raw_path(path), bytes)?;
        return Ok(());
    }
    if dims.ndim() != 2 {
        return Err(RegError::Format("volumes must be written with a .json header".into()));
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(
        dims.extent(0) as u32,
        dims.extent(1) as u32,
        image.data().iter().map(|v| (v * 65535.0).round() as u16).collect(),
    )
    .ok_or_else(|| RegError::Invalid("image buffer size".into()))?;
    match extension(path).as_str() {
        "png" => buf.save_with_format(path, image::ImageFormat::Png)?,
        "pgm" | "pnm" => buf.save_with_format(path, image::ImageFormat::Pnm)?,
        other => return Err(RegError::Format(format!("unsupported image extension `{other}`"))),
    }
    Ok(())
}

/// Serialized little-endian `f32` payload of a field.
pub fn field_bytes(field: &DisplacementField) -> Vec<u8> {
    let nd = field.dims().ndim();
    let mut bytes = Vec::with_capacity(field.dims().len() * nd * 4);
    for v in field.data() {
        for c in &v[..nd] {
            bytes.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    bytes
}

pub fn save_field(path: &Path, field: &DisplacementField) -> Result<()> {
    let dims = field.dims();
    let header = FieldHeader { dims: dims.extents().to_vec(), components: dims.ndim(), dtype: "f32".into() };
    fs::write(path, serde_json::to_string_pretty(&header)?)?;
    fs::write(raw_path(path), field_bytes(field))?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<DisplacementField> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(path)?)?;
    if header.dtype != "f32" {
        return Err(RegError::Format(format!("unsupported field dtype `{}`", header.dtype)));
    }
    let dims = Dims::from_slice(&header.dims)?;
    if header.components != dims.ndim() {
        return Err(RegError::Format(format!(
            "{} components for a {}-D grid",
            header.components,
            dims.ndim()
        )));
    }
    let bytes = fs::read(raw_path(path))?;
    let nd = dims.ndim();
    if bytes.len() != dims.len() * nd * 4 {
        return Err(RegError::Format(format!(
            "field payload has {} bytes, expected {}",
            bytes.len(),
            dims.len() * nd * 4
        )));
    }
    let floats: Vec<f64> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    let data = floats
        .chunks_exact(nd)
        .map(|c| {
            let mut v = [0.0; 3];
            v[..nd].copy_from_slice(c);
            v
        })
        .collect();
    DisplacementField::new(dims, data)
}

/// Reads `rx,ry[,rz],mx,my[,mz]` landmark rows.
pub fn read_landmarks(path: &Path) -> Result<LandmarkSet> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let three_d = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["rx", "ry", "mx", "my"] => false,
        ["rx", "ry", "rz", "mx", "my", "mz"] => true,
        _ => return Err(RegError::Format(format!("unexpected landmark header {headers:?}"))),
    };
    let mut pairs = Vec::new();
    for row in reader.records() {
        let row = row?;
        let vals: Vec<f64> = row
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| RegError::Format(format!("landmark value `{s}`: {e}"))))
            .collect::<Result<_>>()?;
        let pair = if three_d {
            LandmarkPair { reference: [vals[0], vals[1], vals[2]], moving: [vals[3], vals[4], vals[5]] }
        } else {
            LandmarkPair { reference: [vals[0], vals[1], 0.0], moving: [vals[2], vals[3], 0.0] }
        };
        pairs.push(pair);
    }
    Ok(LandmarkSet::new(pairs))
}

pub fn write_landmarks(path: &Path, set: &LandmarkSet, ndim: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if ndim == 3 {
        w.write_record(["rx", "ry", "rz", "mx", "my", "mz"])?;
    } else {
        w.write_record(["rx", "ry", "mx", "my"])?;
    }
    for p in &set.pairs {
        let mut row: Vec<String> = p.reference[..ndim].iter().map(|v| v.to_string()).collect();
        row.extend(p.moving[..ndim].iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Dumps sparse samples as `x,y(,z),dx,dy(,dz),certainty`.
pub fn write_samples_csv(path: &Path, sparse: &SparseDisplacements) -> Result<()> {
    let nd = sparse.level_dims.ndim();
    let mut f = fs::File::create(path)?;
    let header = if nd == 3 { "x,y,z,dx,dy,dz,certainty" } else { "x,y,dx,dy,certainty" };
    writeln!(f, "{header}")?;
    for s in &sparse.samples {
        let pos: Vec<String> = s.position[..nd].iter().map(|v| v.to_string()).collect();
        let disp: Vec<String> = s.displacement[..nd].iter().map(|v| v.to_string()).collect();
        writeln!(f, "{},{},{}", pos.join(","), disp.join(","), s.certainty)?;
    }
    Ok(())
}

/// Jet-style dark blue → cyan → green → yellow → dark red colour for `t` in `[0, 1]`.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let ch = |c: f64| (255.0 * (1.5 - (4.0 * t - c).abs()).clamp(0.0, 1.0)).round() as u8;
    [ch(3.0), ch(2.0), ch(1.0)]
}

/// Writes `values` as a false-colour PNG. Values are scaled by their maximum;
/// for volumes the middle z slice is drawn.
pub fn save_heatmap(path: &Path, dims: Dims, values: &[f64]) -> Result<()> {
    if values.len() != dims.len() {
        return Err(RegError::Invalid("heatmap value count differs from grid".into()));
    }
    let max = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let (w, h) = (dims.extent(0), dims.extent(1));
    let z = if dims.ndim() == 3 { dims.extent(2) / 2 } else { 0 };
    let img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let v = values[dims.index([x as usize, y as usize, z])];
        Rgb(colormap(if max > 0.0 { v / max } else { 0.0 }))
    });
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// 8-bit grayscale PNG of a 2D image (middle slice for volumes), for quick looks.
pub fn save_preview(path: &Path, image: &ScalarImage) -> Result<()> {
    let dims = image.dims();
    let z = if dims.ndim() == 3 { dims.extent(2) / 2 } else { 0 };
    let img = GrayImage::from_fn(dims.extent(0) as u32, dims.extent(1) as u32, |x, y| {
        Luma([(image.get([x as usize, y as usize, z]) * 255.0).round() as u8])
    });
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
