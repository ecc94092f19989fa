//! Point cloud and mesh file formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use pcdenoise_core::mesh::TriangleMesh;
use pcdenoise_core::PointCloud;

pub mod off;
pub mod ply;
pub mod xyz;

pub use ply::Encoding;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported encoding '{0}'")]
    UnsupportedEncoding(String),
    #[error("unsupported PLY element '{0}'")]
    UnsupportedElement(String),
    #[error("missing property '{0}'")]
    MissingProperty(String),
    #[error("invalid label value {0}")]
    InvalidLabel(i64),
    #[error("file ends inside element '{0}'")]
    Truncated(String),
    #[error("unknown file format for '{0}' (expected .xyz, .ply or .off)")]
    UnknownFormat(String),
    #[error(transparent)]
    Core(#[from] pcdenoise_core::Error),
}

impl FormatError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    Ply,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<CloudFormat, FormatError> {
        match extension(path).as_deref() {
            Some("xyz") | Some("txt") => Ok(CloudFormat::Xyz),
            Some("ply") => Ok(CloudFormat::Ply),
            _ => Err(FormatError::UnknownFormat(path.display().to_string())),
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

pub fn read_point_cloud(path: &Path) -> Result<PointCloud, FormatError> {
    let format = CloudFormat::from_path(path)?;
    let reader = BufReader::new(File::open(path)?);
    match format {
        CloudFormat::Xyz => xyz::read(reader),
        CloudFormat::Ply => ply::read_cloud(reader),
    }
}

/// Writes a cloud, choosing the format from the extension. PLY output is
/// binary unless `ascii` is set; XYZ output drops labels.
pub fn write_point_cloud(
    path: &Path,
    cloud: &PointCloud,
    ascii: bool,
    extra: Option<ply::ExtraColumn<'_>>,
) -> Result<(), FormatError> {
    let format = CloudFormat::from_path(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        CloudFormat::Xyz => xyz::write(&mut w, cloud.points())?,
        CloudFormat::Ply => {
            let enc = if ascii {
                Encoding::Ascii
            } else {
                Encoding::BinaryLittleEndian
            };
            ply::write_cloud(&mut w, cloud, enc, extra)?
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh, FormatError> {
    let reader = BufReader::new(File::open(path)?);
    match extension(path).as_deref() {
        Some("off") => off::read(reader),
        Some("ply") => ply::read_mesh(reader),
        _ => Err(FormatError::UnknownFormat(path.display().to_string())),
    }
}

pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    match extension(path).as_deref() {
        Some("off") => off::write(&mut w, mesh)?,
        Some("ply") => ply::write_mesh(&mut w, mesh)?,
        _ => return Err(FormatError::UnknownFormat(path.display().to_string())),
    }
    w.flush()?;
    Ok(())
}

/// Fans a polygon into triangles. Indices must be non-negative integers.
pub(crate) fn triangulate_into(poly: &[f64], out: &mut Vec<[u32; 3]>) -> Result<(), FormatError> {
    let idx = poly
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(FormatError::MissingProperty(format!("valid vertex index (got {v})")))
            }
        })
        .collect::<Result<Vec<u32>, _>>()?;
    for k in 1..idx.len().saturating_sub(1) {
        out.push([idx[0], idx[k], idx[k + 1]]);
    }
    Ok(())
}

/// Next non-blank, non-comment line, trimmed, with its 1-based number.
pub(crate) fn next_data_line(
    reader: &mut impl BufRead,
    buf: &mut String,
    lineno: &mut usize,
) -> Result<bool, FormatError> {
    loop {
        buf.clear();
        if reader.read_line(buf)? == 0 {
            return Ok(false);
        }
        *lineno += 1;
        let data = buf.split('#').next().unwrap_or("").trim();
        if !data.is_empty() {
            let data = data.to_string();
            buf.clear();
            buf.push_str(&data);
            return Ok(true);
        }
    }
}
