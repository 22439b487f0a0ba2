//! Readers and writers for XYZ, PLY and OFF files.

mod off;
mod ply;
mod xyz;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, TriangleMesh};
use crate::scalar::Real;

pub use off::{parse_off, write_off};
pub use ply::{parse_ply, write_ply, PlyData, PlyEncoding};
pub use xyz::{format_sig, parse_xyz, write_xyz, write_xyz_with_scores, XYZ_SIGNIFICANT_DIGITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudFormat {
    Xyz,
    /// Reading accepts either PLY encoding; writing emits ASCII.
    PlyAscii,
    /// Reading accepts either PLY encoding; writing emits little-endian binary.
    PlyBinary,
}

impl CloudFormat {
    /// Guess from the file extension: `.ply` is binary PLY, everything else XYZ.
    pub fn from_path(path: &Path) -> Self {
        match extension(path).as_deref() {
            Some("ply") => CloudFormat::PlyBinary,
            _ => CloudFormat::Xyz,
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

pub fn load_cloud<T: Real>(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        CloudFormat::Xyz => {
            let text = String::from_utf8_lossy(&bytes);
            PointCloud::new(parse_xyz(&text)?)
        }
        CloudFormat::PlyAscii | CloudFormat::PlyBinary => {
            let data = parse_ply::<T>(&bytes)?;
            if data.vertices.is_empty() {
                return Err(Error::Empty("PLY vertex element"));
            }
            PointCloud::new(data.vertices)
        }
    }
}

pub fn save_cloud<T: Real>(
    cloud: &PointCloud<T>,
    path: impl AsRef<Path>,
    format: CloudFormat,
) -> Result<()> {
    let bytes = encode_cloud(cloud.points(), format)?;
    write_atomic(path.as_ref(), &bytes)
}

pub fn encode_cloud<T: Real>(
    points: &[crate::geometry::Point3<T>],
    format: CloudFormat,
) -> Result<Vec<u8>> {
    if points.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    let mut out = Vec::new();
    match format {
        CloudFormat::Xyz => write_xyz(&mut out, points)?,
        CloudFormat::PlyAscii => write_ply(&mut out, points, &[], PlyEncoding::Ascii)?,
        CloudFormat::PlyBinary => {
            write_ply(&mut out, points, &[], PlyEncoding::BinaryLittleEndian)?
        }
    }
    Ok(out)
}

/// Loads a triangle mesh from `.off` or `.ply`; polygons are fan-triangulated.
pub fn load_mesh<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match extension(path).as_deref() {
        Some("off") => parse_off(&String::from_utf8_lossy(&bytes)),
        Some("ply") => {
            let data = parse_ply::<T>(&bytes)?;
            let mut tris = Vec::new();
            for f in &data.faces {
                fan(f, &mut tris);
            }
            TriangleMesh::new(data.vertices, tris)
        }
        other => Err(Error::Format(format!(
            "mesh extension {:?} (expected .off or .ply)",
            other.unwrap_or("")
        ))),
    }
}

pub fn save_mesh<T: Real>(mesh: &TriangleMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::new();
    write_off(&mut out, mesh)?;
    write_atomic(path.as_ref(), &out)
}

/// Either kind of geometry file.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry<T> {
    Cloud(PointCloud<T>),
    Mesh(TriangleMesh<T>),
}

/// Loads `.off` as a mesh, `.ply` as a mesh when it has faces and as a cloud
/// otherwise, and anything else as XYZ.
pub fn load_geometry<T: Real>(path: impl AsRef<Path>) -> Result<Geometry<T>> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("off") => load_mesh(path).map(Geometry::Mesh),
        Some("ply") => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let data = parse_ply::<T>(&bytes)?;
            if data.faces.is_empty() {
                if data.vertices.is_empty() {
                    return Err(Error::Empty("PLY vertex element"));
                }
                return PointCloud::new(data.vertices).map(Geometry::Cloud);
            }
            let mut tris = Vec::new();
            for f in &data.faces {
                fan(f, &mut tris);
            }
            TriangleMesh::new(data.vertices, tris).map(Geometry::Mesh)
        }
        _ => load_cloud(path, CloudFormat::Xyz).map(Geometry::Cloud),
    }
}

/// True when the path names a mesh container (`.off`).
pub fn is_mesh_path(path: &Path) -> bool {
    extension(path).as_deref() == Some("off")
}

pub(crate) fn fan(poly: &[usize], out: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len().saturating_sub(1) {
        out.push([poly[0], poly[k], poly[k + 1]]);
    }
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
