//! Mesh and point-cloud files: OBJ, PLY (ascii and binary little-endian)
//! and XYZ. Coordinates are stored as `f32`.

pub mod obj;
pub mod ply;
pub mod xyz;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::mesh::TriMesh;

/// What a geometry file contained.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Cloud(PointCloud),
    Mesh(TriMesh),
}

impl Geometry {
    pub fn points(&self) -> &[[f64; 3]] {
        match self {
            Geometry::Cloud(c) => &c.points,
            Geometry::Mesh(m) => &m.vertices,
        }
    }

    /// The vertices as a cloud (faces dropped).
    pub fn into_cloud(self) -> Result<PointCloud> {
        match self {
            Geometry::Cloud(c) => Ok(c),
            Geometry::Mesh(m) => PointCloud::new(m.vertices),
        }
    }

    pub fn into_mesh(self) -> Result<TriMesh> {
        match self {
            Geometry::Mesh(m) => Ok(m),
            Geometry::Cloud(_) => Err(Error::InvalidInput("expected a mesh, file has no faces".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Obj,
    PlyAscii,
    PlyBinary,
    Xyz,
}

impl Format {
    /// From the file extension; `.ply` means binary little-endian.
    pub fn from_path(path: &Path) -> Result<Format> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "obj" => Ok(Format::Obj),
            "ply" => Ok(Format::PlyBinary),
            "xyz" => Ok(Format::Xyz),
            _ => Err(Error::UnsupportedFormat(format!(
                "{}: expected a .obj, .ply or .xyz extension",
                path.display()
            ))),
        }
    }
}

/// Rounds to the stored precision.
pub(crate) fn to_f32(p: [f64; 3]) -> [f32; 3] {
    p.map(|c| c as f32)
}

/// Parses file contents according to `format` (ascii and binary PLY are
/// both accepted for either PLY variant).
pub fn parse_geometry(bytes: &[u8], format: Format) -> Result<Geometry> {
    match format {
        Format::Obj => obj::parse(text(bytes)?),
        Format::PlyAscii | Format::PlyBinary => ply::parse(bytes),
        Format::Xyz => xyz::parse(text(bytes)?).map(Geometry::Cloud),
    }
}

fn text(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::parse_at_byte(e.valid_up_to(), "invalid UTF-8"))
}

pub fn encode_geometry(g: &Geometry, format: Format) -> Result<Vec<u8>> {
    let (points, faces): (&[[f64; 3]], &[[u32; 3]]) = match g {
        Geometry::Cloud(c) => (&c.points, &[]),
        Geometry::Mesh(m) => (&m.vertices, &m.faces),
    };
    match format {
        Format::Obj => Ok(obj::encode(points, faces).into_bytes()),
        Format::PlyAscii => Ok(ply::encode_ascii(points, faces, matches!(g, Geometry::Mesh(_))).into_bytes()),
        Format::PlyBinary => Ok(ply::encode_binary(points, faces, matches!(g, Geometry::Mesh(_)))),
        Format::Xyz => {
            if !faces.is_empty() {
                return Err(Error::UnsupportedFormat("XYZ files cannot hold faces".into()));
            }
            Ok(xyz::encode(points).into_bytes())
        }
    }
}

pub fn load_geometry(path: impl AsRef<Path>) -> Result<Geometry> {
    let path = path.as_ref();
    let format = Format::from_path(path)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_geometry(&bytes, format)
}

pub fn store_geometry(g: &Geometry, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_geometry(g, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a mesh in the format implied by the extension.
pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    store_geometry(&Geometry::Mesh(mesh.clone()), path, Format::from_path(path)?)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    load_geometry(path)?.into_mesh()
}

/// Loads any supported file as a point cloud (mesh faces are ignored).
pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    load_geometry(path)?.into_cloud()
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    store_geometry(&Geometry::Cloud(cloud.clone()), path, Format::from_path(path)?)
}
