//! Writes one mesh as OBJ, ASCII PLY and binary PLY, and a cloud as XYZ,
//! then reads everything back.
//!
//! cargo run --release --example file_formats -- [out_dir]

use std::path::PathBuf;

use offsetopt::geometry::PointCloud;
use offsetopt::io::{load_geometry, store_geometry, Format, Geometry};
use offsetopt::trainer::icosphere;

fn main() -> offsetopt::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "formats".into()));
    std::fs::create_dir_all(&dir).map_err(|e| offsetopt::Error::io(&dir, e))?;
    let mesh = Geometry::Mesh(icosphere(2));
    let cloud = Geometry::Cloud(PointCloud::new(icosphere(1).vertices)?);
    let jobs = [
        ("sphere.obj", &mesh, Format::Obj),
        ("sphere_ascii.ply", &mesh, Format::PlyAscii),
        ("sphere.ply", &mesh, Format::PlyBinary),
        ("points.xyz", &cloud, Format::Xyz),
    ];
    for (name, g, format) in jobs {
        let path = dir.join(name);
        store_geometry(g, &path, format)?;
        let back = load_geometry(&path)?;
        let size = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
        let kind = match &back {
            Geometry::Mesh(m) => format!("mesh with {} faces", m.faces.len()),
            Geometry::Cloud(c) => format!("cloud of {} points", c.len()),
        };
        println!("{name}: {size} bytes, read back as {kind}, {} vertices", back.points().len());
    }
    Ok(())
}
