//! Writes remeshed training primitives and density-biased sample clouds.
//!
//! cargo run --release --example generate_data -- [out_dir]

use std::path::PathBuf;

use offsetopt::geometry::PointCloud;
use offsetopt::io::{save_cloud, save_mesh};
use offsetopt::mesh::coefficient_of_variation;
use offsetopt::sampling::{sample_surface_with_density, wave_density};
use offsetopt::trainer::{generate_training_mesh, MeshSpec, PrimitiveKind};

fn main() -> offsetopt::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&out).map_err(|e| offsetopt::Error::io(&out, e))?;
    let kinds = [PrimitiveKind::Sphere, PrimitiveKind::Torus, PrimitiveKind::RoundedBox, PrimitiveKind::HeightField];
    for (i, kind) in kinds.into_iter().enumerate() {
        let mesh = generate_training_mesh(&MeshSpec { kind, edge: 0.08, seed: i as u64 })?;
        let cv = coefficient_of_variation(&mesh.edge_lengths());
        let path = out.join(format!("{i:03}_{}.obj", kind.name()));
        save_mesh(&mesh, &path)?;
        // Denser on one side than the other.
        let samples = sample_surface_with_density(&mesh, 5000, i as u64, wave_density(0.2))?;
        save_cloud(&PointCloud::new(samples.points)?, path.with_extension("xyz"))?;
        println!(
            "{}: {} vertices, {} faces, edge-length CV {cv:.3}",
            path.display(),
            mesh.vertices.len(),
            mesh.faces.len()
        );
    }
    Ok(())
}
