//! Reconstructs a mesh from a point cloud file with a trained network.
//!
//! cargo run --release --example reconstruct_cloud -- net.oopt cloud.xyz out.obj [voxel]

use offsetopt::io::{load_cloud, save_mesh};
use offsetopt::network::load_params;
use offsetopt::optimizer::{diagnostics_csv, OptimizerConfig};
use offsetopt::pipeline::{reconstruct, ReconstructConfig, Voxel};

fn main() -> offsetopt::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 3 {
        eprintln!("usage: reconstruct_cloud <params> <cloud> <out.obj|out.ply> [voxel]");
        std::process::exit(1);
    }
    let params = load_params(&args[0])?;
    let cloud = load_cloud(&args[1])?;
    let voxel = args.get(3).and_then(|v| v.parse().ok()).map_or(Voxel::Auto, Voxel::Size);
    let cfg = ReconstructConfig {
        k: 16,
        voxel,
        optimizer: OptimizerConfig { iterations: 100, ..OptimizerConfig::default() },
        strict_manifold: false,
    };
    let r = reconstruct(&cloud, &params, &cfg)?;
    save_mesh(&r.mesh, &args[2])?;
    std::fs::write(format!("{}.diagnostics.csv", args[2]), diagnostics_csv(&r.diagnostics)).expect("write diagnostics");
    println!(
        "{} input points -> {} vertices, {} faces, {:.2}% manifold edges (voxel {:?})",
        cloud.len(),
        r.mesh.vertices.len(),
        r.mesh.faces.len(),
        r.stats.manifold_percent,
        r.voxel_size
    );
    Ok(())
}
