//! Manifold-edge percentage of a non-uniform cloud with and without offset
//! optimization, plus the per-iteration trace.
//!
//! cargo run --release --example offset_trend -- net.oopt [iterations]

use offsetopt::geometry::PointCloud;
use offsetopt::network::load_params;
use offsetopt::optimizer::OptimizerConfig;
use offsetopt::pipeline::{reconstruct, ReconstructConfig, Voxel};
use offsetopt::sampling::{sample_surface_with_density, wave_density};
use offsetopt::trainer::{generate_training_mesh, MeshSpec, PrimitiveKind};

fn main() -> offsetopt::Result<()> {
    let mut args = std::env::args().skip(1);
    let params = load_params(args.next().unwrap_or_else(|| "net.oopt".into()))?;
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);

    let shape = generate_training_mesh(&MeshSpec { kind: PrimitiveKind::RoundedBox, edge: 0.03, seed: 999 })?;
    let samples = sample_surface_with_density(&shape, 30_000, 5, wave_density(0.2))?;
    let cloud = PointCloud::new(samples.points)?;
    let run = |t: usize| {
        let cfg = ReconstructConfig {
            k: 16,
            voxel: Voxel::Size(0.08),
            optimizer: OptimizerConfig { iterations: t, ..OptimizerConfig::default() },
            strict_manifold: false,
        };
        reconstruct(&cloud, &params, &cfg)
    };
    let base = run(0)?;
    println!("T=0: {} faces, {:.2}% manifold edges", base.mesh.faces.len(), base.stats.manifold_percent);
    let opt = run(iterations)?;
    for d in opt.diagnostics.iter().filter(|d| d.iteration % 10 == 0) {
        println!(
            "  iteration {:3}  loss {:.4}  step {:.4}  applied {:5.1}%  manifold {:.2}%",
            d.iteration, d.loss, d.lr, d.applied_percent, d.manifold_percent
        );
    }
    println!("T={iterations}: {} faces, {:.2}% manifold edges", opt.mesh.faces.len(), opt.stats.manifold_percent);
    Ok(())
}
