//! Surface metrics between a mesh and a perturbed copy of it.
//!
//! cargo run --release --example evaluate_metrics -- [noise]

use offsetopt::metrics::{evaluate, MetricParams};
use offsetopt::mesh::TriMesh;
use offsetopt::trainer::{generate_training_mesh, MeshSpec, PrimitiveKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> offsetopt::Result<()> {
    let noise: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.005);
    let gt = generate_training_mesh(&MeshSpec { kind: PrimitiveKind::RoundedBox, edge: 0.05, seed: 1 })?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noisy = TriMesh::new(
        gt.vertices.iter().map(|p| p.map(|c| c + rng.gen_range(-noise..noise))).collect(),
        gt.faces.clone(),
    )?;
    let params = MetricParams { samples: 50_000, ..MetricParams::default() };
    println!("identical meshes (independent samples, so this is the sampling floor):");
    print!("{}", evaluate(&gt, &gt, &params)?.to_table());
    println!("vertices jittered by up to {noise}:");
    let report = evaluate(&gt, &noisy, &params)?;
    print!("{}", report.to_table());
    print!("{}", report.to_csv());
    Ok(())
}
