//! Face extraction from per-point probability matrices, edge statistics and
//! manifold repair, driven by ground-truth labels instead of a network.
//!
//! cargo run --release --example extraction_stats

use offsetopt::extraction::{edge_adjacency_stats, enforce_manifold, extract_faces, RowRule, Thresholds};
use offsetopt::geometry::{knn_search, PointCloud};
use offsetopt::network::TrianglePrediction;
use offsetopt::trainer::{build_labels, icosphere};

fn main() -> offsetopt::Result<()> {
    let mesh = icosphere(3);
    let k = 16;
    let nb = knn_search(&PointCloud::new(mesh.vertices.clone())?, k)?;
    let centers: Vec<usize> = (0..mesh.vertices.len()).collect();
    let labels = build_labels(&mesh, &mesh.vertex_faces(), &centers, &nb)?;

    // Confident logits from the labels, with a few spurious entries mixed in.
    let mut sym = vec![-6.0f32; centers.len() * k * k];
    for (n, _) in centers.iter().enumerate() {
        for i in 0..k {
            for j in 0..k {
                if labels.label(n, i, j) == 1 {
                    sym[(n * k + i) * k + j] = 6.0;
                }
            }
        }
        if n % 50 == 0 {
            sym[(n * k + k - 1) * k + k - 2] = 6.0;
            sym[(n * k + k - 2) * k + k - 1] = 6.0;
        }
    }
    let pred = TrianglePrediction { points: centers.len(), k, raw: sym.clone(), sym };

    for rule in [RowRule::Gated, RowRule::Strict] {
        let out = extract_faces(&pred, &centers, &nb, &mesh.vertices, None, Thresholds::default(), rule);
        let stats = edge_adjacency_stats(&out);
        println!(
            "{rule:?}: {} faces (truth {}), {:.2}% manifold edges, histogram {:?}",
            out.faces.len(),
            mesh.faces.len(),
            stats.manifold_percent,
            stats.histogram
        );
        let fixed = enforce_manifold(&out);
        println!("  after repair: {} faces, {:.2}% manifold edges", fixed.faces.len(), edge_adjacency_stats(&fixed).manifold_percent);
    }
    print!("{}", edge_adjacency_stats(&mesh).to_csv());
    Ok(())
}
