//! End-to-end reconstruction: dedup, voxelize, normalize, optimize offsets,
//! extract faces, optionally enforce edge-manifoldness.

use crate::error::Result;
use crate::extraction::{edge_adjacency_stats, enforce_manifold, extract_faces, EdgeStats};
use crate::geometry::voxel::voxel_subsample_indices;
use crate::geometry::{estimate_voxel_size, knn_search, PointCloud};
use crate::mesh::TriMesh;
use crate::network::NetworkParams;
use crate::optimizer::{optimize, IterationDiagnostics, OptimizerConfig};
use crate::real::Real;

/// Voxel grid applied before reconstruction, in input units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Voxel {
    #[default]
    Off,
    Size(f64),
    /// Largest nearest-neighbor distance, estimated on a subsample.
    Auto,
}

/// Points sampled when estimating the automatic voxel size.
pub const AUTO_VOXEL_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructConfig {
    pub k: usize,
    pub voxel: Voxel,
    pub optimizer: OptimizerConfig,
    pub strict_manifold: bool,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            k: 50,
            voxel: Voxel::Off,
            optimizer: OptimizerConfig::default(),
            strict_manifold: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Vertices are the surviving input points in input coordinates.
    pub mesh: TriMesh,
    /// Per mesh vertex, its index in the input cloud.
    pub source: Vec<usize>,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub stats: EdgeStats,
    pub voxel_size: Option<f64>,
}

/// Rounds unit-sphere coordinates to `f32` precision so that clouds which
/// differ only by a uniform scale normalize to identical values.
fn quantize(cloud: &mut PointCloud) {
    for p in &mut cloud.points {
        *p = p.map(|c| c as f32 as f64);
    }
}

pub fn reconstruct<T: Real>(cloud: &PointCloud, params: &NetworkParams<T>, cfg: &ReconstructConfig) -> Result<Reconstruction> {
    cfg.optimizer.validate()?;
    let (unique, dedup_src) = cloud.dedup();
    let voxel_size = match cfg.voxel {
        Voxel::Off => None,
        Voxel::Size(v) => Some(v),
        Voxel::Auto => Some(estimate_voxel_size(&unique, AUTO_VOXEL_SAMPLES)?),
    };
    let (kept, kept_src) = match voxel_size {
        Some(v) => voxel_subsample_indices(&unique, v)?,
        None => (unique.clone(), (0..unique.len()).collect()),
    };
    let source: Vec<usize> = kept_src.iter().map(|&i| dedup_src[i]).collect();
    let mut norm = kept.unit_sphere_normalized()?;
    quantize(&mut norm);
    let nbhd = knn_search(&norm, cfg.k)?;
    let opt = optimize(&norm.points, &nbhd, params, &cfg.optimizer)?;
    let centers: Vec<usize> = (0..norm.len()).collect();
    let mut mesh = extract_faces(
        &opt.prediction,
        &centers,
        &nbhd,
        &norm.points,
        Some(&opt.degenerate),
        cfg.optimizer.thresholds,
        cfg.optimizer.rule,
    );
    if cfg.strict_manifold {
        mesh = enforce_manifold(&mesh);
    }
    mesh.vertices = kept.points.clone();
    let stats = edge_adjacency_stats(&mesh);
    Ok(Reconstruction {
        mesh,
        source,
        diagnostics: opt.diagnostics,
        stats,
        voxel_size,
    })
}
