//! Supervised training on synthetic near-uniform meshes.

pub mod primitives;
pub mod remesh;
pub mod train;

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::grid::SpatialGrid;
use crate::geometry::vec3::{scale, Point3};
use crate::geometry::Neighborhood;
use crate::mesh::TriMesh;
use crate::network::LabelSet;

pub use primitives::{icosphere, Surface};
pub use remesh::remesh;
pub use train::{loss_trace_csv, train, train_epoch, LossPoint, Optimizer, TrainConfig, TrainState, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    Sphere,
    Torus,
    RoundedBox,
    HeightField,
    /// Subdivided icosahedron; the level is derived from the edge length.
    Icosphere,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 5] = [
        PrimitiveKind::Sphere,
        PrimitiveKind::Torus,
        PrimitiveKind::RoundedBox,
        PrimitiveKind::HeightField,
        PrimitiveKind::Icosphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Sphere => "sphere",
            PrimitiveKind::Torus => "torus",
            PrimitiveKind::RoundedBox => "box",
            PrimitiveKind::HeightField => "heightfield",
            PrimitiveKind::Icosphere => "icosphere",
        }
    }
}

impl FromStr for PrimitiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PrimitiveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "unknown primitive {s:?}; expected one of sphere, torus, box, heightfield, icosphere"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    pub kind: PrimitiveKind,
    /// Target edge length; shapes are sized to fit roughly in the unit sphere.
    pub edge: f64,
    pub seed: u64,
}

/// Remesh passes used by [`generate_training_mesh`].
pub const REMESH_ITERATIONS: usize = 10;

pub fn generate_training_mesh(spec: &MeshSpec) -> Result<TriMesh> {
    if !(spec.edge > 0.0 && spec.edge < 1.0) {
        return Err(Error::InvalidSpec(format!("edge length {} outside (0, 1)", spec.edge)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let surface = match spec.kind {
        PrimitiveKind::Icosphere => {
            // Level whose edge length is closest to the request.
            let level = (0..7u32)
                .min_by(|a, b| {
                    let e = |l: u32| 1.1 / 2f64.powi(l as i32);
                    (e(*a) - spec.edge).abs().total_cmp(&(e(*b) - spec.edge).abs())
                })
                .unwrap();
            return Ok(icosphere(level));
        }
        PrimitiveKind::Sphere => Surface::Sphere { radius: 1.0 },
        PrimitiveKind::Torus => Surface::Torus {
            major: 0.7,
            minor: rng.gen_range(0.18..0.3),
        },
        PrimitiveKind::RoundedBox => {
            let half = [rng.gen_range(0.45..0.6), rng.gen_range(0.3..0.6), rng.gen_range(0.25..0.6)];
            let min_half = half.iter().cloned().fold(f64::INFINITY, f64::min);
            Surface::RoundedBox {
                half,
                round: rng.gen_range(0.25..0.5) * min_half,
            }
        }
        PrimitiveKind::HeightField => Surface::random_height_field(rng.gen()),
    };
    let mut seed_mesh = surface.seed_mesh(spec.edge);
    // Perturb the seed so different seeds give different connectivity.
    let amp = 0.3 * spec.edge;
    for v in &mut seed_mesh.vertices {
        let j = [rng.gen_range(-amp..amp), rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)];
        *v = surface.project(crate::geometry::vec3::add(*v, j));
    }
    Ok(remesh(&surface, &seed_mesh, spec.edge, REMESH_ITERATIONS))
}

/// Ground-truth matrices for `centers` (mesh vertex ids) of `mesh` using
/// neighbor rows of `nbhd`. A center is disabled when one of its faces has a
/// vertex outside its K-neighborhood, or when it has no faces.
pub fn build_labels(mesh: &TriMesh, vertex_faces: &[Vec<usize>], centers: &[usize], nbhd: &Neighborhood) -> Result<LabelSet> {
    let k = nbhd.k();
    let mut labels = LabelSet::new(centers.len(), k);
    for (n, &c) in centers.iter().enumerate() {
        if c >= mesh.vertices.len() || c >= nbhd.len() {
            return Err(Error::InvalidInput(format!("center {c} is not a mesh vertex")));
        }
        let row = nbhd.row(c);
        let pos = |v: u32| row.iter().position(|&x| x == v);
        let faces = &vertex_faces[c];
        if faces.is_empty() {
            labels.disable_point(n);
            continue;
        }
        for &f in faces {
            let others: Vec<u32> = mesh.faces[f].iter().copied().filter(|&v| v as usize != c).collect();
            match (pos(others[0]), pos(others[1])) {
                (Some(i), Some(j)) => labels.set_pair(n, i, j),
                _ => {
                    labels.disable_point(n);
                    break;
                }
            }
        }
    }
    Ok(labels)
}

/// Single-center convenience wrapper around [`build_labels`].
pub fn build_label_matrix(mesh: &TriMesh, center: usize, nbhd: &Neighborhood) -> Result<LabelSet> {
    build_labels(mesh, &mesh.vertex_faces(), &[center], nbhd)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Augmentation {
    pub rotate: bool,
    pub scale_range: (f64, f64),
    /// Jitter standard deviation as a fraction of the median nearest-neighbor distance.
    pub jitter: f64,
}

impl Default for Augmentation {
    fn default() -> Self {
        Augmentation {
            rotate: true,
            scale_range: (0.8, 1.25),
            jitter: 0.1,
        }
    }
}

impl Augmentation {
    pub const NONE: Augmentation = Augmentation {
        rotate: false,
        scale_range: (1.0, 1.0),
        jitter: 0.0,
    };
}

/// Uniform random rotation matrix (row-major).
pub fn random_rotation<R: Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos());
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Median distance from each point to its nearest other point.
pub fn median_nn_distance(points: &[Point3]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let grid = SpatialGrid::new(points);
    let mut d: Vec<f64> = (0..points.len())
        .map(|i| grid.knn(points[i], 1, Some(i))[0].dist2.sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Rotation, uniform scaling and isotropic jitter; deterministic in `seed`.
pub fn augment_points(points: &[Point3], aug: &Augmentation, seed: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = if aug.rotate {
        random_rotation(&mut rng)
    } else {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    };
    let (lo, hi) = aug.scale_range;
    let s = if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let mut out: Vec<Point3> = points
        .iter()
        .map(|p| {
            let r = [0, 1, 2].map(|i| rot[i][0] * p[0] + rot[i][1] * p[1] + rot[i][2] * p[2]);
            scale(r, s)
        })
        .collect();
    if aug.jitter > 0.0 {
        let sigma = aug.jitter * median_nn_distance(&out);
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            for p in &mut out {
                for c in p.iter_mut() {
                    *c += normal.sample(&mut rng);
                }
            }
        }
    }
    out
}
