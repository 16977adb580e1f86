//! Random points on triangle meshes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::vec3::{add, normalize, scale, sub, Point3};
use crate::mesh::TriMesh;

/// Surface samples with the unit normal of the face each came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampledSurface {
    pub points: Vec<Point3>,
    pub normals: Vec<Point3>,
    /// Source face per sample.
    pub faces: Vec<usize>,
}

impl SampledSurface {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Samples whose index passes `keep`.
    pub fn subset(&self, keep: &[bool]) -> SampledSurface {
        let pick = |v: &[Point3]| -> Vec<Point3> { v.iter().zip(keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect() };
        SampledSurface {
            points: pick(&self.points),
            normals: pick(&self.normals),
            faces: self.faces.iter().zip(keep).filter(|(_, k)| **k).map(|(f, _)| *f).collect(),
        }
    }
}

/// Area-weighted face picker.
struct FaceTable {
    cumulative: Vec<f64>,
    normals: Vec<Option<Point3>>,
}

impl FaceTable {
    fn new(mesh: &TriMesh) -> Result<Self> {
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(mesh.faces.len());
        let mut normals = Vec::with_capacity(mesh.faces.len());
        for f in 0..mesh.faces.len() {
            let n = normalize(mesh.face_normal(f));
            let area = if n.is_some() { mesh.face_area(f) } else { 0.0 };
            total += area;
            cumulative.push(total);
            normals.push(n);
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Sampling("mesh has no face with positive area".into()));
        }
        Ok(FaceTable { cumulative, normals })
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let r = rng.gen::<f64>() * total;
        let f = self.cumulative.partition_point(|c| *c <= r).min(self.cumulative.len() - 1);
        // Zero-area faces share their predecessor's cumulative value and are
        // never selected; step past any at the end of the table.
        (0..=f).rev().find(|&i| self.normals[i].is_some()).unwrap_or(f)
    }
}

fn point_in_face<R: Rng>(mesh: &TriMesh, f: usize, rng: &mut R) -> Point3 {
    let [a, b, c] = mesh.face_points(f);
    let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
    let s = r1.sqrt();
    add(a, add(scale(sub(b, a), s * (1.0 - r2)), scale(sub(c, a), s * r2)))
}

/// `n` area-weighted uniform samples; deterministic in `seed`.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<SampledSurface> {
    sample_surface_with_density(mesh, n, seed, |_| 1.0)
}

/// `n` samples with density proportional to `area * density(p)`, drawn by
/// rejection. `density` must lie in `[0, 1]` and be positive somewhere.
pub fn sample_surface_with_density(
    mesh: &TriMesh,
    n: usize,
    seed: u64,
    density: impl Fn(Point3) -> f64,
) -> Result<SampledSurface> {
    mesh.validate()?;
    let table = FaceTable::new(mesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SampledSurface {
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        faces: Vec::with_capacity(n),
    };
    let limit = n.saturating_mul(10_000).max(10_000);
    let mut tries = 0usize;
    while out.points.len() < n {
        tries += 1;
        if tries > limit {
            return Err(Error::Sampling("density rejects almost every candidate".into()));
        }
        let f = table.pick(&mut rng);
        let p = point_in_face(mesh, f, &mut rng);
        let w = density(p);
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!("density {w} outside [0, 1]")));
        }
        if w < 1.0 && rng.gen::<f64>() >= w {
            continue;
        }
        out.points.push(p);
        out.normals.push(table.normals[f].expect("positive-area face"));
        out.faces.push(f);
    }
    Ok(out)
}

/// Density varying smoothly between `low` and 1 along the x axis, with a
/// period of about two units; for non-uniform test clouds.
pub fn wave_density(low: f64) -> impl Fn(Point3) -> f64 {
    let low = low.clamp(0.0, 1.0);
    move |p: Point3| low + (1.0 - low) * (0.5 + 0.5 * (3.0 * p[0]).sin())
}
