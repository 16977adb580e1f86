//! Indexed triangle meshes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::vec3::{cross, norm, sub, Point3};

pub type Face = [u32; 3];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<Face>,
    /// Optional per-face confidence, parallel to `faces`.
    pub confidences: Option<Vec<f64>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<Face>) -> Result<Self> {
        let mesh = TriMesh {
            vertices,
            faces,
            confidences: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks index range and repeated vertices.
    pub fn validate(&self) -> Result<()> {
        let v = self.vertices.len() as u64;
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&x| x as u64 >= v) {
                return Err(Error::InvalidInput(format!("face {i} {f:?} indexes past {v} vertices")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidInput(format!("face {i} {f:?} repeats a vertex")));
            }
        }
        if let Some(c) = &self.confidences {
            if c.len() != self.faces.len() {
                return Err(Error::InvalidInput(format!(
                    "{} confidences for {} faces",
                    c.len(),
                    self.faces.len()
                )));
            }
        }
        Ok(())
    }

    pub fn face_points(&self, f: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unnormalized face normal (twice the area vector).
    pub fn face_normal(&self, f: usize) -> Point3 {
        let [a, b, c] = self.face_points(f);
        cross(sub(b, a), sub(c, a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * norm(self.face_normal(f))
    }

    /// Face count per undirected edge, keyed by `(lo, hi)`.
    pub fn edge_face_counts(&self) -> BTreeMap<(u32, u32), usize> {
        let mut m = BTreeMap::new();
        for f in &self.faces {
            for e in face_edges(*f) {
                *m.entry(e).or_insert(0) += 1;
            }
        }
        m
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        let used: std::collections::BTreeSet<u32> = self.faces.iter().flatten().copied().collect();
        used.len() as i64 - self.edge_face_counts().len() as i64 + self.faces.len() as i64
    }

    /// All edge lengths, one per undirected edge.
    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edge_face_counts()
            .keys()
            .map(|&(a, b)| norm(sub(self.vertices[a as usize], self.vertices[b as usize])))
            .collect()
    }

    /// Faces adjacent to each vertex.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (i, f) in self.faces.iter().enumerate() {
            for &v in f {
                out[v as usize].push(i);
            }
        }
        out
    }
}

/// The three undirected edges of a face as `(lo, hi)` pairs.
pub fn face_edges(f: Face) -> [(u32, u32); 3] {
    let e = |a: u32, b: u32| if a < b { (a, b) } else { (b, a) };
    [e(f[0], f[1]), e(f[1], f[2]), e(f[2], f[0])]
}

/// Ascending vertex order.
pub fn canonical_face(mut f: Face) -> Face {
    f.sort_unstable();
    f
}

/// Coefficient of variation (std / mean) of a sample.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt() / mean
}
