//! Analytic surfaces used to synthesize training meshes.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::vec3::{add, norm, normalize, scale, sub, Point3};
use crate::mesh::{Face, TriMesh};

/// Subdivided icosahedron on the unit sphere: `10 * 4^level + 2` vertices.
pub fn icosphere(level: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| normalize(*v).unwrap())
    .collect();
    let mut faces: Vec<Face> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Point3>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = scale(add(verts[a as usize], verts[b as usize]), 0.5);
                verts.push(normalize(m).unwrap());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh {
        vertices: verts,
        faces,
        confidences: None,
    }
}

/// Surfaces with a closest-point style projection.
#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Sphere {
        radius: f64,
    },
    Torus {
        major: f64,
        minor: f64,
    },
    /// Box with half extents `half`, edges rounded with radius `round`.
    RoundedBox {
        half: Point3,
        round: f64,
    },
    /// Open patch `z = h(x, y)` over `[-extent, extent]^2`, with `h` a sum of
    /// Gaussian bumps `(cx, cy, amplitude, width)`.
    HeightField {
        extent: f64,
        bumps: Vec<[f64; 4]>,
    },
}

impl Surface {
    /// Random smooth height field with gentle slopes.
    pub fn random_height_field(seed: u64) -> Surface {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..rng.gen_range(3..7))
            .map(|_| {
                let w = rng.gen_range(0.35..0.8);
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-0.2..0.2) * w,
                    w,
                ]
            })
            .collect();
        Surface::HeightField { extent: 1.0, bumps }
    }

    fn height(bumps: &[[f64; 4]], x: f64, y: f64) -> f64 {
        bumps
            .iter()
            .map(|[cx, cy, a, w]| {
                let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                a * (-d2 / (w * w)).exp()
            })
            .sum()
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Surface::HeightField { .. })
    }

    /// Maps a point near the surface onto it.
    pub fn project(&self, p: Point3) -> Point3 {
        match self {
            Surface::Sphere { radius } => match normalize(p) {
                Some(n) => scale(n, *radius),
                None => [*radius, 0.0, 0.0],
            },
            Surface::Torus { major, minor } => {
                let rxy = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let ring = if rxy > 0.0 {
                    [major * p[0] / rxy, major * p[1] / rxy, 0.0]
                } else {
                    [*major, 0.0, 0.0]
                };
                let d = sub(p, ring);
                match normalize(d) {
                    Some(n) => add(ring, scale(n, *minor)),
                    None => add(ring, [0.0, 0.0, *minor]),
                }
            }
            Surface::RoundedBox { half, round } => {
                let inner = [half[0] - round, half[1] - round, half[2] - round];
                let q = [
                    p[0].clamp(-inner[0], inner[0]),
                    p[1].clamp(-inner[1], inner[1]),
                    p[2].clamp(-inner[2], inner[2]),
                ];
                let d = sub(p, q);
                if norm(d) > 1e-12 {
                    return add(q, scale(d, round / norm(d)));
                }
                // Inside the inner box: push out through the nearest face.
                let mut axis = 0;
                let mut gap = f64::INFINITY;
                for a in 0..3 {
                    let g = inner[a] - p[a].abs();
                    if g < gap {
                        gap = g;
                        axis = a;
                    }
                }
                let mut out = p;
                out[axis] = p[axis].signum() * half[axis];
                if p[axis] == 0.0 {
                    out[axis] = half[axis];
                }
                out
            }
            Surface::HeightField { extent, bumps } => {
                let x = p[0].clamp(-extent, *extent);
                let y = p[1].clamp(-extent, *extent);
                [x, y, Self::height(bumps, x, y)]
            }
        }
    }

    /// Coarse mesh to start remeshing from, with edges near `edge`.
    pub fn seed_mesh(&self, edge: f64) -> TriMesh {
        match self {
            Surface::Sphere { .. } | Surface::RoundedBox { .. } => {
                let mut m = icosphere(2);
                for v in &mut m.vertices {
                    *v = self.project(*v);
                }
                m
            }
            Surface::Torus { major, minor } => {
                let nu = ((2.0 * PI * major) / (2.0 * edge)).ceil().max(8.0) as u32;
                let nv = ((2.0 * PI * minor) / (2.0 * edge)).ceil().max(4.0) as u32;
                let mut verts = Vec::new();
                for i in 0..nu {
                    let u = 2.0 * PI * i as f64 / nu as f64;
                    for j in 0..nv {
                        let v = 2.0 * PI * j as f64 / nv as f64;
                        let r = major + minor * v.cos();
                        verts.push([r * u.cos(), r * u.sin(), minor * v.sin()]);
                    }
                }
                let id = |i: u32, j: u32| (i % nu) * nv + (j % nv);
                let mut faces = Vec::new();
                for i in 0..nu {
                    for j in 0..nv {
                        let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                        faces.push([a, b, c]);
                        faces.push([a, c, d]);
                    }
                }
                TriMesh {
                    vertices: verts,
                    faces,
                    confidences: None,
                }
            }
            Surface::HeightField { extent, .. } => {
                let n = ((2.0 * extent) / (2.0 * edge)).ceil().max(2.0) as u32;
                let step = 2.0 * extent / n as f64;
                let mut verts = Vec::new();
                for i in 0..=n {
                    for j in 0..=n {
                        verts.push(self.project([-extent + i as f64 * step, -extent + j as f64 * step, 0.0]));
                    }
                }
                let id = |i: u32, j: u32| i * (n + 1) + j;
                let mut faces = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                        if (i + j) % 2 == 0 {
                            faces.push([a, b, c]);
                            faces.push([a, c, d]);
                        } else {
                            faces.push([a, b, d]);
                            faces.push([b, c, d]);
                        }
                    }
                }
                TriMesh {
                    vertices: verts,
                    faces,
                    confidences: None,
                }
            }
        }
    }
}
