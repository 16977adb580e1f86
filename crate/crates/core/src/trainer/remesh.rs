//! Isotropic remeshing: repeated edge splits, collapses, valence-driven
//! flips and tangential relaxation, with every new position projected back
//! onto an analytic surface.

use crate::geometry::vec3::{add, cross, dist, dot, norm, scale, sub, Point3};
use crate::mesh::{Face, TriMesh};

use super::primitives::Surface;

struct Work<'a> {
    surface: &'a Surface,
    target: f64,
    verts: Vec<Point3>,
    faces: Vec<Face>,
    face_alive: Vec<bool>,
    vert_alive: Vec<bool>,
    boundary: Vec<bool>,
    vf: Vec<Vec<u32>>,
}

fn normal_of(v: &[Point3], f: Face) -> Point3 {
    let [a, b, c] = f.map(|i| v[i as usize]);
    cross(sub(b, a), sub(c, a))
}

impl<'a> Work<'a> {
    fn new(surface: &'a Surface, mesh: &TriMesh, target: f64) -> Self {
        let n = mesh.vertices.len();
        let mut vf = vec![Vec::new(); n];
        for (i, f) in mesh.faces.iter().enumerate() {
            for &v in f {
                vf[v as usize].push(i as u32);
            }
        }
        let mut boundary = vec![false; n];
        for (&(a, b), &c) in &mesh.edge_face_counts() {
            if c == 1 {
                boundary[a as usize] = true;
                boundary[b as usize] = true;
            }
        }
        Work {
            surface,
            target,
            verts: mesh.vertices.clone(),
            faces: mesh.faces.clone(),
            face_alive: vec![true; mesh.faces.len()],
            vert_alive: vec![true; n],
            boundary,
            vf,
        }
    }

    fn edge_faces(&self, a: u32, b: u32) -> Vec<u32> {
        self.vf[a as usize]
            .iter()
            .copied()
            .filter(|&f| self.faces[f as usize].contains(&b))
            .collect()
    }

    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self.vf[v as usize]
            .iter()
            .flat_map(|&f| self.faces[f as usize])
            .filter(|&x| x != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        let mut e: Vec<(u32, u32)> = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, a)| **a)
            .flat_map(|(f, _)| crate::mesh::face_edges(*f))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    fn len(&self, a: u32, b: u32) -> f64 {
        dist(self.verts[a as usize], self.verts[b as usize])
    }

    fn add_face(&mut self, f: Face) {
        let id = self.faces.len() as u32;
        self.faces.push(f);
        self.face_alive.push(true);
        for v in f {
            self.vf[v as usize].push(id);
        }
    }

    fn remove_face(&mut self, id: u32) {
        self.face_alive[id as usize] = false;
        for v in self.faces[id as usize] {
            self.vf[v as usize].retain(|&x| x != id);
        }
    }

    fn split_long(&mut self) {
        let hi = 4.0 / 3.0 * self.target;
        let mut long: Vec<(f64, (u32, u32))> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (self.len(a, b), (a, b)))
            .filter(|(l, _)| *l > hi)
            .collect();
        long.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        for (_, (a, b)) in long {
            let fs = self.edge_faces(a, b);
            if fs.is_empty() || self.len(a, b) <= hi {
                continue;
            }
            let on_boundary = fs.len() == 1;
            let mid = scale(add(self.verts[a as usize], self.verts[b as usize]), 0.5);
            let m = self.verts.len() as u32;
            self.verts.push(self.surface.project(mid));
            self.vert_alive.push(true);
            self.boundary.push(on_boundary);
            self.vf.push(Vec::new());
            for f in fs {
                let face = self.faces[f as usize];
                // Rotate so the split edge is (x, y) in face order.
                let r = (0..3)
                    .find(|&r| {
                        let (x, y) = (face[r], face[(r + 1) % 3]);
                        (x == a && y == b) || (x == b && y == a)
                    })
                    .expect("edge in face");
                let (x, y, c) = (face[r], face[(r + 1) % 3], face[(r + 2) % 3]);
                self.remove_face(f);
                self.add_face([x, m, c]);
                self.add_face([m, y, c]);
            }
        }
    }

    fn collapse_short(&mut self) {
        let lo = 0.8 * self.target;
        let hi = 4.0 / 3.0 * self.target;
        let mut short: Vec<(f64, (u32, u32))> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (self.len(a, b), (a, b)))
            .filter(|(l, _)| *l < lo)
            .collect();
        short.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for (_, (a, b)) in short {
            if !self.vert_alive[a as usize] || !self.vert_alive[b as usize] {
                continue;
            }
            if self.boundary[a as usize] || self.boundary[b as usize] {
                continue;
            }
            let fs = self.edge_faces(a, b);
            if fs.len() != 2 || self.len(a, b) >= lo {
                continue;
            }
            let na = self.neighbors(a);
            let nb = self.neighbors(b);
            let common: Vec<u32> = na.iter().copied().filter(|x| nb.contains(x)).collect();
            if common.len() != 2 {
                continue;
            }
            if common.iter().any(|&c| self.neighbors(c).len() <= 3) {
                continue;
            }
            if na.len() + nb.len() < 8 {
                continue;
            }
            let m = self
                .surface
                .project(scale(add(self.verts[a as usize], self.verts[b as usize]), 0.5));
            let too_long = na
                .iter()
                .chain(&nb)
                .filter(|&&x| x != a && x != b)
                .any(|&x| dist(m, self.verts[x as usize]) > hi);
            if too_long {
                continue;
            }
            // Reject collapses that fold any surviving face.
            let mut ok = true;
            for &v in &[a, b] {
                for &f in &self.vf[v as usize] {
                    if fs.contains(&f) {
                        continue;
                    }
                    let old = self.faces[f as usize];
                    let before = normal_of(&self.verts, old);
                    let moved = old.map(|x| if x == a || x == b { u32::MAX } else { x });
                    let pts = moved.map(|x| if x == u32::MAX { m } else { self.verts[x as usize] });
                    let after = cross(sub(pts[1], pts[0]), sub(pts[2], pts[0]));
                    if dot(before, after) <= 0.0 || norm(after) < 1e-3 * self.target * self.target {
                        ok = false;
                    }
                }
            }
            if !ok {
                continue;
            }
            for f in fs {
                self.remove_face(f);
            }
            let moved: Vec<u32> = self.vf[b as usize].clone();
            for f in moved {
                let face = &mut self.faces[f as usize];
                for x in face.iter_mut() {
                    if *x == b {
                        *x = a;
                    }
                }
                self.vf[a as usize].push(f);
            }
            self.vf[b as usize].clear();
            self.vert_alive[b as usize] = false;
            self.verts[a as usize] = m;
        }
    }

    fn target_valence(&self, v: u32) -> i64 {
        if self.boundary[v as usize] {
            4
        } else {
            6
        }
    }

    fn flip_edges(&mut self) {
        for (a, b) in self.edges() {
            let fs = self.edge_faces(a, b);
            if fs.len() != 2 {
                continue;
            }
            let f1 = self.faces[fs[0] as usize];
            let f2 = self.faces[fs[1] as usize];
            let opposite = |f: Face| *f.iter().find(|&&x| x != a && x != b).unwrap();
            let (c, d) = (opposite(f1), opposite(f2));
            if c == d || self.neighbors(c).contains(&d) {
                continue;
            }
            let val: Vec<i64> = [a, b, c, d].iter().map(|&v| self.neighbors(v).len() as i64).collect();
            if val[0] <= 3 || val[1] <= 3 {
                continue;
            }
            let tgt: Vec<i64> = [a, b, c, d].iter().map(|&v| self.target_valence(v)).collect();
            let dev = |delta: [i64; 4]| -> i64 {
                (0..4).map(|i| (val[i] + delta[i] - tgt[i]).pow(2)).sum()
            };
            if dev([-1, -1, 1, 1]) >= dev([0; 4]) {
                continue;
            }
            // Orient so that f1 = (a, b, c) in cyclic order.
            let f1_has_ab = (0..3).any(|r| f1[r] == a && f1[(r + 1) % 3] == b);
            let (x, y) = if f1_has_ab { (a, b) } else { (b, a) };
            let n1 = [c, x, d];
            let n2 = [d, y, c];
            let ref_n = add(normal_of(&self.verts, f1), normal_of(&self.verts, f2));
            let nn1 = normal_of(&self.verts, n1);
            let nn2 = normal_of(&self.verts, n2);
            let min_area = 1e-3 * self.target * self.target;
            if dot(nn1, ref_n) <= 0.0 || dot(nn2, ref_n) <= 0.0 || norm(nn1) < min_area || norm(nn2) < min_area {
                continue;
            }
            self.remove_face(fs[0]);
            self.remove_face(fs[1]);
            self.add_face(n1);
            self.add_face(n2);
        }
    }

    fn relax(&mut self) {
        let mut next = self.verts.clone();
        for v in 0..self.verts.len() as u32 {
            if !self.vert_alive[v as usize] || self.boundary[v as usize] || self.vf[v as usize].is_empty() {
                continue;
            }
            let nb = self.neighbors(v);
            let mut c = [0.0; 3];
            for &q in &nb {
                c = add(c, self.verts[q as usize]);
            }
            c = scale(c, 1.0 / nb.len() as f64);
            let mut n = [0.0; 3];
            for &f in &self.vf[v as usize] {
                n = add(n, normal_of(&self.verts, self.faces[f as usize]));
            }
            let p = self.verts[v as usize];
            let mut u = sub(c, p);
            if let Some(nn) = crate::geometry::vec3::normalize(n) {
                u = sub(u, scale(nn, dot(u, nn)));
            }
            next[v as usize] = self.surface.project(add(p, scale(u, 0.5)));
        }
        self.verts = next;
    }

    fn finish(self) -> TriMesh {
        let mut remap = vec![u32::MAX; self.verts.len()];
        let mut vertices = Vec::new();
        for (i, f) in self.faces.iter().enumerate() {
            if !self.face_alive[i] {
                continue;
            }
            for &v in f {
                if remap[v as usize] == u32::MAX {
                    remap[v as usize] = vertices.len() as u32;
                    vertices.push(self.verts[v as usize]);
                }
            }
        }
        let faces = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, a)| **a)
            .map(|(f, _)| f.map(|v| remap[v as usize]))
            .collect();
        TriMesh {
            vertices,
            faces,
            confidences: None,
        }
    }
}

/// Remeshes `mesh` (lying on `surface`) towards edge length `target`.
pub fn remesh(surface: &Surface, mesh: &TriMesh, target: f64, iterations: usize) -> TriMesh {
    let mut w = Work::new(surface, mesh, target);
    for _ in 0..iterations {
        w.split_long();
        w.collapse_short();
        w.flip_edges();
        w.relax();
    }
    w.finish()
}
