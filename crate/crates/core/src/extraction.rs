//! Turning per-point triangle probabilities into a mesh.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geometry::vec3::{cross, dot, norm, sub, Point3};
use crate::geometry::Neighborhood;
use crate::mesh::{canonical_face, face_edges, Face, TriMesh};
use crate::network::TrianglePrediction;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Minimum probability of the best face in a row.
    pub p1: f64,
    /// Minimum probability of the runner-up face.
    pub p2: f64,
    /// Minimum angle in degrees between the two faces of a row.
    pub angle: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            p1: 0.8,
            p2: 0.5,
            angle: 120.0,
        }
    }
}

/// How a row's two candidates are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowRule {
    /// Best face on `p1`; runner-up additionally on `p2` and the angle.
    #[default]
    Gated,
    /// Both faces or neither.
    Strict,
}

/// A face proposed by row `row` of center `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub face: Face,
    pub probability: f64,
    pub center: usize,
    pub row: usize,
}

/// Angle in degrees between triangles `(p, qi, qj)` and `(p, qi, ql)`
/// measured through their normals.
pub fn dihedral_angle(p: Point3, qi: Point3, qj: Point3, ql: Point3) -> Result<f64> {
    let e = sub(qi, p);
    let nj = cross(e, sub(qj, p));
    let nl = cross(e, sub(ql, p));
    let (a, b) = (norm(nj), norm(nl));
    if a == 0.0 || b == 0.0 {
        return Err(Error::DegenerateTriangle);
    }
    let c = (dot(nj, nl) / (a * b)).clamp(-1.0, 1.0);
    Ok(c.acos().to_degrees())
}

/// Two largest entries of `row`, skipping `skip`; ties go to the lower column.
pub fn top_two(row: &[f64], skip: usize) -> Option<(usize, usize)> {
    let mut best: Option<usize> = None;
    let mut second: Option<usize> = None;
    for (j, &v) in row.iter().enumerate() {
        if j == skip {
            continue;
        }
        match best {
            None => best = Some(j),
            Some(b) if v > row[b] => {
                second = best;
                best = Some(j);
            }
            _ => match second {
                None => second = Some(j),
                Some(s) if v > row[s] => second = Some(j),
                _ => {}
            },
        }
    }
    Some((best?, second?))
}

/// Applies the row rule to every row of every center.
///
/// `centers[n]` is the point whose prediction is `pred` entry `n`;
/// `skip[n]` drops centers whose input was degenerate. Angles are measured on
/// `points`.
pub fn propose_faces<T: Real>(
    pred: &TrianglePrediction<T>,
    centers: &[usize],
    nbhd: &Neighborhood,
    points: &[Point3],
    skip: Option<&[bool]>,
    th: Thresholds,
    rule: RowRule,
) -> Vec<Proposal> {
    let k = pred.k;
    let mut out = Vec::new();
    let mut probs = vec![0.0; k];
    for (n, &c) in centers.iter().enumerate() {
        if skip.is_some_and(|s| s[n]) {
            continue;
        }
        let row_ids = nbhd.row(c);
        let m = pred.sym_matrix(n);
        for i in 0..k {
            for (j, p) in probs.iter_mut().enumerate() {
                *p = crate::network::sigmoid(m[i * k + j].to_f64_lossy());
            }
            let Some((j, l)) = top_two(&probs, i) else {
                continue;
            };
            let (pj, pl) = (probs[j], probs[l]);
            let first = pj >= th.p1;
            let second = first
                && pl >= th.p2
                && dihedral_angle(
                    points[c],
                    points[row_ids[i] as usize],
                    points[row_ids[j] as usize],
                    points[row_ids[l] as usize],
                )
                .is_ok_and(|a| a > th.angle);
            let take_first = match rule {
                RowRule::Gated => first,
                RowRule::Strict => second,
            };
            let tri = |x: usize| canonical_face([c as u32, row_ids[i], row_ids[x]]);
            if take_first {
                out.push(Proposal {
                    face: tri(j),
                    probability: pj,
                    center: c,
                    row: i,
                });
            }
            if second {
                out.push(Proposal {
                    face: tri(l),
                    probability: pl,
                    center: c,
                    row: i,
                });
            }
        }
    }
    out
}

/// Result of [`canonicalize_dedup`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dedup {
    pub faces: Vec<Face>,
    /// Inputs dropped for repeating a vertex.
    pub degenerate: usize,
}

/// Sorted-triple set semantics with lexicographic output order.
pub fn canonicalize_dedup(faces: &[Face]) -> Dedup {
    let mut degenerate = 0;
    let mut set = BTreeSet::new();
    for f in faces {
        let c = canonical_face(*f);
        if c[0] == c[1] || c[1] == c[2] {
            degenerate += 1;
        } else {
            set.insert(c);
        }
    }
    Dedup {
        faces: set.into_iter().collect(),
        degenerate,
    }
}

/// Deduplicated mesh over `points`; face confidence is the mean probability
/// of all proposals of that face.
pub fn assemble_mesh(points: &[Point3], proposals: &[Proposal]) -> TriMesh {
    let mut acc: BTreeMap<Face, (f64, usize)> = BTreeMap::new();
    for p in proposals {
        let c = canonical_face(p.face);
        if c[0] == c[1] || c[1] == c[2] {
            continue;
        }
        let e = acc.entry(c).or_insert((0.0, 0));
        e.0 += p.probability;
        e.1 += 1;
    }
    let (faces, conf) = acc.into_iter().map(|(f, (s, n))| (f, s / n as f64)).unzip();
    TriMesh {
        vertices: points.to_vec(),
        faces,
        confidences: Some(conf),
    }
}

/// Full extraction: per-row rules, then dedup.
#[allow(clippy::too_many_arguments)]
pub fn extract_faces<T: Real>(
    pred: &TrianglePrediction<T>,
    centers: &[usize],
    nbhd: &Neighborhood,
    points: &[Point3],
    skip: Option<&[bool]>,
    th: Thresholds,
    rule: RowRule,
) -> TriMesh {
    assemble_mesh(points, &propose_faces(pred, centers, nbhd, points, skip, th, rule))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStats {
    /// Adjacency count -> number of edges.
    pub histogram: BTreeMap<usize, usize>,
    pub edges: usize,
    /// Percentage of edges with at most two faces (100 for an empty mesh).
    pub manifold_percent: f64,
}

impl EdgeStats {
    /// `sum(adjacency * count)`, which equals `3F`.
    pub fn incidence_total(&self) -> usize {
        self.histogram.iter().map(|(a, c)| a * c).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("adjacency,edges\n");
        for (a, c) in &self.histogram {
            s.push_str(&format!("{a},{c}\n"));
        }
        s
    }
}

pub fn edge_adjacency_stats(mesh: &TriMesh) -> EdgeStats {
    let counts = mesh.edge_face_counts();
    let mut histogram = BTreeMap::new();
    for c in counts.values() {
        *histogram.entry(*c).or_insert(0) += 1;
    }
    let edges = counts.len();
    let ok = counts.values().filter(|c| **c <= 2).count();
    EdgeStats {
        histogram,
        edges,
        manifold_percent: if edges == 0 {
            100.0
        } else {
            100.0 * ok as f64 / edges as f64
        },
    }
}

/// Removes faces until every edge has at most two. Each round picks the edge
/// with the most faces (ties: smallest edge) and drops its lowest-confidence
/// face (ties: smallest face).
pub fn enforce_manifold(mesh: &TriMesh) -> TriMesh {
    let conf = |f: usize| mesh.confidences.as_ref().map_or(1.0, |c| c[f]);
    let mut edge_faces: BTreeMap<(u32, u32), BTreeSet<usize>> = BTreeMap::new();
    for (i, f) in mesh.faces.iter().enumerate() {
        for e in face_edges(*f) {
            edge_faces.entry(e).or_default().insert(i);
        }
    }
    let mut over: BTreeSet<(Reverse<usize>, (u32, u32))> = edge_faces
        .iter()
        .filter(|(_, fs)| fs.len() > 2)
        .map(|(e, fs)| (Reverse(fs.len()), *e))
        .collect();
    let mut alive = vec![true; mesh.faces.len()];
    while let Some(&(Reverse(_), edge)) = over.iter().next() {
        let victim = *edge_faces[&edge]
            .iter()
            .min_by(|&&a, &&b| {
                conf(a)
                    .total_cmp(&conf(b))
                    .then(canonical_face(mesh.faces[a]).cmp(&canonical_face(mesh.faces[b])))
            })
            .expect("over-subscribed edge has faces");
        alive[victim] = false;
        for e in face_edges(mesh.faces[victim]) {
            let fs = edge_faces.get_mut(&e).expect("edge present");
            let before = fs.len();
            over.remove(&(Reverse(before), e));
            fs.remove(&victim);
            if fs.len() > 2 {
                over.insert((Reverse(fs.len()), e));
            }
        }
    }
    let keep: Vec<usize> = (0..mesh.faces.len()).filter(|i| alive[*i]).collect();
    TriMesh {
        vertices: mesh.vertices.clone(),
        faces: keep.iter().map(|i| mesh.faces[*i]).collect(),
        confidences: mesh
            .confidences
            .as_ref()
            .map(|c| keep.iter().map(|i| c[*i]).collect()),
    }
}
