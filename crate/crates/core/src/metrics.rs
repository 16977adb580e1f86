//! Surface-quality metrics: Chamfer distances, F-score, normal agreement and
//! their restrictions to sharp-feature samples.
//!
//! Every nearest-neighbor query goes through [`SpatialGrid`], which returns
//! exactly what a brute-force scan would; the `*_brute_force` functions are
//! the quadratic references used to check that.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::grid::Candidate;
use crate::geometry::vec3::{cross, dot, norm, Point3};
use crate::geometry::{ScaleRecord, SpatialGrid};
use crate::mesh::TriMesh;
use crate::sampling::{sample_surface, SampledSurface};

/// Chamfer distance flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Mean distance.
    L1,
    /// Mean squared distance.
    L2,
}

fn check_sets(a: &[Point3], b: &[Point3]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput(format!(
            "metric needs two non-empty point sets, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Nearest point of `to` for every point of `from`.
pub fn nearest(from: &[Point3], to: &[Point3]) -> Vec<Candidate> {
    let grid = SpatialGrid::new(to);
    from.par_iter()
        .map(|p| grid.nearest(*p).expect("non-empty target"))
        .collect()
}

fn nearest_brute_force(from: &[Point3], to: &[Point3]) -> Vec<Candidate> {
    from.iter()
        .map(|p| crate::geometry::grid::brute_force_knn(to, *p, 1, None)[0])
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

fn chamfer_from(ab: &[Candidate], ba: &[Candidate], order: Order) -> f64 {
    let d = |c: &Candidate| match order {
        Order::L1 => c.dist2.sqrt(),
        Order::L2 => c.dist2,
    };
    0.5 * (mean(ab.iter().map(d)) + mean(ba.iter().map(d)))
}

pub fn chamfer(a: &[Point3], b: &[Point3], order: Order) -> Result<f64> {
    check_sets(a, b)?;
    Ok(chamfer_from(&nearest(a, b), &nearest(b, a), order))
}

pub fn chamfer_brute_force(a: &[Point3], b: &[Point3], order: Order) -> Result<f64> {
    check_sets(a, b)?;
    Ok(chamfer_from(&nearest_brute_force(a, b), &nearest_brute_force(b, a), order))
}

fn f_score_from(ab: &[Candidate], ba: &[Candidate], tau: f64) -> f64 {
    let within = |c: &[Candidate]| c.iter().filter(|x| x.dist2.sqrt() <= tau).count() as f64 / c.len() as f64;
    let (precision, recall) = (within(ab), within(ba));
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("F-score threshold must be positive, got {tau}")));
    }
    Ok(())
}

/// Harmonic mean of precision (share of `a` within `tau` of `b`) and recall
/// (share of `b` within `tau` of `a`).
pub fn f_score(a: &[Point3], b: &[Point3], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    check_sets(a, b)?;
    Ok(f_score_from(&nearest(a, b), &nearest(b, a), tau))
}

pub fn f_score_brute_force(a: &[Point3], b: &[Point3], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    check_sets(a, b)?;
    Ok(f_score_from(&nearest_brute_force(a, b), &nearest_brute_force(b, a), tau))
}

/// Cosine that is exact at 0 and at a right angle.
fn angle_cos(t: f64) -> f64 {
    if t >= std::f64::consts::FRAC_PI_2 {
        0.0
    } else {
        t.cos()
    }
}

/// Unoriented angle between two directions in radians; exact zero for
/// parallel vectors.
fn unoriented_angle(u: Point3, v: Point3) -> f64 {
    norm(cross(u, v)).atan2(dot(u, v).abs())
}

fn normal_from(a: &SampledSurface, b: &SampledSurface, ab: &[Candidate], ba: &[Candidate]) -> (f64, f64) {
    let ang_ab = ab.iter().enumerate().map(|(i, c)| unoriented_angle(a.normals[i], b.normals[c.index]));
    let ang_ba = ba.iter().enumerate().map(|(i, c)| unoriented_angle(b.normals[i], a.normals[c.index]));
    let (ta, tb): (Vec<f64>, Vec<f64>) = (ang_ab.collect(), ang_ba.collect());
    let nc = 0.5 * (mean(ta.iter().map(|t| angle_cos(*t))) + mean(tb.iter().map(|t| angle_cos(*t))));
    let deg = |t: &f64| t.to_degrees();
    let nr = 0.5 * (mean(ta.iter().map(deg)) + mean(tb.iter().map(deg)));
    (nc, nr)
}

/// Normal consistency (mean absolute cosine to the nearest sample's normal,
/// symmetrized) and normal error in degrees.
pub fn normal_metrics(a: &SampledSurface, b: &SampledSurface) -> Result<(f64, f64)> {
    check_sets(&a.points, &b.points)?;
    let ab = nearest(&a.points, &b.points);
    let ba = nearest(&b.points, &a.points);
    Ok(normal_from(a, b, &ab, &ba))
}

pub fn normal_metrics_brute_force(a: &SampledSurface, b: &SampledSurface) -> Result<(f64, f64)> {
    check_sets(&a.points, &b.points)?;
    let ab = nearest_brute_force(&a.points, &b.points);
    let ba = nearest_brute_force(&b.points, &a.points);
    Ok(normal_from(a, b, &ab, &ba))
}

/// Parameters of the sharp-feature metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpParams {
    /// Neighborhood radius for the normal-divergence test.
    pub radius: f64,
    /// A neighbor whose normal differs by more than this many degrees
    /// makes the sample sharp.
    pub angle: f64,
    /// F-score threshold between sharp sets.
    pub tau: f64,
}

impl Default for SharpParams {
    fn default() -> Self {
        SharpParams {
            radius: 0.01,
            angle: 30.0,
            tau: 0.005,
        }
    }
}

/// Flags samples that have a neighbor within `radius` whose normal deviates
/// by more than `angle` degrees (unoriented).
pub fn sharp_mask(s: &SampledSurface, radius: f64, angle: f64) -> Vec<bool> {
    let grid = SpatialGrid::new(&s.points);
    let limit = angle.to_radians();
    (0..s.len())
        .into_par_iter()
        .map(|i| {
            let mut sharp = false;
            grid.for_each_within(s.points[i], radius, |j, _| {
                if j != i && unoriented_angle(s.normals[i], s.normals[j]) > limit {
                    sharp = true;
                }
            });
            sharp
        })
        .collect()
}

/// Edge Chamfer distance (L1) and edge F-score between the sharp subsets.
/// One empty side gives `(inf, 0)`, both empty give `(0, 1)`.
pub fn edge_metrics(a: &SampledSurface, b: &SampledSurface, params: SharpParams) -> Result<(f64, f64)> {
    check_tau(params.tau)?;
    let sa = a.subset(&sharp_mask(a, params.radius, params.angle));
    let sb = b.subset(&sharp_mask(b, params.radius, params.angle));
    Ok(match (sa.is_empty(), sb.is_empty()) {
        (true, true) => (0.0, 1.0),
        (true, false) | (false, true) => (f64::INFINITY, 0.0),
        (false, false) => (
            chamfer(&sa.points, &sb.points, Order::L1)?,
            f_score(&sa.points, &sb.points, params.tau)?,
        ),
    })
}

/// Maps both meshes with the transform that puts `gt` in the unit sphere.
pub fn normalize_by_ground_truth(gt: &TriMesh, pred: &TriMesh) -> Result<(TriMesh, TriMesh, ScaleRecord)> {
    let rec = ScaleRecord::fit(&gt.vertices)?;
    let map = |m: &TriMesh| TriMesh {
        vertices: m.vertices.iter().map(|p| rec.apply(*p)).collect(),
        faces: m.faces.clone(),
        confidences: m.confidences.clone(),
    };
    Ok((map(gt), map(pred), rec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    /// Samples drawn from each mesh.
    pub samples: usize,
    pub f_tau: f64,
    pub sharp: SharpParams,
    pub seed: u64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            samples: 100_000,
            f_tau: 0.01,
            sharp: SharpParams::default(),
            seed: 0,
        }
    }
}

/// Raw metric values in unit-sphere units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub cd1: f64,
    pub cd2: f64,
    pub f1: f64,
    pub nc: f64,
    /// Degrees.
    pub nr: f64,
    pub ecd1: f64,
    pub ef1: f64,
}

impl MetricsReport {
    pub const COLUMNS: [&'static str; 7] = ["CD1(x1e2)", "CD2(x1e5)", "F1", "NC", "NR(deg)", "ECD1(x1e2)", "EF1"];

    /// Values as reported: CD1 and ECD1 times 1e2, CD2 times 1e5.
    pub fn scaled(&self) -> [f64; 7] {
        [
            self.cd1 * 1e2,
            self.cd2 * 1e5,
            self.f1,
            self.nc,
            self.nr,
            self.ecd1 * 1e2,
            self.ef1,
        ]
    }

    pub fn to_csv(&self) -> String {
        let values: Vec<String> = self.scaled().iter().map(|v| format!("{v:.6}")).collect();
        format!("{}\n{}\n", Self::COLUMNS.join(","), values.join(","))
    }

    pub fn to_table(&self) -> String {
        let values: Vec<String> = self.scaled().iter().map(|v| format!("{v:.4}")).collect();
        let widths: Vec<usize> = Self::COLUMNS.iter().zip(&values).map(|(c, v)| c.len().max(v.len())).collect();
        let row = |cells: Vec<&str>| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        format!(
            "{}\n{}\n",
            row(Self::COLUMNS.to_vec()),
            row(values.iter().map(String::as_str).collect())
        )
    }
}

/// Samples both surfaces (after ground-truth normalization) and computes
/// every metric, with `pred` as the first argument of each comparison.
pub fn evaluate(gt: &TriMesh, pred: &TriMesh, params: &MetricParams) -> Result<MetricsReport> {
    for (name, m) in [("ground-truth", gt), ("predicted", pred)] {
        if m.faces.is_empty() {
            return Err(Error::InvalidInput(format!("{name} mesh has no faces")));
        }
    }
    let (gt, pred, _) = normalize_by_ground_truth(gt, pred)?;
    let sg = sample_surface(&gt, params.samples, params.seed)?;
    let sp = sample_surface(&pred, params.samples, params.seed.wrapping_add(1))?;
    let ab = nearest(&sp.points, &sg.points);
    let ba = nearest(&sg.points, &sp.points);
    let (nc, nr) = normal_from(&sp, &sg, &ab, &ba);
    let (ecd1, ef1) = edge_metrics(&sp, &sg, params.sharp)?;
    Ok(MetricsReport {
        cd1: chamfer_from(&ab, &ba, Order::L1),
        cd2: chamfer_from(&ab, &ba, Order::L2),
        f1: f_score_from(&ab, &ba, params.f_tau),
        nc,
        nr,
        ecd1,
        ef1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_pair() {
        let (a, b) = (vec![[0.0; 3]], vec![[1.0, 0.0, 0.0]]);
        assert_eq!(chamfer(&a, &b, Order::L1).unwrap(), 1.0);
        assert_eq!(chamfer(&a, &b, Order::L2).unwrap(), 1.0);
        assert_eq!(f_score(&a, &b, 0.5).unwrap(), 0.0);
        assert!(chamfer(&a, &[], Order::L1).is_err());
        assert!(f_score(&a, &b, 0.0).is_err());
    }

    #[test]
    fn f_score_two_thirds() {
        // Half of `a` is near `b`, all of `b` is near `a`.
        let a = vec![[0.0; 3], [5.0, 0.0, 0.0]];
        let b = vec![[0.001, 0.0, 0.0]];
        assert!((f_score(&a, &b, 0.01).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perpendicular_normals() {
        let a = SampledSurface {
            points: vec![[0.0; 3], [1.0, 0.0, 0.0]],
            normals: vec![[0.0, 0.0, 1.0]; 2],
            faces: vec![0; 2],
        };
        let b = SampledSurface {
            normals: vec![[1.0, 0.0, 0.0]; 2],
            ..a.clone()
        };
        let (nc, nr) = normal_metrics(&a, &b).unwrap();
        assert_eq!((nc, nr), (0.0, 90.0));
        assert_eq!(normal_metrics(&a, &a).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn report_scaling_and_layout() {
        let r = MetricsReport {
            cd1: 0.01,
            cd2: 1e-5,
            f1: 0.5,
            nc: 0.9,
            nr: 10.0,
            ecd1: 0.02,
            ef1: 0.25,
        };
        assert_eq!(r.scaled(), [1.0, 1.0, 0.5, 0.9, 10.0, 2.0, 0.25]);
        let csv = r.to_csv();
        assert!(csv.starts_with("CD1(x1e2),CD2(x1e5),F1,NC,NR(deg),ECD1(x1e2),EF1\n1.000000,"));
        assert_eq!(r.to_table().lines().count(), 2);
    }
}
