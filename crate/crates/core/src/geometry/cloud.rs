use std::collections::HashMap;

use super::vec3::{bounds, dist, is_finite, Point3};
use crate::error::{Error, Result};

/// Center and radius mapping a point set into the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRecord {
    pub center: Point3,
    pub radius: f64,
}

impl ScaleRecord {
    pub const IDENTITY: ScaleRecord = ScaleRecord {
        center: [0.0; 3],
        radius: 1.0,
    };

    /// Bounding-box center, radius = farthest point from that center.
    pub fn fit(points: &[Point3]) -> Result<Self> {
        let (lo, hi) =
            bounds(points).ok_or_else(|| Error::DegenerateInput("empty point set".into()))?;
        let center = [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]));
        let radius = points.iter().map(|p| dist(*p, center)).fold(0.0, f64::max);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::DegenerateInput("zero spatial extent".into()));
        }
        Ok(ScaleRecord { center, radius })
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        [0, 1, 2].map(|a| (p[a] - self.center[a]) / self.radius)
    }

    pub fn invert(&self, p: Point3) -> Point3 {
        [0, 1, 2].map(|a| p[a] * self.radius + self.center[a])
    }
}

/// Reconstruction input: points plus the transform that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub scale: ScaleRecord,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !is_finite(*p)) {
            return Err(Error::InvalidInput(format!("point {i} has non-finite coordinates")));
        }
        Ok(PointCloud {
            points,
            scale: ScaleRecord::IDENTITY,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Copy mapped into the unit sphere; `scale` records the composite
    /// transform back to the original coordinates.
    pub fn unit_sphere_normalized(&self) -> Result<Self> {
        let rec = ScaleRecord::fit(&self.points)?;
        Ok(PointCloud {
            points: self.points.iter().map(|p| rec.apply(*p)).collect(),
            scale: ScaleRecord {
                center: self.scale.invert(rec.center),
                radius: rec.radius * self.scale.radius,
            },
        })
    }

    /// Collapses exact-coordinate duplicates, keeping the first occurrence.
    /// Returns the surviving cloud and, per survivor, its original index.
    pub fn dedup(&self) -> (Self, Vec<usize>) {
        let mut seen: HashMap<[u64; 3], ()> = HashMap::with_capacity(self.points.len());
        let mut kept = Vec::with_capacity(self.points.len());
        let mut source = Vec::with_capacity(self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            // +0.0 and -0.0 are the same location.
            let key = p.map(|v| (v + 0.0).to_bits());
            if seen.insert(key, ()).is_none() {
                kept.push(*p);
                source.push(i);
            }
        }
        (
            PointCloud {
                points: kept,
                scale: self.scale,
            },
            source,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_fits_unit_sphere_and_is_scale_invariant() {
        let pts = vec![[1.0, 2.0, 3.0], [4.0, -1.0, 0.5], [2.0, 2.0, 2.0], [0.0, 0.0, 7.0]];
        let a = PointCloud::new(pts.clone()).unwrap().unit_sphere_normalized().unwrap();
        let max = a.points.iter().map(|p| super::super::vec3::norm(*p)).fold(0.0, f64::max);
        assert!((max - 1.0).abs() <= 1e-9);
        let scaled: Vec<Point3> = pts.iter().map(|p| p.map(|v| v * 5.0)).collect();
        let b = PointCloud::new(scaled).unwrap().unit_sphere_normalized().unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() < 1e-12);
            }
        }
        let back = a.scale.invert(a.points[1]);
        assert!((back[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_degenerate() {
        assert!(PointCloud::new(vec![[f64::NAN, 0.0, 0.0]]).is_err());
        let same = PointCloud::new(vec![[1.0; 3]; 3]).unwrap();
        assert!(matches!(
            same.unit_sphere_normalized(),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let c = PointCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [-0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
            .unwrap();
        let (d, src) = c.dedup();
        assert_eq!(d.points.len(), 2);
        assert_eq!(src, vec![0, 1]);
    }
}
