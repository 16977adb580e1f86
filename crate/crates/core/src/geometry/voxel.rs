use std::collections::HashMap;

use super::cloud::PointCloud;
use super::grid::SpatialGrid;
use super::vec3::{dist2, Point3};
use crate::error::{Error, Result};

/// Integer cell of `p` on the grid of size `v` anchored at the origin.
pub fn voxel_key(p: Point3, v: f64) -> [i64; 3] {
    p.map(|c| (c / v).floor() as i64)
}

/// Keeps one input point per occupied voxel: the one nearest the voxel
/// center (ties to the lower index). Survivors keep their input order.
///
/// The grid is anchored at the coordinate origin, so subsampling an already
/// subsampled cloud with the same `v` returns it unchanged.
pub fn voxel_subsample(cloud: &PointCloud, v: f64) -> Result<PointCloud> {
    let (sub, _) = voxel_subsample_indices(cloud, v)?;
    Ok(sub)
}

/// As [`voxel_subsample`], also returning the surviving input indices.
pub fn voxel_subsample_indices(cloud: &PointCloud, v: f64) -> Result<(PointCloud, Vec<usize>)> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("voxel size must be positive, got {v}")));
    }
    let mut best: HashMap<[i64; 3], (f64, usize)> = HashMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let key = voxel_key(*p, v);
        let center = key.map(|c| (c as f64 + 0.5) * v);
        let d = dist2(*p, center);
        best.entry(key)
            .and_modify(|e| {
                if d < e.0 {
                    *e = (d, i);
                }
            })
            .or_insert((d, i));
    }
    let mut keep: Vec<usize> = best.into_values().map(|(_, i)| i).collect();
    keep.sort_unstable();
    let points = keep.iter().map(|&i| cloud.points[i]).collect();
    Ok((
        PointCloud {
            points,
            scale: cloud.scale,
        },
        keep,
    ))
}

/// Largest nearest-neighbor distance over (a deterministic stride subsample
/// of) the cloud: the coarsest resolution, used as the automatic voxel size.
pub fn estimate_voxel_size(cloud: &PointCloud, max_samples: usize) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::InputTooSmall("need at least 2 points".into()));
    }
    let grid = SpatialGrid::new(&cloud.points);
    let stride = cloud.len().div_ceil(max_samples.max(1)).max(1);
    let mut largest: f64 = 0.0;
    for n in (0..cloud.len()).step_by(stride) {
        if let Some(c) = grid
            .knn(cloud.points[n], 8, Some(n))
            .into_iter()
            .find(|c| c.dist2 > 0.0)
        {
            largest = largest.max(c.dist2.sqrt());
        }
    }
    if largest > 0.0 {
        Ok(largest)
    } else {
        Err(Error::DegenerateInput("all sampled points coincide".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_cell_keeps_point_nearest_center() {
        let c = PointCloud::new(vec![[0.1, 0.1, 0.1], [0.45, 0.5, 0.55]]).unwrap();
        let s = voxel_subsample(&c, 1.0).unwrap();
        assert_eq!(s.points, vec![[0.45, 0.5, 0.55]]);
    }

    #[test]
    fn tiny_voxels_are_identity_and_idempotent() {
        let pts = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 2.0, 0.5], [3.0, 1.0, 1.0]];
        let c = PointCloud::new(pts.clone()).unwrap();
        assert_eq!(voxel_subsample(&c, 0.1).unwrap().points, pts);
        let coarse = voxel_subsample(&c, 1.5).unwrap();
        assert_eq!(voxel_subsample(&coarse, 1.5).unwrap(), coarse);
    }

    #[test]
    fn rejects_non_positive_size() {
        let c = PointCloud::new(vec![[0.0; 3]]).unwrap();
        assert!(voxel_subsample(&c, 0.0).is_err());
        assert!(voxel_subsample(&c, -1.0).is_err());
    }

    #[test]
    fn auto_size_is_largest_spacing() {
        let c = PointCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [5.0, 0.0, 0.0]]).unwrap();
        assert_eq!(estimate_voxel_size(&c, 100).unwrap(), 4.0);
    }
}
