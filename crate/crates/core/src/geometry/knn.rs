use rayon::prelude::*;

use super::cloud::PointCloud;
use super::grid::{brute_force_knn, Candidate, SpatialGrid};
use super::vec3::{is_finite, Point3};
use crate::error::{Error, Result};

/// Frozen per-point K-nearest-neighbor table.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    k: usize,
    /// Row-major `N x K`.
    indices: Vec<u32>,
    /// Row-major `N x K`, original Euclidean distances.
    distances: Vec<f64>,
    /// Smallest non-zero neighbor distance per point.
    d0: Vec<f64>,
}

impl Neighborhood {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.d0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d0.is_empty()
    }

    pub fn row(&self, n: usize) -> &[u32] {
        &self.indices[n * self.k..(n + 1) * self.k]
    }

    pub fn row_distances(&self, n: usize) -> &[f64] {
        &self.distances[n * self.k..(n + 1) * self.k]
    }

    pub fn d0(&self) -> &[f64] {
        &self.d0
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Builds a table from explicit rows (distances recomputed from `points`).
    pub fn from_rows(points: &[Point3], k: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut indices = Vec::with_capacity(rows.len() * k);
        let mut distances = Vec::with_capacity(rows.len() * k);
        let mut d0 = Vec::with_capacity(rows.len());
        for (n, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::ContractViolation(format!(
                    "row {n} has {} neighbors, expected {k}",
                    row.len()
                )));
            }
            let mut best = f64::INFINITY;
            for &j in row {
                if j >= points.len() || j == n {
                    return Err(Error::InvalidInput(format!("bad neighbor {j} in row {n}")));
                }
                let d = super::vec3::dist(points[n], points[j]);
                indices.push(j as u32);
                distances.push(d);
                if d > 0.0 {
                    best = best.min(d);
                }
            }
            if !best.is_finite() {
                return Err(Error::DegenerateNeighborhood { point: n });
            }
            d0.push(best);
        }
        Ok(Neighborhood {
            k,
            indices,
            distances,
            d0,
        })
    }

    fn from_candidates(k: usize, rows: Vec<Vec<Candidate>>) -> Result<Self> {
        let mut indices = Vec::with_capacity(rows.len() * k);
        let mut distances = Vec::with_capacity(rows.len() * k);
        let mut d0 = Vec::with_capacity(rows.len());
        for (n, row) in rows.into_iter().enumerate() {
            let mut first = None;
            for c in row {
                let d = c.dist2.sqrt();
                indices.push(c.index as u32);
                distances.push(d);
                if first.is_none() && d > 0.0 {
                    first = Some(d);
                }
            }
            d0.push(first.ok_or(Error::DegenerateNeighborhood { point: n })?);
        }
        Ok(Neighborhood {
            k,
            indices,
            distances,
            d0,
        })
    }
}

fn check(cloud: &PointCloud, k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("K must be at least 3, got {k}")));
    }
    if cloud.len() <= k {
        return Err(Error::InputTooSmall(format!(
            "need more than K={k} points, got {}",
            cloud.len()
        )));
    }
    if let Some(i) = cloud.points.iter().position(|p| !is_finite(*p)) {
        return Err(Error::InvalidInput(format!("point {i} has non-finite coordinates")));
    }
    Ok(())
}

/// Exact K-nearest neighbors of every point (self excluded), rows sorted by
/// distance with ties broken by ascending index.
pub fn knn_search(cloud: &PointCloud, k: usize) -> Result<Neighborhood> {
    check(cloud, k)?;
    let grid = SpatialGrid::new(&cloud.points);
    let rows: Vec<Vec<Candidate>> = (0..cloud.len())
        .into_par_iter()
        .map(|n| grid.knn(cloud.points[n], k, Some(n)))
        .collect();
    Neighborhood::from_candidates(k, rows)
}

/// O(N^2) reference used to validate [`knn_search`].
pub fn knn_search_brute_force(cloud: &PointCloud, k: usize) -> Result<Neighborhood> {
    check(cloud, k)?;
    let rows = (0..cloud.len())
        .map(|n| brute_force_knn(&cloud.points, cloud.points[n], k, Some(n)))
        .collect();
    Neighborhood::from_candidates(k, rows)
}
