//! Network inputs for a batch of centers and the reverse chain back to
//! point positions.

use rayon::prelude::*;

use super::encoding::{encode_backward, positional_encode, C_IN, PE_LEVELS};
use super::knn::Neighborhood;
use super::normalize::{normalize_backward, normalize_neighborhood, NormalizedNeighborhood};
use super::vec3::Point3;
use crate::real::Real;

/// Encoded neighborhoods for `centers`, row-major `centers x K x C_IN`.
///
/// Centers whose neighborhood collapsed to a single location have no
/// normalized coordinates; their feature rows are zero and callers must
/// mask them out of any loss.
#[derive(Debug, Clone)]
pub struct FeatureBatch<T> {
    pub centers: Vec<usize>,
    pub k: usize,
    pub data: Vec<T>,
    pub normalized: Vec<Option<NormalizedNeighborhood>>,
}

impl<T: Real> FeatureBatch<T> {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn is_valid(&self, n: usize) -> bool {
        self.normalized[n].is_some()
    }

    pub fn valid_count(&self) -> usize {
        self.normalized.iter().filter(|n| n.is_some()).count()
    }

    /// Indices (into `centers`) whose neighborhood degenerated.
    pub fn degenerate(&self) -> Vec<usize> {
        (0..self.len()).filter(|n| !self.is_valid(*n)).collect()
    }
}

pub fn build_features<T: Real>(
    centers: &[usize],
    nbhd: &Neighborhood,
    points: &[Point3],
    offsets: Option<&[Point3]>,
) -> FeatureBatch<T> {
    let k = nbhd.k();
    let per = k * C_IN;
    let mut data = vec![T::zero(); centers.len() * per];
    let normalized: Vec<Option<NormalizedNeighborhood>> = centers
        .par_iter()
        .zip(data.par_chunks_mut(per))
        .map(|(&c, out)| {
            let nn = normalize_neighborhood(c, nbhd, points, offsets).ok()?;
            positional_encode(&nn.coords, PE_LEVELS, out);
            Some(nn)
        })
        .collect();
    FeatureBatch {
        centers: centers.to_vec(),
        k,
        data,
        normalized,
    }
}

/// Adds dL/d(position) for every point touched by the batch, given
/// dL/d(features). Accumulation happens in center order.
pub fn features_backward<T: Real>(
    batch: &FeatureBatch<T>,
    nbhd: &Neighborhood,
    grad_features: &[T],
    grad_positions: &mut [Point3],
) {
    let per = batch.k * C_IN;
    let coord_grads: Vec<Option<Vec<Point3>>> = batch
        .normalized
        .par_iter()
        .zip(grad_features.par_chunks(per))
        .map(|(nn, g)| nn.as_ref().map(|nn| encode_backward(&nn.coords, PE_LEVELS, g)))
        .collect();
    for ((c, nn), gc) in batch.centers.iter().zip(&batch.normalized).zip(&coord_grads) {
        if let (Some(nn), Some(gc)) = (nn, gc) {
            normalize_backward(*c, nbhd, nn, gc, grad_positions);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{knn_search, PointCloud};

    #[test]
    fn degenerate_center_has_zero_features() {
        let pts = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        let nb = knn_search(&PointCloud::new(pts.clone()).unwrap(), 3).unwrap();
        // Collapse every neighbor of point 0 onto it.
        let mut off = vec![[0.0; 3]; 5];
        for &j in nb.row(0) {
            let q = pts[j as usize];
            off[j as usize] = [-q[0], -q[1], -q[2]];
        }
        let batch: FeatureBatch<f64> = build_features(&[0, 4], &nb, &pts, Some(&off));
        assert_eq!(batch.degenerate(), vec![0]);
        assert!(batch.data[..3 * C_IN].iter().all(|v| *v == 0.0));
        assert_eq!(batch.valid_count(), 1);
    }
}
