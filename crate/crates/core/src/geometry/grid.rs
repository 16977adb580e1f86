//! Exact nearest-neighbor queries over a uniform grid.
//!
//! Points are bucketed into cubic cells (CSR layout). K-nearest queries visit
//! Chebyshev rings of cells around the query cell and stop once the current
//! k-th distance is strictly below the distance to every unvisited cell, so
//! results are identical to a brute-force scan, including tie order
//! (ascending point index).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::vec3::{bounds, dist2, Point3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub dist2: f64,
    pub index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct SpatialGrid {
    points: Vec<Point3>,
    origin: Point3,
    cell: f64,
    dims: [i64; 3],
    cell_start: Vec<u32>,
    order: Vec<u32>,
}

impl SpatialGrid {
    /// Builds a grid with roughly one cell per point over the bounding box.
    pub fn new(points: &[Point3]) -> Self {
        Self::with_cell_size(points, None)
    }

    pub fn with_cell_size(points: &[Point3], cell: Option<f64>) -> Self {
        let (lo, hi) = bounds(points).unwrap_or(([0.0; 3], [0.0; 3]));
        let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        let max_ext = ext.iter().cloned().fold(0.0, f64::max);
        let cell = cell.filter(|c| *c > 0.0 && c.is_finite()).unwrap_or_else(|| {
            if max_ext <= 0.0 {
                return 1.0;
            }
            let floor = max_ext * 1e-3;
            let vol: f64 = ext.iter().map(|e| e.max(floor)).product();
            let c = (vol / points.len().max(1) as f64).cbrt();
            c.max(max_ext / 1024.0)
        });
        let dims = [0, 1, 2].map(|a| ((ext[a] / cell).floor() as i64 + 1).max(1));
        let ncells = (dims[0] * dims[1] * dims[2]) as usize;

        let mut grid = SpatialGrid {
            points: points.to_vec(),
            origin: lo,
            cell,
            dims,
            cell_start: vec![0; ncells + 1],
            order: vec![0; points.len()],
        };
        let keys: Vec<usize> = points
            .iter()
            .map(|p| grid.flat(grid.cell_of(*p)))
            .collect();
        for &k in &keys {
            grid.cell_start[k + 1] += 1;
        }
        for i in 0..ncells {
            grid.cell_start[i + 1] += grid.cell_start[i];
        }
        let mut fill = grid.cell_start.clone();
        for (i, &k) in keys.iter().enumerate() {
            grid.order[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        grid
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn cell_coord(&self, p: Point3) -> [i64; 3] {
        [0, 1, 2].map(|a| ((p[a] - self.origin[a]) / self.cell).floor() as i64)
    }

    fn cell_of(&self, p: Point3) -> [i64; 3] {
        let c = self.cell_coord(p);
        [0, 1, 2].map(|a| c[a].clamp(0, self.dims[a] - 1))
    }

    fn flat(&self, c: [i64; 3]) -> usize {
        ((c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]) as usize
    }

    fn cell_points(&self, c: [i64; 3]) -> &[u32] {
        let f = self.flat(c);
        &self.order[self.cell_start[f] as usize..self.cell_start[f + 1] as usize]
    }

    /// Squared lower bound on the distance from `q` to any cell outside the
    /// cube of cells `[qc - r, qc + r]`.
    fn outside_bound2(&self, q: Point3, qc: [i64; 3], r: i64) -> f64 {
        let mut b = f64::INFINITY;
        for a in 0..3 {
            let lo = self.origin[a] + (qc[a] - r) as f64 * self.cell;
            let hi = self.origin[a] + (qc[a] + r + 1) as f64 * self.cell;
            // Sides already beyond the grid never hide unvisited points.
            if qc[a] - r > 0 {
                b = b.min((q[a] - lo).max(0.0));
            }
            if qc[a] + r < self.dims[a] - 1 {
                b = b.min((hi - q[a]).max(0.0));
            }
        }
        if b.is_infinite() {
            b
        } else {
            b * b
        }
    }

    fn covers_grid(&self, qc: [i64; 3], r: i64) -> bool {
        (0..3).all(|a| qc[a] - r <= 0 && qc[a] + r >= self.dims[a] - 1)
    }

    fn visit_ring(&self, qc: [i64; 3], r: i64, mut f: impl FnMut(usize)) {
        let lo = [0, 1, 2].map(|a| (qc[a] - r).max(0));
        let hi = [0, 1, 2].map(|a| (qc[a] + r).min(self.dims[a] - 1));
        if (0..3).any(|a| lo[a] > hi[a]) {
            return;
        }
        for z in lo[2]..=hi[2] {
            let dz = (z - qc[2]).abs();
            for y in lo[1]..=hi[1] {
                let dy = (y - qc[1]).abs();
                let inner = dz.max(dy) < r;
                if inner {
                    // Only the two x-extremes of this row lie on the ring.
                    for x in [qc[0] - r, qc[0] + r] {
                        if x >= lo[0] && x <= hi[0] {
                            for &i in self.cell_points([x, y, z]) {
                                f(i as usize);
                            }
                        }
                    }
                } else {
                    for x in lo[0]..=hi[0] {
                        for &i in self.cell_points([x, y, z]) {
                            f(i as usize);
                        }
                    }
                }
            }
        }
    }

    fn first_ring(&self, qc: [i64; 3]) -> i64 {
        (0..3)
            .map(|a| (-qc[a]).max(qc[a] - (self.dims[a] - 1)).max(0))
            .max()
            .unwrap_or(0)
    }

    /// The `k` nearest points to `q`, sorted by `(distance, index)`.
    /// `exclude` drops one index (the query point itself).
    pub fn knn(&self, q: Point3, k: usize, exclude: Option<usize>) -> Vec<Candidate> {
        let available = self.points.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        let k = k.min(available);
        if k == 0 {
            return Vec::new();
        }
        let qc = self.cell_coord(q);
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut r = self.first_ring(qc);
        loop {
            self.visit_ring(qc, r, |i| {
                if Some(i) == exclude {
                    return;
                }
                let c = Candidate {
                    dist2: dist2(q, self.points[i]),
                    index: i,
                };
                if heap.len() < k {
                    heap.push(c);
                } else if c < *heap.peek().expect("heap is full") {
                    heap.pop();
                    heap.push(c);
                }
            });
            if self.covers_grid(qc, r) {
                break;
            }
            if heap.len() == k {
                let worst = heap.peek().expect("heap is full").dist2;
                if worst < self.outside_bound2(q, qc, r) {
                    break;
                }
            }
            r += 1;
        }
        heap.into_sorted_vec()
    }

    pub fn nearest(&self, q: Point3) -> Option<Candidate> {
        self.knn(q, 1, None).into_iter().next()
    }

    /// Calls `f(index, dist2)` for every point with `dist2 <= radius^2`.
    pub fn for_each_within(&self, q: Point3, radius: f64, mut f: impl FnMut(usize, f64)) {
        if self.points.is_empty() {
            return;
        }
        let r2 = radius * radius;
        let lo = self.cell_coord([q[0] - radius, q[1] - radius, q[2] - radius]);
        let hi = self.cell_coord([q[0] + radius, q[1] + radius, q[2] + radius]);
        let lo = [0, 1, 2].map(|a| lo[a].max(0));
        let hi = [0, 1, 2].map(|a| hi[a].min(self.dims[a] - 1));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    for &i in self.cell_points([x, y, z]) {
                        let d2 = dist2(q, self.points[i as usize]);
                        if d2 <= r2 {
                            f(i as usize, d2);
                        }
                    }
                }
            }
        }
    }
}

/// O(N) reference scan with the same ordering rules as [`SpatialGrid::knn`].
pub fn brute_force_knn(
    points: &[Point3],
    q: Point3,
    k: usize,
    exclude: Option<usize>,
) -> Vec<Candidate> {
    let mut all: Vec<Candidate> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, p)| Candidate {
            dist2: dist2(q, *p),
            index: i,
        })
        .collect();
    all.sort();
    all.truncate(k);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect()
    }

    #[test]
    fn knn_matches_brute_force_including_outside_queries() {
        let pts = random_points(300, 1);
        let grid = SpatialGrid::new(&pts);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let q = [
                rng.gen_range(-1.5..2.5),
                rng.gen_range(-1.5..2.5),
                rng.gen_range(-1.5..2.5),
            ];
            for k in [1, 5, 40] {
                assert_eq!(grid.knn(q, k, None), brute_force_knn(&pts, q, k, None));
            }
        }
    }

    #[test]
    fn planar_and_singleton_clouds() {
        let pts: Vec<Point3> = (0..100)
            .map(|i| [(i % 10) as f64, (i / 10) as f64, 0.0])
            .collect();
        let grid = SpatialGrid::new(&pts);
        for i in 0..pts.len() {
            assert_eq!(
                grid.knn(pts[i], 8, Some(i)),
                brute_force_knn(&pts, pts[i], 8, Some(i))
            );
        }
        let one = SpatialGrid::new(&[[1.0, 0.0, 0.0]]);
        let hit = one.nearest([0.0, 0.0, 0.0]).unwrap();
        assert_eq!(hit.index, 0);
        assert_eq!(hit.dist2, 1.0);
    }

    #[test]
    fn radius_query_matches_scan() {
        let pts = random_points(500, 3);
        let grid = SpatialGrid::new(&pts);
        let q = [0.4, 0.5, 0.6];
        let mut got = Vec::new();
        grid.for_each_within(q, 0.2, |i, _| got.push(i));
        got.sort();
        let expect: Vec<usize> = (0..pts.len())
            .filter(|&i| dist2(q, pts[i]) <= 0.04)
            .collect();
        assert_eq!(got, expect);
    }
}
