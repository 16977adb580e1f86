//! Scale-free neighborhood coordinates fed to the network.
//!
//! For center `p` with frozen neighbors `q_1..q_K` and current positions
//! `x = point + offset`, each neighbor maps to
//! `eta0 * (x_qk - x_p) / |x_qref - x_p|`, where `ref` is the first
//! neighbor (or, if that displacement vanished, the nearest non-zero one).

use super::knn::Neighborhood;
use super::vec3::{add, dot, norm, scale, sub, Point3};
use crate::error::{Error, Result};

/// Target length of the reference neighbor after normalization.
pub const ETA0: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedNeighborhood {
    pub coords: Vec<Point3>,
    /// Row position of the neighbor whose distance is the denominator.
    pub reference: usize,
    /// The denominator itself (in displaced coordinates).
    pub reference_len: f64,
}

/// Current position of point `i`.
#[inline]
pub fn displaced(points: &[Point3], offsets: Option<&[Point3]>, i: usize) -> Point3 {
    match offsets {
        Some(o) => add(points[i], o[i]),
        None => points[i],
    }
}

pub fn normalize_neighborhood(
    center: usize,
    nbhd: &Neighborhood,
    points: &[Point3],
    offsets: Option<&[Point3]>,
) -> Result<NormalizedNeighborhood> {
    let xp = displaced(points, offsets, center);
    let disp: Vec<Point3> = nbhd
        .row(center)
        .iter()
        .map(|&j| sub(displaced(points, offsets, j as usize), xp))
        .collect();
    let lens: Vec<f64> = disp.iter().map(|d| norm(*d)).collect();
    let reference = if lens[0] > 0.0 {
        0
    } else {
        lens.iter()
            .enumerate()
            .filter(|(_, l)| **l > 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(k, _)| k)
            .ok_or(Error::DegenerateNeighborhood { point: center })?
    };
    let reference_len = lens[reference];
    let s = ETA0 / reference_len;
    Ok(NormalizedNeighborhood {
        coords: disp.iter().map(|d| scale(*d, s)).collect(),
        reference,
        reference_len,
    })
}

/// Back-propagates `grad_coords` (dL/d normalized coords) to the current
/// positions, adding into `grad_positions`.
pub fn normalize_backward(
    center: usize,
    nbhd: &Neighborhood,
    nn: &NormalizedNeighborhood,
    grad_coords: &[Point3],
    grad_positions: &mut [Point3],
) {
    let r = nn.reference_len;
    let s = ETA0 / r;
    // coords_k = s * u_k, with u_k the raw displacement and u_k = coords_k / s.
    let mut du: Vec<Point3> = grad_coords.iter().map(|g| scale(*g, s)).collect();
    // d coords_k / d r = -coords_k / r.
    let dr: f64 = grad_coords
        .iter()
        .zip(&nn.coords)
        .map(|(g, c)| -dot(*g, *c) / r)
        .sum();
    let u_ref = scale(nn.coords[nn.reference], 1.0 / s);
    du[nn.reference] = add(du[nn.reference], scale(u_ref, dr / r));

    let row = nbhd.row(center);
    let mut dp = [0.0; 3];
    for (k, &j) in row.iter().enumerate() {
        let g = &mut grad_positions[j as usize];
        *g = add(*g, du[k]);
        dp = sub(dp, du[k]);
    }
    let g = &mut grad_positions[center];
    *g = add(*g, dp);
}
