//! Sinusoidal positional encoding of normalized neighbor coordinates.
//!
//! Channel layout per neighbor: `x, y, z`, then for each level `l` and each
//! axis `a`: `sin(2^l * pi * c_a), cos(2^l * pi * c_a)`.

use std::f64::consts::PI;

use super::vec3::Point3;
use crate::real::Real;

/// Frequency levels.
pub const PE_LEVELS: usize = 8;

/// Input channels per token: `3 + 3 * 2 * PE_LEVELS`.
pub const C_IN: usize = 3 + 3 * 2 * PE_LEVELS;

pub const fn channels(levels: usize) -> usize {
    3 + 6 * levels
}

/// Writes `coords.len() * channels(levels)` features into `out`.
pub fn positional_encode<T: Real>(coords: &[Point3], levels: usize, out: &mut [T]) {
    let c = channels(levels);
    assert_eq!(out.len(), coords.len() * c, "encoding buffer size");
    for (p, row) in coords.iter().zip(out.chunks_exact_mut(c)) {
        row[0] = T::from_f64_lossy(p[0]);
        row[1] = T::from_f64_lossy(p[1]);
        row[2] = T::from_f64_lossy(p[2]);
        let mut w = PI;
        for l in 0..levels {
            for a in 0..3 {
                let (s, co) = (w * p[a]).sin_cos();
                row[3 + 6 * l + 2 * a] = T::from_f64_lossy(s);
                row[3 + 6 * l + 2 * a + 1] = T::from_f64_lossy(co);
            }
            w *= 2.0;
        }
    }
}

/// Convenience allocation of [`positional_encode`].
pub fn encode_vec<T: Real>(coords: &[Point3], levels: usize) -> Vec<T> {
    let mut out = vec![T::zero(); coords.len() * channels(levels)];
    positional_encode(coords, levels, &mut out);
    out
}

/// dL/dcoords from dL/dfeatures.
pub fn encode_backward<T: Real>(coords: &[Point3], levels: usize, grad: &[T]) -> Vec<Point3> {
    let c = channels(levels);
    coords
        .iter()
        .zip(grad.chunks_exact(c))
        .map(|(p, g)| {
            let mut d = [g[0].to_f64_lossy(), g[1].to_f64_lossy(), g[2].to_f64_lossy()];
            let mut w = PI;
            for l in 0..levels {
                for a in 0..3 {
                    let (s, co) = (w * p[a]).sin_cos();
                    d[a] += w
                        * (co * g[3 + 6 * l + 2 * a].to_f64_lossy()
                            - s * g[3 + 6 * l + 2 * a + 1].to_f64_lossy());
                }
                w *= 2.0;
            }
            d
        })
        .collect()
}
