//! Runs the network over many centers in fixed-size groups.
//!
//! Group boundaries depend only on the batch length, never on the number
//! of worker threads, and group results are combined in index order, so
//! every output is bit-identical for any thread count.

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::C_IN;
use crate::real::Real;

use super::model::{backward, forward, ForwardPass, Need, TrianglePrediction};
use super::params::NetworkParams;

/// Centers per group.
pub const GROUP_POINTS: usize = 64;

fn group_ranges(points: usize) -> Vec<(usize, usize)> {
    (0..points.div_ceil(GROUP_POINTS))
        .map(|g| (g * GROUP_POINTS, ((g + 1) * GROUP_POINTS).min(points)))
        .collect()
}

/// Cached forward state of a whole batch.
pub struct BatchPass<T> {
    k: usize,
    groups: Vec<((usize, usize), ForwardPass<T>)>,
    pub prediction: TrianglePrediction<T>,
}

/// Result of [`batch_backward`].
pub struct BatchGradients<T> {
    pub params: Option<NetworkParams<T>>,
    /// `points x K x C_IN`.
    pub inputs: Option<Vec<T>>,
}

fn concat<T: Real>(k: usize, parts: impl Iterator<Item = TrianglePrediction<T>>) -> TrianglePrediction<T> {
    let mut out = TrianglePrediction {
        points: 0,
        k,
        raw: Vec::new(),
        sym: Vec::new(),
    };
    for p in parts {
        out.points += p.points;
        out.raw.extend(p.raw);
        out.sym.extend(p.sym);
    }
    out
}

pub fn batch_forward<T: Real>(params: &NetworkParams<T>, features: &[T], k: usize) -> Result<BatchPass<T>> {
    let cin = params.config().in_channels;
    let per = k * cin;
    let points = if per == 0 { 0 } else { features.len() / per };
    let groups: Vec<_> = group_ranges(points)
        .into_par_iter()
        .map(|(a, b)| forward(params, &features[a * per..b * per], k).map(|p| ((a, b), p)))
        .collect::<Result<_>>()?;
    let prediction = concat(k, groups.iter().map(|(_, p)| p.prediction.clone()));
    Ok(BatchPass {
        k,
        groups,
        prediction,
    })
}

/// Forward pass without retaining activations.
pub fn predict<T: Real>(params: &NetworkParams<T>, features: &[T], k: usize) -> Result<TrianglePrediction<T>> {
    let per = k * params.config().in_channels;
    let points = if per == 0 { 0 } else { features.len() / per };
    let parts: Vec<_> = group_ranges(points)
        .into_par_iter()
        .map(|(a, b)| forward(params, &features[a * per..b * per], k).map(|p| p.prediction))
        .collect::<Result<_>>()?;
    Ok(concat(k, parts.into_iter()))
}

pub fn batch_backward<T: Real>(
    params: &NetworkParams<T>,
    pass: &BatchPass<T>,
    dsym: &[T],
    need: Need,
) -> Result<BatchGradients<T>> {
    let kk = pass.k * pass.k;
    let parts: Vec<_> = pass
        .groups
        .par_iter()
        .map(|((a, b), p)| backward(params, p, &dsym[a * kk..b * kk], need))
        .collect::<Result<_>>()?;
    let mut out = BatchGradients {
        params: need.params.then(|| params.zeros_like()),
        inputs: need.inputs.then(|| Vec::with_capacity(pass.prediction.points * pass.k * C_IN)),
    };
    for g in parts {
        if let (Some(acc), Some(gp)) = (out.params.as_mut(), g.params.as_ref()) {
            acc.add_assign(gp);
        }
        if let (Some(acc), Some(gi)) = (out.inputs.as_mut(), g.inputs) {
            acc.extend(gi);
        }
    }
    Ok(out)
}
