use crate::error::{Error, Result};
use crate::real::Real;

use super::model::{sigmoid, TrianglePrediction};

/// Binary targets plus validity mask for a set of `K x K` candidate matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub points: usize,
    pub k: usize,
    pub labels: Vec<u8>,
    pub mask: Vec<bool>,
}

impl LabelSet {
    /// All-zero labels, every off-diagonal entry valid.
    pub fn new(points: usize, k: usize) -> Self {
        let mut mask = vec![true; points * k * k];
        for n in 0..points {
            for i in 0..k {
                mask[(n * k + i) * k + i] = false;
            }
        }
        LabelSet {
            points,
            k,
            labels: vec![0; points * k * k],
            mask,
        }
    }

    #[inline]
    pub fn index(&self, n: usize, i: usize, j: usize) -> usize {
        (n * self.k + i) * self.k + j
    }

    /// Marks triangle `(center, q_i, q_j)` positive in both orientations.
    pub fn set_pair(&mut self, n: usize, i: usize, j: usize) {
        debug_assert_ne!(i, j);
        let a = self.index(n, i, j);
        let b = self.index(n, j, i);
        self.labels[a] = 1;
        self.labels[b] = 1;
    }

    pub fn label(&self, n: usize, i: usize, j: usize) -> u8 {
        self.labels[self.index(n, i, j)]
    }

    /// Removes a point's whole matrix from the loss.
    pub fn disable_point(&mut self, n: usize) {
        let kk = self.k * self.k;
        self.mask[n * kk..(n + 1) * kk].fill(false);
        self.labels[n * kk..(n + 1) * kk].fill(0);
    }

    pub fn point_enabled(&self, n: usize) -> bool {
        let kk = self.k * self.k;
        self.mask[n * kk..(n + 1) * kk].iter().any(|m| *m)
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Sub-range of points `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> LabelSet {
        let kk = self.k * self.k;
        LabelSet {
            points: end - start,
            k: self.k,
            labels: self.labels[start * kk..end * kk].to_vec(),
            mask: self.mask[start * kk..end * kk].to_vec(),
        }
    }

    pub fn concat(parts: &[LabelSet]) -> LabelSet {
        let k = parts.first().map_or(0, |p| p.k);
        LabelSet {
            points: parts.iter().map(|p| p.points).sum(),
            k,
            labels: parts.iter().flat_map(|p| p.labels.iter().copied()).collect(),
            mask: parts.iter().flat_map(|p| p.mask.iter().copied()).collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.points).all(|n| {
            (0..self.k).all(|i| {
                self.label(n, i, i) == 0
                    && (0..self.k).all(|j| self.label(n, i, j) == self.label(n, j, i))
            })
        })
    }
}

/// Numerically stable BCE on a logit.
#[inline]
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Summed BCE over unmasked entries and its gradient w.r.t. the symmetric
/// logits, scaled by `1 / denominator`.
pub fn bce_sum_and_grad<T: Real>(sym: &[T], labels: &LabelSet, denominator: f64) -> (f64, Vec<T>) {
    // Neumaier-compensated: the loss is differenced in gradient checks, so
    // accumulation error would otherwise dominate small derivatives.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut grad = vec![T::zero(); sym.len()];
    for (e, (z, g)) in sym.iter().zip(grad.iter_mut()).enumerate() {
        if !labels.mask[e] {
            continue;
        }
        let z = z.to_f64_lossy();
        let y = labels.labels[e] as f64;
        let v = bce_with_logit(z, y);
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
        *g = T::from_f64_lossy((sigmoid(z) - y) / denominator);
    }
    (sum + comp, grad)
}

/// Mean BCE over every unmasked `(n, i, j)` entry.
pub fn masked_bce_loss<T: Real>(pred: &TrianglePrediction<T>, labels: &LabelSet) -> Result<f64> {
    if pred.points != labels.points || pred.k != labels.k {
        return Err(Error::ContractViolation(format!(
            "prediction {}x{k}x{k} vs labels {}x{l}x{l}",
            pred.points,
            labels.points,
            k = pred.k,
            l = labels.k
        )));
    }
    let count = labels.masked_count();
    if count == 0 {
        return Err(Error::UndefinedLoss);
    }
    let (sum, _) = bce_sum_and_grad(&pred.sym, labels, count as f64);
    Ok(sum / count as f64)
}
