//! Per-point offset optimization through the frozen network.
//!
//! Each iteration re-normalizes every neighborhood at the displaced
//! positions, predicts triangles, turns the confident rows into
//! pseudo-labels, and moves every point a fixed fraction of its
//! nearest-neighbor distance against the loss gradient, refusing moves that
//! bring it closer than half that distance to any of its neighbors.

use crate::error::{Error, Result};
use crate::extraction::{edge_adjacency_stats, extract_faces, top_two, RowRule, Thresholds};
use crate::geometry::normalize::{displaced, normalize_neighborhood};
use crate::geometry::vec3::{dist, norm, scale, sub, Point3};
use crate::geometry::{build_features, features_backward, Neighborhood};
use crate::network::{
    batch_backward, batch_forward, bce_sum_and_grad, predict, sigmoid, LabelSet, Need, NetworkParams,
    TrianglePrediction,
};
use crate::real::Real;

/// Starting offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Push each point a quarter of the way away from its nearest neighbor.
    #[default]
    Repel,
    Zero,
}

/// Confidence a row needs before its top two entries become pseudo-labels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PseudoGate {
    /// Fixed 0.5.
    #[default]
    Half,
    /// The extraction threshold `p1`.
    P1,
}

/// How the half-distance rule treats neighbors that move in the same step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateMode {
    /// Every candidate is tested against every other candidate, once.
    Simultaneous,
    /// As `Simultaneous`, then accepted points are re-tested against the
    /// committed positions and reverted until no accepted point violates
    /// the rule.
    #[default]
    Settled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub gamma0: f64,
    pub decay: f64,
    pub decay_period: usize,
    pub iterations: usize,
    /// Points per gradient chunk.
    pub chunk: usize,
    pub thresholds: Thresholds,
    pub rule: RowRule,
    pub pseudo_gate: PseudoGate,
    pub init: InitMode,
    pub gate: GateMode,
    /// Run a trial extraction every iteration for the diagnostics.
    pub trial_extraction: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            gamma0: 0.1,
            decay: 0.7,
            decay_period: 10,
            iterations: 100,
            chunk: 1024,
            thresholds: Thresholds::default(),
            rule: RowRule::Gated,
            pseudo_gate: PseudoGate::Half,
            init: InitMode::Repel,
            gate: GateMode::Settled,
            trial_extraction: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma0 must be positive, got {}", self.gamma0)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::InvalidParameter(format!("decay must be in (0, 1], got {}", self.decay)));
        }
        if self.decay_period == 0 || self.chunk == 0 {
            return Err(Error::InvalidParameter("decay period and chunk size must be at least 1".into()));
        }
        Ok(())
    }

    fn pseudo_threshold(&self) -> f64 {
        match self.pseudo_gate {
            PseudoGate::Half => 0.5,
            PseudoGate::P1 => self.thresholds.p1,
        }
    }
}

/// Step size at iteration `t`: `gamma0 * decay^floor(t / period)`.
pub fn lr_at(t: usize, cfg: &OptimizerConfig) -> f64 {
    cfg.gamma0 * cfg.decay.powi((t / cfg.decay_period) as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetState {
    pub offsets: Vec<Point3>,
    /// Original nearest-neighbor distance per point.
    pub d0: Vec<f64>,
    pub t: usize,
    /// Whether each point's last update was applied.
    pub applied: Vec<bool>,
}

pub fn init_offsets(points: &[Point3], nbhd: &Neighborhood, mode: InitMode) -> OffsetState {
    let n = points.len();
    let offsets = match mode {
        InitMode::Zero => vec![[0.0; 3]; n],
        InitMode::Repel => (0..n)
            .map(|i| {
                let q = nbhd
                    .row(i)
                    .iter()
                    .zip(nbhd.row_distances(i))
                    .find(|(_, d)| **d > 0.0)
                    .map(|(j, _)| points[*j as usize])
                    .unwrap_or(points[i]);
                scale(sub(points[i], q), 0.25)
            })
            .collect(),
    };
    OffsetState {
        offsets,
        d0: nbhd.d0().to_vec(),
        t: 0,
        applied: vec![true; n],
    }
}

/// Top-two pseudo-labels for every confident row. `skip[n]` disables a
/// point entirely.
pub fn make_pseudo_labels<T: Real>(pred: &TrianglePrediction<T>, skip: Option<&[bool]>, gate: f64) -> LabelSet {
    let k = pred.k;
    let mut labels = LabelSet::new(pred.points, k);
    let mut probs = vec![0.0; k];
    for n in 0..pred.points {
        if skip.is_some_and(|s| s[n]) {
            labels.disable_point(n);
            continue;
        }
        let m = pred.sym_matrix(n);
        for i in 0..k {
            for (j, p) in probs.iter_mut().enumerate() {
                *p = sigmoid(m[i * k + j].to_f64_lossy());
            }
            if let Some((j, l)) = top_two(&probs, i) {
                if probs[j] > gate {
                    labels.set_pair(n, i, j);
                    labels.set_pair(n, i, l);
                }
            }
        }
    }
    labels
}

/// Outcome of one gradient evaluation over all chunks.
#[derive(Debug, Clone)]
pub struct ChunkGradients<T> {
    /// dL/d(offset) per point.
    pub grads: Vec<Point3>,
    pub loss: f64,
    /// Predictions at the evaluated offsets, in point order.
    pub prediction: TrianglePrediction<T>,
    /// Points whose neighborhood collapsed.
    pub degenerate: Vec<bool>,
    pub processed: usize,
}

/// Gradient of the mean pseudo-label loss with respect to all offsets,
/// evaluated in contiguous chunks of `chunk` points. Each chunk's loss is
/// normalized by the global count of unmasked entries, so the sum over
/// chunks equals the whole-cloud gradient for any chunk size.
pub fn accumulate_chunk_gradients<T: Real>(
    points: &[Point3],
    nbhd: &Neighborhood,
    offsets: &[Point3],
    params: &NetworkParams<T>,
    chunk: usize,
    pseudo_gate: f64,
) -> Result<ChunkGradients<T>> {
    if chunk == 0 {
        return Err(Error::InvalidParameter("chunk size must be at least 1".into()));
    }
    let n = points.len();
    let k = nbhd.k();
    let degenerate: Vec<bool> = (0..n)
        .map(|i| normalize_neighborhood(i, nbhd, points, Some(offsets)).is_err())
        .collect();
    let valid = degenerate.iter().filter(|d| !**d).count();
    let denom = (valid * k * (k - 1)) as f64;
    let mut grads = vec![[0.0; 3]; n];
    let mut loss = 0.0;
    let mut prediction = TrianglePrediction {
        points: 0,
        k,
        raw: Vec::with_capacity(n * k * k),
        sym: Vec::with_capacity(n * k * k),
    };
    let mut processed = 0;
    for start in (0..n).step_by(chunk) {
        let end = (start + chunk).min(n);
        let centers: Vec<usize> = (start..end).collect();
        processed += centers.len();
        let feats = build_features::<T>(&centers, nbhd, points, Some(offsets));
        let pass = batch_forward(params, &feats.data, k)?;
        let labels = make_pseudo_labels(&pass.prediction, Some(&degenerate[start..end]), pseudo_gate);
        if labels.masked_count() > 0 {
            let (sum, dsym) = bce_sum_and_grad(&pass.prediction.sym, &labels, denom);
            loss += sum / denom;
            let g = batch_backward(
                params,
                &pass,
                &dsym,
                Need {
                    params: false,
                    inputs: true,
                },
            )?;
            features_backward(&feats, nbhd, &g.inputs.expect("requested"), &mut grads);
        }
        prediction.points += pass.prediction.points;
        prediction.raw.extend_from_slice(&pass.prediction.raw);
        prediction.sym.extend_from_slice(&pass.prediction.sym);
    }
    Ok(ChunkGradients {
        grads,
        loss,
        prediction,
        degenerate,
        processed,
    })
}

/// Summary of one controlled update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub applied: usize,
    pub rejected: usize,
    pub zero_gradient: usize,
}

/// Smallest distance from `i` to its frozen neighbors at `offsets`.
pub fn min_neighbor_distance(points: &[Point3], nbhd: &Neighborhood, offsets: &[Point3], i: usize) -> f64 {
    let xp = displaced(points, Some(offsets), i);
    nbhd.row(i)
        .iter()
        .map(|&j| dist(xp, displaced(points, Some(offsets), j as usize)))
        .fold(f64::INFINITY, f64::min)
}

/// Normalized-gradient step with the half-distance gate.
pub fn controlled_step(
    state: &mut OffsetState,
    grads: &[Point3],
    gamma: f64,
    nbhd: &Neighborhood,
    points: &[Point3],
    mode: GateMode,
) -> Result<StepReport> {
    let n = points.len();
    if grads.len() != n || state.offsets.len() != n {
        return Err(Error::ContractViolation(format!(
            "{} gradients and {} offsets for {n} points",
            grads.len(),
            state.offsets.len()
        )));
    }
    if grads.iter().flatten().any(|g| !g.is_finite()) {
        return Err(Error::numeric("offset gradient"));
    }
    let mut zero = vec![false; n];
    let candidate: Vec<Point3> = (0..n)
        .map(|i| {
            let g = grads[i];
            let len = norm(g);
            if len == 0.0 {
                zero[i] = true;
                return state.offsets[i];
            }
            sub(state.offsets[i], scale(g, gamma * state.d0[i] / len))
        })
        .collect();
    let mut accept: Vec<bool> = (0..n)
        .map(|i| zero[i] || min_neighbor_distance(points, nbhd, &candidate, i) > 0.5 * state.d0[i])
        .collect();
    let mut next: Vec<Point3> = (0..n)
        .map(|i| if accept[i] { candidate[i] } else { state.offsets[i] })
        .collect();
    if mode == GateMode::Settled {
        loop {
            let violators: Vec<usize> = (0..n)
                .filter(|&i| accept[i] && !zero[i])
                .filter(|&i| min_neighbor_distance(points, nbhd, &next, i) <= 0.5 * state.d0[i])
                .collect();
            if violators.is_empty() {
                break;
            }
            for i in violators {
                accept[i] = false;
                next[i] = state.offsets[i];
            }
        }
    }
    let applied = (0..n).filter(|&i| accept[i] && !zero[i]).count();
    let zero_gradient = zero.iter().filter(|z| **z).count();
    state.offsets = next;
    state.applied = accept;
    state.t += 1;
    Ok(StepReport {
        applied,
        rejected: n - applied - zero_gradient,
        zero_gradient,
    })
}

/// One diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub loss: f64,
    pub lr: f64,
    pub applied_percent: f64,
    /// Manifold-edge percentage of a trial extraction at this iteration's
    /// offsets (NaN when trial extraction is off).
    pub manifold_percent: f64,
}

pub fn diagnostics_csv(rows: &[IterationDiagnostics]) -> String {
    let mut s = String::from("iteration,loss,lr,applied_percent,manifold_percent\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration, r.loss, r.lr, r.applied_percent, r.manifold_percent
        ));
    }
    s
}

#[derive(Debug, Clone)]
pub struct OptimizeResult<T> {
    pub state: OffsetState,
    pub diagnostics: Vec<IterationDiagnostics>,
    /// Prediction at the final offsets.
    pub prediction: TrianglePrediction<T>,
    pub degenerate: Vec<bool>,
}

/// What one iteration did, handed to an `optimize_with` observer.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<'a> {
    pub t: usize,
    pub lr: f64,
    pub grads: &'a [Point3],
    pub before: &'a [Point3],
    pub after: &'a [Point3],
    pub state: &'a OffsetState,
    pub report: StepReport,
}

/// Runs the whole loop on `points` with frozen `params` and `nbhd`.
pub fn optimize<T: Real>(
    points: &[Point3],
    nbhd: &Neighborhood,
    params: &NetworkParams<T>,
    cfg: &OptimizerConfig,
) -> Result<OptimizeResult<T>> {
    optimize_with(points, nbhd, params, cfg, |_| {})
}

/// `optimize`, calling `observer` after every step.
pub fn optimize_with<T: Real>(
    points: &[Point3],
    nbhd: &Neighborhood,
    params: &NetworkParams<T>,
    cfg: &OptimizerConfig,
    mut observer: impl FnMut(&StepRecord),
) -> Result<OptimizeResult<T>> {
    cfg.validate()?;
    let n = points.len();
    let centers: Vec<usize> = (0..n).collect();
    let mut state = init_offsets(points, nbhd, cfg.init);
    if cfg.iterations == 0 {
        state.offsets = vec![[0.0; 3]; n];
    }
    let mut diagnostics = Vec::with_capacity(cfg.iterations);
    for t in 0..cfg.iterations {
        let g = accumulate_chunk_gradients(points, nbhd, &state.offsets, params, cfg.chunk, cfg.pseudo_threshold())?;
        let manifold_percent = if cfg.trial_extraction {
            let mesh = extract_faces(&g.prediction, &centers, nbhd, points, Some(&g.degenerate), cfg.thresholds, cfg.rule);
            edge_adjacency_stats(&mesh).manifold_percent
        } else {
            f64::NAN
        };
        let lr = lr_at(t, cfg);
        let before = state.offsets.clone();
        let rep = controlled_step(&mut state, &g.grads, lr, nbhd, points, cfg.gate)?;
        observer(&StepRecord {
            t,
            lr,
            grads: &g.grads,
            before: &before,
            after: &state.offsets,
            state: &state,
            report: rep,
        });
        diagnostics.push(IterationDiagnostics {
            iteration: t,
            loss: g.loss,
            lr,
            applied_percent: 100.0 * rep.applied as f64 / n as f64,
            manifold_percent,
        });
    }
    let degenerate: Vec<bool> = (0..n)
        .map(|i| normalize_neighborhood(i, nbhd, points, Some(&state.offsets)).is_err())
        .collect();
    let mut prediction = TrianglePrediction {
        points: 0,
        k: nbhd.k(),
        raw: Vec::new(),
        sym: Vec::new(),
    };
    for start in (0..n).step_by(cfg.chunk) {
        let chunk: Vec<usize> = (start..(start + cfg.chunk).min(n)).collect();
        let feats = build_features::<T>(&chunk, nbhd, points, Some(&state.offsets));
        let p = predict(params, &feats.data, nbhd.k())?;
        prediction.points += p.points;
        prediction.raw.extend(p.raw);
        prediction.sym.extend(p.sym);
    }
    Ok(OptimizeResult {
        state,
        diagnostics,
        prediction,
        degenerate,
    })
}
