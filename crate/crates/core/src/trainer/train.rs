//! The supervised training loop.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{build_features, knn_search, PointCloud};
use crate::mesh::TriMesh;
use crate::network::{batch_backward, batch_forward, bce_sum_and_grad, Need, NetworkParams};

use super::{augment_points, build_labels, Augmentation};

/// Meshes to sample training centers from.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    meshes: Vec<TriMesh>,
    vertex_faces: Vec<Vec<Vec<usize>>>,
}

impl TrainingSet {
    pub fn new(meshes: Vec<TriMesh>) -> Result<Self> {
        if meshes.is_empty() {
            return Err(Error::InvalidInput("training set is empty".into()));
        }
        for (i, m) in meshes.iter().enumerate() {
            m.validate()
                .map_err(|e| Error::InvalidInput(format!("training mesh {i}: {e}")))?;
        }
        let vertex_faces = meshes.iter().map(|m| m.vertex_faces()).collect();
        Ok(TrainingSet { meshes, vertex_faces })
    }

    pub fn meshes(&self) -> &[TriMesh] {
        &self.meshes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Heavy-ball momentum.
    Momentum,
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    /// Centers per step.
    pub batch: usize,
    pub steps: usize,
    pub lr: f64,
    pub momentum: f64,
    pub optimizer: Optimizer,
    /// Cosine decay of the learning rate to zero over `steps`.
    pub cosine: bool,
    /// Global gradient-norm clip.
    pub clip: Option<f64>,
    pub augmentation: Augmentation,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 50,
            batch: 512,
            steps: 2000,
            lr: 1e-3,
            momentum: 0.9,
            optimizer: Optimizer::Adam,
            cosine: true,
            clip: None,
            augmentation: Augmentation::default(),
            seed: 0,
        }
    }
}

/// One row of the loss trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPoint {
    pub step: usize,
    pub loss: f64,
}

pub fn loss_trace_csv(trace: &[LossPoint]) -> String {
    let mut s = String::from("step,loss\n");
    for p in trace {
        s.push_str(&format!("{},{}\n", p.step, p.loss));
    }
    s
}

/// Parameters plus optimizer moments.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: NetworkParams<f32>,
    m1: Vec<f32>,
    m2: Vec<f32>,
    pub step: usize,
}

impl TrainState {
    pub fn new(params: NetworkParams<f32>) -> Self {
        let n = params.len();
        TrainState {
            params,
            m1: vec![0.0; n],
            m2: vec![0.0; n],
            step: 0,
        }
    }

    fn apply(&mut self, grad: &[f32], lr: f64, cfg: &TrainConfig) {
        let p = self.params.as_mut_slice();
        match cfg.optimizer {
            Optimizer::Momentum => {
                let (mu, lr) = (cfg.momentum as f32, lr as f32);
                for ((w, v), g) in p.iter_mut().zip(&mut self.m1).zip(grad) {
                    *v = mu * *v + g;
                    *w -= lr * *v;
                }
            }
            Optimizer::Adam => {
                let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f32);
                let t = (self.step + 1) as i32;
                let c1 = (1.0 - b1.powi(t)) as f32;
                let c2 = (1.0 - b2.powi(t)) as f32;
                let (b1, b2, lr) = (b1 as f32, b2 as f32, lr as f32);
                for (((w, m), v), g) in p.iter_mut().zip(&mut self.m1).zip(&mut self.m2).zip(grad) {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
}

fn lr_at(cfg: &TrainConfig, step: usize) -> f64 {
    if cfg.cosine && cfg.steps > 0 {
        let x = (step as f64 / cfg.steps as f64).min(1.0);
        cfg.lr * 0.5 * (1.0 + (std::f64::consts::PI * x).cos())
    } else {
        cfg.lr
    }
}

/// Loss and parameter gradient on one sampled batch.
fn batch_gradient(
    params: &NetworkParams<f32>,
    set: &TrainingSet,
    cfg: &TrainConfig,
    step: usize,
) -> Result<Option<(f64, Vec<f32>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mi = rng.gen_range(0..set.meshes.len());
    let mesh = &set.meshes[mi];
    let pts = augment_points(&mesh.vertices, &cfg.augmentation, rng.gen());
    let cloud = PointCloud::new(pts)?;
    let nbhd = knn_search(&cloud, cfg.k)?;
    let n = cloud.len().min(cfg.batch);
    let mut centers = sample(&mut rng, cloud.len(), n).into_vec();
    centers.sort_unstable();
    let mut labels = build_labels(mesh, &set.vertex_faces[mi], &centers, &nbhd)?;
    let feats = build_features::<f32>(&centers, &nbhd, &cloud.points, None);
    for d in feats.degenerate() {
        labels.disable_point(d);
    }
    let count = labels.masked_count();
    if count == 0 {
        return Ok(None);
    }
    let pass = batch_forward(params, &feats.data, cfg.k)?;
    let (sum, dsym) = bce_sum_and_grad(&pass.prediction.sym, &labels, count as f64);
    let loss = sum / count as f64;
    if !loss.is_finite() {
        return Err(Error::TrainingFailure { step });
    }
    let grads = batch_backward(
        params,
        &pass,
        &dsym,
        Need {
            params: true,
            inputs: false,
        },
    )?;
    let g = grads.params.expect("requested").as_slice().to_vec();
    Ok(Some((loss, g)))
}

/// Runs `steps` optimizer steps, continuing from `state.step`.
pub fn train_epoch(state: &mut TrainState, set: &TrainingSet, cfg: &TrainConfig, steps: usize) -> Result<Vec<LossPoint>> {
    let mut trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let step = state.step;
        let Some((loss, mut grad)) = batch_gradient(&state.params, set, cfg, step)? else {
            state.step += 1;
            continue;
        };
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingFailure { step });
        }
        if let Some(c) = cfg.clip {
            let norm = grad.iter().map(|g| (*g as f64) * (*g as f64)).sum::<f64>().sqrt();
            if norm > c {
                let s = (c / norm) as f32;
                grad.iter_mut().for_each(|g| *g *= s);
            }
        }
        state.apply(&grad, lr_at(cfg, step), cfg);
        if !state.params.all_finite() {
            return Err(Error::TrainingFailure { step });
        }
        trace.push(LossPoint { step, loss });
        state.step += 1;
    }
    Ok(trace)
}

/// Full training run from freshly initialized parameters.
pub fn train(set: &TrainingSet, cfg: &TrainConfig, init: NetworkParams<f32>) -> Result<(NetworkParams<f32>, Vec<LossPoint>)> {
    let mut state = TrainState::new(init);
    let trace = train_epoch(&mut state, set, cfg, cfg.steps)?;
    Ok((state.params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetConfig;
    use crate::trainer::icosphere;

    fn small() -> (TrainingSet, TrainConfig, NetworkParams<f32>) {
        let set = TrainingSet::new(vec![icosphere(2)]).unwrap();
        let cfg = TrainConfig {
            k: 8,
            batch: 16,
            steps: 3,
            ..TrainConfig::default()
        };
        let cfg_net = NetConfig {
            layers: 1,
            ..NetConfig::default()
        };
        (set, cfg, NetworkParams::init(cfg_net, 0))
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (set, mut cfg, p) = small();
        cfg.lr = 0.0;
        cfg.augmentation = Augmentation::NONE;
        let (q, trace) = train(&set, &cfg, p.clone()).unwrap();
        assert_eq!(q.checksum(), p.checksum());
        assert_eq!(trace.len(), 3);
    }

    #[test]
    fn runs_are_reproducible() {
        let (set, cfg, p) = small();
        let a = train(&set, &cfg, p.clone()).unwrap();
        let b = train(&set, &cfg, p).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.checksum(), b.0.checksum());
        assert!(loss_trace_csv(&a.1).starts_with("step,loss\n0,"));
    }

    #[test]
    fn empty_set_is_rejected() {
        assert!(TrainingSet::new(Vec::new()).is_err());
    }
}
