use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::C_IN;
use crate::real::Real;

/// Network hyper-shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    pub in_channels: usize,
    pub width: usize,
    pub heads: usize,
    pub ffn_width: usize,
    pub layers: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            in_channels: C_IN,
            width: 64,
            heads: 4,
            ffn_width: 256,
            layers: 5,
        }
    }
}

impl NetConfig {
    pub fn head_dim(&self) -> usize {
        self.width / self.heads
    }
}

/// One named tensor inside the flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BlockLayout {
    pub ln1_g: Range<usize>,
    pub ln1_b: Range<usize>,
    pub wq: Range<usize>,
    pub bq: Range<usize>,
    pub wk: Range<usize>,
    pub bk: Range<usize>,
    pub wv: Range<usize>,
    pub bv: Range<usize>,
    pub wo: Range<usize>,
    pub bo: Range<usize>,
    pub ln2_g: Range<usize>,
    pub ln2_b: Range<usize>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub tensors: Vec<TensorSpec>,
    pub in_w: Range<usize>,
    pub in_b: Range<usize>,
    pub blocks: Vec<BlockLayout>,
    pub pair_a: Range<usize>,
    pub pair_b: Range<usize>,
    pub pair_bias: Range<usize>,
    pub total: usize,
}

/// Kind of initialization a tensor receives.
#[derive(Clone, Copy)]
enum Init {
    FanIn(usize),
    Zeros,
    Ones,
}

struct Builder {
    tensors: Vec<TensorSpec>,
    inits: Vec<Init>,
    total: usize,
}

impl Builder {
    fn add(&mut self, name: String, shape: Vec<usize>, init: Init) -> Range<usize> {
        let spec = TensorSpec {
            name,
            shape,
            offset: self.total,
        };
        let r = spec.range();
        self.total = r.end;
        self.tensors.push(spec);
        self.inits.push(init);
        r
    }

    fn linear(&mut self, prefix: &str, fan_in: usize, fan_out: usize) -> (Range<usize>, Range<usize>) {
        let w = self.add(format!("{prefix}.weight"), vec![fan_in, fan_out], Init::FanIn(fan_in));
        let b = self.add(format!("{prefix}.bias"), vec![fan_out], Init::Zeros);
        (w, b)
    }

    fn norm(&mut self, prefix: &str, width: usize) -> (Range<usize>, Range<usize>) {
        let g = self.add(format!("{prefix}.gain"), vec![width], Init::Ones);
        let b = self.add(format!("{prefix}.shift"), vec![width], Init::Zeros);
        (g, b)
    }
}

fn build(cfg: &NetConfig) -> (Layout, Vec<Init>) {
    let mut b = Builder {
        tensors: Vec::new(),
        inits: Vec::new(),
        total: 0,
    };
    let d = cfg.width;
    let (in_w, in_b) = b.linear("input", cfg.in_channels, d);
    let blocks = (0..cfg.layers)
        .map(|l| {
            let p = format!("block{l}");
            let (ln1_g, ln1_b) = b.norm(&format!("{p}.norm1"), d);
            let (wq, bq) = b.linear(&format!("{p}.query"), d, d);
            let (wk, bk) = b.linear(&format!("{p}.key"), d, d);
            let (wv, bv) = b.linear(&format!("{p}.value"), d, d);
            let (wo, bo) = b.linear(&format!("{p}.out"), d, d);
            let (ln2_g, ln2_b) = b.norm(&format!("{p}.norm2"), d);
            let (w1, b1) = b.linear(&format!("{p}.ffn1"), d, cfg.ffn_width);
            let (w2, b2) = b.linear(&format!("{p}.ffn2"), cfg.ffn_width, d);
            BlockLayout {
                ln1_g,
                ln1_b,
                wq,
                bq,
                wk,
                bk,
                wv,
                bv,
                wo,
                bo,
                ln2_g,
                ln2_b,
                w1,
                b1,
                w2,
                b2,
            }
        })
        .collect();
    let pair_a = b.add("pair.a".into(), vec![d, d], Init::FanIn(d));
    let pair_b = b.add("pair.b".into(), vec![d, d], Init::FanIn(d));
    let pair_bias = b.add("pair.bias".into(), vec![1], Init::Zeros);
    (
        Layout {
            tensors: b.tensors,
            in_w,
            in_b,
            blocks,
            pair_a,
            pair_b,
            pair_bias,
            total: b.total,
        },
        b.inits,
    )
}

/// All trainable tensors in one flat buffer, addressed through a fixed
/// named layout. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    cfg: NetConfig,
    pub(crate) layout: Layout,
    pub(crate) data: Vec<T>,
}

impl<T: Real> NetworkParams<T> {
    pub fn zeros(cfg: NetConfig) -> Self {
        let (layout, _) = build(&cfg);
        let data = vec![T::zero(); layout.total];
        NetworkParams { cfg, layout, data }
    }

    /// Deterministic initialization: weights uniform in `+-1/sqrt(fan_in)`,
    /// biases and norm shifts zero, norm gains one.
    pub fn init(cfg: NetConfig, seed: u64) -> Self {
        let (layout, inits) = build(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![T::zero(); layout.total];
        for (spec, init) in layout.tensors.iter().zip(inits) {
            let slot = &mut data[spec.range()];
            match init {
                Init::Zeros => {}
                Init::Ones => slot.fill(T::one()),
                Init::FanIn(fan_in) => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    for v in slot {
                        *v = T::from_f64_lossy(rng.gen_range(-bound..bound));
                    }
                }
            }
        }
        NetworkParams { cfg, layout, data }
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.layout.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&[T]> {
        self.layout
            .tensors
            .iter()
            .find(|t| t.name == name)
            .map(|t| &self.data[t.range()])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [T]> {
        let r = self.layout.tensors.iter().find(|t| t.name == name)?.range();
        Some(&mut self.data[r])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub(crate) fn get(&self, r: &Range<usize>) -> &[T] {
        &self.data[r.clone()]
    }

    pub(crate) fn get_mut(&mut self, r: &Range<usize>) -> &mut [T] {
        &mut self.data[r.clone()]
    }

    pub fn zeros_like(&self) -> Self {
        NetworkParams {
            cfg: self.cfg,
            layout: self.layout.clone(),
            data: vec![T::zero(); self.data.len()],
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> NetworkParams<U> {
        NetworkParams {
            cfg: self.cfg,
            layout: self.layout.clone(),
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }

    /// FNV-1a over the bit patterns; any change to any parameter changes it
    /// with overwhelming probability.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.data {
            for byte in v.to_f64_lossy().to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// Reassembles parameters from named tensors (used by the file loader).
    pub(crate) fn from_parts(cfg: NetConfig, data: Vec<T>) -> Self {
        let (layout, _) = build(&cfg);
        assert_eq!(layout.total, data.len());
        NetworkParams { cfg, layout, data }
    }
}

/// Layout of the default configuration without allocating parameters.
pub fn tensor_specs(cfg: &NetConfig) -> Vec<TensorSpec> {
    build(cfg).0.tensors
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_seed_dependent() {
        let cfg = NetConfig::default();
        let a = NetworkParams::<f32>::init(cfg, 0);
        let b = NetworkParams::<f32>::init(cfg, 0);
        let c = NetworkParams::<f32>::init(cfg, 1);
        assert_eq!(a.as_slice(), b.as_slice());
        assert_ne!(a.as_slice(), c.as_slice());
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn shapes_follow_config() {
        let p = NetworkParams::<f64>::init(NetConfig::default(), 3);
        let shape = |n: &str| {
            p.tensors()
                .iter()
                .find(|t| t.name == n)
                .unwrap()
                .shape
                .clone()
        };
        assert_eq!(shape("input.weight"), vec![51, 64]);
        assert_eq!(shape("block4.ffn1.weight"), vec![64, 256]);
        assert_eq!(shape("block0.ffn2.weight"), vec![256, 64]);
        assert_eq!(shape("pair.a"), vec![64, 64]);
        assert_eq!(shape("pair.bias"), vec![1]);
        assert!(p.tensor("block5.query.weight").is_none());
        let blocks = p.tensors().iter().filter(|t| t.name.starts_with("block")).count();
        assert_eq!(blocks, 5 * 16);
        assert_eq!(p.tensor("block2.norm1.gain").unwrap(), &[1.0; 64][..]);
        let total: usize = p.tensors().iter().map(|t| t.len()).sum();
        assert_eq!(total, p.len());
    }
}
