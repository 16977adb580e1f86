//! Forward and reverse passes of the triangle-prediction network.
//!
//! Every center point contributes `K` tokens (its neighbors). Tokens go
//! through a linear input projection and pre-norm transformer blocks with
//! attention restricted to the point's own tokens. A bilinear pair head turns
//! the final tokens `H` into raw logits `O = (H Wa)(H Wb)^T / sqrt(D) + b`,
//! which are symmetrized as `O + O^T`.

use crate::error::{Error, Result};
use crate::real::{gemm, Real, Trans};

use super::params::{BlockLayout, NetConfig, NetworkParams};

const LN_EPS: f64 = 1e-5;

/// Per-point `K x K` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct TrianglePrediction<T> {
    pub points: usize,
    pub k: usize,
    /// Row-major `points x K x K`, before symmetrization.
    pub raw: Vec<T>,
    /// `raw + raw^T` per point; exactly symmetric.
    pub sym: Vec<T>,
}

impl<T: Real> TrianglePrediction<T> {
    pub fn sym_matrix(&self, n: usize) -> &[T] {
        let kk = self.k * self.k;
        &self.sym[n * kk..(n + 1) * kk]
    }

    pub fn probability(&self, n: usize, i: usize, j: usize) -> f64 {
        sigmoid(self.sym[(n * self.k + i) * self.k + j].to_f64_lossy())
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
struct BlockCache<T> {
    xhat1: Vec<T>,
    rstd1: Vec<T>,
    a: Vec<T>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    /// `points x heads x K x K` attention weights.
    p: Vec<T>,
    ctx: Vec<T>,
    xhat2: Vec<T>,
    rstd2: Vec<T>,
    bn: Vec<T>,
    u: Vec<T>,
    gl: Vec<T>,
}

/// Activations retained for the reverse pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    points: usize,
    k: usize,
    features: Vec<T>,
    blocks: Vec<BlockCache<T>>,
    h: Vec<T>,
    ha: Vec<T>,
    hb: Vec<T>,
    pub prediction: TrianglePrediction<T>,
}

impl<T> ForwardPass<T> {
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Which gradients the reverse pass produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Need {
    pub params: bool,
    pub inputs: bool,
}

#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub params: Option<NetworkParams<T>>,
    /// `points x K x C_in`.
    pub inputs: Option<Vec<T>>,
}

fn check_finite<T: Real>(v: &[T], stage: impl FnOnce() -> String) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(stage()))
    }
}

fn linear<T: Real>(x: &[T], w: &[T], b: &[T], m: usize, din: usize, dout: usize) -> Vec<T> {
    let mut y = vec![T::zero(); m * dout];
    gemm(Trans::No, Trans::No, m, din, dout, x, w, &mut y, false);
    for row in y.chunks_exact_mut(dout) {
        for (v, bb) in row.iter_mut().zip(b) {
            *v += *bb;
        }
    }
    y
}

/// Accumulates weight/bias grads and returns (or accumulates into) dX.
#[allow(clippy::too_many_arguments)]
fn linear_backward<T: Real>(
    x: &[T],
    w: &[T],
    dy: &[T],
    m: usize,
    din: usize,
    dout: usize,
    grads: Option<(&mut [T], &mut [T])>,
    dx: Option<(&mut [T], bool)>,
) {
    if let Some((dw, db)) = grads {
        gemm(Trans::Yes, Trans::No, din, m, dout, x, dy, dw, true);
        for row in dy.chunks_exact(dout) {
            for (g, v) in db.iter_mut().zip(row) {
                *g += *v;
            }
        }
    }
    if let Some((dx, acc)) = dx {
        gemm(Trans::No, Trans::Yes, m, dout, din, dy, w, dx, acc);
    }
}

fn layer_norm<T: Real>(x: &[T], g: &[T], b: &[T], d: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let rows = x.len() / d;
    let mut xhat = vec![T::zero(); x.len()];
    let mut y = vec![T::zero(); x.len()];
    let mut rstd = vec![T::zero(); rows];
    let inv_d = T::one() / T::from_usize(d).unwrap();
    let eps = T::from_f64_lossy(LN_EPS);
    for r in 0..rows {
        let xr = &x[r * d..(r + 1) * d];
        let mean = xr.iter().copied().sum::<T>() * inv_d;
        let var = xr.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() * inv_d;
        let rs = T::one() / (var + eps).sqrt();
        rstd[r] = rs;
        for c in 0..d {
            let h = (xr[c] - mean) * rs;
            xhat[r * d + c] = h;
            y[r * d + c] = h * g[c] + b[c];
        }
    }
    (y, xhat, rstd)
}

/// Adds dL/dx into `dx`.
fn layer_norm_backward<T: Real>(
    dy: &[T],
    xhat: &[T],
    rstd: &[T],
    g: &[T],
    d: usize,
    grads: Option<(&mut [T], &mut [T])>,
    dx: &mut [T],
) {
    let rows = dy.len() / d;
    let inv_d = T::one() / T::from_usize(d).unwrap();
    if let Some((dg, db)) = grads {
        for r in 0..rows {
            for c in 0..d {
                dg[c] += dy[r * d + c] * xhat[r * d + c];
                db[c] += dy[r * d + c];
            }
        }
    }
    let mut dxhat = vec![T::zero(); d];
    for r in 0..rows {
        let mut m1 = T::zero();
        let mut m2 = T::zero();
        for c in 0..d {
            let v = dy[r * d + c] * g[c];
            dxhat[c] = v;
            m1 += v;
            m2 += v * xhat[r * d + c];
        }
        m1 *= inv_d;
        m2 *= inv_d;
        for c in 0..d {
            dx[r * d + c] += rstd[r] * (dxhat[c] - m1 - xhat[r * d + c] * m2);
        }
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

#[inline]
fn gelu<T: Real>(u: T) -> T {
    let c = T::from_f64_lossy(GELU_C);
    let a = T::from_f64_lossy(GELU_A);
    let half = T::from_f64_lossy(0.5);
    half * u * (T::one() + (c * (u + a * u * u * u)).tanh_act())
}

#[inline]
fn gelu_grad<T: Real>(u: T) -> T {
    let c = T::from_f64_lossy(GELU_C);
    let a = T::from_f64_lossy(GELU_A);
    let half = T::from_f64_lossy(0.5);
    let three = T::from_f64_lossy(3.0);
    let t = (c * (u + a * u * u * u)).tanh_act();
    half * (T::one() + t) + half * u * (T::one() - t * t) * c * (T::one() + three * a * u * u)
}

struct Dims {
    points: usize,
    k: usize,
    d: usize,
    heads: usize,
    dh: usize,
}

impl Dims {
    fn rows(&self) -> usize {
        self.points * self.k
    }
}

fn attention_forward<T: Real>(q: &[T], k: &[T], v: &[T], dims: &Dims) -> (Vec<T>, Vec<T>) {
    let Dims {
        points,
        k: kk,
        d,
        heads,
        dh,
    } = *dims;
    let scale = T::one() / T::from_usize(dh).unwrap().sqrt();
    let mut p = vec![T::zero(); points * heads * kk * kk];
    let mut ctx = vec![T::zero(); points * kk * d];
    for g in 0..points {
        for h in 0..heads {
            let off = h * dh;
            let pm = &mut p[(g * heads + h) * kk * kk..(g * heads + h + 1) * kk * kk];
            for i in 0..kk {
                let qi = &q[(g * kk + i) * d + off..(g * kk + i) * d + off + dh];
                let row = &mut pm[i * kk..(i + 1) * kk];
                let mut max = T::neg_infinity();
                for j in 0..kk {
                    let kj = &k[(g * kk + j) * d + off..(g * kk + j) * d + off + dh];
                    let s = qi.iter().zip(kj).map(|(a, b)| *a * *b).sum::<T>() * scale;
                    row[j] = s;
                    max = max.max(s);
                }
                let mut z = T::zero();
                for s in row.iter_mut() {
                    *s = (*s - max).exp();
                    z += *s;
                }
                for s in row.iter_mut() {
                    *s /= z;
                }
                let ci = &mut ctx[(g * kk + i) * d + off..(g * kk + i) * d + off + dh];
                for j in 0..kk {
                    let w = row[j];
                    let vj = &v[(g * kk + j) * d + off..(g * kk + j) * d + off + dh];
                    for (c, x) in ci.iter_mut().zip(vj) {
                        *c += w * *x;
                    }
                }
            }
        }
    }
    (p, ctx)
}

#[allow(clippy::too_many_arguments)]
fn attention_backward<T: Real>(
    q: &[T],
    k: &[T],
    v: &[T],
    p: &[T],
    dctx: &[T],
    dims: &Dims,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let Dims {
        points,
        k: kk,
        d,
        heads,
        dh,
    } = *dims;
    let scale = T::one() / T::from_usize(dh).unwrap().sqrt();
    let mut dq = vec![T::zero(); points * kk * d];
    let mut dk = vec![T::zero(); points * kk * d];
    let mut dv = vec![T::zero(); points * kk * d];
    let mut ds = vec![T::zero(); kk];
    for g in 0..points {
        for h in 0..heads {
            let off = h * dh;
            let pm = &p[(g * heads + h) * kk * kk..(g * heads + h + 1) * kk * kk];
            let at = |i: usize| (g * kk + i) * d + off;
            for i in 0..kk {
                let prow = &pm[i * kk..(i + 1) * kk];
                let dci = &dctx[at(i)..at(i) + dh];
                // dP_ij = dctx_i . v_j ; dv_j += P_ij dctx_i
                let mut dot_pp = T::zero();
                for j in 0..kk {
                    let vj = &v[at(j)..at(j) + dh];
                    let dp = dci.iter().zip(vj).map(|(a, b)| *a * *b).sum::<T>();
                    ds[j] = dp;
                    dot_pp += dp * prow[j];
                    let w = prow[j];
                    for (dvv, c) in dv[at(j)..at(j) + dh].iter_mut().zip(dci) {
                        *dvv += w * *c;
                    }
                }
                for j in 0..kk {
                    ds[j] = prow[j] * (ds[j] - dot_pp) * scale;
                }
                for j in 0..kk {
                    let s = ds[j];
                    for c in 0..dh {
                        dq[at(i) + c] += s * k[at(j) + c];
                        dk[at(j) + c] += s * q[at(i) + c];
                    }
                }
            }
        }
    }
    (dq, dk, dv)
}

fn block_forward<T: Real>(
    params: &NetworkParams<T>,
    bl: &BlockLayout,
    x: &mut [T],
    dims: &Dims,
    f: usize,
) -> BlockCache<T> {
    let (m, d) = (dims.rows(), dims.d);
    let (a, xhat1, rstd1) = layer_norm(x, params.get(&bl.ln1_g), params.get(&bl.ln1_b), d);
    let q = linear(&a, params.get(&bl.wq), params.get(&bl.bq), m, d, d);
    let k = linear(&a, params.get(&bl.wk), params.get(&bl.bk), m, d, d);
    let v = linear(&a, params.get(&bl.wv), params.get(&bl.bv), m, d, d);
    let (p, ctx) = attention_forward(&q, &k, &v, dims);
    let attn = linear(&ctx, params.get(&bl.wo), params.get(&bl.bo), m, d, d);
    for (xv, av) in x.iter_mut().zip(&attn) {
        *xv += *av;
    }
    let (bn, xhat2, rstd2) = layer_norm(x, params.get(&bl.ln2_g), params.get(&bl.ln2_b), d);
    let u = linear(&bn, params.get(&bl.w1), params.get(&bl.b1), m, d, f);
    let gl: Vec<T> = u.iter().map(|v| gelu(*v)).collect();
    let ff = linear(&gl, params.get(&bl.w2), params.get(&bl.b2), m, f, d);
    for (xv, fv) in x.iter_mut().zip(&ff) {
        *xv += *fv;
    }
    BlockCache {
        xhat1,
        rstd1,
        a,
        q,
        k,
        v,
        p,
        ctx,
        xhat2,
        rstd2,
        bn,
        u,
        gl,
    }
}

/// Runs the network on `features` (`points x K x C_in`, row-major).
pub fn forward<T: Real>(params: &NetworkParams<T>, features: &[T], k: usize) -> Result<ForwardPass<T>> {
    let cfg: NetConfig = *params.config();
    let cin = cfg.in_channels;
    if k == 0 || features.len() % (k * cin) != 0 {
        return Err(Error::ContractViolation(format!(
            "feature buffer of {} values is not a multiple of K x C_in = {k} x {cin}",
            features.len()
        )));
    }
    let points = features.len() / (k * cin);
    let dims = Dims {
        points,
        k,
        d: cfg.width,
        heads: cfg.heads,
        dh: cfg.head_dim(),
    };
    let (m, d) = (dims.rows(), dims.d);
    let lay = &params.layout;

    let mut x = linear(features, params.get(&lay.in_w), params.get(&lay.in_b), m, cin, d);
    check_finite(&x, || "input projection".into())?;
    let mut blocks = Vec::with_capacity(cfg.layers);
    for (l, bl) in lay.blocks.iter().enumerate() {
        blocks.push(block_forward(params, bl, &mut x, &dims, cfg.ffn_width));
        check_finite(&x, || format!("transformer block {l}"))?;
    }

    let ha = linear(&x, params.get(&lay.pair_a), &vec![T::zero(); d], m, d, d);
    let hb = linear(&x, params.get(&lay.pair_b), &vec![T::zero(); d], m, d, d);
    let bias = params.get(&lay.pair_bias)[0];
    let s = T::one() / T::from_usize(d).unwrap().sqrt();
    let kk = k * k;
    let mut raw = vec![T::zero(); points * kk];
    for g in 0..points {
        let rows = g * k * d..(g + 1) * k * d;
        let o = &mut raw[g * kk..(g + 1) * kk];
        gemm(Trans::No, Trans::Yes, k, d, k, &ha[rows.clone()], &hb[rows], o, false);
        for v in o.iter_mut() {
            *v = *v * s + bias;
        }
    }
    let mut sym = vec![T::zero(); points * kk];
    for g in 0..points {
        let o = &raw[g * kk..(g + 1) * kk];
        let so = &mut sym[g * kk..(g + 1) * kk];
        for i in 0..k {
            for j in 0..k {
                so[i * k + j] = o[i * k + j] + o[j * k + i];
            }
        }
    }
    check_finite(&sym, || "pair head".into())?;

    Ok(ForwardPass {
        points,
        k,
        features: features.to_vec(),
        blocks,
        h: x,
        ha,
        hb,
        prediction: TrianglePrediction {
            points,
            k,
            raw,
            sym,
        },
    })
}

/// Reverse pass from dL/d(symmetrized logits).
pub fn backward<T: Real>(
    params: &NetworkParams<T>,
    pass: &ForwardPass<T>,
    dsym: &[T],
    need: Need,
) -> Result<Gradients<T>> {
    let cfg: NetConfig = *params.config();
    let (points, k) = (pass.points, pass.k);
    let kk = k * k;
    if dsym.len() != points * kk {
        return Err(Error::ContractViolation(format!(
            "logit gradient has {} entries, forward produced {}",
            dsym.len(),
            points * kk
        )));
    }
    let dims = Dims {
        points,
        k,
        d: cfg.width,
        heads: cfg.heads,
        dh: cfg.head_dim(),
    };
    let (m, d, f, cin) = (dims.rows(), dims.d, cfg.ffn_width, cfg.in_channels);
    let lay = &params.layout;
    let mut grads = need.params.then(|| params.zeros_like());

    // Pair head: O feeds both S_ij and S_ji.
    let s = T::one() / T::from_usize(d).unwrap().sqrt();
    let mut dha = vec![T::zero(); m * d];
    let mut dhb = vec![T::zero(); m * d];
    let mut dbias = T::zero();
    let mut d_o = vec![T::zero(); kk];
    for g in 0..points {
        let ds = &dsym[g * kk..(g + 1) * kk];
        for i in 0..k {
            for j in 0..k {
                let v = ds[i * k + j] + ds[j * k + i];
                dbias += v;
                d_o[i * k + j] = v * s;
            }
        }
        let rows = g * k * d..(g + 1) * k * d;
        gemm(Trans::No, Trans::No, k, k, d, &d_o, &pass.hb[rows.clone()], &mut dha[rows.clone()], false);
        gemm(Trans::Yes, Trans::No, k, k, d, &d_o, &pass.ha[rows.clone()], &mut dhb[rows], false);
    }
    let mut dx = vec![T::zero(); m * d];
    if let Some(gr) = grads.as_mut() {
        gr.get_mut(&lay.pair_bias)[0] += dbias;
        gemm(Trans::Yes, Trans::No, d, m, d, &pass.h, &dha, gr.get_mut(&lay.pair_a), true);
        gemm(Trans::Yes, Trans::No, d, m, d, &pass.h, &dhb, gr.get_mut(&lay.pair_b), true);
    }
    gemm(Trans::No, Trans::Yes, m, d, d, &dha, params.get(&lay.pair_a), &mut dx, false);
    gemm(Trans::No, Trans::Yes, m, d, d, &dhb, params.get(&lay.pair_b), &mut dx, true);

    for (bl, cache) in lay.blocks.iter().zip(&pass.blocks).rev() {
        // Feed-forward branch.
        let mut dgl = vec![T::zero(); m * f];
        {
            let g2 = grads.as_mut().map(|g| {
                let (w, b) = split_two(g, &bl.w2, &bl.b2);
                (w, b)
            });
            linear_backward(&cache.gl, params.get(&bl.w2), &dx, m, f, d, g2, Some((&mut dgl, false)));
        }
        for (dg, u) in dgl.iter_mut().zip(&cache.u) {
            *dg *= gelu_grad(*u);
        }
        let mut dbn = vec![T::zero(); m * d];
        {
            let g1 = grads.as_mut().map(|g| split_two(g, &bl.w1, &bl.b1));
            linear_backward(&cache.bn, params.get(&bl.w1), &dgl, m, d, f, g1, Some((&mut dbn, false)));
        }
        {
            let gn = grads.as_mut().map(|g| split_two(g, &bl.ln2_g, &bl.ln2_b));
            layer_norm_backward(&dbn, &cache.xhat2, &cache.rstd2, params.get(&bl.ln2_g), d, gn, &mut dx);
        }

        // Attention branch.
        let mut dctx = vec![T::zero(); m * d];
        {
            let go = grads.as_mut().map(|g| split_two(g, &bl.wo, &bl.bo));
            linear_backward(&cache.ctx, params.get(&bl.wo), &dx, m, d, d, go, Some((&mut dctx, false)));
        }
        let (dq, dk, dv) = attention_backward(&cache.q, &cache.k, &cache.v, &cache.p, &dctx, &dims);
        let mut da = vec![T::zero(); m * d];
        for (dy, w, b, acc) in [
            (&dq, &bl.wq, &bl.bq, false),
            (&dk, &bl.wk, &bl.bk, true),
            (&dv, &bl.wv, &bl.bv, true),
        ] {
            let gq = grads.as_mut().map(|g| split_two(g, w, b));
            linear_backward(&cache.a, params.get(w), dy, m, d, d, gq, Some((&mut da, acc)));
        }
        {
            let gn = grads.as_mut().map(|g| split_two(g, &bl.ln1_g, &bl.ln1_b));
            layer_norm_backward(&da, &cache.xhat1, &cache.rstd1, params.get(&bl.ln1_g), d, gn, &mut dx);
        }
    }

    let mut dfeat = need.inputs.then(|| vec![T::zero(); m * cin]);
    {
        let gi = grads.as_mut().map(|g| split_two(g, &lay.in_w, &lay.in_b));
        linear_backward(
            &pass.features,
            params.get(&lay.in_w),
            &dx,
            m,
            cin,
            d,
            gi,
            dfeat.as_mut().map(|v| (v.as_mut_slice(), false)),
        );
    }
    Ok(Gradients {
        params: grads,
        inputs: dfeat,
    })
}

/// Two disjoint mutable views (weight, bias) into the gradient buffer.
fn split_two<'a, T: Real>(
    g: &'a mut NetworkParams<T>,
    a: &std::ops::Range<usize>,
    b: &std::ops::Range<usize>,
) -> (&'a mut [T], &'a mut [T]) {
    debug_assert!(a.end <= b.start || b.end <= a.start);
    let data = g.as_mut_slice();
    if a.end <= b.start {
        let (lo, hi) = data.split_at_mut(b.start);
        (&mut lo[a.clone()], &mut hi[..b.len()])
    } else {
        let (lo, hi) = data.split_at_mut(a.start);
        let bb = &mut lo[b.clone()];
        (&mut hi[..a.len()], bb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> NetConfig {
        NetConfig {
            in_channels: 5,
            width: 8,
            heads: 2,
            ffn_width: 12,
            layers: 2,
        }
    }

    fn rand_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn output_shape_and_exact_symmetry() {
        let params = NetworkParams::<f32>::init(NetConfig::default(), 0);
        let feats: Vec<f32> = rand_vec(2 * 8 * 51, 1).iter().map(|v| *v as f32).collect();
        let pass = forward(&params, &feats, 8).unwrap();
        let pred = &pass.prediction;
        assert_eq!(pred.sym.len(), 2 * 8 * 8);
        for n in 0..2 {
            let s = pred.sym_matrix(n);
            for i in 0..8 {
                for j in 0..8 {
                    assert_eq!(s[i * 8 + j].to_bits(), s[j * 8 + i].to_bits());
                }
            }
        }
        let again = forward(&params, &feats, 8).unwrap();
        assert_eq!(again.prediction, pass.prediction);
    }

    #[test]
    fn rejects_bad_shapes_and_non_finite() {
        let params = NetworkParams::<f64>::init(small_cfg(), 0);
        assert!(matches!(forward(&params, &[0.0; 7], 3), Err(Error::ContractViolation(_))));
        let mut feats = rand_vec(3 * 5, 2);
        feats[4] = f64::NAN;
        assert!(matches!(forward(&params, &feats, 3), Err(Error::NumericFailure { .. })));
        let pass = forward(&params, &rand_vec(15, 3), 3).unwrap();
        let need = Need {
            params: true,
            inputs: true,
        };
        assert!(matches!(
            backward(&params, &pass, &[0.0; 4], need),
            Err(Error::ContractViolation(_))
        ));
    }

    /// Linear functional of the symmetric logits, checked against central
    /// differences for every parameter and every input feature.
    #[test]
    fn gradients_match_finite_differences() {
        let cfg = small_cfg();
        let mut params = NetworkParams::<f64>::init(cfg, 7);
        // Non-trivial norm affine terms and biases.
        for (i, v) in params.as_mut_slice().iter_mut().enumerate() {
            *v += 0.05 * ((i as f64) * 0.37).sin();
        }
        let (points, k) = (2, 4);
        let feats = rand_vec(points * k * cfg.in_channels, 11);
        let w = rand_vec(points * k * k, 12);
        let objective = |p: &NetworkParams<f64>, f: &[f64]| -> f64 {
            let pass = forward(p, f, k).unwrap();
            pass.prediction.sym.iter().zip(&w).map(|(a, b)| a * b).sum()
        };
        let pass = forward(&params, &feats, k).unwrap();
        let g = backward(
            &params,
            &pass,
            &w,
            Need {
                params: true,
                inputs: true,
            },
        )
        .unwrap();
        let gp = g.params.unwrap();
        let h = 1e-6;
        for i in 0..params.len() {
            let mut pp = params.clone();
            pp.as_mut_slice()[i] += h;
            let mut pm = params.clone();
            pm.as_mut_slice()[i] -= h;
            let fd = (objective(&pp, &feats) - objective(&pm, &feats)) / (2.0 * h);
            let an = gp.as_slice()[i];
            assert!((fd - an).abs() <= 1e-6 * fd.abs().max(1.0), "param {i}: fd {fd} vs {an}");
        }
        let gi = g.inputs.unwrap();
        for i in 0..feats.len() {
            let mut fp = feats.clone();
            fp[i] += h;
            let mut fm = feats.clone();
            fm[i] -= h;
            let fd = (objective(&params, &fp) - objective(&params, &fm)) / (2.0 * h);
            assert!((fd - gi[i]).abs() <= 1e-6 * fd.abs().max(1.0), "input {i}: fd {fd} vs {}", gi[i]);
        }
    }
}
