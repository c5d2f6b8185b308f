//! Temporal aggregation at toy scale: embedding projection with learned
//! positional embeddings, multi-head self-attention, and pre-norm transformer
//! encoder layers, with a hand-written backward pass for every operation.
//!
//! Weights live in a named [`ParamVector`] so the optimizer and the gradient
//! checker can address them segment by segment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::diff::ParamVector;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Architecture of the toy temporal aggregator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TamConfig {
    /// Context length k (rows of the feature sequence).
    pub context: usize,
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub d_ff: usize,
    /// Flattened per-frame feature width consumed by the embedding.
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for TamConfig {
    fn default() -> Self {
        TamConfig {
            context: 4,
            d_model: 32,
            heads: 4,
            layers: 2,
            d_ff: 128,
            feature_dim: 48,
            seed: 0,
        }
    }
}

impl TamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.context < 1 || self.d_model < 1 || self.heads < 1 || self.d_ff < 1 {
            return Err(Error::domain("all TAM dimensions must be >= 1"));
        }
        if self.d_model % self.heads != 0 {
            return Err(Error::domain(format!(
                "d_model {} must be divisible by heads {}",
                self.d_model, self.heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }
}

/// Dense row-major matrix used for feature sequences and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// `a · b`
fn matmul(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.rows);
    let mut out = Mat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for kk in 0..a.cols {
            let av = a.get(i, kk);
            if av == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                out.data[i * b.cols + j] += av * b.get(kk, j);
            }
        }
    }
    out
}

/// `a · bᵀ`
fn matmul_nt(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.cols);
    let mut out = Mat::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        for j in 0..b.rows {
            let mut acc = 0.0;
            for kk in 0..a.cols {
                acc += a.get(i, kk) * b.get(j, kk);
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// `aᵀ · b`
fn matmul_tn(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.rows, b.rows);
    let mut out = Mat::zeros(a.cols, b.cols);
    for kk in 0..a.rows {
        for i in 0..a.cols {
            let av = a.get(kk, i);
            if av == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                out.data[i * b.cols + j] += av * b.get(kk, j);
            }
        }
    }
    out
}

fn seg_mat(params: &ParamVector, name: &str) -> Result<Mat> {
    let shape = params
        .segment_shape(name)
        .ok_or_else(|| Error::domain(format!("missing weight segment '{name}'")))?;
    if shape.len() != 2 {
        return Err(Error::shape(format!("segment '{name}' is not a matrix")));
    }
    let (r, c) = (shape[0], shape[1]);
    Ok(Mat::from_vec(r, c, params.segment(name).unwrap().to_vec()))
}

fn seg_vec(params: &ParamVector, name: &str) -> Result<Vec<f64>> {
    params
        .segment(name)
        .map(|s| s.to_vec())
        .ok_or_else(|| Error::domain(format!("missing weight segment '{name}'")))
}

fn add_into(grads: &mut ParamVector, name: &str, values: &[f64]) {
    let seg = grads.segment_mut(name).expect("gradient layout mismatch");
    for (g, v) in seg.iter_mut().zip(values) {
        *g += v;
    }
}

/// Linear layer `y = x·Wᵀ + b` with `W: [out × in]`.
fn linear(x: &Mat, w: &Mat, b: &[f64]) -> Mat {
    let mut y = matmul_nt(x, w);
    for i in 0..y.rows {
        for j in 0..y.cols {
            y.data[i * y.cols + j] += b[j];
        }
    }
    y
}

/// Backward of [`linear`]: returns dx, accumulates dW and db.
fn linear_backward(
    dy: &Mat,
    x: &Mat,
    w: &Mat,
    grads: &mut ParamVector,
    w_name: &str,
    b_name: &str,
) -> Mat {
    let dw = matmul_tn(dy, x);
    add_into(grads, w_name, &dw.data);
    let mut db = vec![0.0; dy.cols];
    for i in 0..dy.rows {
        for j in 0..dy.cols {
            db[j] += dy.get(i, j);
        }
    }
    add_into(grads, b_name, &db);
    matmul(dy, w)
}

/// Row-wise layer norm cache.
pub struct LayerNormCache {
    normalized: Mat,
    inv_std: Vec<f64>,
}

/// Row-wise layer normalization `γ·(x−μ)/√(σ²+ε) + β`.
pub fn layer_norm(x: &Mat, gamma: &[f64], beta: &[f64]) -> (Mat, LayerNormCache) {
    let d = x.cols as f64;
    let mut out = Mat::zeros(x.rows, x.cols);
    let mut normalized = Mat::zeros(x.rows, x.cols);
    let mut inv_std = vec![0.0; x.rows];
    for i in 0..x.rows {
        let row = x.row(i);
        let mean: f64 = row.iter().sum::<f64>() / d;
        let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let istd = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std[i] = istd;
        for j in 0..x.cols {
            let xhat = (x.get(i, j) - mean) * istd;
            normalized.set(i, j, xhat);
            out.set(i, j, gamma[j] * xhat + beta[j]);
        }
    }
    (out, LayerNormCache { normalized, inv_std })
}

fn layer_norm_backward(
    dy: &Mat,
    cache: &LayerNormCache,
    gamma: &[f64],
    grads: &mut ParamVector,
    gamma_name: &str,
    beta_name: &str,
) -> Mat {
    let d = dy.cols as f64;
    let mut dgamma = vec![0.0; dy.cols];
    let mut dbeta = vec![0.0; dy.cols];
    let mut dx = Mat::zeros(dy.rows, dy.cols);
    for i in 0..dy.rows {
        let mut sum_g = 0.0;
        let mut sum_gx = 0.0;
        for j in 0..dy.cols {
            let g = dy.get(i, j) * gamma[j];
            sum_g += g;
            sum_gx += g * cache.normalized.get(i, j);
            dgamma[j] += dy.get(i, j) * cache.normalized.get(i, j);
            dbeta[j] += dy.get(i, j);
        }
        for j in 0..dy.cols {
            let g = dy.get(i, j) * gamma[j];
            let xhat = cache.normalized.get(i, j);
            dx.set(i, j, cache.inv_std[i] * (g - sum_g / d - xhat * sum_gx / d));
        }
    }
    add_into(grads, gamma_name, &dgamma);
    add_into(grads, beta_name, &dbeta);
    dx
}

fn softmax_rows(scores: &mut Mat) {
    for i in 0..scores.rows {
        let row = &mut scores.data[i * scores.cols..(i + 1) * scores.cols];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Cache of one attention evaluation, exposing the per-head attention
/// weights for inspection.
pub struct AttentionCache {
    input: Mat,
    q: Mat,
    k: Mat,
    v: Mat,
    /// Row-stochastic attention matrix per head.
    pub attn: Vec<Mat>,
    concat: Mat,
}

fn head_slice(m: &Mat, head: usize, head_dim: usize) -> Mat {
    let mut out = Mat::zeros(m.rows, head_dim);
    for i in 0..m.rows {
        for j in 0..head_dim {
            out.set(i, j, m.get(i, head * head_dim + j));
        }
    }
    out
}

fn head_scatter(dst: &mut Mat, src: &Mat, head: usize, head_dim: usize) {
    for i in 0..src.rows {
        for j in 0..head_dim {
            let v = dst.get(i, head * head_dim + j) + src.get(i, j);
            dst.set(i, head * head_dim + j, v);
        }
    }
}

/// Scaled dot-product multi-head self-attention over the full context (no
/// causal mask); scale is `1/√(d_model/heads)`.
pub fn multi_head_attention(
    x: &Mat,
    params: &ParamVector,
    prefix: &str,
    cfg: &TamConfig,
) -> Result<(Mat, AttentionCache)> {
    cfg.validate()?;
    let head_dim = cfg.head_dim();
    let scale = 1.0 / (head_dim as f64).sqrt();
    let q = linear(x, &seg_mat(params, &format!("{prefix}.wq"))?, &seg_vec(params, &format!("{prefix}.bq"))?);
    let k = linear(x, &seg_mat(params, &format!("{prefix}.wk"))?, &seg_vec(params, &format!("{prefix}.bk"))?);
    let v = linear(x, &seg_mat(params, &format!("{prefix}.wv"))?, &seg_vec(params, &format!("{prefix}.bv"))?);

    let mut concat = Mat::zeros(x.rows, cfg.d_model);
    let mut attn_all = Vec::with_capacity(cfg.heads);
    for h in 0..cfg.heads {
        let qh = head_slice(&q, h, head_dim);
        let kh = head_slice(&k, h, head_dim);
        let vh = head_slice(&v, h, head_dim);
        let mut scores = matmul_nt(&qh, &kh);
        for s in &mut scores.data {
            *s *= scale;
        }
        softmax_rows(&mut scores);
        let ctx = matmul(&scores, &vh);
        head_scatter(&mut concat, &ctx, h, head_dim);
        attn_all.push(scores);
    }
    let out = linear(
        &concat,
        &seg_mat(params, &format!("{prefix}.wo"))?,
        &seg_vec(params, &format!("{prefix}.bo"))?,
    );
    Ok((
        out,
        AttentionCache { input: x.clone(), q, k, v, attn: attn_all, concat },
    ))
}

fn multi_head_attention_backward(
    dout: &Mat,
    cache: &AttentionCache,
    params: &ParamVector,
    prefix: &str,
    cfg: &TamConfig,
    grads: &mut ParamVector,
) -> Result<Mat> {
    let head_dim = cfg.head_dim();
    let scale = 1.0 / (head_dim as f64).sqrt();
    let wo = seg_mat(params, &format!("{prefix}.wo"))?;
    let dconcat = linear_backward(
        dout,
        &cache.concat,
        &wo,
        grads,
        &format!("{prefix}.wo"),
        &format!("{prefix}.bo"),
    );

    let mut dq = Mat::zeros(cache.q.rows, cache.q.cols);
    let mut dk = Mat::zeros(cache.k.rows, cache.k.cols);
    let mut dv = Mat::zeros(cache.v.rows, cache.v.cols);
    for h in 0..cfg.heads {
        let dctx = head_slice(&dconcat, h, head_dim);
        let attn = &cache.attn[h];
        let qh = head_slice(&cache.q, h, head_dim);
        let kh = head_slice(&cache.k, h, head_dim);
        let vh = head_slice(&cache.v, h, head_dim);
        // ctx = A·V
        let mut dattn = matmul_nt(&dctx, &vh);
        let dvh = matmul_tn(attn, &dctx);
        // softmax backward per row
        for i in 0..dattn.rows {
            let mut dot = 0.0;
            for j in 0..dattn.cols {
                dot += dattn.get(i, j) * attn.get(i, j);
            }
            for j in 0..dattn.cols {
                let a = attn.get(i, j);
                dattn.set(i, j, a * (dattn.get(i, j) - dot));
            }
        }
        for s in &mut dattn.data {
            *s *= scale;
        }
        let dqh = matmul(&dattn, &kh);
        let dkh = matmul_tn(&dattn, &qh);
        head_scatter(&mut dq, &dqh, h, head_dim);
        head_scatter(&mut dk, &dkh, h, head_dim);
        head_scatter(&mut dv, &dvh, h, head_dim);
    }

    let wq = seg_mat(params, &format!("{prefix}.wq"))?;
    let wk = seg_mat(params, &format!("{prefix}.wk"))?;
    let wv = seg_mat(params, &format!("{prefix}.wv"))?;
    let mut dx = linear_backward(&dq, &cache.input, &wq, grads, &format!("{prefix}.wq"), &format!("{prefix}.bq"));
    let dxk = linear_backward(&dk, &cache.input, &wk, grads, &format!("{prefix}.wk"), &format!("{prefix}.bk"));
    let dxv = linear_backward(&dv, &cache.input, &wv, grads, &format!("{prefix}.wv"), &format!("{prefix}.bv"));
    for i in 0..dx.data.len() {
        dx.data[i] += dxk.data[i] + dxv.data[i];
    }
    Ok(dx)
}

/// Cache of one pre-norm encoder layer.
pub struct EncoderLayerCache {
    ln1: LayerNormCache,
    attn: AttentionCache,
    ln2: LayerNormCache,
    ln2_out: Mat,
    ff_pre: Mat,
    ff_hidden: Mat,
}

/// Pre-norm residual encoder layer: `x + MHA(LN(x))`, then `+ FFN(LN(·))`
/// with a ReLU feed-forward.
pub fn encoder_layer(
    x: &Mat,
    params: &ParamVector,
    prefix: &str,
    cfg: &TamConfig,
) -> Result<(Mat, EncoderLayerCache)> {
    let g1 = seg_vec(params, &format!("{prefix}.ln1.gamma"))?;
    let b1 = seg_vec(params, &format!("{prefix}.ln1.beta"))?;
    let (normed1, ln1) = layer_norm(x, &g1, &b1);
    let (attn_out, attn) = multi_head_attention(&normed1, params, &format!("{prefix}.attn"), cfg)?;
    let mut after_attn = x.clone();
    for i in 0..after_attn.data.len() {
        after_attn.data[i] += attn_out.data[i];
    }

    let g2 = seg_vec(params, &format!("{prefix}.ln2.gamma"))?;
    let b2 = seg_vec(params, &format!("{prefix}.ln2.beta"))?;
    let (ln2_out, ln2) = layer_norm(&after_attn, &g2, &b2);
    let w1 = seg_mat(params, &format!("{prefix}.ff.w1"))?;
    let bf1 = seg_vec(params, &format!("{prefix}.ff.b1"))?;
    let ff_pre = linear(&ln2_out, &w1, &bf1);
    let mut ff_hidden = ff_pre.clone();
    for v in &mut ff_hidden.data {
        *v = v.max(0.0);
    }
    let w2 = seg_mat(params, &format!("{prefix}.ff.w2"))?;
    let bf2 = seg_vec(params, &format!("{prefix}.ff.b2"))?;
    let ff_out = linear(&ff_hidden, &w2, &bf2);
    let mut out = after_attn.clone();
    for i in 0..out.data.len() {
        out.data[i] += ff_out.data[i];
    }
    Ok((
        out,
        EncoderLayerCache { ln1, attn, ln2, ln2_out, ff_pre, ff_hidden },
    ))
}

fn encoder_layer_backward(
    dout: &Mat,
    cache: &EncoderLayerCache,
    params: &ParamVector,
    prefix: &str,
    cfg: &TamConfig,
    grads: &mut ParamVector,
) -> Result<Mat> {
    // out = after_attn + FF(LN2(after_attn))
    let w2 = seg_mat(params, &format!("{prefix}.ff.w2"))?;
    let mut dff_hidden = linear_backward(
        dout,
        &cache.ff_hidden,
        &w2,
        grads,
        &format!("{prefix}.ff.w2"),
        &format!("{prefix}.ff.b2"),
    );
    for (g, pre) in dff_hidden.data.iter_mut().zip(&cache.ff_pre.data) {
        if *pre <= 0.0 {
            *g = 0.0;
        }
    }
    let w1 = seg_mat(params, &format!("{prefix}.ff.w1"))?;
    let dln2_out = linear_backward(
        &dff_hidden,
        &cache.ln2_out,
        &w1,
        grads,
        &format!("{prefix}.ff.w1"),
        &format!("{prefix}.ff.b1"),
    );
    let g2 = seg_vec(params, &format!("{prefix}.ln2.gamma"))?;
    let dafter_from_ff = layer_norm_backward(
        &dln2_out,
        &cache.ln2,
        &g2,
        grads,
        &format!("{prefix}.ln2.gamma"),
        &format!("{prefix}.ln2.beta"),
    );
    let mut dafter = dout.clone();
    for i in 0..dafter.data.len() {
        dafter.data[i] += dafter_from_ff.data[i];
    }

    // after_attn = x + MHA(LN1(x))
    let dattn_out = dafter.clone();
    let dnormed1 = multi_head_attention_backward(
        &dattn_out,
        &cache.attn,
        params,
        &format!("{prefix}.attn"),
        cfg,
        grads,
    )?;
    let g1 = seg_vec(params, &format!("{prefix}.ln1.gamma"))?;
    let dx_from_attn = layer_norm_backward(
        &dnormed1,
        &cache.ln1,
        &g1,
        grads,
        &format!("{prefix}.ln1.gamma"),
        &format!("{prefix}.ln1.beta"),
    );
    let mut dx = dafter;
    for i in 0..dx.data.len() {
        dx.data[i] += dx_from_attn.data[i];
    }
    Ok(dx)
}

/// Affine projection of per-frame features plus a learned positional
/// embedding per time index.
pub fn embed_project(features: &Mat, params: &ParamVector) -> Result<Mat> {
    let w = seg_mat(params, "embed.w")?;
    let b = seg_vec(params, "embed.b")?;
    let pos = seg_mat(params, "pos")?;
    if features.cols != w.cols {
        return Err(Error::shape(format!(
            "features have width {}, embedding expects {}",
            features.cols, w.cols
        )));
    }
    if features.rows != pos.rows {
        return Err(Error::shape(format!(
            "features have {} rows, positional embedding has {}",
            features.rows, pos.rows
        )));
    }
    let mut e = linear(features, &w, &b);
    for i in 0..e.rows {
        for j in 0..e.cols {
            e.data[i * e.cols + j] += pos.get(i, j);
        }
    }
    Ok(e)
}

/// Full forward cache for [`tam_forward`].
pub struct TamCache {
    features: Mat,
    layer_caches: Vec<EncoderLayerCache>,
    final_seq: Mat,
}

impl TamCache {
    pub fn final_sequence(&self) -> &Mat {
        &self.final_seq
    }
}

/// Embeds the context features, runs the encoder stack, and reads out the
/// last row as the fused spatio-temporal feature.
pub fn tam_forward(features: &Mat, params: &ParamVector, cfg: &TamConfig) -> Result<Vec<f64>> {
    tam_forward_with_cache(features, params, cfg).map(|(out, _)| out)
}

pub fn tam_forward_with_cache(
    features: &Mat,
    params: &ParamVector,
    cfg: &TamConfig,
) -> Result<(Vec<f64>, TamCache)> {
    cfg.validate()?;
    let mut x = embed_project(features, params)?;
    let mut layer_caches = Vec::with_capacity(cfg.layers);
    for l in 0..cfg.layers {
        let (next, cache) = encoder_layer(&x, params, &format!("layer{l}"), cfg)?;
        layer_caches.push(cache);
        x = next;
    }
    let out = x.row(x.rows - 1).to_vec();
    Ok((
        out,
        TamCache { features: features.clone(), layer_caches, final_seq: x },
    ))
}

/// Backward of [`tam_forward`]: accumulates weight gradients for an upstream
/// gradient on the read-out row and returns the gradient w.r.t. the input
/// features.
pub fn tam_backward(
    upstream: &[f64],
    cache: &TamCache,
    params: &ParamVector,
    cfg: &TamConfig,
    grads: &mut ParamVector,
) -> Result<Mat> {
    let mut dx = Mat::zeros(cache.final_seq.rows, cache.final_seq.cols);
    let last = cache.final_seq.rows - 1;
    for j in 0..cache.final_seq.cols {
        dx.set(last, j, upstream[j]);
    }
    for l in (0..cfg.layers).rev() {
        dx = encoder_layer_backward(
            &dx,
            &cache.layer_caches[l],
            params,
            &format!("layer{l}"),
            cfg,
            grads,
        )?;
    }
    // Embedding backward: e = F·Wᵀ + b + pos.
    add_into(grads, "pos", &dx.data);
    let w = seg_mat(params, "embed.w")?;
    let dfeatures = linear_backward(&dx, &cache.features, &w, grads, "embed.w", "embed.b");
    Ok(dfeatures)
}

/// Initializes all TAM weights: matrices uniform in ±1/√fan_in from the
/// config seed, biases and positional embeddings zero, layer-norm affine at
/// identity.
pub fn init_weights(cfg: &TamConfig) -> Result<ParamVector> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ParamVector::new();
    let mat = |params: &mut ParamVector, name: &str, rows: usize, cols: usize, rng: &mut ChaCha8Rng| -> Result<()> {
        let bound = 1.0 / (cols as f64).sqrt();
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
        params.push_segment(name, &[rows, cols], data)
    };
    mat(&mut params, "embed.w", cfg.d_model, cfg.feature_dim, &mut rng)?;
    params.push_segment("embed.b", &[cfg.d_model], vec![0.0; cfg.d_model])?;
    params.push_segment("pos", &[cfg.context, cfg.d_model], vec![0.0; cfg.context * cfg.d_model])?;
    for l in 0..cfg.layers {
        let p = format!("layer{l}");
        params.push_segment(&format!("{p}.ln1.gamma"), &[cfg.d_model], vec![1.0; cfg.d_model])?;
        params.push_segment(&format!("{p}.ln1.beta"), &[cfg.d_model], vec![0.0; cfg.d_model])?;
        for name in ["wq", "wk", "wv", "wo"] {
            mat(&mut params, &format!("{p}.attn.{name}"), cfg.d_model, cfg.d_model, &mut rng)?;
            params.push_segment(
                &format!("{p}.attn.b{}", &name[1..]),
                &[cfg.d_model],
                vec![0.0; cfg.d_model],
            )?;
        }
        params.push_segment(&format!("{p}.ln2.gamma"), &[cfg.d_model], vec![1.0; cfg.d_model])?;
        params.push_segment(&format!("{p}.ln2.beta"), &[cfg.d_model], vec![0.0; cfg.d_model])?;
        mat(&mut params, &format!("{p}.ff.w1"), cfg.d_ff, cfg.d_model, &mut rng)?;
        params.push_segment(&format!("{p}.ff.b1"), &[cfg.d_ff], vec![0.0; cfg.d_ff])?;
        mat(&mut params, &format!("{p}.ff.w2"), cfg.d_model, cfg.d_ff, &mut rng)?;
        params.push_segment(&format!("{p}.ff.b2"), &[cfg.d_model], vec![0.0; cfg.d_model])?;
    }
    Ok(params)
}

/// Fixed stand-in for a learned spatial feature extractor: channel-mean
/// intensities mean-pooled over a grid of cells, flattened row-major.
pub fn featurize(img: &ImageBuffer, grid_h: usize, grid_w: usize) -> Vec<f64> {
    let gray = img.to_gray();
    let (h, w) = (img.height(), img.width());
    let mut out = Vec::with_capacity(grid_h * grid_w);
    for gi in 0..grid_h {
        let i0 = gi * h / grid_h;
        let i1 = ((gi + 1) * h / grid_h).max(i0 + 1);
        for gj in 0..grid_w {
            let j0 = gj * w / grid_w;
            let j1 = ((gj + 1) * w / grid_w).max(j0 + 1);
            let mut acc = 0.0;
            for i in i0..i1 {
                for j in j0..j1 {
                    acc += gray.get(i, j);
                }
            }
            out.push(acc / ((i1 - i0) * (j1 - j0)) as f64);
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    segments: Vec<(String, Vec<usize>)>,
}

/// Writes weights as a u64-length-prefixed JSON header (segment names and
/// shapes) followed by the flat little-endian fp64 data.
pub fn save_weights(path: impl AsRef<Path>, params: &ParamVector) -> Result<()> {
    let header = CheckpointHeader {
        segments: params
            .segment_names()
            .map(|n| (n.to_string(), params.segment_shape(n).unwrap().to_vec()))
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(&(header_json.len() as u64).to_le_bytes())?;
    out.write_all(&header_json)?;
    for v in params.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<ParamVector> {
    let path = path.as_ref();
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)?;
    let mut params = ParamVector::new();
    for (name, shape) in &header.segments {
        let len: usize = shape.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            file.read_exact(&mut buf).map_err(|_| Error::Parse {
                path: path.display().to_string(),
                what: format!("truncated data for segment '{name}'"),
            })?;
            values.push(f64::from_le_bytes(buf));
        }
        params.push_segment(name, shape, values)?;
    }
    Ok(params)
}
