//! Forward and backward passes of the full model.

use super::ops::{
    attention_single, dropout_bwd, layer_norm, layer_norm_bwd, linear, linear_bwd, mha, mha_bwd, softmax_in_place, AttnCache,
    Ctx, Mat, NormCache,
};
use super::{DecLayer, EncLayer, ModelError, ModelParams, Scalar, TrainSample};
use crate::encoding::{sinusoidal_position, EncodedCircuit, EncodedSpec, SegmentKind, PAD};

/// Scaled dot-product attention `softmax(QKᵀ/√d_k + mask)·V` for a single
/// head; `mask` is additive (`-∞` blocks a pair).
pub fn attention<T: Scalar>(q: &Mat<T>, k: &Mat<T>, v: &Mat<T>, mask: Option<&Mat<T>>) -> Mat<T> {
    attention_single(q, k, v, mask)
}

struct EncLayerCache<T> {
    ln1: NormCache<T>,
    attn: AttnCache<T>,
    drop1: Option<Vec<T>>,
    ln2: NormCache<T>,
    normed2: Mat<T>,
    pre: Mat<T>,
    hidden: Mat<T>,
    drop2: Option<Vec<T>>,
}

fn relu<T: Scalar>(x: &Mat<T>) -> Mat<T> {
    Mat::from_vec(x.rows, x.cols, x.data.iter().map(|&v| v.max(T::zero())).collect())
}

fn relu_bwd<T: Scalar>(pre: &Mat<T>, dh: &mut Mat<T>) {
    for (g, &v) in dh.data.iter_mut().zip(&pre.data) {
        if v <= T::zero() {
            *g = T::zero();
        }
    }
}

fn enc_layer<T: Scalar>(p: &ModelParams<T>, l: &EncLayer, x: &Mat<T>, ctx: &mut Ctx) -> (Mat<T>, EncLayerCache<T>) {
    let (a, ln1) = layer_norm(p, l.ln1, x);
    let (mut att, attn) = mha(p, l.attn, &a, &a, false);
    let drop1 = ctx.dropout(&mut att);
    att.add_assign(x);
    let x1 = att;
    let (normed2, ln2) = layer_norm(p, l.ln2, &x1);
    let pre = linear(p, l.ff1, &normed2);
    let hidden = relu(&pre);
    let mut y = linear(p, l.ff2, &hidden);
    let drop2 = ctx.dropout(&mut y);
    y.add_assign(&x1);
    (y, EncLayerCache { ln1, attn, drop1, ln2, normed2, pre, hidden, drop2 })
}

fn enc_layer_bwd<T: Scalar>(p: &ModelParams<T>, l: &EncLayer, c: &EncLayerCache<T>, dy: &Mat<T>, g: &mut [Vec<T>]) -> Mat<T> {
    let mut df = dy.clone();
    dropout_bwd(&mut df, &c.drop2);
    let mut dh = linear_bwd(p, l.ff2, &c.hidden, &df, g);
    relu_bwd(&c.pre, &mut dh);
    let dn2 = linear_bwd(p, l.ff1, &c.normed2, &dh, g);
    let mut dx1 = dy.clone();
    dx1.add_assign(&layer_norm_bwd(p, l.ln2, &c.ln2, &dn2, g));
    let mut datt = dx1.clone();
    dropout_bwd(&mut datt, &c.drop1);
    let (mut da, dkv) = mha_bwd(p, l.attn, &c.attn, &datt, false, g);
    da.add_assign(&dkv);
    let mut dx = dx1;
    dx.add_assign(&layer_norm_bwd(p, l.ln1, &c.ln1, &da, g));
    dx
}

fn enc_stack<T: Scalar>(p: &ModelParams<T>, layers: &[EncLayer], mut x: Mat<T>, ctx: &mut Ctx) -> (Mat<T>, Vec<EncLayerCache<T>>) {
    let mut caches = Vec::with_capacity(layers.len());
    for l in layers {
        let (y, c) = enc_layer(p, l, &x, ctx);
        caches.push(c);
        x = y;
    }
    (x, caches)
}

fn enc_stack_bwd<T: Scalar>(
    p: &ModelParams<T>,
    layers: &[EncLayer],
    caches: &[EncLayerCache<T>],
    mut dy: Mat<T>,
    g: &mut [Vec<T>],
) -> Mat<T> {
    for (l, c) in layers.iter().zip(caches).rev() {
        dy = enc_layer_bwd(p, l, c, &dy, g);
    }
    dy
}

fn kind_index(kind: SegmentKind) -> usize {
    match kind {
        SegmentKind::Assumption => 0,
        SegmentKind::Guarantee => 1,
    }
}

fn check_limits<T: Scalar>(p: &ModelParams<T>, spec: &EncodedSpec, circuit: &EncodedCircuit) -> Result<(), ModelError> {
    let c = &p.config;
    if spec.segments.len() > c.max_segments {
        return Err(ModelError::Limits(format!("{} segments", spec.segments.len())));
    }
    if let Some(s) = spec.segments.iter().find(|s| s.tokens.len() > c.max_segment_len || s.tokens.is_empty()) {
        return Err(ModelError::Limits(format!("segment of {} tokens", s.tokens.len())));
    }
    if circuit.tokens.is_empty() || circuit.tokens.len() > c.max_circuit_len {
        return Err(ModelError::Limits(format!("circuit of {} tokens", circuit.tokens.len())));
    }
    let v = c.vocab_size;
    if spec.segments.iter().flat_map(|s| &s.tokens).chain(&circuit.tokens).any(|&t| t >= v) {
        return Err(ModelError::Limits("token id outside the vocabulary".into()));
    }
    Ok(())
}

fn embed_segment<T: Scalar>(p: &ModelParams<T>, seg: &crate::encoding::Segment) -> Result<Mat<T>, ModelError> {
    let d = p.config.d_model;
    let positions = seg.positions(p.config.tree_depth, d).map_err(|e| ModelError::Limits(e.to_string()))?;
    let (emb, kind) = (p.t(p.layout.embed_spec), p.t(p.layout.embed_kind));
    let k = kind_index(seg.kind);
    let mut x = Mat::zeros(seg.tokens.len(), d);
    for (r, (&tok, pos)) in seg.tokens.iter().zip(&positions).enumerate() {
        let row = x.row_mut(r);
        for j in 0..d {
            row[j] = emb[tok * d + j] + kind[k * d + j] + T::of(pos[j] as f64);
        }
    }
    Ok(x)
}

fn embed_linear<T: Scalar>(emb: &[T], tokens: &[usize], d: usize) -> Mat<T> {
    let mut x = Mat::zeros(tokens.len(), d);
    for (r, &tok) in tokens.iter().enumerate() {
        let pos = sinusoidal_position(r, d);
        let row = x.row_mut(r);
        for j in 0..d {
            row[j] = emb[tok * d + j] + T::of(pos[j] as f64);
        }
    }
    x
}

fn embed_bwd<T: Scalar>(g: &mut [T], tokens: &[usize], dx: &Mat<T>) {
    let d = dx.cols;
    for (r, &tok) in tokens.iter().enumerate() {
        for (a, b) in g[tok * d..(tok + 1) * d].iter_mut().zip(dx.row(r)) {
            *a += *b;
        }
    }
}

/// Encoder outputs before the global layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRepresentations<T> {
    pub segments: Vec<Mat<T>>,
    pub circuit: Mat<T>,
}

struct EncodeCache<T> {
    segments: Vec<Vec<EncLayerCache<T>>>,
    seg_lens: Vec<usize>,
    circuit: Vec<EncLayerCache<T>>,
    global: Vec<EncLayerCache<T>>,
    norm: NormCache<T>,
}

fn encode_fwd<T: Scalar>(
    p: &ModelParams<T>,
    spec: &EncodedSpec,
    circuit: &EncodedCircuit,
    ctx: &mut Ctx,
) -> Result<(Mat<T>, LocalRepresentations<T>, EncodeCache<T>), ModelError> {
    check_limits(p, spec, circuit)?;
    let d = p.config.d_model;
    let mut seg_out = Vec::new();
    let mut seg_caches = Vec::new();
    for seg in &spec.segments {
        let x = embed_segment(p, seg)?;
        let (y, c) = enc_stack(p, &p.layout.spec_local, x, ctx);
        seg_out.push(y);
        seg_caches.push(c);
    }
    let x = embed_linear(p.t(p.layout.embed_circuit), &circuit.tokens, d);
    let (circ_out, circ_caches) = enc_stack(p, &p.layout.circuit_local, x, ctx);
    let mut parts: Vec<&Mat<T>> = seg_out.iter().collect();
    parts.push(&circ_out);
    let joined = Mat::concat_rows(&parts, d);
    let (g_out, g_caches) = enc_stack(p, &p.layout.global, joined, ctx);
    let (memory, norm) = layer_norm(p, p.layout.encoder_norm, &g_out);
    let seg_lens = seg_out.iter().map(|m| m.rows).collect();
    let local = LocalRepresentations { segments: seg_out, circuit: circ_out };
    Ok((memory, local, EncodeCache { segments: seg_caches, seg_lens, circuit: circ_caches, global: g_caches, norm }))
}

fn encode_bwd<T: Scalar>(
    p: &ModelParams<T>,
    spec: &EncodedSpec,
    circuit: &EncodedCircuit,
    c: &EncodeCache<T>,
    dmem: &Mat<T>,
    g: &mut [Vec<T>],
) {
    let l = &p.layout;
    let dg = layer_norm_bwd(p, l.encoder_norm, &c.norm, dmem, g);
    let djoined = enc_stack_bwd(p, &l.global, &c.global, dg, g);
    let mut offset = 0;
    for ((seg, caches), &len) in spec.segments.iter().zip(&c.segments).zip(&c.seg_lens) {
        let dy = djoined.slice_rows(offset, len);
        offset += len;
        let dx = enc_stack_bwd(p, &l.spec_local, caches, dy, g);
        embed_bwd(&mut g[l.embed_spec], &seg.tokens, &dx);
        let k = kind_index(seg.kind);
        let d = dx.cols;
        for r in 0..dx.rows {
            for (a, b) in g[l.embed_kind][k * d..(k + 1) * d].iter_mut().zip(dx.row(r)) {
                *a += *b;
            }
        }
    }
    let dy = djoined.slice_rows(offset, circuit.tokens.len());
    let dx = enc_stack_bwd(p, &l.circuit_local, &c.circuit, dy, g);
    embed_bwd(&mut g[l.embed_circuit], &circuit.tokens, &dx);
}

/// Memory rows for every property token (segment by segment) followed by
/// the circuit tokens.
pub fn encode<T: Scalar>(p: &ModelParams<T>, spec: &EncodedSpec, circuit: &EncodedCircuit) -> Result<Mat<T>, ModelError> {
    Ok(encode_fwd(p, spec, circuit, &mut Ctx::eval())?.0)
}

/// Outputs of the local stacks, before any mixing between segments.
pub fn encode_local<T: Scalar>(
    p: &ModelParams<T>,
    spec: &EncodedSpec,
    circuit: &EncodedCircuit,
) -> Result<LocalRepresentations<T>, ModelError> {
    Ok(encode_fwd(p, spec, circuit, &mut Ctx::eval())?.1)
}

struct DecLayerCache<T> {
    ln1: NormCache<T>,
    self_attn: AttnCache<T>,
    drop1: Option<Vec<T>>,
    ln2: NormCache<T>,
    cross: AttnCache<T>,
    drop2: Option<Vec<T>>,
    ln3: NormCache<T>,
    normed3: Mat<T>,
    pre: Mat<T>,
    hidden: Mat<T>,
    drop3: Option<Vec<T>>,
}

fn dec_layer<T: Scalar>(p: &ModelParams<T>, l: &DecLayer, x: &Mat<T>, mem: &Mat<T>, ctx: &mut Ctx) -> (Mat<T>, DecLayerCache<T>) {
    let (a, ln1) = layer_norm(p, l.ln1, x);
    let (mut x1, self_attn) = mha(p, l.self_attn, &a, &a, true);
    let drop1 = ctx.dropout(&mut x1);
    x1.add_assign(x);
    let (b, ln2) = layer_norm(p, l.ln2, &x1);
    let (mut x2, cross) = mha(p, l.cross, &b, mem, false);
    let drop2 = ctx.dropout(&mut x2);
    x2.add_assign(&x1);
    let (normed3, ln3) = layer_norm(p, l.ln3, &x2);
    let pre = linear(p, l.ff1, &normed3);
    let hidden = relu(&pre);
    let mut y = linear(p, l.ff2, &hidden);
    let drop3 = ctx.dropout(&mut y);
    y.add_assign(&x2);
    (y, DecLayerCache { ln1, self_attn, drop1, ln2, cross, drop2, ln3, normed3, pre, hidden, drop3 })
}

fn dec_layer_bwd<T: Scalar>(
    p: &ModelParams<T>,
    l: &DecLayer,
    c: &DecLayerCache<T>,
    dy: &Mat<T>,
    dmem: &mut Mat<T>,
    g: &mut [Vec<T>],
) -> Mat<T> {
    let mut df = dy.clone();
    dropout_bwd(&mut df, &c.drop3);
    let mut dh = linear_bwd(p, l.ff2, &c.hidden, &df, g);
    relu_bwd(&c.pre, &mut dh);
    let dn3 = linear_bwd(p, l.ff1, &c.normed3, &dh, g);
    let mut dx2 = dy.clone();
    dx2.add_assign(&layer_norm_bwd(p, l.ln3, &c.ln3, &dn3, g));
    let mut dc = dx2.clone();
    dropout_bwd(&mut dc, &c.drop2);
    let (db, dm) = mha_bwd(p, l.cross, &c.cross, &dc, false, g);
    dmem.add_assign(&dm);
    let mut dx1 = dx2;
    dx1.add_assign(&layer_norm_bwd(p, l.ln2, &c.ln2, &db, g));
    let mut ds = dx1.clone();
    dropout_bwd(&mut ds, &c.drop1);
    let (mut da, dkv) = mha_bwd(p, l.self_attn, &c.self_attn, &ds, true, g);
    da.add_assign(&dkv);
    let mut dx = dx1;
    dx.add_assign(&layer_norm_bwd(p, l.ln1, &c.ln1, &da, g));
    dx
}

struct DecodeCache<T> {
    layers: Vec<DecLayerCache<T>>,
    norm: NormCache<T>,
    normed: Mat<T>,
}

fn decode_fwd<T: Scalar>(p: &ModelParams<T>, mem: &Mat<T>, prefix: &[usize], ctx: &mut Ctx) -> (Mat<T>, DecodeCache<T>) {
    let l = &p.layout;
    let mut x = embed_linear(p.t(l.embed_target), prefix, p.config.d_model);
    let mut layers = Vec::with_capacity(l.decoder.len());
    for layer in &l.decoder {
        let (y, c) = dec_layer(p, layer, &x, mem, ctx);
        layers.push(c);
        x = y;
    }
    let (normed, norm) = layer_norm(p, l.decoder_norm, &x);
    let logits = linear(p, l.output, &normed);
    (logits, DecodeCache { layers, norm, normed })
}

fn decode_bwd<T: Scalar>(p: &ModelParams<T>, prefix: &[usize], c: &DecodeCache<T>, dlogits: &Mat<T>, mem_rows: usize, g: &mut [Vec<T>]) -> Mat<T> {
    let l = &p.layout;
    let dn = linear_bwd(p, l.output, &c.normed, dlogits, g);
    let mut dx = layer_norm_bwd(p, l.decoder_norm, &c.norm, &dn, g);
    let mut dmem = Mat::zeros(mem_rows, p.config.d_model);
    for (layer, cache) in l.decoder.iter().zip(&c.layers).rev() {
        dx = dec_layer_bwd(p, layer, cache, &dx, &mut dmem, g);
    }
    embed_bwd(&mut g[l.embed_target], prefix, &dx);
    dmem
}

/// Next-token logits for every position of `prefix` (which starts with
/// SOS), attending causally to the prefix and fully to `memory`.
pub fn decode<T: Scalar>(p: &ModelParams<T>, memory: &Mat<T>, prefix: &[usize]) -> Mat<T> {
    decode_fwd(p, memory, prefix, &mut Ctx::eval()).0
}

fn log_softmax<T: Scalar>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
    row.iter().map(|&v| v - lse).collect()
}

pub(crate) fn log_probs_last<T: Scalar>(logits: &Mat<T>) -> Vec<T> {
    log_softmax(logits.row(logits.rows - 1))
}

/// Mean negative log-likelihood of `targets` under `logits`, skipping PAD
/// targets.
pub fn loss<T: Scalar>(logits: &Mat<T>, targets: &[usize]) -> T {
    let mut sum = T::zero();
    let mut n = 0;
    for (i, &t) in targets.iter().enumerate() {
        if t == PAD {
            continue;
        }
        sum -= log_softmax(logits.row(i))[t];
        n += 1;
    }
    if n == 0 {
        T::zero()
    } else {
        sum / T::of(n as f64)
    }
}

/// Accumulates `weight · ∇(summed NLL)` of one sample into `grads` and
/// returns the summed NLL and the number of scored tokens.
pub(crate) fn sample_gradients_ctx<T: Scalar>(
    p: &ModelParams<T>,
    sample: &TrainSample,
    grads: &mut [Vec<T>],
    weight: T,
    ctx: &mut Ctx,
) -> Result<(f64, usize, usize), ModelError> {
    let (mem, _, ecache) = encode_fwd(p, &sample.spec, &sample.circuit, ctx)?;
    let prefix = sample.decoder_input();
    if prefix.len() > p.config.max_circuit_len + 1 {
        return Err(ModelError::Limits(format!("target of {} tokens", sample.target.len())));
    }
    let (logits, dcache) = decode_fwd(p, &mem, &prefix, ctx);
    let mut dlogits = Mat::zeros(logits.rows, logits.cols);
    let mut total = 0.0;
    let mut count = 0;
    let mut correct = 0;
    for (i, &t) in sample.target.iter().enumerate() {
        if t == PAD {
            continue;
        }
        let row = logits.row(i);
        let lp = log_softmax(row);
        total -= lp[t].f64();
        count += 1;
        let argmax = (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b });
        correct += usize::from(argmax == t);
        let d = dlogits.row_mut(i);
        d.copy_from_slice(row);
        softmax_in_place(d);
        d[t] -= T::one();
        for v in d.iter_mut() {
            *v *= weight;
        }
    }
    let dmem = decode_bwd(p, &prefix, &dcache, &dlogits, mem.rows, grads);
    encode_bwd(p, &sample.spec, &sample.circuit, &ecache, &dmem, grads);
    Ok((total, count, correct))
}

/// Gradients of the sample's mean token NLL, accumulated into `grads`
/// (shaped like [`ModelParams::zeros_like`]). Returns the loss.
pub fn sample_gradients<T: Scalar>(p: &ModelParams<T>, sample: &TrainSample, grads: &mut [Vec<T>]) -> Result<f64, ModelError> {
    let n = sample.target.iter().filter(|&&t| t != PAD).count().max(1);
    let (sum, _, _) = sample_gradients_ctx(p, sample, grads, T::one() / T::of(n as f64), &mut Ctx::eval())?;
    Ok(sum / n as f64)
}

/// Teacher-forced next-token accuracy over `samples`.
pub fn token_accuracy<T: Scalar>(p: &ModelParams<T>, samples: &[TrainSample]) -> Result<f64, ModelError> {
    let (mut right, mut total) = (0usize, 0usize);
    for s in samples {
        let mem = encode(p, &s.spec, &s.circuit)?;
        let logits = decode(p, &mem, &s.decoder_input());
        for (i, &t) in s.target.iter().enumerate() {
            if t == PAD {
                continue;
            }
            let row = logits.row(i);
            let argmax = (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            right += usize::from(argmax == t);
            total += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { right as f64 / total as f64 })
}
