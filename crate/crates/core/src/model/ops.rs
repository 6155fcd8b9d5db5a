//! Dense kernels with hand-written backward passes.

use rand::Rng;

use super::{Attn, Lin, ModelParams, Norm, Scalar};
use crate::rng::Rng as ChaCha;

/// Row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Mat { rows, cols, data }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn concat_rows(parts: &[&Mat<T>], cols: usize) -> Mat<T> {
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            debug_assert_eq!(p.cols, cols);
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Mat { rows, cols, data }
    }

    pub fn slice_rows(&self, start: usize, len: usize) -> Mat<T> {
        Mat { rows: len, cols: self.cols, data: self.data[start * self.cols..(start + len) * self.cols].to_vec() }
    }

    pub fn add_assign(&mut self, other: &Mat<T>) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

#[inline]
pub(crate) fn axpy<T: Scalar>(y: &mut [T], alpha: T, x: &[T]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += alpha * *b;
    }
}

/// Dropout state for one forward pass; inactive without an RNG.
pub(crate) struct Ctx {
    pub p: f64,
    pub rng: Option<ChaCha>,
}

impl Ctx {
    pub fn eval() -> Ctx {
        Ctx { p: 0.0, rng: None }
    }

    /// Applies dropout in place; returns the scaled keep-mask.
    pub fn dropout<T: Scalar>(&mut self, x: &mut Mat<T>) -> Option<Vec<T>> {
        let rng = self.rng.as_mut()?;
        if self.p == 0.0 {
            return None;
        }
        let keep = T::of(1.0 / (1.0 - self.p));
        let mask: Vec<T> = (0..x.data.len()).map(|_| if rng.gen::<f64>() < self.p { T::zero() } else { keep }).collect();
        for (v, m) in x.data.iter_mut().zip(&mask) {
            *v *= *m;
        }
        Some(mask)
    }
}

pub(crate) fn dropout_bwd<T: Scalar>(dy: &mut Mat<T>, mask: &Option<Vec<T>>) {
    if let Some(m) = mask {
        for (g, k) in dy.data.iter_mut().zip(m) {
            *g *= *k;
        }
    }
}

pub(crate) fn linear<T: Scalar>(p: &ModelParams<T>, lin: Lin, x: &Mat<T>) -> Mat<T> {
    let (w, b) = (p.t(lin.w), p.t(lin.b));
    let mut y = Mat::zeros(x.rows, lin.n_out);
    for i in 0..x.rows {
        let yr = &mut y.data[i * lin.n_out..(i + 1) * lin.n_out];
        yr.copy_from_slice(b);
        for (k, &xv) in x.row(i).iter().enumerate() {
            if xv != T::zero() {
                axpy(yr, xv, &w[k * lin.n_out..(k + 1) * lin.n_out]);
            }
        }
    }
    y
}

/// Accumulates weight gradients and returns the input gradient.
pub(crate) fn linear_bwd<T: Scalar>(p: &ModelParams<T>, lin: Lin, x: &Mat<T>, dy: &Mat<T>, g: &mut [Vec<T>]) -> Mat<T> {
    let w = p.t(lin.w);
    let mut dx = Mat::zeros(x.rows, lin.n_in);
    for i in 0..x.rows {
        let dyr = dy.row(i);
        {
            let gb = &mut g[lin.b];
            axpy(gb, T::one(), dyr);
        }
        let gw = &mut g[lin.w];
        for (k, &xv) in x.row(i).iter().enumerate() {
            if xv != T::zero() {
                axpy(&mut gw[k * lin.n_out..(k + 1) * lin.n_out], xv, dyr);
            }
        }
        let dxr = dx.row_mut(i);
        for (k, d) in dxr.iter_mut().enumerate() {
            *d = dot(dyr, &w[k * lin.n_out..(k + 1) * lin.n_out]);
        }
    }
    dx
}

const LN_EPS: f64 = 1e-5;

pub(crate) struct NormCache<T> {
    xhat: Mat<T>,
    inv_std: Vec<T>,
}

pub(crate) fn layer_norm<T: Scalar>(p: &ModelParams<T>, n: Norm, x: &Mat<T>) -> (Mat<T>, NormCache<T>) {
    let d = x.cols;
    let (gain, bias) = (p.t(n.gain), p.t(n.bias));
    let mut y = Mat::zeros(x.rows, d);
    let mut xhat = Mat::zeros(x.rows, d);
    let mut inv_std = Vec::with_capacity(x.rows);
    let dt = T::of(d as f64);
    for i in 0..x.rows {
        let r = x.row(i);
        let mean = r.iter().copied().sum::<T>() / dt;
        let var = r.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / dt;
        let is = T::one() / (var + T::of(LN_EPS)).sqrt();
        inv_std.push(is);
        let (xh, yr) = (&mut xhat.data[i * d..(i + 1) * d], &mut y.data[i * d..(i + 1) * d]);
        for j in 0..d {
            xh[j] = (r[j] - mean) * is;
            yr[j] = xh[j] * gain[j] + bias[j];
        }
    }
    (y, NormCache { xhat, inv_std })
}

pub(crate) fn layer_norm_bwd<T: Scalar>(p: &ModelParams<T>, n: Norm, c: &NormCache<T>, dy: &Mat<T>, g: &mut [Vec<T>]) -> Mat<T> {
    let d = dy.cols;
    let gain = p.t(n.gain);
    let dt = T::of(d as f64);
    let mut dx = Mat::zeros(dy.rows, d);
    let mut dxhat = vec![T::zero(); d];
    for i in 0..dy.rows {
        let (dyr, xh) = (dy.row(i), c.xhat.row(i));
        for j in 0..d {
            g[n.gain][j] += dyr[j] * xh[j];
            g[n.bias][j] += dyr[j];
            dxhat[j] = dyr[j] * gain[j];
        }
        let m1 = dxhat.iter().copied().sum::<T>() / dt;
        let m2 = dot(&dxhat, xh) / dt;
        let dxr = dx.row_mut(i);
        for j in 0..d {
            dxr[j] = c.inv_std[i] * (dxhat[j] - m1 - xh[j] * m2);
        }
    }
    dx
}

/// Row-wise softmax of `logits[i]` over the first `len` entries.
pub(crate) fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub(crate) struct AttnCache<T> {
    xq: Mat<T>,
    xkv: Mat<T>,
    q: Mat<T>,
    k: Mat<T>,
    v: Mat<T>,
    /// Per head, `n × m` attention weights.
    probs: Vec<Mat<T>>,
    ctx: Mat<T>,
}

/// Multi-head attention of queries from `xq` over keys and values from
/// `xkv`; `causal` blocks keys after the query position.
pub(crate) fn mha<T: Scalar>(p: &ModelParams<T>, a: Attn, xq: &Mat<T>, xkv: &Mat<T>, causal: bool) -> (Mat<T>, AttnCache<T>) {
    let q = linear(p, a.q, xq);
    let k = linear(p, a.k, xkv);
    let v = linear(p, a.v, xkv);
    let (n, m, d) = (xq.rows, xkv.rows, xq.cols);
    let dk = d / a.heads;
    let scale = T::one() / T::of(dk as f64).sqrt();
    let mut ctx = Mat::zeros(n, d);
    let mut probs = Vec::with_capacity(a.heads);
    for h in 0..a.heads {
        let cols = h * dk..(h + 1) * dk;
        let mut pm = Mat::zeros(n, m);
        for i in 0..n {
            let qi = &q.row(i)[cols.clone()];
            let visible = if causal { (i + 1).min(m) } else { m };
            let pr = &mut pm.data[i * m..i * m + visible];
            for (j, s) in pr.iter_mut().enumerate() {
                *s = dot(qi, &k.row(j)[cols.clone()]) * scale;
            }
            softmax_in_place(pr);
            let out = &mut ctx.data[i * d + h * dk..i * d + (h + 1) * dk];
            for j in 0..visible {
                axpy(out, pm.data[i * m + j], &v.row(j)[cols.clone()]);
            }
        }
        probs.push(pm);
    }
    let out = linear(p, a.o, &ctx);
    (out, AttnCache { xq: xq.clone(), xkv: xkv.clone(), q, k, v, probs, ctx })
}

/// Returns gradients with respect to `xq` and `xkv`.
pub(crate) fn mha_bwd<T: Scalar>(
    p: &ModelParams<T>,
    a: Attn,
    c: &AttnCache<T>,
    dout: &Mat<T>,
    causal: bool,
    g: &mut [Vec<T>],
) -> (Mat<T>, Mat<T>) {
    let dctx = linear_bwd(p, a.o, &c.ctx, dout, g);
    let (n, m, d) = (c.q.rows, c.k.rows, c.q.cols);
    let dk = d / a.heads;
    let scale = T::one() / T::of(dk as f64).sqrt();
    let mut dq = Mat::zeros(n, d);
    let mut dkm = Mat::zeros(m, d);
    let mut dv = Mat::zeros(m, d);
    let mut dp = vec![T::zero(); m];
    for h in 0..a.heads {
        let cols = h * dk..(h + 1) * dk;
        let pm = &c.probs[h];
        for i in 0..n {
            let visible = if causal { (i + 1).min(m) } else { m };
            let dci = &dctx.row(i)[cols.clone()];
            let pr = &pm.data[i * m..i * m + visible];
            let mut sum = T::zero();
            for j in 0..visible {
                dp[j] = dot(dci, &c.v.row(j)[cols.clone()]);
                sum += pr[j] * dp[j];
                axpy(&mut dv.data[j * d + h * dk..j * d + (h + 1) * dk], pr[j], dci);
            }
            let qi = &c.q.row(i)[cols.clone()];
            for j in 0..visible {
                let ds = pr[j] * (dp[j] - sum) * scale;
                if ds == T::zero() {
                    continue;
                }
                axpy(&mut dq.data[i * d + h * dk..i * d + (h + 1) * dk], ds, &c.k.row(j)[cols.clone()]);
                axpy(&mut dkm.data[j * d + h * dk..j * d + (h + 1) * dk], ds, qi);
            }
        }
    }
    let dxq = linear_bwd(p, a.q, &c.xq, &dq, g);
    let mut dxkv = linear_bwd(p, a.k, &c.xkv, &dkm, g);
    dxkv.add_assign(&linear_bwd(p, a.v, &c.xkv, &dv, g));
    (dxq, dxkv)
}

/// Single-head scaled dot-product attention with an additive mask.
pub(crate) fn attention_single<T: Scalar>(q: &Mat<T>, k: &Mat<T>, v: &Mat<T>, mask: Option<&Mat<T>>) -> Mat<T> {
    assert_eq!(q.cols, k.cols, "query and key width");
    assert_eq!(k.rows, v.rows, "key and value count");
    let scale = T::one() / T::of(q.cols as f64).sqrt();
    let mut out = Mat::zeros(q.rows, v.cols);
    let mut row = vec![T::zero(); k.rows];
    for i in 0..q.rows {
        for j in 0..k.rows {
            row[j] = dot(q.row(i), k.row(j)) * scale + mask.map_or(T::zero(), |m| m.row(i)[j]);
        }
        softmax_in_place(&mut row);
        for j in 0..k.rows {
            axpy(out.row_mut(i), row[j], v.row(j));
        }
    }
    out
}
