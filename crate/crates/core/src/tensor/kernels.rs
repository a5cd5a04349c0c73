//! Raw array kernels behind the tape operations.
//!
//! Convolutions and matrix products are lowered to GEMM (im2col for the
//! spatial ones); everything else is direct loops. Shape validation happens
//! at the tape layer, so kernels only `debug_assert` their preconditions.
//!
//! Spatial kernels treat the last two axes as (H, W) and fold every leading
//! axis into one, so they serve both batched `[N,C,H,W]` tensors and
//! per-sample `[C,H,W]` planes.

use super::{Real, TensorData};

fn lead_product(shape: &[usize], trailing: usize) -> usize {
    shape[..shape.len() - trailing].iter().product()
}

// ---------------------------------------------------------------------------
// im2col / col2im
// ---------------------------------------------------------------------------

/// Unfold one sample `[Cin,H,W]` into `[Cin*k*k, Ho*Wo]` patch columns.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Real>(
    x: &[T],
    cin: usize,
    h: usize,
    w: usize,
    k: usize,
    pad: usize,
    ho: usize,
    wo: usize,
    cols: &mut [T],
) {
    let how = ho * wo;
    for ci in 0..cin {
        let xc = &x[ci * h * w..(ci + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = &mut cols[((ci * k + ki) * k + kj) * how..][..how];
                // Valid output columns for this kernel offset.
                let lo = pad.saturating_sub(kj).min(wo);
                let hi = (w + pad).saturating_sub(kj).min(wo).max(lo);
                for oh in 0..ho {
                    let dst = &mut row[oh * wo..(oh + 1) * wo];
                    let ih = oh + ki;
                    if ih < pad || ih >= h + pad {
                        dst.fill(T::zero());
                        continue;
                    }
                    let ih = ih - pad;
                    dst[..lo].fill(T::zero());
                    if hi > lo {
                        let src = &xc[ih * w + (lo + kj - pad)..][..hi - lo];
                        dst[lo..hi].copy_from_slice(src);
                    }
                    dst[hi..].fill(T::zero());
                }
            }
        }
    }
}

/// Fold `[Cin*k*k, Ho*Wo]` columns back onto one `[Cin,H,W]` sample,
/// accumulating where patches overlap.
#[allow(clippy::too_many_arguments)]
fn col2im<T: Real>(
    cols: &[T],
    cin: usize,
    h: usize,
    w: usize,
    k: usize,
    pad: usize,
    ho: usize,
    wo: usize,
    x: &mut [T],
) {
    let how = ho * wo;
    for ci in 0..cin {
        let xc = &mut x[ci * h * w..(ci + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = &cols[((ci * k + ki) * k + kj) * how..][..how];
                let lo = pad.saturating_sub(kj).min(wo);
                let hi = (w + pad).saturating_sub(kj).min(wo).max(lo);
                for oh in 0..ho {
                    let ih = oh + ki;
                    if ih < pad || ih >= h + pad {
                        continue;
                    }
                    let ih = ih - pad;
                    let src = &row[oh * wo + lo..oh * wo + hi];
                    let dst = &mut xc[ih * w + (lo + kj - pad)..][..hi - lo];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += *s;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Convolution family (closed under differentiation)
// ---------------------------------------------------------------------------

/// Cross-correlation `y[n,co] = sum_ci x[n,ci] * w[co,ci]`, stride 1.
pub(crate) fn conv2d<T: Real>(x: &TensorData<T>, w: &TensorData<T>, pad: usize) -> TensorData<T> {
    let (n, cin, h, wd) = dims4(x.shape());
    let (cout, cinw, k, _) = dims4(w.shape());
    debug_assert_eq!(cin, cinw);
    let ho = h + 2 * pad - k + 1;
    let wo = wd + 2 * pad - k + 1;
    let (kk, how) = (cin * k * k, ho * wo);
    let mut y = TensorData::zeros(vec![n, cout, ho, wo]);
    if k == 1 && pad == 0 {
        for s in 0..n {
            T::gemm(
                cout,
                cin,
                how,
                T::one(),
                w.data(),
                cin as isize,
                1,
                &x.data()[s * cin * how..],
                how as isize,
                1,
                T::zero(),
                &mut y.data_mut()[s * cout * how..][..cout * how],
            );
        }
        return y;
    }
    let mut cols = vec![T::zero(); kk * how];
    for s in 0..n {
        im2col(&x.data()[s * cin * h * wd..], cin, h, wd, k, pad, ho, wo, &mut cols);
        T::gemm(
            cout,
            kk,
            how,
            T::one(),
            w.data(),
            kk as isize,
            1,
            &cols,
            how as isize,
            1,
            T::zero(),
            &mut y.data_mut()[s * cout * how..][..cout * how],
        );
    }
    y
}

/// Adjoint of [`conv2d`] in its input: maps an output cotangent back to
/// input space. `(h, w)` are the spatial extents of the original input.
pub(crate) fn conv_input_grad<T: Real>(
    g: &TensorData<T>,
    w: &TensorData<T>,
    pad: usize,
    h: usize,
    wd: usize,
) -> TensorData<T> {
    let (n, cout, ho, wo) = dims4(g.shape());
    let (coutw, cin, k, _) = dims4(w.shape());
    debug_assert_eq!(cout, coutw);
    debug_assert_eq!(ho, h + 2 * pad - k + 1);
    let (kk, how) = (cin * k * k, ho * wo);
    let mut dx = TensorData::zeros(vec![n, cin, h, wd]);
    if k == 1 && pad == 0 {
        for s in 0..n {
            T::gemm(
                cin,
                cout,
                how,
                T::one(),
                w.data(),
                1,
                cin as isize,
                &g.data()[s * cout * how..],
                how as isize,
                1,
                T::zero(),
                &mut dx.data_mut()[s * cin * how..][..cin * how],
            );
        }
        return dx;
    }
    let mut cols = vec![T::zero(); kk * how];
    for s in 0..n {
        T::gemm(
            kk,
            cout,
            how,
            T::one(),
            w.data(),
            1,
            kk as isize,
            &g.data()[s * cout * how..],
            how as isize,
            1,
            T::zero(),
            &mut cols,
        );
        col2im(
            &cols,
            cin,
            h,
            wd,
            k,
            pad,
            ho,
            wo,
            &mut dx.data_mut()[s * cin * h * wd..][..cin * h * wd],
        );
    }
    dx
}

/// Adjoint of [`conv2d`] in its weight: contracts input with an output
/// cotangent into a `[Cout,Cin,k,k]` kernel.
pub(crate) fn conv_weight_grad<T: Real>(
    x: &TensorData<T>,
    g: &TensorData<T>,
    pad: usize,
    k: usize,
) -> TensorData<T> {
    let (n, cin, h, wd) = dims4(x.shape());
    let (ng, cout, ho, wo) = dims4(g.shape());
    debug_assert_eq!(n, ng);
    debug_assert_eq!(ho, h + 2 * pad - k + 1);
    let (kk, how) = (cin * k * k, ho * wo);
    let mut dw = TensorData::zeros(vec![cout, cin, k, k]);
    let mut cols = vec![T::zero(); kk * how];
    for s in 0..n {
        let beta = if s == 0 { T::zero() } else { T::one() };
        if k == 1 && pad == 0 {
            T::gemm(
                cout,
                how,
                cin,
                T::one(),
                &g.data()[s * cout * how..],
                how as isize,
                1,
                &x.data()[s * cin * how..],
                1,
                how as isize,
                beta,
                dw.data_mut(),
            );
            continue;
        }
        im2col(&x.data()[s * cin * h * wd..], cin, h, wd, k, pad, ho, wo, &mut cols);
        T::gemm(
            cout,
            how,
            kk,
            T::one(),
            &g.data()[s * cout * how..],
            how as isize,
            1,
            &cols,
            1,
            how as isize,
            beta,
            dw.data_mut(),
        );
    }
    dw
}

// ---------------------------------------------------------------------------
// Matrix products (closed under differentiation)
// ---------------------------------------------------------------------------

fn dims2(shape: &[usize]) -> (usize, usize) {
    debug_assert_eq!(shape.len(), 2);
    (shape[0], shape[1])
}

fn dims4(shape: &[usize]) -> (usize, usize, usize, usize) {
    debug_assert_eq!(shape.len(), 4);
    (shape[0], shape[1], shape[2], shape[3])
}

/// `a [N,F] * b^T [F,O] -> [N,O]`
pub(crate) fn matmul_nt<T: Real>(a: &TensorData<T>, b: &TensorData<T>) -> TensorData<T> {
    let (n, f) = dims2(a.shape());
    let (o, fb) = dims2(b.shape());
    debug_assert_eq!(f, fb);
    let mut y = TensorData::zeros(vec![n, o]);
    T::gemm(
        n,
        f,
        o,
        T::one(),
        a.data(),
        f as isize,
        1,
        b.data(),
        1,
        f as isize,
        T::zero(),
        y.data_mut(),
    );
    y
}

/// `a [N,O] * b [O,F] -> [N,F]`
pub(crate) fn matmul_nn<T: Real>(a: &TensorData<T>, b: &TensorData<T>) -> TensorData<T> {
    let (n, o) = dims2(a.shape());
    let (ob, f) = dims2(b.shape());
    debug_assert_eq!(o, ob);
    let mut y = TensorData::zeros(vec![n, f]);
    T::gemm(
        n,
        o,
        f,
        T::one(),
        a.data(),
        o as isize,
        1,
        b.data(),
        f as isize,
        1,
        T::zero(),
        y.data_mut(),
    );
    y
}

/// `a^T [O,N] * b [N,F] -> [O,F]`
pub(crate) fn matmul_tn<T: Real>(a: &TensorData<T>, b: &TensorData<T>) -> TensorData<T> {
    let (n, o) = dims2(a.shape());
    let (nb, f) = dims2(b.shape());
    debug_assert_eq!(n, nb);
    let mut y = TensorData::zeros(vec![o, f]);
    T::gemm(
        o,
        n,
        f,
        T::one(),
        a.data(),
        1,
        o as isize,
        b.data(),
        f as isize,
        1,
        T::zero(),
        y.data_mut(),
    );
    y
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

pub(crate) fn zip<T: Real>(a: &TensorData<T>, b: &TensorData<T>, f: impl Fn(T, T) -> T) -> TensorData<T> {
    debug_assert_eq!(a.shape(), b.shape());
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    TensorData::new(a.shape().to_vec(), data).expect("zip preserves shape")
}

pub(crate) fn leaky_relu<T: Real>(x: &TensorData<T>, slope: T) -> TensorData<T> {
    x.map(|v| if v >= T::zero() { v } else { slope * v })
}

/// `g * m(x)` where `m` is the leaky-relu slope mask of `x`.
pub(crate) fn leaky_relu_grad<T: Real>(g: &TensorData<T>, x: &TensorData<T>, slope: T) -> TensorData<T> {
    zip(g, x, |gv, xv| if xv >= T::zero() { gv } else { slope * gv })
}

// ---------------------------------------------------------------------------
// Axis-1 (channel) broadcasts and reductions; shapes are [n0, C, rest...]
// ---------------------------------------------------------------------------

fn split_c(shape: &[usize]) -> (usize, usize, usize) {
    debug_assert!(shape.len() >= 2);
    let n0 = shape[0];
    let c = shape[1];
    let rest = shape[2..].iter().product();
    (n0, c, rest)
}

/// `x + b` with `b: [C]` broadcast over every other axis.
pub(crate) fn add_bias_c<T: Real>(x: &TensorData<T>, b: &TensorData<T>) -> TensorData<T> {
    let (n0, c, rest) = split_c(x.shape());
    debug_assert_eq!(b.numel(), c);
    let mut y = x.clone();
    let yd = y.data_mut();
    for i in 0..n0 {
        for (j, &bv) in b.data().iter().enumerate() {
            let base = (i * c + j) * rest;
            for v in &mut yd[base..base + rest] {
                *v += bv;
            }
        }
    }
    y
}

/// Reduce every axis except axis 1 down to `[C]`.
pub(crate) fn sum_except_c<T: Real>(x: &TensorData<T>) -> TensorData<T> {
    let (n0, c, rest) = split_c(x.shape());
    let mut out = TensorData::zeros(vec![c]);
    let od = out.data_mut();
    for i in 0..n0 {
        for (j, o) in od.iter_mut().enumerate() {
            let base = (i * c + j) * rest;
            for &v in &x.data()[base..base + rest] {
                *o += v;
            }
        }
    }
    out
}

/// Broadcast `[C]` to a full shape along axis 1.
pub(crate) fn bcast_from_c<T: Real>(b: &TensorData<T>, shape: &[usize]) -> TensorData<T> {
    let (n0, c, rest) = split_c(shape);
    debug_assert_eq!(b.numel(), c);
    let mut y = TensorData::zeros(shape.to_vec());
    let yd = y.data_mut();
    for i in 0..n0 {
        for (j, &bv) in b.data().iter().enumerate() {
            yd[(i * c + j) * rest..(i * c + j + 1) * rest].fill(bv);
        }
    }
    y
}

/// Reduce axis 1 to a single channel: `[n0,C,rest] -> [n0,1,rest]`.
pub(crate) fn channel_sum<T: Real>(x: &TensorData<T>) -> TensorData<T> {
    let (n0, c, rest) = split_c(x.shape());
    let mut shape = x.shape().to_vec();
    shape[1] = 1;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    for i in 0..n0 {
        for j in 0..c {
            let base = (i * c + j) * rest;
            let dst = &mut yd[i * rest..(i + 1) * rest];
            for (d, &v) in dst.iter_mut().zip(&x.data()[base..base + rest]) {
                *d += v;
            }
        }
    }
    y
}

/// Broadcast a single channel across axis 1: `[n0,1,rest] -> [n0,C,rest]`.
pub(crate) fn channel_bcast<T: Real>(s: &TensorData<T>, channels: usize) -> TensorData<T> {
    let (n0, c1, rest) = split_c(s.shape());
    debug_assert_eq!(c1, 1);
    let mut shape = s.shape().to_vec();
    shape[1] = channels;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    for i in 0..n0 {
        let src = &s.data()[i * rest..(i + 1) * rest];
        for j in 0..channels {
            yd[(i * channels + j) * rest..(i * channels + j + 1) * rest].copy_from_slice(src);
        }
    }
    y
}

/// `x * s` with `s: [n0,1,rest]` broadcast across axis 1.
pub(crate) fn bcast_cmul<T: Real>(x: &TensorData<T>, s: &TensorData<T>) -> TensorData<T> {
    let (n0, c, rest) = split_c(x.shape());
    debug_assert_eq!(s.numel(), n0 * rest);
    let mut y = x.clone();
    let yd = y.data_mut();
    for i in 0..n0 {
        let sv = &s.data()[i * rest..(i + 1) * rest];
        for j in 0..c {
            let base = (i * c + j) * rest;
            for (v, &m) in yd[base..base + rest].iter_mut().zip(sv) {
                *v = *v * m;
            }
        }
    }
    y
}

// ---------------------------------------------------------------------------
// Axis-0 (batch / sample) reductions
// ---------------------------------------------------------------------------

/// `[N, rest...] -> [1, rest...]`
pub(crate) fn batch_sum<T: Real>(x: &TensorData<T>) -> TensorData<T> {
    let n = x.shape()[0];
    let rest: usize = x.shape()[1..].iter().product();
    let mut shape = x.shape().to_vec();
    shape[0] = 1;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    for i in 0..n {
        for (d, &v) in yd.iter_mut().zip(&x.data()[i * rest..(i + 1) * rest]) {
            *d += v;
        }
    }
    y
}

/// `[1, rest...] -> [N, rest...]`
pub(crate) fn batch_bcast<T: Real>(x: &TensorData<T>, n: usize) -> TensorData<T> {
    debug_assert_eq!(x.shape()[0], 1);
    let rest: usize = x.shape()[1..].iter().product();
    let mut shape = x.shape().to_vec();
    shape[0] = n;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    for i in 0..n {
        yd[i * rest..(i + 1) * rest].copy_from_slice(x.data());
    }
    y
}

/// `[N, rest...] -> [N]`: per-sample sum over everything but axis 0.
pub(crate) fn sample_sum<T: Real>(x: &TensorData<T>) -> TensorData<T> {
    let n = x.shape()[0];
    let rest: usize = x.shape()[1..].iter().product();
    let mut y = TensorData::zeros(vec![n]);
    let yd = y.data_mut();
    for i in 0..n {
        let mut acc = T::zero();
        for &v in &x.data()[i * rest..(i + 1) * rest] {
            acc += v;
        }
        yd[i] = acc;
    }
    y
}

/// `[N] -> [N, rest...]`: replicate each sample's value over its block.
pub(crate) fn sample_bcast<T: Real>(v: &TensorData<T>, shape: &[usize]) -> TensorData<T> {
    let n = shape[0];
    debug_assert_eq!(v.numel(), n);
    let rest: usize = shape[1..].iter().product();
    let mut y = TensorData::zeros(shape.to_vec());
    let yd = y.data_mut();
    for i in 0..n {
        yd[i * rest..(i + 1) * rest].fill(v.data()[i]);
    }
    y
}

pub(crate) fn sum_all<T: Real>(x: &TensorData<T>) -> TensorData<T> {
    let mut acc = T::zero();
    for &v in x.data() {
        acc += v;
    }
    TensorData::scalar(acc)
}

pub(crate) fn fill_bcast<T: Real>(s: &TensorData<T>, shape: &[usize]) -> TensorData<T> {
    debug_assert_eq!(s.numel(), 1);
    TensorData::filled(shape.to_vec(), s.data()[0])
}

// ---------------------------------------------------------------------------
// Channel concat / slice / pad (axis 1)
// ---------------------------------------------------------------------------

pub(crate) fn concat_c<T: Real>(a: &TensorData<T>, b: &TensorData<T>) -> TensorData<T> {
    let (n0, ca, rest) = split_c(a.shape());
    let (n0b, cb, restb) = split_c(b.shape());
    debug_assert_eq!((n0, rest), (n0b, restb));
    let mut shape = a.shape().to_vec();
    shape[1] = ca + cb;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    let block = (ca + cb) * rest;
    for i in 0..n0 {
        yd[i * block..i * block + ca * rest].copy_from_slice(&a.data()[i * ca * rest..(i + 1) * ca * rest]);
        yd[i * block + ca * rest..(i + 1) * block]
            .copy_from_slice(&b.data()[i * cb * rest..(i + 1) * cb * rest]);
    }
    y
}

pub(crate) fn slice_c<T: Real>(x: &TensorData<T>, start: usize, len: usize) -> TensorData<T> {
    let (n0, c, rest) = split_c(x.shape());
    debug_assert!(start + len <= c);
    let mut shape = x.shape().to_vec();
    shape[1] = len;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    for i in 0..n0 {
        let src = &x.data()[(i * c + start) * rest..(i * c + start + len) * rest];
        yd[i * len * rest..(i + 1) * len * rest].copy_from_slice(src);
    }
    y
}

/// Embed `x` into a wider channel axis of `channels` total, zero elsewhere.
pub(crate) fn pad_c<T: Real>(x: &TensorData<T>, start: usize, channels: usize) -> TensorData<T> {
    let (n0, c, rest) = split_c(x.shape());
    debug_assert!(start + c <= channels);
    let mut shape = x.shape().to_vec();
    shape[1] = channels;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    for i in 0..n0 {
        let dst = &mut yd[(i * channels + start) * rest..(i * channels + start + c) * rest];
        dst.copy_from_slice(&x.data()[i * c * rest..(i + 1) * c * rest]);
    }
    y
}

// ---------------------------------------------------------------------------
// Spatial resampling (last two axes)
// ---------------------------------------------------------------------------

pub(crate) fn upsample_nearest2x<T: Real>(x: &TensorData<T>) -> TensorData<T> {
    let rank = x.rank();
    debug_assert!(rank >= 2);
    let (h, w) = (x.shape()[rank - 2], x.shape()[rank - 1]);
    let lead = lead_product(x.shape(), 2);
    let mut shape = x.shape().to_vec();
    shape[rank - 2] = 2 * h;
    shape[rank - 1] = 2 * w;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    let (wo, plane_o) = (2 * w, 4 * h * w);
    for l in 0..lead {
        let src = &x.data()[l * h * w..(l + 1) * h * w];
        let dst = &mut yd[l * plane_o..(l + 1) * plane_o];
        for i in 0..h {
            for j in 0..w {
                let v = src[i * w + j];
                let base = 2 * i * wo + 2 * j;
                dst[base] = v;
                dst[base + 1] = v;
                dst[base + wo] = v;
                dst[base + wo + 1] = v;
            }
        }
    }
    y
}

/// Sum over non-overlapping 2x2 windows; adjoint of [`upsample_nearest2x`].
pub(crate) fn sum_pool2x<T: Real>(x: &TensorData<T>) -> TensorData<T> {
    let rank = x.rank();
    debug_assert!(rank >= 2);
    let (h, w) = (x.shape()[rank - 2], x.shape()[rank - 1]);
    debug_assert!(h % 2 == 0 && w % 2 == 0);
    let lead = lead_product(x.shape(), 2);
    let mut shape = x.shape().to_vec();
    shape[rank - 2] = h / 2;
    shape[rank - 1] = w / 2;
    let mut y = TensorData::zeros(shape);
    let yd = y.data_mut();
    let (ho, wo) = (h / 2, w / 2);
    for l in 0..lead {
        let src = &x.data()[l * h * w..(l + 1) * h * w];
        let dst = &mut yd[l * ho * wo..(l + 1) * ho * wo];
        for i in 0..ho {
            for j in 0..wo {
                let base = 2 * i * w + 2 * j;
                dst[i * wo + j] = src[base] + src[base + 1] + src[base + w] + src[base + w + 1];
            }
        }
    }
    y
}

/// Mean over non-overlapping 2x2 windows.
pub(crate) fn avg_pool2x<T: Real>(x: &TensorData<T>) -> TensorData<T> {
    let quarter = T::from_f64(0.25);
    sum_pool2x(x).map(|v| v * quarter)
}

/// Max over non-overlapping 2x2 windows. Returns the pooled tensor and, per
/// output element, the flat input offset of its max (first hit wins ties in
/// row-major window order).
pub(crate) fn max_pool2x<T: Real>(x: &TensorData<T>) -> (TensorData<T>, Vec<u32>) {
    let rank = x.rank();
    debug_assert!(rank >= 2);
    let (h, w) = (x.shape()[rank - 2], x.shape()[rank - 1]);
    debug_assert!(h % 2 == 0 && w % 2 == 0);
    debug_assert!(x.numel() <= u32::MAX as usize);
    let lead = lead_product(x.shape(), 2);
    let mut shape = x.shape().to_vec();
    shape[rank - 2] = h / 2;
    shape[rank - 1] = w / 2;
    let mut y = TensorData::zeros(shape);
    let (ho, wo) = (h / 2, w / 2);
    let mut argmax = vec![0u32; lead * ho * wo];
    let yd = y.data_mut();
    for l in 0..lead {
        let src_off = l * h * w;
        let src = &x.data()[src_off..src_off + h * w];
        for i in 0..ho {
            for j in 0..wo {
                let base = 2 * i * w + 2 * j;
                let window = [base, base + 1, base + w, base + w + 1];
                let mut best = window[0];
                for &cand in &window[1..] {
                    if src[cand] > src[best] {
                        best = cand;
                    }
                }
                yd[l * ho * wo + i * wo + j] = src[best];
                argmax[l * ho * wo + i * wo + j] = (src_off + best) as u32;
            }
        }
    }
    (y, argmax)
}

/// Scatter a pooled cotangent back to the argmax positions of the input.
pub(crate) fn max_unpool2x<T: Real>(
    g: &TensorData<T>,
    argmax: &[u32],
    input_shape: &[usize],
) -> TensorData<T> {
    debug_assert_eq!(g.numel(), argmax.len());
    let mut y = TensorData::zeros(input_shape.to_vec());
    let yd = y.data_mut();
    for (&idx, &v) in argmax.iter().zip(g.data()) {
        yd[idx as usize] = v;
    }
    y
}

/// Gather an input-shaped cotangent at the argmax positions; adjoint of
/// [`max_unpool2x`].
pub(crate) fn max_gather2x<T: Real>(
    u: &TensorData<T>,
    argmax: &[u32],
    out_shape: &[usize],
) -> TensorData<T> {
    let mut y = TensorData::zeros(out_shape.to_vec());
    debug_assert_eq!(y.numel(), argmax.len());
    let yd = y.data_mut();
    for (o, &idx) in yd.iter_mut().zip(argmax) {
        *o = u.data()[idx as usize];
    }
    y
}
