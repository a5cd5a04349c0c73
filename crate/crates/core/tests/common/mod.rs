//! Shared test utilities: independent oracles and comparison helpers.
//!
//! Everything here is deliberately written the slow, obvious way and never
//! calls into the code paths it checks.

#![allow(dead_code)]

use msgan_core::tensor::{Real, RngStream, TensorData};

/// Max elementwise deviation scaled by the larger magnitude of the pair.
/// The floor keeps exact zero-vs-roundoff comparisons from exploding.
pub fn rel_error<T: Real>(a: &TensorData<T>, b: &TensorData<T>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "rel_error shape mismatch");
    let mag = a
        .data()
        .iter()
        .chain(b.data())
        .map(|v| v.as_f64().abs())
        .fold(0.0f64, f64::max);
    let diff = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x.as_f64() - y.as_f64()).abs())
        .fold(0.0f64, f64::max);
    diff / mag.max(1e-6)
}

/// Joint relative error across a family of tensors (one per parameter):
/// every deviation is scaled by the global magnitude of the whole gradient,
/// so parameters with true-zero derivatives compare their finite-difference
/// noise against the gradient's actual scale instead of against themselves.
pub fn rel_error_joint<T: Real>(a: &[TensorData<T>], b: &[TensorData<T>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mag = a
        .iter()
        .chain(b)
        .flat_map(|t| t.data())
        .map(|v| v.as_f64().abs())
        .fold(0.0f64, f64::max);
    let diff = a
        .iter()
        .zip(b)
        .flat_map(|(x, y)| x.data().iter().zip(y.data()))
        .map(|(x, y)| (x.as_f64() - y.as_f64()).abs())
        .fold(0.0f64, f64::max);
    diff / mag.max(1e-9)
}

pub fn normal_tensor(stream: &mut RngStream, shape: &[usize]) -> TensorData<f64> {
    stream.normal_tensor(shape.to_vec())
}

/// Push every element at least `margin` away from zero (leaky-relu kink).
pub fn nudge_from_zero(x: &TensorData<f64>, margin: f64) -> TensorData<f64> {
    x.map(|v| if v >= 0.0 { v + margin } else { v - margin })
}

/// Quantize to a coarse grid and add a distinct micro-offset per 2x2 window
/// position, guaranteeing a minimum gap inside every pooling window.
pub fn nudge_pool_windows(x: &TensorData<f64>) -> TensorData<f64> {
    let shape = x.shape().to_vec();
    let rank = shape.len();
    let (h, w) = (shape[rank - 2], shape[rank - 1]);
    let lead: usize = shape[..rank - 2].iter().product();
    let mut out = x.clone();
    let data = out.data_mut();
    for l in 0..lead {
        for i in 0..h {
            for j in 0..w {
                let idx = l * h * w + i * w + j;
                let grid = (data[idx] * 2.0).round() / 2.0;
                let pos = (i % 2) * 2 + (j % 2);
                data[idx] = grid + 0.01 * (pos as f64 + 1.0);
            }
        }
    }
    out
}

/// Direct nested-loop cross-correlation, the independent conv oracle.
pub fn conv2d_oracle(
    x: &TensorData<f64>,
    w: &TensorData<f64>,
    bias: Option<&TensorData<f64>>,
    pad: usize,
) -> TensorData<f64> {
    let (n, cin, h, wd) = (
        x.shape()[0],
        x.shape()[1],
        x.shape()[2],
        x.shape()[3],
    );
    let (cout, _, k, _) = (
        w.shape()[0],
        w.shape()[1],
        w.shape()[2],
        w.shape()[3],
    );
    let ho = h + 2 * pad - k + 1;
    let wo = wd + 2 * pad - k + 1;
    let mut y = TensorData::zeros(vec![n, cout, ho, wo]);
    for s in 0..n {
        for co in 0..cout {
            for oh in 0..ho {
                for ow in 0..wo {
                    let mut acc = bias.map_or(0.0, |b| b.data()[co]);
                    for ci in 0..cin {
                        for ki in 0..k {
                            for kj in 0..k {
                                let ih = oh + ki;
                                let iw = ow + kj;
                                if ih < pad || iw < pad {
                                    continue;
                                }
                                let (ih, iw) = (ih - pad, iw - pad);
                                if ih >= h || iw >= wd {
                                    continue;
                                }
                                acc += x.at(&[s, ci, ih, iw]) * w.at(&[co, ci, ki, kj]);
                            }
                        }
                    }
                    let off = y.offset(&[s, co, oh, ow]);
                    y.data_mut()[off] = acc;
                }
            }
        }
    }
    y
}

/// Two-pass minibatch standard deviation oracle: explicit mean, explicit
/// deviations, population variance, grand average.
pub fn minibatch_std_oracle(x: &TensorData<f64>, eps: f64) -> f64 {
    let (n, c, h, w) = (
        x.shape()[0],
        x.shape()[1],
        x.shape()[2],
        x.shape()[3],
    );
    let mut total = 0.0;
    for ci in 0..c {
        for hi in 0..h {
            for wi in 0..w {
                let mut mean = 0.0;
                for s in 0..n {
                    mean += x.at(&[s, ci, hi, wi]);
                }
                mean /= n as f64;
                let mut var = 0.0;
                for s in 0..n {
                    let d = x.at(&[s, ci, hi, wi]) - mean;
                    var += d * d;
                }
                var /= n as f64;
                total += (var + eps).sqrt();
            }
        }
    }
    total / (c * h * w) as f64
}
