//! Self-contained helpers for the acceptance suite: independent brute-force
//! oracles and gradient-check harness. Nothing here calls the code paths it
//! verifies.

#![allow(dead_code)]

use msgan_core::tensor::{finite_diff_grad, Real, RngStream, Tape, TensorData, Var};
use msgan_core::TensorError;

pub fn rel_error<T: Real>(a: &TensorData<T>, b: &TensorData<T>) -> f64 {
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

pub fn rel_error_joint<T: Real>(a: &[TensorData<T>], b: &[TensorData<T>]) -> f64 {
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

pub fn nudge_from_zero(x: &TensorData<f64>, margin: f64) -> TensorData<f64> {
    x.map(|v| if v >= 0.0 { v + margin } else { v - margin })
}

/// Coarse grid plus distinct micro-offsets per 2x2 window position: a
/// guaranteed minimum gap inside every pooling window.
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

/// Max rel error of analytic vs central-difference gradients for a tape
/// program under a random projection, over `instances` random draws.
pub fn max_grad_error<F>(
    name: &str,
    seed: u64,
    instances: usize,
    make_inputs: impl Fn(&mut RngStream) -> Vec<TensorData<f64>>,
    f: F,
) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var, TensorError>,
{
    let mut stream = RngStream::new(seed).substream(name);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let inputs = make_inputs(&mut stream);
        let proj = {
            let mut probe = Tape::<f64>::new();
            let vars: Vec<Var> = inputs
                .iter()
                .map(|t| probe.leaf(t.clone(), false).unwrap())
                .collect();
            let out = f(&mut probe, &vars).expect("forward");
            stream.normal_tensor::<f64>(probe.shape(out).to_vec())
        };
        let scalar_of = |tape: &mut Tape<f64>, vars: &[Var]| -> Var {
            let out = f(tape, vars).expect("forward");
            let p = tape.constant(proj.clone());
            let prod = tape.mul(out, p).expect("projection");
            tape.sum_all(prod)
        };
        let mut tape = Tape::<f64>::new();
        let vars: Vec<Var> = inputs
            .iter()
            .map(|t| tape.leaf(t.clone(), true).unwrap())
            .collect();
        let s = scalar_of(&mut tape, &vars);
        let back = tape.backward(s, &vars).unwrap();
        for (k, input) in inputs.iter().enumerate() {
            let analytic = tape.value(back.grads[k]).clone();
            let fd = finite_diff_grad(
                |x: &TensorData<f64>| {
                    let mut t = Tape::<f64>::new();
                    let vars: Vec<Var> = inputs
                        .iter()
                        .enumerate()
                        .map(|(j, inp)| {
                            t.leaf(if j == k { x.clone() } else { inp.clone() }, false)
                                .unwrap()
                        })
                        .collect();
                    let s = scalar_of(&mut t, &vars);
                    t.item(s)
                },
                input,
                1e-5,
            )
            .unwrap();
            worst = worst.max(rel_error(&analytic, &fd));
        }
    }
    worst
}

/// Direct nested-loop cross-correlation oracle.
pub fn conv2d_oracle(
    x: &TensorData<f64>,
    w: &TensorData<f64>,
    bias: Option<&TensorData<f64>>,
    pad: usize,
) -> TensorData<f64> {
    let (n, cin, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (cout, _, k, _) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
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

/// Two-pass minibatch standard deviation oracle.
pub fn minibatch_std_oracle(x: &TensorData<f64>, eps: f64) -> f64 {
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
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
