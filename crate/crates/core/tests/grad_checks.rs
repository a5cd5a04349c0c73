//! Central finite-difference checks for every differentiable primitive and
//! composite layer, in double precision, on randomized instances.

mod common;

use common::{nudge_from_zero, nudge_pool_windows, rel_error};
use msgan_core::layers::{self, MinibatchStdContext, LRELU_SLOPE, PIXEL_NORM_EPS};
use msgan_core::tensor::{finite_diff_grad, RngStream, Tape, TensorData, Var};
use msgan_core::TensorError;

const TOL: f64 = 1e-4;
const FD_H: f64 = 1e-5;
const INSTANCES: usize = 20;

/// Check d(sum(f(inputs) * proj))/d(input_i) against central differences for
/// every input, over `INSTANCES` randomized draws.
fn check_grad<F>(name: &str, seed: u64, make_inputs: impl Fn(&mut RngStream) -> Vec<TensorData<f64>>, f: F)
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var, TensorError>,
{
    let mut stream = RngStream::new(seed).substream(name);
    for instance in 0..INSTANCES {
        let inputs = make_inputs(&mut stream);

        // Projection makes the scalar sensitive to every output element.
        let proj = {
            let mut probe = Tape::new();
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

        // Analytic gradients.
        let mut tape = Tape::new();
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
                    let mut t = Tape::new();
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
                FD_H,
            )
            .unwrap();
            let err = rel_error(&analytic, &fd);
            assert!(
                err < TOL,
                "{name} instance {instance} input {k}: rel error {err}"
            );
        }
    }
}

#[test]
fn grad_add_sub_mul_neg() {
    check_grad(
        "add",
        1,
        |s| vec![s.normal_tensor(vec![2, 3, 4]), s.normal_tensor(vec![2, 3, 4])],
        |t, v| {
            let a = t.add(v[0], v[1])?;
            let b = t.sub(a, v[1])?;
            let c = t.mul(b, v[0])?;
            Ok(t.neg(c))
        },
    );
}

#[test]
fn grad_scale_add_scalar() {
    check_grad(
        "scale",
        2,
        |s| vec![s.normal_tensor(vec![5, 2])],
        |t, v| {
            let a = t.scale(v[0], -1.7);
            Ok(t.add_scalar(a, 0.3))
        },
    );
}

#[test]
fn grad_recip_sqrt() {
    check_grad(
        "recip_sqrt",
        3,
        |s| vec![s.normal_tensor::<f64>(vec![3, 3]).map(|v| v.abs() + 0.5)],
        |t, v| {
            let r = t.recip(v[0]);
            let q = t.sqrt(r);
            Ok(q)
        },
    );
}

#[test]
fn grad_leaky_relu() {
    check_grad(
        "lrelu",
        4,
        |s| vec![nudge_from_zero(&s.normal_tensor(vec![2, 4, 3]), 0.1)],
        |t, v| t.leaky_relu(v[0], LRELU_SLOPE),
    );
}

#[test]
fn grad_conv2d_k3() {
    check_grad(
        "conv3",
        5,
        |s| {
            vec![
                s.normal_tensor(vec![2, 3, 5, 5]),
                s.normal_tensor(vec![4, 3, 3, 3]),
                s.normal_tensor(vec![4]),
            ]
        },
        |t, v| t.conv2d(v[0], v[1], Some(v[2]), 1),
    );
}

#[test]
fn grad_conv2d_k1_and_k4() {
    check_grad(
        "conv1",
        6,
        |s| {
            vec![
                s.normal_tensor(vec![2, 4, 3, 3]),
                s.normal_tensor(vec![2, 4, 1, 1]),
            ]
        },
        |t, v| t.conv2d(v[0], v[1], None, 0),
    );
    check_grad(
        "conv4",
        7,
        |s| {
            vec![
                s.normal_tensor(vec![2, 2, 4, 4]),
                s.normal_tensor(vec![3, 2, 4, 4]),
                s.normal_tensor(vec![3]),
            ]
        },
        |t, v| t.conv2d(v[0], v[1], Some(v[2]), 0),
    );
}

#[test]
fn grad_dense() {
    check_grad(
        "dense",
        8,
        |s| {
            vec![
                s.normal_tensor(vec![3, 6]),
                s.normal_tensor(vec![2, 6]),
                s.normal_tensor(vec![2]),
            ]
        },
        |t, v| t.dense(v[0], v[1], Some(v[2])),
    );
}

#[test]
fn grad_pools_and_upsample() {
    check_grad(
        "upsample",
        9,
        |s| vec![s.normal_tensor(vec![2, 2, 3, 3])],
        |t, v| t.upsample_nearest2x(v[0]),
    );
    check_grad(
        "sum_pool",
        10,
        |s| vec![s.normal_tensor(vec![2, 2, 4, 4])],
        |t, v| t.sum_pool2x(v[0]),
    );
    check_grad(
        "avg_pool",
        11,
        |s| vec![s.normal_tensor(vec![1, 3, 4, 4])],
        |t, v| t.avg_pool2x(v[0]),
    );
    check_grad(
        "max_pool",
        12,
        |s| vec![nudge_pool_windows(&s.normal_tensor(vec![2, 2, 4, 4]))],
        |t, v| t.max_pool2x(v[0]),
    );
}

#[test]
fn grad_concat_slice_reshape() {
    check_grad(
        "concat_slice",
        13,
        |s| {
            vec![
                s.normal_tensor(vec![2, 3, 2, 2]),
                s.normal_tensor(vec![2, 2, 2, 2]),
            ]
        },
        |t, v| {
            let c = t.concat_channels(v[0], v[1])?;
            let sl = t.slice_channels(c, 1, 3)?;
            t.reshape(sl, vec![2, 12])
        },
    );
}

#[test]
fn grad_channel_and_batch_reductions() {
    check_grad(
        "channel_ops",
        14,
        |s| {
            vec![
                s.normal_tensor(vec![2, 4, 3, 3]),
                s.normal_tensor(vec![2, 1, 3, 3]),
                s.normal_tensor(vec![4]),
            ]
        },
        |t, v| {
            let b = t.add_bias_c(v[0], v[2])?;
            let m = t.bcast_cmul(b, v[1])?;
            let cm = t.channel_mean(m)?;
            t.channel_bcast(cm, 4)
        },
    );
    check_grad(
        "batch_ops",
        15,
        |s| vec![s.normal_tensor(vec![3, 2, 2])],
        |t, v| {
            let bm = t.batch_mean(v[0])?;
            let bb = t.batch_bcast(bm, 3)?;
            let ss = t.sample_sum(bb)?;
            t.sample_bcast(ss, vec![3, 2, 2])
        },
    );
    check_grad(
        "fill",
        16,
        |s| vec![s.normal_tensor(vec![4, 2])],
        |t, v| {
            let m = t.mean_all(v[0]);
            t.fill_bcast(m, vec![2, 3])
        },
    );
}

#[test]
fn grad_eq_layers() {
    check_grad(
        "eq_conv",
        17,
        |s| {
            vec![
                s.normal_tensor(vec![2, 3, 4, 4]),
                s.normal_tensor(vec![4, 3, 3, 3]),
                s.normal_tensor(vec![4]),
            ]
        },
        |t, v| layers::eq_conv2d(t, v[0], v[1], v[2], 27, 1),
    );
    check_grad(
        "eq_dense",
        18,
        |s| {
            vec![
                s.normal_tensor(vec![2, 5]),
                s.normal_tensor(vec![3, 5]),
                s.normal_tensor(vec![3]),
            ]
        },
        |t, v| layers::eq_dense(t, v[0], v[1], v[2], 5),
    );
}

#[test]
fn grad_pixel_norm() {
    check_grad(
        "pixel_norm",
        19,
        |s| vec![nudge_from_zero(&s.normal_tensor(vec![2, 4, 3, 3]), 0.2)],
        |t, v| layers::pixel_norm(t, v[0], PIXEL_NORM_EPS),
    );
}

#[test]
fn grad_minibatch_std() {
    check_grad(
        "mbstd",
        20,
        |s| vec![s.normal_tensor(vec![3, 2, 2, 2])],
        |t, v| layers::minibatch_std(t, v[0], MinibatchStdContext::default()),
    );
}

#[test]
fn grad_to_from_image() {
    check_grad(
        "to_image",
        21,
        |s| {
            vec![
                s.normal_tensor(vec![2, 4, 3, 3]),
                s.normal_tensor(vec![3, 4, 1, 1]),
                s.normal_tensor(vec![3]),
            ]
        },
        |t, v| layers::to_image(t, v[0], v[1], v[2], 4),
    );
    check_grad(
        "from_image",
        22,
        |s| {
            vec![
                s.normal_tensor(vec![2, 3, 3, 3]),
                s.normal_tensor(vec![5, 3, 1, 1]),
                s.normal_tensor(vec![5]),
            ]
        },
        |t, v| layers::from_image(t, v[0], v[1], v[2], 3),
    );
}

/// Random two-layer conv net, matching the agreement example for the
/// finite-difference oracle.
#[test]
fn grad_two_layer_conv_net() {
    check_grad(
        "two_layer_net",
        23,
        |s| {
            vec![
                nudge_from_zero(&s.normal_tensor(vec![2, 2, 6, 6]), 0.05),
                s.normal_tensor(vec![3, 2, 3, 3]),
                s.normal_tensor(vec![3]),
                s.normal_tensor(vec![4, 3, 3, 3]),
                s.normal_tensor(vec![4]),
            ]
        },
        |t, v| {
            let y1 = t.conv2d(v[0], v[1], Some(v[2]), 1)?;
            let a1 = t.leaky_relu(y1, LRELU_SLOPE)?;
            let y2 = t.conv2d(a1, v[3], Some(v[4]), 1)?;
            let a2 = t.leaky_relu(y2, LRELU_SLOPE)?;
            let p = t.max_pool2x(a2)?;
            Ok(p)
        },
    );
}
