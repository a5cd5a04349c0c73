//! Acceptance suite. Each test pins one release criterion at its stated
//! tolerance and prints one pass/fail line (visible with `--nocapture`).

mod support;

use std::process::Command;

use support::{
    conv2d_oracle, max_grad_error, minibatch_std_oracle, nudge_from_zero, nudge_pool_windows,
    rel_error, rel_error_joint,
};

use msgan_core::data::{
    denormalize, generate_synthetic, normalize, read_tile_from, write_tile_to,
    MultiResSample, SyntheticSpec,
};
use msgan_core::layers::{self, MinibatchStdContext, LRELU_SLOPE, MBSTD_EPS, PIXEL_NORM_EPS};
use msgan_core::model::{
    build_discriminator, build_generator, parameter_count, plan, shape_audit, BandGroup,
    ModelConfig, ScaleImageSet, ScaleKey, Variant,
};
use msgan_core::tensor::{finite_diff_grad, RngStream, Tape, TensorData, Var};
use msgan_core::train::{
    d_loss, g_loss, gradient_penalty, leaf_images, train_loop, TrainConfig, Trainer,
};
use msgan_core::TensorError;

fn verdict(n: usize, ok: bool, detail: &str) {
    println!(
        "[criterion {n}] {} - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

fn msgan_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msgan"))
}

// -------------------------------------------------------------------------
// 1. Shape conformance: the rgb/256/width-1 audit matches every published
//    row exactly (m = 3), and the ten-band configuration reproduces the
//    (...+m) channel arithmetic with m = 10.
// -------------------------------------------------------------------------
#[test]
fn criterion_01_shape_conformance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("rgb256.json");
    std::fs::write(
        &cfg_path,
        r#"{ "model": { "variant": "rgb", "top_resolution": 256 } }"#,
    )
    .unwrap();
    let status = msgan_bin()
        .args(["shapes", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    let rgb_ok = status.status.code() == Some(0);

    let ten = ModelConfig::new(Variant::TenbandInterp, 256);
    let audit = shape_audit(&ten).unwrap();
    let ten_ok = audit.all_match();
    let concats: Vec<(usize, usize, usize)> = audit
        .discriminator
        .iter()
        .filter(|r| r.expected.operation == "Concat")
        .map(|r| r.expected.shape)
        .collect();
    let m_ok = concats
        == vec![
            (128 + 10, 128, 128),
            (256 + 10, 64, 64),
            (512 + 10, 32, 32),
            (512 + 10, 16, 16),
            (512 + 10, 8, 8),
            (512 + 10, 4, 4),
        ];

    verdict(
        1,
        rgb_ok && ten_ok && m_ok,
        &format!("cmd_shapes exit {:?} on rgb/256; ten-band audit match {ten_ok}, concat arithmetic {m_ok}", status.status.code()),
    );
}

// -------------------------------------------------------------------------
// 2. Layer oracles: minibatch std within 1e-6 of the two-pass oracle and
//    pixel-norm per-pixel RMS within 1e-5 of 1, over 100 random shapes each.
// -------------------------------------------------------------------------
#[test]
fn criterion_02_layer_oracles() {
    let mut stream = RngStream::new(2).substream("acc-oracles");
    let mut worst_std = 0.0f64;
    let mut worst_rms = 0.0f64;
    for _ in 0..100 {
        let n = 2 + (stream.uniform01() * 4.0) as usize;
        let c = 1 + (stream.uniform01() * 6.0) as usize;
        let h = 1 + (stream.uniform01() * 5.0) as usize;
        let w = 1 + (stream.uniform01() * 5.0) as usize;
        let x = stream.normal_tensor::<f64>(vec![n, c, h, w]);
        let expect = minibatch_std_oracle(&x, MBSTD_EPS);
        let mut tape = Tape::<f64>::new();
        let xv = tape.leaf(x, false).unwrap();
        let y = layers::minibatch_std(&mut tape, xv, MinibatchStdContext::default()).unwrap();
        let got = tape.value(y).at(&[0, c, 0, 0]);
        worst_std = worst_std.max((got - expect).abs());
    }
    for _ in 0..100 {
        let n = 1 + (stream.uniform01() * 3.0) as usize;
        let c = 1 + (stream.uniform01() * 8.0) as usize;
        let h = 1 + (stream.uniform01() * 6.0) as usize;
        let w = 1 + (stream.uniform01() * 6.0) as usize;
        let x = nudge_from_zero(&stream.normal_tensor(vec![n, c, h, w]), 0.3);
        let mut tape = Tape::<f64>::new();
        let xv = tape.leaf(x, false).unwrap();
        let y = layers::pixel_norm(&mut tape, xv, PIXEL_NORM_EPS).unwrap();
        let v = tape.value(y);
        for s in 0..n {
            for hi in 0..h {
                for wi in 0..w {
                    let ms: f64 = (0..c).map(|ci| v.at(&[s, ci, hi, wi]).powi(2)).sum::<f64>()
                        / c as f64;
                    worst_rms = worst_rms.max((ms - 1.0).abs());
                }
            }
        }
    }
    verdict(
        2,
        worst_std < 1e-6 && worst_rms < 1e-5,
        &format!("minibatch-std max deviation {worst_std:.2e} (tol 1e-6); pixel-norm RMS max deviation {worst_rms:.2e} (tol 1e-5)"),
    );
}

// -------------------------------------------------------------------------
// 3. Gradient checks: every differentiable primitive and composite layer
//    against central finite differences, double precision, rel < 1e-4,
//    >= 20 random instances each.
// -------------------------------------------------------------------------
#[test]
fn criterion_03_gradient_checks() {
    const N: usize = 20;
    let mut checks: Vec<(&str, f64)> = Vec::new();

    checks.push((
        "elementwise",
        max_grad_error(
            "acc-elem",
            30,
            N,
            |s| vec![s.normal_tensor(vec![2, 3, 4]), s.normal_tensor(vec![2, 3, 4])],
            |t, v| {
                let a = t.add(v[0], v[1])?;
                let b = t.sub(a, v[1])?;
                let c = t.mul(b, v[0])?;
                let d = t.scale(c, -1.3);
                Ok(t.add_scalar(d, 0.2))
            },
        ),
    ));
    checks.push((
        "recip/sqrt",
        max_grad_error(
            "acc-rs",
            31,
            N,
            |s| vec![s.normal_tensor::<f64>(vec![3, 3]).map(|v| v.abs() + 0.5)],
            |t, v| {
                let r = t.recip(v[0]);
                Ok(t.sqrt(r))
            },
        ),
    ));
    checks.push((
        "leaky_relu",
        max_grad_error(
            "acc-lrelu",
            32,
            N,
            |s| vec![nudge_from_zero(&s.normal_tensor(vec![2, 4, 3]), 0.1)],
            |t, v| t.leaky_relu(v[0], LRELU_SLOPE),
        ),
    ));
    checks.push((
        "conv2d k3",
        max_grad_error(
            "acc-c3",
            33,
            N,
            |s| {
                vec![
                    s.normal_tensor(vec![2, 3, 5, 5]),
                    s.normal_tensor(vec![4, 3, 3, 3]),
                    s.normal_tensor(vec![4]),
                ]
            },
            |t, v| t.conv2d(v[0], v[1], Some(v[2]), 1),
        ),
    ));
    checks.push((
        "conv2d k1",
        max_grad_error(
            "acc-c1",
            34,
            N,
            |s| {
                vec![
                    s.normal_tensor(vec![2, 4, 3, 3]),
                    s.normal_tensor(vec![2, 4, 1, 1]),
                ]
            },
            |t, v| t.conv2d(v[0], v[1], None, 0),
        ),
    ));
    checks.push((
        "conv2d k4",
        max_grad_error(
            "acc-c4",
            35,
            N,
            |s| {
                vec![
                    s.normal_tensor(vec![2, 2, 4, 4]),
                    s.normal_tensor(vec![3, 2, 4, 4]),
                    s.normal_tensor(vec![3]),
                ]
            },
            |t, v| t.conv2d(v[0], v[1], Some(v[2]), 0),
        ),
    ));
    checks.push((
        "dense",
        max_grad_error(
            "acc-dense",
            36,
            N,
            |s| {
                vec![
                    s.normal_tensor(vec![3, 6]),
                    s.normal_tensor(vec![2, 6]),
                    s.normal_tensor(vec![2]),
                ]
            },
            |t, v| t.dense(v[0], v[1], Some(v[2])),
        ),
    ));
    checks.push((
        "upsample",
        max_grad_error(
            "acc-up",
            37,
            N,
            |s| vec![s.normal_tensor(vec![2, 2, 3, 3])],
            |t, v| t.upsample_nearest2x(v[0]),
        ),
    ));
    checks.push((
        "sum/avg pools",
        max_grad_error(
            "acc-pools",
            38,
            N,
            |s| vec![s.normal_tensor(vec![2, 2, 4, 4])],
            |t, v| {
                let a = t.sum_pool2x(v[0])?;
                t.avg_pool2x(a)
            },
        ),
    ));
    checks.push((
        "max_pool",
        max_grad_error(
            "acc-maxpool",
            39,
            N,
            |s| vec![nudge_pool_windows(&s.normal_tensor(vec![2, 2, 4, 4]))],
            |t, v| t.max_pool2x(v[0]),
        ),
    ));
    checks.push((
        "concat/slice/reshape",
        max_grad_error(
            "acc-concat",
            40,
            N,
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
        ),
    ));
    checks.push((
        "channel broadcasts",
        max_grad_error(
            "acc-chan",
            41,
            N,
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
        ),
    ));
    checks.push((
        "batch/sample reductions",
        max_grad_error(
            "acc-batch",
            42,
            N,
            |s| vec![s.normal_tensor(vec![3, 2, 2])],
            |t, v| {
                let bm = t.batch_mean(v[0])?;
                let bb = t.batch_bcast(bm, 3)?;
                let ss = t.sample_sum(bb)?;
                let sb = t.sample_bcast(ss, vec![3, 2, 2])?;
                let m = t.mean_all(sb);
                t.fill_bcast(m, vec![2, 2])
            },
        ),
    ));
    checks.push((
        "eq_conv2d",
        max_grad_error(
            "acc-eqc",
            43,
            N,
            |s| {
                vec![
                    s.normal_tensor(vec![2, 3, 4, 4]),
                    s.normal_tensor(vec![4, 3, 3, 3]),
                    s.normal_tensor(vec![4]),
                ]
            },
            |t, v| layers::eq_conv2d(t, v[0], v[1], v[2], 27, 1),
        ),
    ));
    checks.push((
        "eq_dense",
        max_grad_error(
            "acc-eqd",
            44,
            N,
            |s| {
                vec![
                    s.normal_tensor(vec![2, 5]),
                    s.normal_tensor(vec![3, 5]),
                    s.normal_tensor(vec![3]),
                ]
            },
            |t, v| layers::eq_dense(t, v[0], v[1], v[2], 5),
        ),
    ));
    checks.push((
        "pixel_norm",
        max_grad_error(
            "acc-pn",
            45,
            N,
            |s| vec![nudge_from_zero(&s.normal_tensor(vec![2, 4, 3, 3]), 0.2)],
            |t, v| layers::pixel_norm(t, v[0], PIXEL_NORM_EPS),
        ),
    ));
    checks.push((
        "minibatch_std",
        max_grad_error(
            "acc-ms",
            46,
            N,
            |s| vec![s.normal_tensor(vec![3, 2, 2, 2])],
            |t, v| layers::minibatch_std(t, v[0], MinibatchStdContext::default()),
        ),
    ));
    checks.push((
        "to/from image",
        max_grad_error(
            "acc-img",
            47,
            N,
            |s| {
                vec![
                    s.normal_tensor(vec![2, 4, 3, 3]),
                    s.normal_tensor(vec![3, 4, 1, 1]),
                    s.normal_tensor(vec![3]),
                    s.normal_tensor(vec![5, 3, 1, 1]),
                    s.normal_tensor(vec![5]),
                ]
            },
            |t, v| {
                let img = layers::to_image(t, v[0], v[1], v[2], 4)?;
                layers::from_image(t, img, v[3], v[4], 3)
            },
        ),
    ));
    checks.push((
        "two-layer conv net",
        max_grad_error(
            "acc-net",
            48,
            N,
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
                t.max_pool2x(a2)
            },
        ),
    ));

    let worst = checks.iter().fold(0.0f64, |m, (_, e)| m.max(*e));
    let all_ok = worst < 1e-4;
    let detail: Vec<String> = checks.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    verdict(
        3,
        all_ok,
        &format!("max rel error {worst:.2e} (tol 1e-4) across {}: {}", checks.len(), detail.join(", ")),
    );
}

// -------------------------------------------------------------------------
// 4. Second-order gradient penalty: d(lambda*GP)/dtheta vs finite
//    differences on a <= 500-parameter toy discriminator, rel < 1e-3.
// -------------------------------------------------------------------------
#[test]
fn criterion_04_gp_second_order() {
    let config = ModelConfig::new(Variant::Rgb, 8).with_width(1.0 / 256.0);
    let mut init = RngStream::new(4).substream("acc-gp-init");
    let disc = build_discriminator::<f64>(&config, &mut init).unwrap();
    let param_total = disc.parameter_count();

    let mut data_stream = RngStream::new(4).substream("acc-gp-data");
    let mut real = ScaleImageSet::new();
    let mut fake = ScaleImageSet::new();
    for key in config.image_plan() {
        let shape = vec![2, 3, key.resolution, key.resolution];
        real.insert(key, data_stream.normal_tensor::<f64>(shape.clone()).map(|v| 0.4 * v));
        fake.insert(key, data_stream.normal_tensor::<f64>(shape).map(|v| 0.4 * v));
    }
    let params0: Vec<TensorData<f64>> = disc.store.iter().map(|e| e.data.clone()).collect();
    let eval = |params: &[TensorData<f64>], with_grad: bool| -> (f64, Vec<TensorData<f64>>) {
        let mut tape = Tape::<f64>::new();
        let pv: Vec<Var> = params
            .iter()
            .map(|p| tape.leaf(p.clone(), true).unwrap())
            .collect();
        let mut eps = RngStream::new(4).substream("acc-gp-eps");
        let out = gradient_penalty(&mut tape, &disc, &pv, &real, &fake, &mut eps, 0).unwrap();
        let weighted = tape.scale(out.gp, 10.0);
        if !with_grad {
            return (tape.item(weighted).unwrap(), Vec::new());
        }
        let back = tape.backward(weighted, &pv).unwrap();
        (
            tape.item(weighted).unwrap(),
            back.grads.iter().map(|g| tape.value(*g).clone()).collect(),
        )
    };
    let (value, analytic) = eval(&params0, true);
    let mut fds = Vec::new();
    for (k, p) in params0.iter().enumerate() {
        fds.push(
            finite_diff_grad(
                |probe: &TensorData<f64>| -> Result<f64, TensorError> {
                    let mut trial = params0.clone();
                    trial[k] = probe.clone();
                    Ok(eval(&trial, false).0)
                },
                p,
                1e-5,
            )
            .unwrap(),
        );
    }
    let err = rel_error_joint(&analytic, &fds);
    verdict(
        4,
        param_total <= 500 && value.is_finite() && err < 1e-3,
        &format!("{param_total} parameters, lambda*GP {value:.3}, rel error {err:.2e} (tol 1e-3)"),
    );
}

// -------------------------------------------------------------------------
// 5. Loss algebra: d_loss and g_loss reproduce the critic-loss identities
//    term by term within 1e-6 for frozen networks and pinned epsilon.
// -------------------------------------------------------------------------
#[test]
fn criterion_05_loss_algebra() {
    let config = ModelConfig::new(Variant::Rgb, 8).with_width(1.0 / 64.0);
    let mut init = RngStream::new(5).substream("acc-loss-init");
    let disc = build_discriminator::<f64>(&config, &mut init).unwrap();
    let mut data = RngStream::new(5).substream("acc-loss-data");
    let mut real = ScaleImageSet::new();
    let mut fake = ScaleImageSet::new();
    for key in config.image_plan() {
        let shape = vec![3, 3, key.resolution, key.resolution];
        real.insert(key, data.normal_tensor::<f64>(shape.clone()).map(|v| 0.3 * v));
        fake.insert(key, data.normal_tensor::<f64>(shape).map(|v| 0.3 * v));
    }
    let lambda = 10.0;

    let mut tape = Tape::<f64>::new();
    let params = disc.store.bind(&mut tape, true).unwrap();
    let mut eps = RngStream::new(5).substream("acc-loss-eps");
    let combined = d_loss(&mut tape, &disc, &params, &real, &fake, &mut eps, lambda, 0).unwrap();
    let d_value = tape.item(combined.loss).unwrap();

    let term = |images: &ScaleImageSet<f64>| -> f64 {
        let mut t = Tape::<f64>::new();
        let p = disc.store.bind(&mut t, false).unwrap();
        let vars = leaf_images(&mut t, images, false).unwrap();
        let scores = disc.forward(&mut t, &p, &vars).unwrap();
        let mean = t.mean_all(scores);
        t.item(mean).unwrap()
    };
    let mean_fake = term(&fake);
    let mean_real = term(&real);
    let gp = {
        let mut t = Tape::<f64>::new();
        let p = disc.store.bind(&mut t, true).unwrap();
        let mut eps = RngStream::new(5).substream("acc-loss-eps");
        let out = gradient_penalty(&mut t, &disc, &p, &real, &fake, &mut eps, 0).unwrap();
        t.item(out.gp).unwrap()
    };
    let d_err = (d_value - (mean_fake - mean_real + lambda * gp)).abs();

    let g_value = {
        let mut t = Tape::<f64>::new();
        let p = disc.store.bind(&mut t, false).unwrap();
        let vars = leaf_images(&mut t, &fake, false).unwrap();
        let gl = g_loss(&mut t, &disc, &p, &vars).unwrap();
        t.item(gl).unwrap()
    };
    let g_err = (g_value + mean_fake).abs();

    verdict(
        5,
        d_err < 1e-6 && g_err < 1e-6,
        &format!("d_loss decomposition error {d_err:.2e}, g_loss negation error {g_err:.2e} (tol 1e-6)"),
    );
}

// -------------------------------------------------------------------------
// 6. Toy training stability: rgb, top 16, width 1/8, batch 4, lr 1e-3,
//    lambda 10, 500 steps on synthetic data. All losses finite, median
//    interpolate gradient norm over the last 100 steps in [0.5, 1.5], and
//    the whole run bit-reproducible per seed.
// -------------------------------------------------------------------------
#[test]
fn criterion_06_toy_training_stability() {
    let model = ModelConfig::new(Variant::Rgb, 16).with_width(0.125);
    let train = TrainConfig {
        batch_size: 4,
        learning_rate: 1e-3,
        lambda_gp: 10.0,
        seed: 6,
        ..TrainConfig::default()
    };
    let spec = SyntheticSpec::default_with_seed(66);
    let tiles = generate_synthetic(&spec, 24, 16).unwrap();
    let samples: Vec<MultiResSample<f32>> =
        tiles.tiles.iter().map(|t| normalize(t).unwrap()).collect();

    let run = || {
        let mut trainer = Trainer::<f32>::new(model.clone(), train.clone()).unwrap();
        let mut metrics = Vec::new();
        train_loop(&mut trainer, &samples, 500, |m| metrics.push(m.clone())).unwrap();
        (trainer, metrics)
    };
    let (trainer_a, metrics_a) = run();
    let (trainer_b, metrics_b) = run();

    let finite = metrics_a
        .iter()
        .all(|m| m.d_loss.is_finite() && m.g_loss.is_finite() && m.gp.is_finite());
    let mut last: Vec<f64> = metrics_a[400..].iter().map(|m| m.grad_norm_median).collect();
    last.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = 0.5 * (last[49] + last[50]);
    let in_band = (0.5..=1.5).contains(&median);

    let reproducible = metrics_a
        .iter()
        .zip(&metrics_b)
        .all(|(a, b)| {
            a.d_loss.to_bits() == b.d_loss.to_bits()
                && a.g_loss.to_bits() == b.g_loss.to_bits()
                && a.gp.to_bits() == b.gp.to_bits()
                && a.grad_norm_median.to_bits() == b.grad_norm_median.to_bits()
        })
        && trainer_a
            .generator
            .store
            .iter()
            .zip(trainer_b.generator.store.iter())
            .all(|(x, y)| x.data == y.data)
        && trainer_a
            .discriminator
            .store
            .iter()
            .zip(trainer_b.discriminator.store.iter())
            .all(|(x, y)| x.data == y.data);

    verdict(
        6,
        finite && in_band && reproducible,
        &format!("500 steps: losses finite {finite}; median interpolate grad norm (last 100) {median:.3} in [0.5, 1.5] {in_band}; bit-reproducible {reproducible}"),
    );
}

// -------------------------------------------------------------------------
// 7. Multi-resolution variant round-trips at toy scale: generator output
//    feeds the discriminator without shape errors and one train step
//    completes; the hybrid variant carries exactly 4 channels on top and
//    10 below.
// -------------------------------------------------------------------------
#[test]
fn criterion_07_variant_round_trips() {
    let spec = SyntheticSpec::default_with_seed(77);
    let tiles = generate_synthetic(&spec, 8, 32).unwrap();
    let samples: Vec<MultiResSample<f32>> =
        tiles.tiles.iter().map(|t| normalize(t).unwrap()).collect();

    let mut all_ok = true;
    let mut notes = Vec::new();
    for variant in [
        Variant::TenbandInterp,
        Variant::TenbandGrouped,
        Variant::TenbandHybrid,
    ] {
        let model = ModelConfig::new(variant, 32)
            .with_width(1.0 / 16.0)
            .with_latent_dim(16);
        let train = TrainConfig {
            batch_size: 2,
            seed: 7,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::<f32>::new(model.clone(), train).unwrap();
        let refs: Vec<&MultiResSample<f32>> = samples.iter().take(2).collect();
        let step = trainer.train_step(&refs);
        let ok = step.is_ok();
        notes.push(format!("{} train_step {}", variant.label(), if ok { "ok" } else { "failed" }));
        all_ok &= ok;
    }

    // Hybrid channel structure.
    let hybrid = ModelConfig::new(Variant::TenbandHybrid, 32)
        .with_width(1.0 / 16.0)
        .with_latent_dim(16);
    let mut init = RngStream::new(7).substream("hybrid");
    let gen = build_generator::<f32>(&hybrid, &mut init).unwrap();
    let mut tape = Tape::<f32>::new();
    let params = gen.store.bind(&mut tape, false).unwrap();
    let mut ls = RngStream::new(7).substream("latent");
    let z = ls.normal_tensor::<f32>(vec![2, 16]);
    let zv = tape.leaf(z, false).unwrap();
    let images = gen.forward(&mut tape, &params, zv).unwrap();
    let top_c = tape.shape(images.get(ScaleKey::new(32, BandGroup::TenMeter)).unwrap())[1];
    let below_all = images
        .iter()
        .filter(|(k, _)| k.resolution < 32)
        .all(|(k, v)| k.group == BandGroup::AllBands && tape.shape(*v)[1] == 10);
    let hybrid_ok = top_c == 4 && below_all;
    notes.push(format!("hybrid top {top_c} channels, ten below {below_all}"));
    all_ok &= hybrid_ok;

    verdict(7, all_ok, &notes.join("; "));
}

// -------------------------------------------------------------------------
// 8. Reduced-footprint structure: half width lands the total parameter
//    ratio in (0.24, 0.30); conv thinning halves per-block convolutions
//    beyond the first block and restricts image scales to {4,16,64,256}.
// -------------------------------------------------------------------------
#[test]
fn criterion_08_reduced_footprint() {
    let full = ModelConfig::new(Variant::Rgb, 256);
    let half = ModelConfig::new(Variant::Rgb, 256).with_width(0.5);
    let ratio =
        parameter_count(&half).unwrap() as f64 / parameter_count(&full).unwrap() as f64;
    let ratio_ok = ratio > 0.24 && ratio < 0.30;

    let thin = ModelConfig::new(Variant::Rgb, 256).with_conv_thinning(true);
    let full_plan = plan::generator_plan(&full).unwrap();
    let thin_plan = plan::generator_plan(&thin).unwrap();
    let full_counts: Vec<usize> = full_plan.blocks.iter().map(|b| b.convs.len()).collect();
    let thin_counts: Vec<usize> = thin_plan.blocks.iter().map(|b| b.convs.len()).collect();
    let halved = full_counts[1..].iter().all(|&c| c == 2)
        && thin_counts.iter().all(|&c| c == 1);
    let scales: Vec<usize> = thin_plan.emissions.iter().map(|e| e.key().resolution).collect();
    let scales_ok = scales == vec![4, 16, 64, 256];

    let thin_disc = plan::discriminator_plan(&thin).unwrap();
    let disc_halved = thin_disc.branches[0]
        .blocks
        .iter()
        .all(|b| b.convs.len() == 1);

    verdict(
        8,
        ratio_ok && halved && scales_ok && disc_halved,
        &format!("parameter ratio {ratio:.4} in (0.24, 0.30) {ratio_ok}; generator convs/block {full_counts:?} -> {thin_counts:?}; thinned image scales {scales:?}; discriminator thinned {disc_halved}"),
    );
}

// -------------------------------------------------------------------------
// 9. Data pipeline: 1000 random tiles round-trip bit-exactly, the synthetic
//    correlation is recovered within 0.05 over 1000 samples, and
//    normalize/denormalize invert within 1e-3 reflectance units.
// -------------------------------------------------------------------------
#[test]
fn criterion_09_data_pipeline() {
    // Bit-exact round-trips.
    let mut stream = RngStream::new(9).substream("acc-tiles");
    let names = msgan_core::model::all_band_names();
    let mut roundtrip_ok = true;
    for _ in 0..1000 {
        let size = 2 * (1 + (stream.uniform01() * 4.0) as usize);
        let mut bands = Vec::new();
        for (j, name) in names.iter().enumerate() {
            let divisor = if j < 4 { 1u8 } else { 2u8 };
            let d = divisor as usize;
            let plane = TensorData::new(
                vec![size / d, size / d],
                (0..(size / d) * (size / d))
                    .map(|_| (stream.uniform01() * 10000.0) as f32)
                    .collect(),
            )
            .unwrap();
            bands.push(msgan_core::data::Band {
                name: (*name).into(),
                resolution_divisor: divisor,
                plane,
            });
        }
        let tile = msgan_core::data::Tile {
            width: size as u32,
            height: size as u32,
            bands,
        };
        let mut buf = Vec::new();
        write_tile_to(&mut buf, &tile).unwrap();
        let back = read_tile_from(&mut buf.as_slice()).unwrap();
        roundtrip_ok &= tile == back
            && tile.bands.iter().zip(&back.bands).all(|(a, b)| {
                a.plane
                    .data()
                    .iter()
                    .zip(b.plane.data())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
            });
    }

    // Correlation recovery over 1000 samples on the common 20m grid.
    let mut spec = SyntheticSpec::identity_with_seed(99);
    spec.correlation[2][3] = 0.8;
    spec.correlation[3][2] = 0.8;
    let ds = generate_synthetic(&spec, 1000, 16).unwrap();
    let samples: Vec<MultiResSample<f64>> =
        ds.tiles.iter().map(|t| normalize(t).unwrap()).collect();
    let box_down = |x: &TensorData<f64>| -> TensorData<f64> {
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let mut out = TensorData::zeros(vec![c, h / 2, w / 2]);
        for ci in 0..c {
            for i in 0..h / 2 {
                for j in 0..w / 2 {
                    let m = (x.at(&[ci, 2 * i, 2 * j])
                        + x.at(&[ci, 2 * i, 2 * j + 1])
                        + x.at(&[ci, 2 * i + 1, 2 * j])
                        + x.at(&[ci, 2 * i + 1, 2 * j + 1]))
                        / 4.0;
                    let off = out.offset(&[ci, i, j]);
                    out.data_mut()[off] = m;
                }
            }
        }
        out
    };
    let mut planes: Vec<Vec<f64>> = vec![Vec::new(); 10];
    for s in &samples {
        let down = box_down(&s.group_10m);
        let hw = down.shape()[1] * down.shape()[2];
        for c in 0..4 {
            planes[c].extend(down.data()[c * hw..(c + 1) * hw].iter());
        }
        let hw2 = s.group_20m.shape()[1] * s.group_20m.shape()[2];
        for c in 0..6 {
            planes[4 + c].extend(s.group_20m.data()[c * hw2..(c + 1) * hw2].iter());
        }
    }
    let n = planes[0].len() as f64;
    let means: Vec<f64> = planes.iter().map(|p| p.iter().sum::<f64>() / n).collect();
    let stds: Vec<f64> = planes
        .iter()
        .zip(&means)
        .map(|(p, m)| (p.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt())
        .collect();
    let mut corr_err = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let cov = planes[i]
                .iter()
                .zip(&planes[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / n;
            let corr = cov / (stds[i] * stds[j]);
            corr_err = corr_err.max((corr - spec.correlation[i][j]).abs());
        }
    }
    let corr_ok = corr_err < 0.05;

    // Normalize/denormalize inverse.
    let mut inverse_err = 0.0f32;
    for tile in ds.tiles.iter().take(50) {
        let sample: MultiResSample<f32> = normalize(tile).unwrap();
        let back = denormalize(&sample);
        for (a, b) in tile.bands.iter().zip(&back.bands) {
            for (x, y) in a.plane.data().iter().zip(b.plane.data()) {
                inverse_err = inverse_err.max((x - y).abs());
            }
        }
    }
    let inverse_ok = inverse_err < 1e-3;

    verdict(
        9,
        roundtrip_ok && corr_ok && inverse_ok,
        &format!("1000 tile round-trips bit-exact {roundtrip_ok}; correlation error {corr_err:.4} (tol 0.05); inverse error {inverse_err:.2e} (tol 1e-3)"),
    );
}

// -------------------------------------------------------------------------
// 10. Checkpoint resume: training resumed from a checkpoint matches the
//     uninterrupted run's parameters bit-exactly at the same step count.
// -------------------------------------------------------------------------
#[test]
fn criterion_10_checkpoint_resume() {
    let model = ModelConfig::new(Variant::Rgb, 8)
        .with_width(1.0 / 32.0)
        .with_latent_dim(16);
    let train = TrainConfig {
        batch_size: 2,
        seed: 10,
        ..TrainConfig::default()
    };
    let spec = SyntheticSpec::default_with_seed(1010);
    let tiles = generate_synthetic(&spec, 6, 8).unwrap();
    let samples: Vec<MultiResSample<f32>> =
        tiles.tiles.iter().map(|t| normalize(t).unwrap()).collect();

    let mut full = Trainer::<f32>::new(model.clone(), train.clone()).unwrap();
    train_loop(&mut full, &samples, 10, |_| {}).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.msgc");
    let mut half = Trainer::<f32>::new(model, train).unwrap();
    train_loop(&mut half, &samples, 5, |_| {}).unwrap();
    msgan_core::train::save_checkpoint(&path, &half.checkpoint()).unwrap();
    drop(half);
    let ckpt = msgan_core::train::load_checkpoint(&path).unwrap();
    let mut resumed = Trainer::<f32>::from_checkpoint(&ckpt).unwrap();
    train_loop(&mut resumed, &samples, 10, |_| {}).unwrap();

    let equal = full
        .generator
        .store
        .iter()
        .chain(full.discriminator.store.iter())
        .zip(
            resumed
                .generator
                .store
                .iter()
                .chain(resumed.discriminator.store.iter()),
        )
        .all(|(a, b)| a.data == b.data);
    verdict(
        10,
        equal,
        &format!("resumed parameters bit-identical to uninterrupted run at step 10: {equal}"),
    );
}

// -------------------------------------------------------------------------
// Interface checks backing the criteria: conv2d against its nested-loop
// oracle (the dual route behind criterion 3's primitives).
// -------------------------------------------------------------------------
#[test]
fn conv_oracle_agreement_double_and_single() {
    let mut stream = RngStream::new(11).substream("acc-conv-oracle");
    let mut worst64 = 0.0f64;
    for _ in 0..6 {
        let x = stream.normal_tensor::<f64>(vec![2, 8, 16, 16]);
        let w = stream.normal_tensor::<f64>(vec![4, 8, 3, 3]);
        let b = stream.normal_tensor::<f64>(vec![4]);
        let expect = conv2d_oracle(&x, &w, Some(&b), 1);
        let mut tape = Tape::<f64>::new();
        let xv = tape.leaf(x, false).unwrap();
        let wv = tape.leaf(w, false).unwrap();
        let bv = tape.leaf(b, false).unwrap();
        let y = tape.conv2d(xv, wv, Some(bv), 1).unwrap();
        worst64 = worst64.max(rel_error(tape.value(y), &expect));
    }
    assert!(worst64 < 1e-12, "double conv oracle error {worst64}");

    let x = stream.normal_tensor::<f64>(vec![2, 8, 16, 16]);
    let w = stream.normal_tensor::<f64>(vec![4, 8, 3, 3]);
    let expect = conv2d_oracle(&x, &w, None, 1);
    let mut tape = Tape::<f32>::new();
    let xv = tape.leaf(x.cast(), false).unwrap();
    let wv = tape.leaf(w.cast(), false).unwrap();
    let y = tape.conv2d(xv, wv, None, 1).unwrap();
    let got: TensorData<f64> = tape.value(y).cast();
    let err = rel_error(&got, &expect);
    assert!(err < 1e-5, "single conv oracle error {err}");
}
