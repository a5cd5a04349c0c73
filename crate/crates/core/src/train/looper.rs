//! Alternating WGAN-GP training loop with deterministic batch order.

use std::time::Instant;

use crate::data::sample::MultiResSample;
use crate::data::dataset::epoch_batches;
use crate::error::TrainError;
use crate::model::{
    build_discriminator, build_generator, Discriminator, Generator, ModelConfig,
};
use crate::tensor::{Real, RngStream, Tape, TensorData};

use super::config::TrainConfig;
use super::loss::{d_loss, g_loss, read_images};
use super::pyramid::build_pyramid;
use super::rmsprop::RmsProp;

/// Per-step diagnostics. `wall_ms` is excluded from determinism contracts.
#[derive(Debug, Clone)]
pub struct StepMetrics {
    pub step: u64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub gp: f64,
    pub grad_norm_median: f64,
    pub wall_ms: f64,
}

impl StepMetrics {
    pub const CSV_HEADER: &'static str = "step,d_loss,g_loss,gp,grad_norm_median,wall_ms";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step, self.d_loss, self.g_loss, self.gp, self.grad_norm_median, self.wall_ms
        )
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite norms"));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Owns both networks, their optimizer states, and the run's RNG streams.
pub struct Trainer<T: Real> {
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub generator: Generator<T>,
    pub discriminator: Discriminator<T>,
    pub(crate) g_opt: RmsProp<T>,
    pub(crate) d_opt: RmsProp<T>,
    pub(crate) step: u64,
    pub(crate) last_g_loss: f64,
    pub(crate) latent_d: RngStream,
    pub(crate) latent_g: RngStream,
    pub(crate) eps_stream: RngStream,
}

impl<T: Real> Trainer<T> {
    pub fn new(model_config: ModelConfig, train_config: TrainConfig) -> Result<Self, TrainError> {
        model_config.validate()?;
        train_config.validate()?;
        let root = RngStream::new(train_config.seed);
        let mut g_init = root.substream("init/g");
        let mut d_init = root.substream("init/d");
        let generator = build_generator(&model_config, &mut g_init)?;
        let discriminator = build_discriminator(&model_config, &mut d_init)?;
        let g_opt = RmsProp::new(
            &generator.store,
            train_config.learning_rate,
            train_config.rmsprop_alpha,
            train_config.rmsprop_eps,
        );
        let d_opt = RmsProp::new(
            &discriminator.store,
            train_config.learning_rate,
            train_config.rmsprop_alpha,
            train_config.rmsprop_eps,
        );
        Ok(Trainer {
            latent_d: root.substream("d/latent"),
            latent_g: root.substream("g/latent"),
            eps_stream: root.substream("d/eps"),
            model_config,
            train_config,
            generator,
            discriminator,
            g_opt,
            d_opt,
            step: 0,
            last_g_loss: 0.0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Generate one fake image set off-tape (values only, no gradients).
    fn sample_fake(&mut self, n: usize, for_d: bool) -> Result<crate::model::ScaleImageSet<T>, TrainError> {
        let stream = if for_d {
            &mut self.latent_d
        } else {
            &mut self.latent_g
        };
        let z: TensorData<T> = stream.normal_tensor(vec![n, self.model_config.latent_dim]);
        let mut tape = Tape::new();
        let params = self.generator.store.bind(&mut tape, false)?;
        let zv = tape.leaf(z, false)?;
        let images = self.generator.forward(&mut tape, &params, zv)?;
        Ok(read_images(&tape, &images))
    }

    fn check_finite(&self, value: f64, what: &'static str) -> Result<f64, TrainError> {
        if !value.is_finite() {
            return Err(TrainError::NonFinite {
                what,
                step: self.step,
            });
        }
        Ok(value)
    }

    /// One discriminator update on the batch, then (every
    /// `d_steps_per_g_step`-th call) one generator update on a fresh latent
    /// batch.
    pub fn train_step(&mut self, batch: &[&MultiResSample<T>]) -> Result<StepMetrics, TrainError> {
        let start = Instant::now();
        let n = self.train_config.batch_size;
        if batch.len() != n {
            return Err(TrainError::BadConfig(format!(
                "batch of {} samples, configured batch_size {n}",
                batch.len()
            )));
        }
        let real = build_pyramid(batch, &self.model_config)?;

        // Discriminator update.
        let fake = self.sample_fake(n, true)?;
        let mut tape = Tape::new();
        let d_params = self.discriminator.store.bind(&mut tape, true)?;
        let out = d_loss(
            &mut tape,
            &self.discriminator,
            &d_params,
            &real,
            &fake,
            &mut self.eps_stream,
            self.train_config.lambda_gp,
            self.step,
        )?;
        let d_loss_value = self.check_finite(tape.item(out.loss)?.as_f64(), "discriminator loss")?;
        let gp_value = self.check_finite(tape.item(out.gp)?.as_f64(), "gradient penalty")?;
        let back = tape.backward(out.loss, &d_params)?;
        let grads: Vec<TensorData<T>> = back.grads.iter().map(|g| tape.value(*g).clone()).collect();
        drop(tape);
        if grads.iter().any(|g| !g.is_all_finite()) {
            return Err(TrainError::NonFinite {
                what: "discriminator gradient",
                step: self.step,
            });
        }
        self.d_opt.step(&mut self.discriminator.store, &grads)?;

        // Generator update on a fresh latent batch.
        if (self.step + 1) % self.train_config.d_steps_per_g_step as u64 == 0 {
            let z: TensorData<T> = self
                .latent_g
                .normal_tensor(vec![n, self.model_config.latent_dim]);
            let mut tape = Tape::new();
            let g_params = self.generator.store.bind(&mut tape, true)?;
            let d_params = self.discriminator.store.bind(&mut tape, false)?;
            let zv = tape.leaf(z, false)?;
            let images = self.generator.forward(&mut tape, &g_params, zv)?;
            let gl = g_loss(&mut tape, &self.discriminator, &d_params, &images)?;
            let g_loss_value = self.check_finite(tape.item(gl)?.as_f64(), "generator loss")?;
            let back = tape.backward(gl, &g_params)?;
            let grads: Vec<TensorData<T>> =
                back.grads.iter().map(|g| tape.value(*g).clone()).collect();
            drop(tape);
            if grads.iter().any(|g| !g.is_all_finite()) {
                return Err(TrainError::NonFinite {
                    what: "generator gradient",
                    step: self.step,
                });
            }
            self.g_opt.step(&mut self.generator.store, &grads)?;
            self.last_g_loss = g_loss_value;
        }

        let metrics = StepMetrics {
            step: self.step,
            d_loss: d_loss_value,
            g_loss: self.last_g_loss,
            gp: gp_value,
            grad_norm_median: median(&out.norms),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        self.step += 1;
        Ok(metrics)
    }
}

/// Whole batches per epoch (final partial batch dropped).
pub fn steps_per_epoch(sample_count: usize, batch_size: usize) -> u64 {
    (sample_count / batch_size) as u64
}

/// Drive a trainer over `samples` until `total_steps`, resuming from the
/// trainer's current step. Batch order per epoch is a pure function of
/// (seed, epoch), so resumed runs see the batches an uninterrupted run would.
pub fn train_loop<T: Real>(
    trainer: &mut Trainer<T>,
    samples: &[MultiResSample<T>],
    total_steps: u64,
    mut on_step: impl FnMut(&StepMetrics),
) -> Result<(), TrainError> {
    let batch_size = trainer.train_config.batch_size;
    let spe = steps_per_epoch(samples.len(), batch_size);
    if spe == 0 {
        return Err(TrainError::BadConfig(format!(
            "{} samples cannot fill one batch of {batch_size}",
            samples.len()
        )));
    }
    let shuffle_root = RngStream::new(trainer.train_config.seed);
    let mut cached_epoch = u64::MAX;
    let mut batches: Vec<Vec<usize>> = Vec::new();
    while trainer.step < total_steps {
        let epoch = trainer.step / spe;
        if epoch != cached_epoch {
            let mut stream = shuffle_root.substream(&format!("shuffle/{epoch}"));
            batches = epoch_batches(samples.len(), batch_size, &mut stream);
            cached_epoch = epoch;
        }
        let indices = &batches[(trainer.step % spe) as usize];
        let batch: Vec<&MultiResSample<T>> = indices.iter().map(|&i| &samples[i]).collect();
        let metrics = trainer.train_step(&batch)?;
        on_step(&metrics);
    }
    Ok(())
}
