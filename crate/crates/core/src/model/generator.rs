//! Generator: maps a latent batch to one image per scale (per band group
//! for the ten-band variants), every scale emitted through a 1x1 convolution.

use super::config::{ModelConfig, ScaleKey};
use super::images::ImageVarSet;
use super::params::{add_conv, add_dense, ConvDef, DenseDef, ParamStore};
use super::plan::{generator_plan, EmissionPlan};
use crate::error::ModelError;
use crate::layers::{self, LRELU_SLOPE, PIXEL_NORM_EPS};
use crate::tensor::{Real, RngStream, Tape, Var};

struct GenBlock {
    scale: usize,
    upsamples: usize,
    convs: Vec<ConvDef>,
}

struct EmissionDef {
    plan: EmissionPlan,
    conv: ConvDef,
}

pub struct Generator<T> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    latent_map: DenseDef,
    blocks: Vec<GenBlock>,
    emissions: Vec<EmissionDef>,
}

/// Materialize a generator from its plan, drawing N(0,1) weights from
/// `stream`.
pub fn build_generator<T: Real>(
    config: &ModelConfig,
    stream: &mut RngStream,
) -> Result<Generator<T>, ModelError> {
    let plan = generator_plan(config)?;
    let mut store = ParamStore::new();

    let first = &plan.blocks[0];
    let lm = first.latent_map.expect("first block carries the latent map");
    let latent_map = add_dense(
        &mut store,
        "g.latent_map",
        lm.out_w,
        lm.in_w,
        Some(lm.fan_in),
        stream,
    );

    let mut blocks = Vec::with_capacity(plan.blocks.len());
    for b in &plan.blocks {
        let convs = b
            .convs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                add_conv(
                    &mut store,
                    &format!("g.block{}.conv{}", b.scale, i + 1),
                    c.cout,
                    c.cin,
                    c.k,
                    c.pad,
                    stream,
                )
            })
            .collect();
        blocks.push(GenBlock {
            scale: b.scale,
            upsamples: b.upsamples,
            convs,
        });
    }

    let emissions = plan
        .emissions
        .iter()
        .map(|e| EmissionDef {
            plan: *e,
            conv: add_conv(
                &mut store,
                &format!("g.to_image{}x.{}", e.scale, e.group.label()),
                e.m,
                e.cin,
                1,
                0,
                stream,
            ),
        })
        .collect();

    Ok(Generator {
        config: config.clone(),
        store,
        latent_map,
        blocks,
        emissions,
    })
}

impl<T: Real> Generator<T> {
    pub fn parameter_count(&self) -> usize {
        self.store.parameter_count()
    }

    /// Run the generator over a bound parameter table. `latent` is `[N, L]`.
    /// Returns images in the order of [`ModelConfig::image_plan`].
    pub fn forward(
        &self,
        tape: &mut Tape<T>,
        params: &[Var],
        latent: Var,
    ) -> Result<ImageVarSet, ModelError> {
        debug_assert_eq!(params.len(), self.store.len());
        let slope = T::from_f64(LRELU_SLOPE);
        let shape = tape.shape(latent).to_vec();
        if shape.len() != 2 || shape[1] != self.config.latent_dim {
            return Err(ModelError::UnsupportedConfig(format!(
                "latent shape {shape:?} does not match [N, {}]",
                self.config.latent_dim
            )));
        }
        if !tape.value(latent).is_all_finite() {
            return Err(crate::error::TensorError::NonFinite {
                context: "latent batch".into(),
            }
            .into());
        }
        let n = shape[0];
        let l = self.config.latent_dim;

        // Pixel-normalize the latent, then the 4x4 map.
        let latent4 = tape.reshape(latent, vec![n, l, 1, 1])?;
        let normed = layers::pixel_norm(tape, latent4, PIXEL_NORM_EPS)?;
        let flat = tape.reshape(normed, vec![n, l])?;
        let mapped = layers::eq_dense(
            tape,
            flat,
            params[self.latent_map.weight.0],
            params[self.latent_map.bias.0],
            self.latent_map.fan_in,
        )?;
        let c4 = self.config.channels(4);
        let volume = tape.reshape(mapped, vec![n, c4, 4, 4])?;
        let mut x = tape.leaky_relu(volume, slope)?;

        let mut images = ImageVarSet::new();
        for block in &self.blocks {
            for _ in 0..block.upsamples {
                x = tape.upsample_nearest2x(x)?;
            }
            for conv in &block.convs {
                let y = layers::eq_conv2d(
                    tape,
                    x,
                    params[conv.weight.0],
                    params[conv.bias.0],
                    conv.fan_in,
                    conv.pad,
                )?;
                let act = tape.leaky_relu(y, slope)?;
                x = layers::pixel_norm(tape, act, PIXEL_NORM_EPS)?;
            }
            for emission in self.emissions.iter().filter(|e| e.plan.scale == block.scale) {
                let mut img = layers::to_image(
                    tape,
                    x,
                    params[emission.conv.weight.0],
                    params[emission.conv.bias.0],
                    emission.conv.fan_in,
                )?;
                if emission.plan.pooled {
                    img = tape.avg_pool2x(img)?;
                }
                images.insert(emission.plan.key(), img);
            }
        }

        // Deliver in contract order.
        let mut ordered = ImageVarSet::new();
        for key in self.config.image_plan() {
            ordered.insert(key, images.require(key)?);
        }
        Ok(ordered)
    }

    /// Expected output keys, identical to the discriminator's input contract.
    pub fn output_keys(&self) -> Vec<ScaleKey> {
        self.config.image_plan()
    }
}
