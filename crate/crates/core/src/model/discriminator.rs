//! Discriminator: consumes the full multi-scale image set and emits one
//! unbounded critic value per sample. No output nonlinearity.

use super::config::{ModelConfig, ScaleKey};
use super::images::ImageVarSet;
use super::params::{add_conv, add_dense, ConvDef, DenseDef, ParamStore};
use super::plan::{discriminator_plan, AbsorbPlan};
use crate::error::ModelError;
use crate::layers::{self, LRELU_SLOPE, MinibatchStdContext};
use crate::tensor::{Real, RngStream, Tape, Var};

enum AbsorbDef {
    FromImage { conv: ConvDef, key: ScaleKey },
    Concat { keys: Vec<ScaleKey> },
}

struct DiscBlock {
    absorb: AbsorbDef,
    convs: Vec<ConvDef>,
    pools: usize,
}

pub struct Discriminator<T> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    branches: Vec<Vec<DiscBlock>>,
    trunk: Vec<DiscBlock>,
    head: DenseDef,
    mbstd: MinibatchStdContext,
}

/// Materialize a discriminator from its plan, drawing N(0,1) weights from
/// `stream`.
pub fn build_discriminator<T: Real>(
    config: &ModelConfig,
    stream: &mut RngStream,
) -> Result<Discriminator<T>, ModelError> {
    let plan = discriminator_plan(config)?;
    let mut store = ParamStore::new();

    let materialize = |blocks: &[super::plan::DiscBlockPlan],
                           label: &str,
                           store: &mut ParamStore<T>,
                           stream: &mut RngStream| {
        blocks
            .iter()
            .map(|b| {
                let absorb = match &b.absorb {
                    AbsorbPlan::FromImage { key, cout } => AbsorbDef::FromImage {
                        conv: add_conv(
                            store,
                            &format!("d.{label}.from_image{}x.{}", key.resolution, key.group.label()),
                            *cout,
                            key.group.channels(),
                            1,
                            0,
                            stream,
                        ),
                        key: *key,
                    },
                    AbsorbPlan::Concat { keys } => AbsorbDef::Concat { keys: keys.clone() },
                };
                let convs = b
                    .convs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        add_conv(
                            store,
                            &format!("d.{label}.block{}.conv{}", b.scale, i + 1),
                            c.cout,
                            c.cin,
                            c.k,
                            c.pad,
                            stream,
                        )
                    })
                    .collect();
                DiscBlock {
                    absorb,
                    convs,
                    pools: b.pools,
                }
            })
            .collect::<Vec<_>>()
    };

    let branches: Vec<Vec<DiscBlock>> = plan
        .branches
        .iter()
        .map(|br| materialize(&br.blocks, br.label, &mut store, stream))
        .collect();
    let trunk = materialize(&plan.trunk, "trunk", &mut store, stream);

    let head = add_dense(&mut store, "d.head", 1, plan.head_in, None, stream);

    Ok(Discriminator {
        config: config.clone(),
        store,
        branches,
        trunk,
        head,
        mbstd: MinibatchStdContext::default(),
    })
}

impl<T: Real> Discriminator<T> {
    pub fn parameter_count(&self) -> usize {
        self.store.parameter_count()
    }

    /// Validate an image set against the variant's contract, naming the
    /// offending scale on mismatch.
    fn validate_images(&self, tape: &Tape<T>, images: &ImageVarSet) -> Result<usize, ModelError> {
        let plan = self.config.image_plan();
        let mut batch = None;
        for key in &plan {
            let var = images.require(*key)?;
            let shape = tape.shape(var);
            let want_c = self.config.group_channels(key.group);
            let ok = shape.len() == 4 && shape[1] == want_c && shape[2] == key.resolution && shape[3] == key.resolution;
            if !ok {
                return Err(ModelError::ScaleMismatch {
                    resolution: key.resolution,
                    detail: format!(
                        "{} image has shape {shape:?}, expected [N, {want_c}, {res}, {res}]",
                        key.group.label(),
                        res = key.resolution
                    ),
                });
            }
            match batch {
                None => batch = Some(shape[0]),
                Some(n) if n != shape[0] => {
                    return Err(ModelError::ScaleMismatch {
                        resolution: key.resolution,
                        detail: format!("batch size {} differs from {}", shape[0], n),
                    });
                }
                _ => {}
            }
        }
        if images.len() != plan.len() {
            return Err(ModelError::ScaleMismatch {
                resolution: self.config.top_resolution,
                detail: format!("image set has {} entries, contract lists {}", images.len(), plan.len()),
            });
        }
        batch.ok_or_else(|| ModelError::UnsupportedConfig("empty image contract".into()))
    }

    fn forward_block(
        &self,
        tape: &mut Tape<T>,
        params: &[Var],
        block: &DiscBlock,
        features: Option<Var>,
        images: &ImageVarSet,
    ) -> Result<Var, ModelError> {
        let slope = T::from_f64(LRELU_SLOPE);
        let mut x = match &block.absorb {
            AbsorbDef::FromImage { conv, key } => {
                debug_assert!(features.is_none());
                let img = images.require(*key)?;
                layers::from_image(
                    tape,
                    img,
                    params[conv.weight.0],
                    params[conv.bias.0],
                    conv.fan_in,
                )?
            }
            AbsorbDef::Concat { keys } => {
                let mut x = features.expect("concat blocks receive features");
                for key in keys {
                    let img = images.require(*key)?;
                    x = tape.concat_channels(x, img)?;
                }
                x
            }
        };
        x = layers::minibatch_std(tape, x, self.mbstd)?;
        for conv in &block.convs {
            let y = layers::eq_conv2d(
                tape,
                x,
                params[conv.weight.0],
                params[conv.bias.0],
                conv.fan_in,
                conv.pad,
            )?;
            x = tape.leaky_relu(y, slope)?;
        }
        for _ in 0..block.pools {
            x = tape.max_pool2x(x)?;
        }
        Ok(x)
    }

    /// Critic scores `[N, 1]` for a full image set.
    pub fn forward(
        &self,
        tape: &mut Tape<T>,
        params: &[Var],
        images: &ImageVarSet,
    ) -> Result<Var, ModelError> {
        debug_assert_eq!(params.len(), self.store.len());
        let n = self.validate_images(tape, images)?;

        let mut branch_outputs = Vec::with_capacity(self.branches.len());
        for branch in &self.branches {
            let mut x = None;
            for block in branch {
                x = Some(self.forward_block(tape, params, block, x, images)?);
            }
            branch_outputs.push(x.expect("branch has at least one block"));
        }
        let mut x = branch_outputs[0];
        for &other in &branch_outputs[1..] {
            x = tape.concat_channels(x, other)?;
        }
        for block in &self.trunk {
            x = self.forward_block(tape, params, block, Some(x), images)?;
        }

        let flat = tape.reshape(x, vec![n, self.head.in_w])?;
        let score = layers::eq_dense(
            tape,
            flat,
            params[self.head.weight.0],
            params[self.head.bias.0],
            self.head.fan_in,
        )?;
        Ok(score)
    }
}
