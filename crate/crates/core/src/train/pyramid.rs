//! Real-image pyramids: repeated 2x2 box averaging down to every scale the
//! discriminator expects, respecting the variant's band-group-per-scale rule.

use std::collections::HashMap;

use crate::data::sample::{stack, MultiResSample};
use crate::error::ModelError;
use crate::model::config::{BandGroup, ModelConfig};
use crate::model::ScaleImageSet;
use crate::tensor::{kernels, Real, TensorData};

/// Box-downsample chain: resolution -> batched tensor, from the native
/// resolution of `top` down to 4.
fn chain<T: Real>(mut level: TensorData<T>) -> HashMap<usize, TensorData<T>> {
    let mut out = HashMap::new();
    let mut res = level.shape()[level.rank() - 1];
    loop {
        out.insert(res, level.clone());
        if res <= 4 {
            break;
        }
        level = kernels::avg_pool2x(&level);
        res /= 2;
    }
    out
}

/// Assemble the discriminator's expected image set from a real batch.
pub fn build_pyramid<T: Real>(
    batch: &[&MultiResSample<T>],
    config: &ModelConfig,
) -> Result<ScaleImageSet<T>, ModelError> {
    config.validate()?;
    if batch.is_empty() {
        return Err(ModelError::UnsupportedConfig("empty batch".into()));
    }
    let native = batch[0].resolution();
    if batch.iter().any(|s| s.resolution() != native) {
        return Err(ModelError::UnsupportedConfig(
            "mixed sample resolutions in one batch".into(),
        ));
    }
    if native < config.top_resolution {
        return Err(ModelError::ScaleMismatch {
            resolution: config.top_resolution,
            detail: format!("sample resolution {native} below the configured top"),
        });
    }

    let ten: Vec<&TensorData<T>> = batch.iter().map(|s| &s.group_10m).collect();
    let ten_stack = stack(&ten);
    let twenty: Vec<&TensorData<T>> = batch.iter().map(|s| &s.group_20m).collect();
    let twenty_stack = stack(&twenty);

    let mut chains: HashMap<BandGroup, HashMap<usize, TensorData<T>>> = HashMap::new();
    let plan = config.image_plan();
    let groups: Vec<BandGroup> = {
        let mut g: Vec<BandGroup> = plan.iter().map(|k| k.group).collect();
        g.dedup();
        g.sort();
        g.dedup();
        g
    };
    for group in groups {
        let base = match group {
            BandGroup::Rgb => kernels::slice_c(&ten_stack, 0, 3),
            BandGroup::TenMeter => ten_stack.clone(),
            BandGroup::TwentyMeter => twenty_stack.clone(),
            BandGroup::AllBands => {
                let up = kernels::upsample_nearest2x(&twenty_stack);
                kernels::concat_c(&ten_stack, &up)
            }
        };
        chains.insert(group, chain(base));
    }

    let mut set = ScaleImageSet::new();
    for key in plan {
        let level = chains
            .get(&key.group)
            .and_then(|c| c.get(&key.resolution))
            .ok_or_else(|| ModelError::ScaleMismatch {
                resolution: key.resolution,
                detail: format!(
                    "{} pyramid has no level at {}",
                    key.group.label(),
                    key.resolution
                ),
            })?;
        set.insert(key, level.clone());
    }
    Ok(set)
}
