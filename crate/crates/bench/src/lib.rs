//! Shared fixtures for the benchmark targets.

use msgan_core::data::{generate_synthetic, normalize, MultiResSample, SyntheticSpec};
use msgan_core::model::{ModelConfig, Variant};
use msgan_core::train::TrainConfig;

/// The toy-scale configuration used by the stability checks: rgb, top 16,
/// one eighth width.
pub fn toy_model() -> ModelConfig {
    ModelConfig::new(Variant::Rgb, 16).with_width(0.125)
}

pub fn toy_train(seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 4,
        seed,
        ..TrainConfig::default()
    }
}

pub fn toy_samples(n: usize) -> Vec<MultiResSample<f32>> {
    let spec = SyntheticSpec::default_with_seed(17);
    generate_synthetic(&spec, n, 16)
        .unwrap()
        .tiles
        .iter()
        .map(|t| normalize(t).unwrap())
        .collect()
}
