//! Run configuration file: JSON with `model`, `train`, and `data` sections.
//! Unknown keys are rejected everywhere; silent hyperparameter typos are the
//! costliest failure mode here.

use std::path::PathBuf;

use serde::Deserialize;

use msgan_core::data::SyntheticSpec;
use msgan_core::model::ModelConfig;
use msgan_core::train::TrainConfig;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub data: Option<DataSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Directory of `*.mstl` tiles.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// In-memory synthetic dataset.
    #[serde(default)]
    pub synthetic: Option<SyntheticDataSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDataSection {
    pub count: usize,
    pub size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub smoothness: Option<usize>,
    #[serde(default)]
    pub correlation: Option<Vec<Vec<f64>>>,
}

impl SyntheticDataSection {
    pub fn to_spec(&self) -> SyntheticSpec {
        let mut spec = SyntheticSpec::default_with_seed(self.seed);
        if let Some(s) = self.smoothness {
            spec.smoothness = s;
        }
        if let Some(c) = &self.correlation {
            spec.correlation = c.clone();
        }
        spec
    }
}

pub fn load_run_config(path: &std::path::Path) -> anyhow::Result<RunConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    let cfg: RunConfigFile = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
    cfg.model
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid model config: {e}"))?;
    cfg.train
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid train config: {e}"))?;
    Ok(cfg)
}
