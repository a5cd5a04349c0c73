//! Multi-scale image sets: the values flowing between generator and
//! discriminator, keyed by (resolution, band group).

use super::config::ScaleKey;
use crate::error::ModelError;
use crate::tensor::{Real, TensorData, Var};

/// Concrete image pyramid (data side): batched `[N, C, res, res]` tensors.
#[derive(Debug, Clone)]
pub struct ScaleImageSet<T> {
    entries: Vec<(ScaleKey, TensorData<T>)>,
}

impl<T: Real> Default for ScaleImageSet<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ScaleImageSet<T> {
    pub fn new() -> Self {
        ScaleImageSet {
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, key: ScaleKey, data: TensorData<T>) {
        debug_assert!(self.get(key).is_none(), "duplicate image for {key:?}");
        self.entries.push((key, data));
    }

    pub fn get(&self, key: ScaleKey) -> Option<&TensorData<T>> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, d)| d)
    }

    pub fn require(&self, key: ScaleKey) -> Result<&TensorData<T>, ModelError> {
        self.get(key).ok_or_else(|| ModelError::ScaleMismatch {
            resolution: key.resolution,
            detail: format!("missing {} image at scale {}", key.group.label(), key.resolution),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ScaleKey, TensorData<T>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Tape-side image set: the same contract with recorded tensors.
#[derive(Debug, Clone)]
pub struct ImageVarSet {
    entries: Vec<(ScaleKey, Var)>,
}

impl Default for ImageVarSet {
    fn default() -> Self {
        Self::new()
    }
}

impl ImageVarSet {
    pub fn new() -> Self {
        ImageVarSet {
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, key: ScaleKey, var: Var) {
        debug_assert!(self.get(key).is_none(), "duplicate image for {key:?}");
        self.entries.push((key, var));
    }

    pub fn get(&self, key: ScaleKey) -> Option<Var> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn require(&self, key: ScaleKey) -> Result<Var, ModelError> {
        self.get(key).ok_or_else(|| ModelError::ScaleMismatch {
            resolution: key.resolution,
            detail: format!("missing {} image at scale {}", key.group.label(), key.resolution),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ScaleKey, Var)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
