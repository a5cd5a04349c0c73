//! Named parameter storage shared by both networks.
//!
//! Parameters live outside any tape as plain arrays. At the start of a step
//! they are bound onto a tape as leaves; the optimizer writes updates back
//! into the store between steps.

use crate::error::TensorError;
use crate::layers::EqLayerParams;
use crate::tensor::{Real, RngStream, Tape, TensorData, Var};

/// Index of a parameter within its [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone)]
pub struct ParamEntry<T> {
    pub name: String,
    pub data: TensorData<T>,
}

#[derive(Debug, Clone)]
pub struct ParamStore<T> {
    entries: Vec<ParamEntry<T>>,
}

impl<T: Real> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, data: TensorData<T>) -> ParamId {
        self.entries.push(ParamEntry {
            name: name.into(),
            data,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &TensorData<T> {
        &self.entries[id.0].data
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut TensorData<T> {
        &mut self.entries[id.0].data
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamEntry<T>> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ParamEntry<T>> {
        self.entries.iter_mut()
    }

    /// Total trainable element count.
    pub fn parameter_count(&self) -> usize {
        self.entries.iter().map(|e| e.data.numel()).sum()
    }

    /// Leaf every parameter onto `tape`, in id order.
    pub fn bind(&self, tape: &mut Tape<T>, requires_grad: bool) -> Result<Vec<Var>, TensorError> {
        self.entries
            .iter()
            .map(|e| tape.leaf(e.data.clone(), requires_grad))
            .collect()
    }
}

/// One equalized convolution layer: parameter ids plus the static shape info
/// needed to run and audit it.
#[derive(Debug, Clone)]
pub struct ConvDef {
    pub weight: ParamId,
    pub bias: ParamId,
    pub pad: usize,
    pub fan_in: usize,
}

/// One equalized dense layer.
#[derive(Debug, Clone)]
pub struct DenseDef {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_w: usize,
    pub fan_in: usize,
}

pub(crate) fn add_conv<T: Real>(
    store: &mut ParamStore<T>,
    name: &str,
    cout: usize,
    cin: usize,
    k: usize,
    pad: usize,
    stream: &mut RngStream,
) -> ConvDef {
    let params: EqLayerParams<T> = EqLayerParams::conv(cout, cin, k, stream);
    let weight = store.add(format!("{name}.weight"), params.raw_weight);
    let bias = store.add(format!("{name}.bias"), params.bias);
    ConvDef {
        weight,
        bias,
        pad,
        fan_in: cin * k * k,
    }
}

pub(crate) fn add_dense<T: Real>(
    store: &mut ParamStore<T>,
    name: &str,
    out_w: usize,
    in_w: usize,
    fan_in: Option<usize>,
    stream: &mut RngStream,
) -> DenseDef {
    let params: EqLayerParams<T> = EqLayerParams::dense(out_w, in_w, fan_in, stream);
    let weight = store.add(format!("{name}.weight"), params.raw_weight);
    let bias = store.add(format!("{name}.bias"), params.bias);
    DenseDef {
        weight,
        bias,
        in_w,
        fan_in: fan_in.unwrap_or(in_w),
    }
}
