//! The custom layer set: equalized-learning-rate parameterization, pixel-wise
//! feature normalization, the minibatch standard deviation channel, and the
//! 1x1 convolutions that emit and absorb per-scale images.

use crate::error::TensorError;
use crate::tensor::{Real, RngStream, Tape, TensorData, Var};

/// Leaky ReLU slope used throughout both networks.
pub const LRELU_SLOPE: f64 = 0.2;

/// Variance guard inside pixel normalization.
pub const PIXEL_NORM_EPS: f64 = 1e-8;

/// Variance guard inside the minibatch standard deviation layer.
pub const MBSTD_EPS: f64 = 1e-8;

/// He runtime scale `c = sqrt(2 / fan_in)`; weights are stored as N(0,1)
/// draws and multiplied by `c` on every forward pass so all layers share one
/// dynamic range.
pub fn he_scale(fan_in: usize) -> f64 {
    (2.0 / fan_in as f64).sqrt()
}

/// Parameters of one equalized-learning-rate layer: an N(0,1)-initialized
/// raw weight, a zero bias, and the fan-in that fixes the runtime scale.
#[derive(Debug, Clone)]
pub struct EqLayerParams<T> {
    pub raw_weight: TensorData<T>,
    pub bias: TensorData<T>,
    pub fan_in: usize,
}

impl<T: Real> EqLayerParams<T> {
    /// Convolution parameters `[Cout,Cin,k,k]` with `fan_in = Cin * k * k`.
    pub fn conv(cout: usize, cin: usize, k: usize, stream: &mut RngStream) -> Self {
        EqLayerParams {
            raw_weight: stream.normal_tensor(vec![cout, cin, k, k]),
            bias: TensorData::zeros(vec![cout]),
            fan_in: cin * k * k,
        }
    }

    /// Dense parameters `[O,F]`. `fan_in` defaults to the input width `F`;
    /// pass an override when the layer stands in for a convolution (the
    /// 4x4 map out of the latent uses its conv-equivalent fan-in).
    pub fn dense(out_w: usize, in_w: usize, fan_in: Option<usize>, stream: &mut RngStream) -> Self {
        EqLayerParams {
            raw_weight: stream.normal_tensor(vec![out_w, in_w]),
            bias: TensorData::zeros(vec![out_w]),
            fan_in: fan_in.unwrap_or(in_w),
        }
    }

    pub fn runtime_scale(&self) -> f64 {
        he_scale(self.fan_in)
    }

    pub fn parameter_count(&self) -> usize {
        self.raw_weight.numel() + self.bias.numel()
    }
}

/// Equalized convolution: `conv2d(x, raw_weight * c, bias)` with the scale
/// applied on-tape so gradients reach the raw weight through `c`.
pub fn eq_conv2d<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    raw_weight: Var,
    bias: Var,
    fan_in: usize,
    pad: usize,
) -> Result<Var, TensorError> {
    let c = T::from_f64(he_scale(fan_in));
    let w = tape.scale(raw_weight, c);
    tape.conv2d(x, w, Some(bias), pad)
}

/// Equalized dense layer; see [`eq_conv2d`].
pub fn eq_dense<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    raw_weight: Var,
    bias: Var,
    fan_in: usize,
) -> Result<Var, TensorError> {
    let c = T::from_f64(he_scale(fan_in));
    let w = tape.scale(raw_weight, c);
    tape.dense(x, w, Some(bias))
}

/// Normalize each spatial location's channel vector to unit RMS:
/// `x / sqrt(mean_c(x^2) + eps)`.
pub fn pixel_norm<T: Real>(tape: &mut Tape<T>, x: Var, eps: f64) -> Result<Var, TensorError> {
    let sq = tape.mul(x, x)?;
    let mean = tape.channel_mean(sq)?;
    let guarded = tape.add_scalar(mean, T::from_f64(eps));
    let rms = tape.sqrt(guarded);
    let inv = tape.recip(rms);
    tape.bcast_cmul(x, inv)
}

/// Minibatch standard deviation context.
#[derive(Debug, Clone, Copy)]
pub struct MinibatchStdContext {
    pub epsilon: f64,
}

impl Default for MinibatchStdContext {
    fn default() -> Self {
        MinibatchStdContext { epsilon: MBSTD_EPS }
    }
}

/// Append one constant channel holding the batch-averaged feature standard
/// deviation: population std per (c,h,w) over the batch, averaged over all
/// features and locations, replicated across every sample.
pub fn minibatch_std<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    ctx: MinibatchStdContext,
) -> Result<Var, TensorError> {
    let shape = tape.shape(x).to_vec();
    let n = shape[0];
    let mean = tape.batch_mean(x)?;
    let mean_b = tape.batch_bcast(mean, n)?;
    let dev = tape.sub(x, mean_b)?;
    let dev_sq = tape.mul(dev, dev)?;
    let var = tape.batch_mean(dev_sq)?;
    let guarded = tape.add_scalar(var, T::from_f64(ctx.epsilon));
    let std = tape.sqrt(guarded);
    let avg = tape.mean_all(std);
    let mut chan_shape = shape;
    chan_shape[1] = 1;
    let chan = tape.fill_bcast(avg, chan_shape)?;
    tape.concat_channels(x, chan)
}

/// Emit an m-channel image from an activation volume through an equalized
/// 1x1 convolution (linear, no activation).
pub fn to_image<T: Real>(
    tape: &mut Tape<T>,
    activations: Var,
    raw_weight: Var,
    bias: Var,
    fan_in: usize,
) -> Result<Var, TensorError> {
    eq_conv2d(tape, activations, raw_weight, bias, fan_in, 0)
}

/// Absorb an m-channel image into the trunk width through an equalized 1x1
/// convolution (linear, no activation).
pub fn from_image<T: Real>(
    tape: &mut Tape<T>,
    image: Var,
    raw_weight: Var,
    bias: Var,
    fan_in: usize,
) -> Result<Var, TensorError> {
    eq_conv2d(tape, image, raw_weight, bias, fan_in, 0)
}
