//! Reverse pass. Gradients are accumulated as new tape nodes, so any scalar
//! function of a gradient can itself be differentiated by calling
//! [`Tape::backward`] again.

use std::rc::Rc;

use super::tape::{Op, Tape, Var};
use super::{Real, TensorData};
use crate::error::TensorError;

/// Gradients returned by [`Tape::backward`], index-aligned with the `wrt`
/// argument. `detached[i]` flags a query against a tensor that does not
/// participate in gradient tracking (its gradient is zero by definition).
#[derive(Debug)]
pub struct BackwardOutput {
    pub grads: Vec<Var>,
    pub detached: Vec<bool>,
}

impl<T: Real> Tape<T> {
    /// Differentiate a scalar `output` with respect to each tensor in `wrt`.
    ///
    /// The walk is pruned to nodes that lie on a path from some `wrt` entry
    /// to `output`; everything else is skipped.
    pub fn backward(&mut self, output: Var, wrt: &[Var]) -> Result<BackwardOutput, TensorError> {
        if self.value(output).numel() != 1 {
            return Err(TensorError::NotScalar {
                op: "backward",
                shape: self.shape(output).to_vec(),
            });
        }
        let n = self.len();

        // Forward reachability from the differentiable wrt entries.
        let mut desc = vec![false; n];
        for v in wrt {
            if self.requires[v.0] {
                desc[v.0] = true;
            }
        }
        for i in 0..n {
            if !desc[i] && self.requires[i] {
                desc[i] = self.ops[i].inputs().iter().any(|p| desc[p.0]);
            }
        }

        // Reverse reachability from the output.
        let mut anc = vec![false; n];
        anc[output.0] = true;
        for i in (0..=output.0).rev() {
            if anc[i] {
                for p in self.ops[i].inputs() {
                    anc[p.0] = true;
                }
            }
        }

        let mut grads: Vec<Option<Var>> = vec![None; n];
        let one = self.constant(TensorData::filled(self.shape(output).to_vec(), T::one()));
        grads[output.0] = Some(one);

        for i in (0..=output.0).rev() {
            if !anc[i] || !desc[i] {
                continue;
            }
            let Some(g) = grads[i] else { continue };
            let op = self.ops[i].clone();
            self.vjp(Var(i), &op, g, &desc, &mut grads)?;
        }

        let mut out = BackwardOutput {
            grads: Vec::with_capacity(wrt.len()),
            detached: Vec::with_capacity(wrt.len()),
        };
        for v in wrt {
            let detached = !self.requires[v.0];
            let grad = match (detached, grads[v.0]) {
                (false, Some(g)) => g,
                _ => self.constant(TensorData::zeros(self.shape(*v).to_vec())),
            };
            out.grads.push(grad);
            out.detached.push(detached);
        }
        Ok(out)
    }

    fn accumulate(
        &mut self,
        grads: &mut [Option<Var>],
        target: Var,
        contrib: Var,
    ) -> Result<(), TensorError> {
        grads[target.0] = Some(match grads[target.0] {
            Some(existing) => self.add(existing, contrib)?,
            None => contrib,
        });
        Ok(())
    }

    /// Push this node's cotangent `g` into its inputs. Only inputs inside the
    /// `desc` set receive contributions.
    fn vjp(
        &mut self,
        node: Var,
        op: &Op<T>,
        g: Var,
        desc: &[bool],
        grads: &mut [Option<Var>],
    ) -> Result<(), TensorError> {
        let wanted = |v: Var| desc[v.0];
        match *op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                if wanted(a) {
                    self.accumulate(grads, a, g)?;
                }
                if wanted(b) {
                    self.accumulate(grads, b, g)?;
                }
            }
            Op::Sub(a, b) => {
                if wanted(a) {
                    self.accumulate(grads, a, g)?;
                }
                if wanted(b) {
                    let ng = self.neg(g);
                    self.accumulate(grads, b, ng)?;
                }
            }
            Op::Mul(a, b) => {
                if wanted(a) {
                    let c = self.mul(g, b)?;
                    self.accumulate(grads, a, c)?;
                }
                if wanted(b) {
                    let c = self.mul(g, a)?;
                    self.accumulate(grads, b, c)?;
                }
            }
            Op::Neg(a) => {
                if wanted(a) {
                    let c = self.neg(g);
                    self.accumulate(grads, a, c)?;
                }
            }
            Op::Scale(a, c) => {
                if wanted(a) {
                    let s = self.scale(g, c);
                    self.accumulate(grads, a, s)?;
                }
            }
            Op::AddScalar(a, _) => {
                if wanted(a) {
                    self.accumulate(grads, a, g)?;
                }
            }
            Op::Recip(a) => {
                // d(1/x) = -y^2 dx with y the recorded output.
                if wanted(a) {
                    let gy = self.mul(g, node)?;
                    let gyy = self.mul(gy, node)?;
                    let c = self.neg(gyy);
                    self.accumulate(grads, a, c)?;
                }
            }
            Op::Sqrt(a) => {
                // d(sqrt x) = g / (2 y) with y the recorded output.
                if wanted(a) {
                    let ry = self.recip(node);
                    let half = self.scale(ry, T::from_f64(0.5));
                    let c = self.mul(g, half)?;
                    self.accumulate(grads, a, c)?;
                }
            }
            Op::LeakyRelu { x, slope } => {
                if wanted(x) {
                    let c = self.leaky_relu_grad(g, x, slope);
                    self.accumulate(grads, x, c)?;
                }
            }
            // Piecewise-constant in x: only the g path carries gradient.
            Op::LeakyReluGrad { g: g0, x, slope } => {
                if wanted(g0) {
                    let c = self.leaky_relu_grad(g, x, slope);
                    self.accumulate(grads, g0, c)?;
                }
            }
            Op::Conv2d { x, w, pad } => {
                if wanted(x) {
                    let xs = self.shape(x);
                    let (h, wd) = (xs[2], xs[3]);
                    let c = self.conv_input_grad(g, w, pad, h, wd);
                    self.accumulate(grads, x, c)?;
                }
                if wanted(w) {
                    let k = self.shape(w)[2];
                    let c = self.conv_weight_grad(x, g, pad, k);
                    self.accumulate(grads, w, c)?;
                }
            }
            Op::ConvInputGrad { g: g0, w, pad, .. } => {
                if wanted(g0) {
                    let c = self.push(Op::Conv2d { x: g, w, pad });
                    self.accumulate(grads, g0, c)?;
                }
                if wanted(w) {
                    let k = self.shape(w)[2];
                    let c = self.conv_weight_grad(g, g0, pad, k);
                    self.accumulate(grads, w, c)?;
                }
            }
            Op::ConvWeightGrad { x, g: g0, pad, .. } => {
                if wanted(x) {
                    let xs = self.shape(x);
                    let (h, wd) = (xs[2], xs[3]);
                    let c = self.conv_input_grad(g0, g, pad, h, wd);
                    self.accumulate(grads, x, c)?;
                }
                if wanted(g0) {
                    let c = self.push(Op::Conv2d { x, w: g, pad });
                    self.accumulate(grads, g0, c)?;
                }
            }
            Op::MatmulNT(a, b) => {
                if wanted(a) {
                    let c = self.matmul_nn(g, b);
                    self.accumulate(grads, a, c)?;
                }
                if wanted(b) {
                    let c = self.matmul_tn(g, a);
                    self.accumulate(grads, b, c)?;
                }
            }
            Op::MatmulNN(a, b) => {
                if wanted(a) {
                    let c = self.matmul_nt(g, b);
                    self.accumulate(grads, a, c)?;
                }
                if wanted(b) {
                    let c = self.matmul_tn(a, g);
                    self.accumulate(grads, b, c)?;
                }
            }
            Op::MatmulTN(a, b) => {
                if wanted(a) {
                    let c = self.matmul_nt(b, g);
                    self.accumulate(grads, a, c)?;
                }
                if wanted(b) {
                    let c = self.matmul_nn(a, g);
                    self.accumulate(grads, b, c)?;
                }
            }
            Op::AddBiasC { x, b } => {
                if wanted(x) {
                    self.accumulate(grads, x, g)?;
                }
                if wanted(b) {
                    let c = self.sum_except_c(g);
                    self.accumulate(grads, b, c)?;
                }
            }
            Op::SumExceptC(x) => {
                if wanted(x) {
                    let shape = self.shape(x).to_vec();
                    let c = self.bcast_from_c(g, shape);
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::BcastFromC { b, .. } => {
                if wanted(b) {
                    let c = self.sum_except_c(g);
                    self.accumulate(grads, b, c)?;
                }
            }
            Op::ChannelSum(x) => {
                if wanted(x) {
                    let channels = self.shape(x)[1];
                    let c = self.channel_bcast(g, channels)?;
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::ChannelBcast { s, .. } => {
                if wanted(s) {
                    let c = self.channel_sum(g)?;
                    self.accumulate(grads, s, c)?;
                }
            }
            Op::BcastCMul { x, s } => {
                if wanted(x) {
                    let c = self.bcast_cmul(g, s)?;
                    self.accumulate(grads, x, c)?;
                }
                if wanted(s) {
                    let gx = self.mul(g, x)?;
                    let c = self.channel_sum(gx)?;
                    self.accumulate(grads, s, c)?;
                }
            }
            Op::BatchSum(x) => {
                if wanted(x) {
                    let n = self.shape(x)[0];
                    let c = self.batch_bcast(g, n)?;
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::BatchBcast { x, .. } => {
                if wanted(x) {
                    let c = self.batch_sum(g)?;
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::SampleSum(x) => {
                if wanted(x) {
                    let shape = self.shape(x).to_vec();
                    let c = self.sample_bcast(g, shape)?;
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::SampleBcast { v, .. } => {
                if wanted(v) {
                    let c = self.sample_sum(g)?;
                    self.accumulate(grads, v, c)?;
                }
            }
            Op::SumAll(x) => {
                if wanted(x) {
                    let shape = self.shape(x).to_vec();
                    let c = self.fill_bcast(g, shape)?;
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::FillBcast { s, .. } => {
                if wanted(s) {
                    let c = self.sum_all(g);
                    self.accumulate(grads, s, c)?;
                }
            }
            Op::ConcatC(a, b) => {
                let ca = self.shape(a)[1];
                let cb = self.shape(b)[1];
                if wanted(a) {
                    let c = self.slice_channels(g, 0, ca)?;
                    self.accumulate(grads, a, c)?;
                }
                if wanted(b) {
                    let c = self.slice_channels(g, ca, cb)?;
                    self.accumulate(grads, b, c)?;
                }
            }
            Op::SliceC { x, start, .. } => {
                if wanted(x) {
                    let channels = self.shape(x)[1];
                    let c = self.pad_channels(g, start, channels);
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::PadC { x, start, .. } => {
                if wanted(x) {
                    let len = self.shape(x)[1];
                    let c = self.slice_channels(g, start, len)?;
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::Reshape { x, .. } => {
                if wanted(x) {
                    let shape = self.shape(x).to_vec();
                    let c = self.reshape(g, shape)?;
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::UpsampleNearest2x(x) => {
                if wanted(x) {
                    let c = self.sum_pool2x_unchecked(g);
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::SumPool2x(x) => {
                if wanted(x) {
                    let c = self.upsample_nearest2x(g)?;
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::MaxPool2x { x, ref argmax } => {
                if wanted(x) {
                    let shape = self.shape(x).to_vec();
                    let c = self.max_unpool2x(g, Rc::clone(argmax), shape);
                    self.accumulate(grads, x, c)?;
                }
            }
            Op::MaxUnpool2x { g: g0, ref argmax, .. } => {
                if wanted(g0) {
                    let shape = self.shape(g0).to_vec();
                    let c = self.max_gather2x(g, Rc::clone(argmax), shape);
                    self.accumulate(grads, g0, c)?;
                }
            }
            Op::MaxGather2x { u, ref argmax, .. } => {
                if wanted(u) {
                    let shape = self.shape(u).to_vec();
                    let c = self.max_unpool2x(g, Rc::clone(argmax), shape);
                    self.accumulate(grads, u, c)?;
                }
            }
        }
        Ok(())
    }
}
