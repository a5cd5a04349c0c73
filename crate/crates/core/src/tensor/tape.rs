//! Wengert tape: every operation appends a node, and the backward pass
//! appends more nodes of the same primitive set, which is what permits
//! differentiating through gradients.

use std::rc::Rc;

use super::kernels;
use super::{Real, TensorData};
use crate::error::TensorError;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// A recorded primitive. The set is closed under differentiation: every
/// rule in the backward pass emits only operations from this enum.
#[derive(Debug, Clone)]
pub enum Op<T> {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Neg(Var),
    Scale(Var, T),
    AddScalar(Var, T),
    Recip(Var),
    Sqrt(Var),
    LeakyRelu { x: Var, slope: T },
    /// `g * m(x)` with `m` the slope mask of `x`; piecewise-constant in `x`.
    LeakyReluGrad { g: Var, x: Var, slope: T },
    Conv2d { x: Var, w: Var, pad: usize },
    ConvInputGrad { g: Var, w: Var, pad: usize, h: usize, wd: usize },
    ConvWeightGrad { x: Var, g: Var, pad: usize, k: usize },
    MatmulNT(Var, Var),
    MatmulNN(Var, Var),
    MatmulTN(Var, Var),
    AddBiasC { x: Var, b: Var },
    SumExceptC(Var),
    BcastFromC { b: Var, shape: Vec<usize> },
    ChannelSum(Var),
    ChannelBcast { s: Var, channels: usize },
    BcastCMul { x: Var, s: Var },
    BatchSum(Var),
    BatchBcast { x: Var, n: usize },
    SampleSum(Var),
    SampleBcast { v: Var, shape: Vec<usize> },
    SumAll(Var),
    FillBcast { s: Var, shape: Vec<usize> },
    ConcatC(Var, Var),
    SliceC { x: Var, start: usize, len: usize },
    PadC { x: Var, start: usize, channels: usize },
    Reshape { x: Var, shape: Vec<usize> },
    UpsampleNearest2x(Var),
    SumPool2x(Var),
    MaxPool2x { x: Var, argmax: Rc<Vec<u32>> },
    MaxUnpool2x { g: Var, argmax: Rc<Vec<u32>>, shape: Vec<usize> },
    MaxGather2x { u: Var, argmax: Rc<Vec<u32>>, shape: Vec<usize> },
}

impl<T> Op<T> {
    /// Tape inputs of this operation, in a fixed order.
    pub(crate) fn inputs(&self) -> Vec<Var> {
        use Op::*;
        match self {
            Leaf => vec![],
            Add(a, b) | Sub(a, b) | Mul(a, b) | MatmulNT(a, b) | MatmulNN(a, b)
            | MatmulTN(a, b) | ConcatC(a, b) => vec![*a, *b],
            Neg(a) | Scale(a, _) | AddScalar(a, _) | Recip(a) | Sqrt(a) | SumExceptC(a)
            | ChannelSum(a) | BatchSum(a) | SampleSum(a) | SumAll(a) => vec![*a],
            LeakyRelu { x, .. } => vec![*x],
            LeakyReluGrad { g, x, .. } => vec![*g, *x],
            Conv2d { x, w, .. } => vec![*x, *w],
            ConvInputGrad { g, w, .. } => vec![*g, *w],
            ConvWeightGrad { x, g, .. } => vec![*x, *g],
            AddBiasC { x, b } => vec![*x, *b],
            BcastFromC { b, .. } => vec![*b],
            ChannelBcast { s, .. } => vec![*s],
            BcastCMul { x, s } => vec![*x, *s],
            BatchBcast { x, .. } => vec![*x],
            SampleBcast { v, .. } => vec![*v],
            FillBcast { s, .. } => vec![*s],
            SliceC { x, .. } | PadC { x, .. } | Reshape { x, .. } => vec![*x],
            UpsampleNearest2x(a) | SumPool2x(a) => vec![*a],
            MaxPool2x { x, .. } => vec![*x],
            MaxUnpool2x { g, .. } => vec![*g],
            MaxGather2x { u, .. } => vec![*u],
        }
    }
}

/// Evaluate one operation against a value table indexed by node id.
pub(crate) fn compute_op<T: Real>(op: &Op<T>, values: &[TensorData<T>]) -> TensorData<T> {
    let v = |x: Var| &values[x.0];
    use Op::*;
    match op {
        Leaf => unreachable!("leaves carry their own value"),
        Add(a, b) => kernels::zip(v(*a), v(*b), |x, y| x + y),
        Sub(a, b) => kernels::zip(v(*a), v(*b), |x, y| x - y),
        Mul(a, b) => kernels::zip(v(*a), v(*b), |x, y| x * y),
        Neg(a) => v(*a).map(|x| -x),
        Scale(a, c) => {
            let c = *c;
            v(*a).map(|x| x * c)
        }
        AddScalar(a, c) => {
            let c = *c;
            v(*a).map(|x| x + c)
        }
        Recip(a) => v(*a).map(|x| x.recip()),
        Sqrt(a) => v(*a).map(|x| x.sqrt()),
        LeakyRelu { x, slope } => kernels::leaky_relu(v(*x), *slope),
        LeakyReluGrad { g, x, slope } => kernels::leaky_relu_grad(v(*g), v(*x), *slope),
        Conv2d { x, w, pad } => kernels::conv2d(v(*x), v(*w), *pad),
        ConvInputGrad { g, w, pad, h, wd } => kernels::conv_input_grad(v(*g), v(*w), *pad, *h, *wd),
        ConvWeightGrad { x, g, pad, k } => kernels::conv_weight_grad(v(*x), v(*g), *pad, *k),
        MatmulNT(a, b) => kernels::matmul_nt(v(*a), v(*b)),
        MatmulNN(a, b) => kernels::matmul_nn(v(*a), v(*b)),
        MatmulTN(a, b) => kernels::matmul_tn(v(*a), v(*b)),
        AddBiasC { x, b } => kernels::add_bias_c(v(*x), v(*b)),
        SumExceptC(a) => kernels::sum_except_c(v(*a)),
        BcastFromC { b, shape } => kernels::bcast_from_c(v(*b), shape),
        ChannelSum(a) => kernels::channel_sum(v(*a)),
        ChannelBcast { s, channels } => kernels::channel_bcast(v(*s), *channels),
        BcastCMul { x, s } => kernels::bcast_cmul(v(*x), v(*s)),
        BatchSum(a) => kernels::batch_sum(v(*a)),
        BatchBcast { x, n } => kernels::batch_bcast(v(*x), *n),
        SampleSum(a) => kernels::sample_sum(v(*a)),
        SampleBcast { v: s, shape } => kernels::sample_bcast(v(*s), shape),
        SumAll(a) => kernels::sum_all(v(*a)),
        FillBcast { s, shape } => kernels::fill_bcast(v(*s), shape),
        ConcatC(a, b) => kernels::concat_c(v(*a), v(*b)),
        SliceC { x, start, len } => kernels::slice_c(v(*x), *start, *len),
        PadC { x, start, channels } => kernels::pad_c(v(*x), *start, *channels),
        Reshape { x, shape } => v(*x)
            .clone()
            .reshaped(shape.clone())
            .expect("reshape validated at push"),
        UpsampleNearest2x(a) => kernels::upsample_nearest2x(v(*a)),
        SumPool2x(a) => kernels::sum_pool2x(v(*a)),
        MaxPool2x { x, .. } => kernels::max_pool2x(v(*x)).0,
        MaxUnpool2x { g, argmax, shape } => kernels::max_unpool2x(v(*g), argmax, shape),
        MaxGather2x { u, argmax, shape } => kernels::max_gather2x(v(*u), argmax, shape),
    }
}

/// Append-only record of a computation. Node ids are a topological order by
/// construction. A tape is confined to one logical thread.
pub struct Tape<T: Real> {
    pub(crate) values: Vec<TensorData<T>>,
    pub(crate) ops: Vec<Op<T>>,
    pub(crate) requires: Vec<bool>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape {
            values: Vec::new(),
            ops: Vec::new(),
            requires: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, v: Var) -> &TensorData<T> {
        &self.values[v.0]
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.values[v.0].shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.requires[v.0]
    }

    /// Scalar value of a one-element tensor.
    pub fn item(&self, v: Var) -> Result<T, TensorError> {
        self.value(v).item()
    }

    fn push_node(&mut self, op: Op<T>, value: TensorData<T>, requires: bool) -> Var {
        self.values.push(value);
        self.ops.push(op);
        self.requires.push(requires);
        Var(self.ops.len() - 1)
    }

    pub(crate) fn push(&mut self, op: Op<T>) -> Var {
        let value = compute_op(&op, &self.values);
        let requires = op.inputs().iter().any(|v| self.requires[v.0]);
        self.push_node(op, value, requires)
    }

    /// Record an input tensor. Rejects non-finite elements.
    pub fn leaf(&mut self, value: TensorData<T>, requires_grad: bool) -> Result<Var, TensorError> {
        if !value.is_all_finite() {
            return Err(TensorError::NonFinite {
                context: "leaf tensor".into(),
            });
        }
        Ok(self.push_node(Op::Leaf, value, requires_grad))
    }

    /// Record a constant that never receives gradient.
    pub fn constant(&mut self, value: TensorData<T>) -> Var {
        self.push_node(Op::Leaf, value, false)
    }

    pub fn scalar_const(&mut self, v: T) -> Var {
        self.constant(TensorData::scalar(v))
    }

    // -- elementwise ---------------------------------------------------

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("add", a, b)?;
        Ok(self.push(Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("sub", a, b)?;
        Ok(self.push(Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("mul", a, b)?;
        Ok(self.push(Op::Mul(a, b)))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.push(Op::Neg(a))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        self.push(Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: T) -> Var {
        self.push(Op::AddScalar(a, c))
    }

    pub fn recip(&mut self, a: Var) -> Var {
        self.push(Op::Recip(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.push(Op::Sqrt(a))
    }

    /// `x` for `x >= 0`, `slope * x` otherwise, elementwise.
    pub fn leaky_relu(&mut self, x: Var, slope: T) -> Result<Var, TensorError> {
        if !(slope > T::zero() && slope < T::one()) {
            return Err(TensorError::arg("leaky_relu", format!("slope {slope} not in (0,1)")));
        }
        Ok(self.push(Op::LeakyRelu { x, slope }))
    }

    pub(crate) fn leaky_relu_grad(&mut self, g: Var, x: Var, slope: T) -> Var {
        self.push(Op::LeakyReluGrad { g, x, slope })
    }

    // -- convolution / dense -------------------------------------------

    /// Stride-1 cross-correlation with optional bias.
    /// `x: [N,Cin,H,W]`, `w: [Cout,Cin,k,k]`, `bias: [Cout]`.
    pub fn conv2d(&mut self, x: Var, w: Var, bias: Option<Var>, pad: usize) -> Result<Var, TensorError> {
        let xs = self.shape(x);
        let ws = self.shape(w);
        if xs.len() != 4 || ws.len() != 4 {
            return Err(TensorError::shape(
                "conv2d",
                format!("need rank-4 input and weight, got {xs:?} and {ws:?}"),
            ));
        }
        let k = ws[2];
        if ws[3] != k || !matches!(k, 1 | 3 | 4) {
            return Err(TensorError::arg(
                "conv2d",
                format!("kernel must be square with k in {{1,3,4}}, got {}x{}", ws[2], ws[3]),
            ));
        }
        if xs[1] != ws[1] {
            return Err(TensorError::shape(
                "conv2d",
                format!(
                    "input channels {} do not match weight Cin {} (input {xs:?}, weight {ws:?})",
                    xs[1], ws[1]
                ),
            ));
        }
        if xs[2] + 2 * pad < k || xs[3] + 2 * pad < k {
            return Err(TensorError::shape(
                "conv2d",
                format!("kernel {k} exceeds padded input {xs:?} with padding {pad}"),
            ));
        }
        let cout = ws[0];
        let y = self.push(Op::Conv2d { x, w, pad });
        match bias {
            Some(b) => self.add_bias_c_checked("conv2d", y, b, cout),
            None => Ok(y),
        }
    }

    pub(crate) fn conv_input_grad(&mut self, g: Var, w: Var, pad: usize, h: usize, wd: usize) -> Var {
        self.push(Op::ConvInputGrad { g, w, pad, h, wd })
    }

    pub(crate) fn conv_weight_grad(&mut self, x: Var, g: Var, pad: usize, k: usize) -> Var {
        self.push(Op::ConvWeightGrad { x, g, pad, k })
    }

    /// Affine map `x w^T + b` with `x: [N,F]`, `w: [O,F]`, `bias: [O]`.
    pub fn dense(&mut self, x: Var, w: Var, bias: Option<Var>) -> Result<Var, TensorError> {
        let xs = self.shape(x);
        let ws = self.shape(w);
        if xs.len() != 2 || ws.len() != 2 {
            return Err(TensorError::shape(
                "dense",
                format!("need rank-2 input and weight, got {xs:?} and {ws:?}"),
            ));
        }
        if xs[1] != ws[1] {
            return Err(TensorError::shape(
                "dense",
                format!("input width {} does not match weight width {}", xs[1], ws[1]),
            ));
        }
        let o = ws[0];
        let y = self.push(Op::MatmulNT(x, w));
        match bias {
            Some(b) => self.add_bias_c_checked("dense", y, b, o),
            None => Ok(y),
        }
    }

    pub(crate) fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::MatmulNT(a, b))
    }

    pub(crate) fn matmul_nn(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::MatmulNN(a, b))
    }

    pub(crate) fn matmul_tn(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::MatmulTN(a, b))
    }

    fn add_bias_c_checked(
        &mut self,
        op: &'static str,
        x: Var,
        b: Var,
        channels: usize,
    ) -> Result<Var, TensorError> {
        let bs = self.shape(b);
        if bs != [channels] {
            return Err(TensorError::shape(
                op,
                format!("bias shape {bs:?} does not match {channels} output channels"),
            ));
        }
        Ok(self.push(Op::AddBiasC { x, b }))
    }

    /// `x + b` with `b` broadcast along axis 1.
    pub fn add_bias_c(&mut self, x: Var, b: Var) -> Result<Var, TensorError> {
        let xs = self.shape(x);
        if xs.len() < 2 {
            return Err(TensorError::shape("add_bias_c", format!("need rank >= 2, got {xs:?}")));
        }
        let c = xs[1];
        self.add_bias_c_checked("add_bias_c", x, b, c)
    }

    pub(crate) fn sum_except_c(&mut self, x: Var) -> Var {
        self.push(Op::SumExceptC(x))
    }

    pub(crate) fn bcast_from_c(&mut self, b: Var, shape: Vec<usize>) -> Var {
        self.push(Op::BcastFromC { b, shape })
    }

    // -- reductions / broadcasts ---------------------------------------

    /// `[n0,C,rest] -> [n0,1,rest]`
    pub fn channel_sum(&mut self, x: Var) -> Result<Var, TensorError> {
        self.need_rank("channel_sum", x, 2)?;
        Ok(self.push(Op::ChannelSum(x)))
    }

    pub fn channel_mean(&mut self, x: Var) -> Result<Var, TensorError> {
        let c = self.shape(x)[1];
        let s = self.channel_sum(x)?;
        Ok(self.scale(s, T::from_f64(1.0 / c as f64)))
    }

    pub fn channel_bcast(&mut self, s: Var, channels: usize) -> Result<Var, TensorError> {
        let ss = self.shape(s);
        if ss.len() < 2 || ss[1] != 1 {
            return Err(TensorError::shape(
                "channel_bcast",
                format!("need axis 1 of extent 1, got {ss:?}"),
            ));
        }
        Ok(self.push(Op::ChannelBcast { s, channels }))
    }

    /// `x * s` with `s: [n0,1,rest]` broadcast over channels.
    pub fn bcast_cmul(&mut self, x: Var, s: Var) -> Result<Var, TensorError> {
        let xs = self.shape(x);
        let ss = self.shape(s);
        if xs.len() < 2 || ss.len() != xs.len() || ss[0] != xs[0] || ss[1] != 1 || ss[2..] != xs[2..] {
            return Err(TensorError::shape(
                "bcast_cmul",
                format!("scale shape {ss:?} incompatible with {xs:?}"),
            ));
        }
        Ok(self.push(Op::BcastCMul { x, s }))
    }

    /// `[N,rest] -> [1,rest]`
    pub fn batch_sum(&mut self, x: Var) -> Result<Var, TensorError> {
        self.need_rank("batch_sum", x, 1)?;
        Ok(self.push(Op::BatchSum(x)))
    }

    pub fn batch_mean(&mut self, x: Var) -> Result<Var, TensorError> {
        let n = self.shape(x)[0];
        let s = self.batch_sum(x)?;
        Ok(self.scale(s, T::from_f64(1.0 / n as f64)))
    }

    pub fn batch_bcast(&mut self, x: Var, n: usize) -> Result<Var, TensorError> {
        let xs = self.shape(x);
        if xs.is_empty() || xs[0] != 1 {
            return Err(TensorError::shape(
                "batch_bcast",
                format!("need axis 0 of extent 1, got {xs:?}"),
            ));
        }
        Ok(self.push(Op::BatchBcast { x, n }))
    }

    /// `[N,rest] -> [N]`: per-sample sum.
    pub fn sample_sum(&mut self, x: Var) -> Result<Var, TensorError> {
        self.need_rank("sample_sum", x, 1)?;
        Ok(self.push(Op::SampleSum(x)))
    }

    pub fn sample_bcast(&mut self, v: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        let vs = self.shape(v);
        if vs.len() != 1 || shape.is_empty() || vs[0] != shape[0] {
            return Err(TensorError::shape(
                "sample_bcast",
                format!("cannot broadcast {vs:?} to {shape:?}"),
            ));
        }
        Ok(self.push(Op::SampleBcast { v, shape }))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        self.push(Op::SumAll(x))
    }

    pub fn mean_all(&mut self, x: Var) -> Var {
        let n = self.value(x).numel();
        let s = self.sum_all(x);
        self.scale(s, T::from_f64(1.0 / n as f64))
    }

    pub fn fill_bcast(&mut self, s: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        if self.value(s).numel() != 1 {
            return Err(TensorError::NotScalar {
                op: "fill_bcast",
                shape: self.shape(s).to_vec(),
            });
        }
        Ok(self.push(Op::FillBcast { s, shape }))
    }

    // -- channel concat / slice ----------------------------------------

    /// Concatenate along axis 1, `a` first.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        let ok = sa.len() >= 2
            && sa.len() == sb.len()
            && sa[0] == sb[0]
            && sa[2..] == sb[2..];
        if !ok {
            return Err(TensorError::shape(
                "concat_channels",
                format!("shapes {sa:?} and {sb:?} differ outside axis 1"),
            ));
        }
        Ok(self.push(Op::ConcatC(a, b)))
    }

    pub fn slice_channels(&mut self, x: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let xs = self.shape(x);
        if xs.len() < 2 || start + len > xs[1] {
            return Err(TensorError::shape(
                "slice_channels",
                format!("slice {start}..{} out of bounds for {xs:?}", start + len),
            ));
        }
        Ok(self.push(Op::SliceC { x, start, len }))
    }

    pub(crate) fn pad_channels(&mut self, x: Var, start: usize, channels: usize) -> Var {
        self.push(Op::PadC { x, start, channels })
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        let expect: usize = shape.iter().product();
        if expect != self.value(x).numel() {
            return Err(TensorError::shape(
                "reshape",
                format!("cannot view {:?} as {shape:?}", self.shape(x)),
            ));
        }
        Ok(self.push(Op::Reshape { x, shape }))
    }

    // -- spatial ---------------------------------------------------------

    /// Replicate each pixel into a 2x2 block.
    pub fn upsample_nearest2x(&mut self, x: Var) -> Result<Var, TensorError> {
        self.need_rank("upsample_nearest2x", x, 2)?;
        Ok(self.push(Op::UpsampleNearest2x(x)))
    }

    pub(crate) fn sum_pool2x_unchecked(&mut self, x: Var) -> Var {
        self.push(Op::SumPool2x(x))
    }

    /// Sum over non-overlapping 2x2 windows.
    pub fn sum_pool2x(&mut self, x: Var) -> Result<Var, TensorError> {
        self.check_even_spatial("sum_pool2x", x)?;
        Ok(self.sum_pool2x_unchecked(x))
    }

    /// Mean over non-overlapping 2x2 windows.
    pub fn avg_pool2x(&mut self, x: Var) -> Result<Var, TensorError> {
        let s = self.sum_pool2x(x)?;
        Ok(self.scale(s, T::from_f64(0.25)))
    }

    /// Max over non-overlapping 2x2 windows. Gradient routes to the argmax,
    /// first element in row-major window order on ties.
    pub fn max_pool2x(&mut self, x: Var) -> Result<Var, TensorError> {
        self.check_even_spatial("max_pool2x", x)?;
        let (value, argmax) = kernels::max_pool2x(self.value(x));
        let op = Op::MaxPool2x {
            x,
            argmax: Rc::new(argmax),
        };
        let requires = self.requires[x.0];
        Ok(self.push_node(op, value, requires))
    }

    pub(crate) fn max_unpool2x(&mut self, g: Var, argmax: Rc<Vec<u32>>, shape: Vec<usize>) -> Var {
        self.push(Op::MaxUnpool2x { g, argmax, shape })
    }

    pub(crate) fn max_gather2x(&mut self, u: Var, argmax: Rc<Vec<u32>>, shape: Vec<usize>) -> Var {
        self.push(Op::MaxGather2x { u, argmax, shape })
    }

    // -- validation helpers ----------------------------------------------

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::shape(
                op,
                format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            ));
        }
        Ok(())
    }

    fn need_rank(&self, op: &'static str, x: Var, min_rank: usize) -> Result<(), TensorError> {
        if self.shape(x).len() < min_rank {
            return Err(TensorError::shape(
                op,
                format!("need rank >= {min_rank}, got {:?}", self.shape(x)),
            ));
        }
        Ok(())
    }

    fn check_even_spatial(&self, op: &'static str, x: Var) -> Result<(), TensorError> {
        let xs = self.shape(x);
        if xs.len() < 2 {
            return Err(TensorError::shape(op, format!("need rank >= 2, got {xs:?}")));
        }
        let (h, w) = (xs[xs.len() - 2], xs[xs.len() - 1]);
        if h % 2 != 0 || w % 2 != 0 {
            return Err(TensorError::shape(
                op,
                format!("odd spatial extent in {xs:?}; 2x2 windows need even H and W"),
            ));
        }
        Ok(())
    }

    /// Recompute every node from the leaves and check the forward values
    /// reproduce bit-for-bit.
    pub fn replay_matches(&self) -> bool {
        let mut values: Vec<TensorData<T>> = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Leaf => self.values[i].clone(),
                _ => compute_op(op, &values),
            };
            if v.shape() != self.values[i].shape() {
                return false;
            }
            if v.data()
                .iter()
                .zip(self.values[i].data())
                .any(|(a, b)| a.as_f64().to_bits() != b.as_f64().to_bits())
            {
                return false;
            }
            values.push(v);
        }
        true
    }
}
