//! Minimal N-dimensional tensor engine with reverse-mode differentiation.
//!
//! The backward pass is itself recorded on the tape, so a scalar function of
//! gradients can be differentiated again. This is what makes the gradient
//! penalty trainable: its loss contains the norm of an input gradient, and
//! that norm must flow back into the discriminator weights.

mod backward;
mod fd;
pub(crate) mod kernels;
mod rng;
mod tape;

pub use fd::finite_diff_grad;
pub use rng::RngStream;
pub use tape::{Op, Tape, Var};

use crate::error::TensorError;

/// Element precision of a tensor, selected through the [`Real`] type parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

/// Scalar element type: `f32` for training, `f64` for verification oracles.
pub trait Real:
    num_traits::Float
    + std::fmt::Debug
    + std::fmt::Display
    + std::ops::AddAssign
    + Send
    + Sync
    + 'static
{
    const PRECISION: Precision;

    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// Dense row-major matrix multiply `C = alpha * A * B + beta * C`,
    /// with arbitrary strides so transposed views need no copies.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
    );
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Single;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
    ) {
        debug_assert!(c.len() >= m * n);
        unsafe {
            matrixmultiply::sgemm(
                m,
                k,
                n,
                alpha,
                a.as_ptr(),
                rsa,
                csa,
                b.as_ptr(),
                rsb,
                csb,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
    ) {
        debug_assert!(c.len() >= m * n);
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                alpha,
                a.as_ptr(),
                rsa,
                csa,
                b.as_ptr(),
                rsb,
                csb,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}

/// Owned N-dimensional array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorData<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> TensorData<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self, TensorError> {
        let expect: usize = shape.iter().product();
        if data.len() != expect {
            return Err(TensorError::shape(
                "TensorData::new",
                format!("shape {shape:?} needs {expect} elements, got {}", data.len()),
            ));
        }
        Ok(TensorData { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        TensorData {
            shape,
            data: vec![T::zero(); n],
        }
    }

    pub fn filled(shape: Vec<usize>, v: T) -> Self {
        let n: usize = shape.iter().product();
        TensorData {
            shape,
            data: vec![v; n],
        }
    }

    pub fn scalar(v: T) -> Self {
        TensorData {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn from_f64s(shape: Vec<usize>, values: &[f64]) -> Result<Self, TensorError> {
        Self::new(shape, values.iter().map(|&v| T::from_f64(v)).collect())
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn numel(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.shape.len());
        let mut off = 0;
        for (c, n) in coords.iter().zip(&self.shape) {
            debug_assert!(c < n);
            off = off * n + c;
        }
        off
    }

    pub fn at(&self, coords: &[usize]) -> T {
        self.data[self.offset(coords)]
    }

    pub fn is_all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Single element of a scalar tensor.
    pub fn item(&self) -> Result<T, TensorError> {
        if self.numel() != 1 {
            return Err(TensorError::NotScalar {
                op: "item",
                shape: self.shape.clone(),
            });
        }
        Ok(self.data[0])
    }

    /// Reinterpret with a new shape of equal element count.
    pub fn reshaped(mut self, shape: Vec<usize>) -> Result<Self, TensorError> {
        let expect: usize = shape.iter().product();
        if expect != self.data.len() {
            return Err(TensorError::shape(
                "reshape",
                format!("cannot view {:?} as {shape:?}", self.shape),
            ));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        TensorData {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Lossy conversion to another precision.
    pub fn cast<U: Real>(&self) -> TensorData<U> {
        TensorData {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }
}
