//! RMSProp: per-parameter running mean square with epsilon outside the root.

use crate::error::TensorError;
use crate::model::ParamStore;
use crate::tensor::{Real, TensorData};

/// One update: `v <- alpha*v + (1-alpha)*g^2`, `p <- p - lr*g/(sqrt(v)+eps)`.
pub fn rmsprop_step<T: Real>(
    param: &mut TensorData<T>,
    grad: &TensorData<T>,
    state: &mut TensorData<T>,
    lr: T,
    alpha: T,
    eps: T,
) -> Result<(), TensorError> {
    if param.shape() != grad.shape() || param.shape() != state.shape() {
        return Err(TensorError::shape(
            "rmsprop_step",
            format!(
                "param {:?}, grad {:?}, state {:?}",
                param.shape(),
                grad.shape(),
                state.shape()
            ),
        ));
    }
    if !grad.is_all_finite() {
        return Err(TensorError::NonFinite {
            context: "rmsprop gradient".into(),
        });
    }
    let one_minus = T::one() - alpha;
    for ((p, g), v) in param
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(state.data_mut())
    {
        *v = alpha * *v + one_minus * *g * *g;
        *p = *p - lr * *g / (v.sqrt() + eps);
    }
    Ok(())
}

/// Optimizer state for one parameter store.
#[derive(Debug, Clone)]
pub struct RmsProp<T> {
    pub lr: T,
    pub alpha: T,
    pub eps: T,
    states: Vec<TensorData<T>>,
}

impl<T: Real> RmsProp<T> {
    pub fn new(store: &ParamStore<T>, lr: f64, alpha: f64, eps: f64) -> Self {
        RmsProp {
            lr: T::from_f64(lr),
            alpha: T::from_f64(alpha),
            eps: T::from_f64(eps),
            states: store
                .iter()
                .map(|e| TensorData::zeros(e.data.shape().to_vec()))
                .collect(),
        }
    }

    pub fn states(&self) -> &[TensorData<T>] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [TensorData<T>] {
        &mut self.states
    }

    /// Apply one step over every parameter, id order.
    pub fn step(
        &mut self,
        store: &mut ParamStore<T>,
        grads: &[TensorData<T>],
    ) -> Result<(), TensorError> {
        debug_assert_eq!(grads.len(), self.states.len());
        for ((entry, grad), state) in store.iter_mut().zip(grads).zip(&mut self.states) {
            rmsprop_step(&mut entry.data, grad, state, self.lr, self.alpha, self.eps)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_leaves_param_and_decays_state() {
        let mut p = TensorData::from_f64s(vec![2], &[1.0, -3.0]).unwrap();
        let g = TensorData::zeros(vec![2]);
        let mut v = TensorData::from_f64s(vec![2], &[0.5, 0.5]).unwrap();
        rmsprop_step(&mut p, &g, &mut v, 1e-3, 0.99, 1e-8).unwrap();
        assert_eq!(p.data(), &[1.0, -3.0]);
        assert!((v.data()[0] - 0.495).abs() < 1e-12);
    }

    #[test]
    fn single_step_hand_value() {
        // Fresh state, g = 1: v = 0.01, delta = -1e-3 / (0.1 + 1e-8).
        let mut p = TensorData::from_f64s(vec![1], &[0.0]).unwrap();
        let g = TensorData::from_f64s(vec![1], &[1.0]).unwrap();
        let mut v = TensorData::zeros(vec![1]);
        rmsprop_step(&mut p, &g, &mut v, 1e-3, 0.99, 1e-8).unwrap();
        assert!((v.data()[0] - 0.01).abs() < 1e-15);
        let expect = -1e-3 / (0.1 + 1e-8);
        assert!((p.data()[0] - expect).abs() < 1e-12, "{} vs {expect}", p.data()[0]);
        assert!((p.data()[0] + 9.9999e-3).abs() < 1e-7);
    }

    #[test]
    fn non_finite_grad_rejected() {
        let mut p = TensorData::from_f64s(vec![1], &[0.0]).unwrap();
        let g = TensorData::from_f64s(vec![1], &[f64::NAN]).unwrap();
        let mut v = TensorData::zeros(vec![1]);
        assert!(rmsprop_step(&mut p, &g, &mut v, 1e-3, 0.99, 1e-8).is_err());
    }
}
