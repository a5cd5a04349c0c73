//! Central finite differences, the independent oracle for every analytic
//! gradient in the crate. Intended for double precision.

use super::{Real, TensorData};
use crate::error::TensorError;

/// Approximate the gradient of a tensor-to-scalar function by central
/// differences, `(f(x + h e_i) - f(x - h e_i)) / 2h` per element.
pub fn finite_diff_grad<T: Real, F>(
    mut f: F,
    x: &TensorData<T>,
    h: T,
) -> Result<TensorData<T>, TensorError>
where
    F: FnMut(&TensorData<T>) -> Result<T, TensorError>,
{
    let mut grad = TensorData::zeros(x.shape().to_vec());
    let mut probe = x.clone();
    for i in 0..x.numel() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let fp = f(&probe)?;
        probe.data_mut()[i] = orig - h;
        let fm = f(&probe)?;
        probe.data_mut()[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(TensorError::NonFinite {
                context: format!("finite_diff_grad probe at element {i}"),
            });
        }
        grad.data_mut()[i] = (fp - fm) / (h + h);
    }
    Ok(grad)
}
