//! Critic losses: `G_loss = -mean D(fake)`,
//! `D_loss = mean D(fake) - mean D(real) + lambda * GP`, with the gradient
//! penalty `(||grad_xhat D(xhat)||_2 - 1)^2` averaged over the batch.
//!
//! The penalty's input gradient is produced by an on-tape backward pass, so
//! differentiating `D_loss` w.r.t. the discriminator parameters flows through
//! it (second order).

use crate::error::TrainError;
use crate::model::{Discriminator, ImageVarSet, ScaleImageSet};
use crate::tensor::{Real, RngStream, Tape, TensorData, Var};

/// Leaf an image set onto a tape.
pub fn leaf_images<T: Real>(
    tape: &mut Tape<T>,
    images: &ScaleImageSet<T>,
    requires_grad: bool,
) -> Result<ImageVarSet, TrainError> {
    let mut out = ImageVarSet::new();
    for (key, data) in images.iter() {
        out.insert(*key, tape.leaf(data.clone(), requires_grad)?);
    }
    Ok(out)
}

/// Read an image set's current values off a tape.
pub fn read_images<T: Real>(tape: &Tape<T>, images: &ImageVarSet) -> ScaleImageSet<T> {
    let mut out = ScaleImageSet::new();
    for (key, var) in images.iter() {
        out.insert(*key, tape.value(*var).clone());
    }
    out
}

/// Gradient penalty value plus the per-sample interpolate gradient norms
/// (read out for metrics).
pub struct GpOutput {
    pub gp: Var,
    pub norms: Vec<f64>,
}

/// Build the gradient penalty on `tape`. One epsilon is drawn per sample and
/// shared across every scale; the norm runs jointly over all elements of all
/// scales of one sample.
pub fn gradient_penalty<T: Real>(
    tape: &mut Tape<T>,
    disc: &Discriminator<T>,
    d_params: &[Var],
    real: &ScaleImageSet<T>,
    fake: &ScaleImageSet<T>,
    stream: &mut RngStream,
    step: u64,
) -> Result<GpOutput, TrainError> {
    let plan = disc.config.image_plan();
    let first = real.require(plan[0])?;
    let n = first.shape()[0];

    let eps: Vec<f64> = (0..n).map(|_| stream.uniform01()).collect();

    // xhat = eps*real + (1-eps)*fake, assembled off-tape and leafed as the
    // differentiation root.
    let mut xhat_vars = Vec::with_capacity(plan.len());
    let mut images = ImageVarSet::new();
    for key in &plan {
        let r = real.require(*key)?;
        let f = fake.require(*key)?;
        if r.shape() != f.shape() {
            return Err(crate::error::ModelError::ScaleMismatch {
                resolution: key.resolution,
                detail: format!(
                    "real {:?} vs fake {:?} at scale {}",
                    r.shape(),
                    f.shape(),
                    key.resolution
                ),
            }
            .into());
        }
        let per = r.numel() / n;
        let mut mixed = TensorData::zeros(r.shape().to_vec());
        for i in 0..n {
            let e = T::from_f64(eps[i]);
            let one_minus = T::from_f64(1.0 - eps[i]);
            let dst = &mut mixed.data_mut()[i * per..(i + 1) * per];
            let rs = &r.data()[i * per..(i + 1) * per];
            let fs = &f.data()[i * per..(i + 1) * per];
            for ((d, rv), fv) in dst.iter_mut().zip(rs).zip(fs) {
                *d = e * *rv + one_minus * *fv;
            }
        }
        let var = tape.leaf(mixed, true)?;
        xhat_vars.push(var);
        images.insert(*key, var);
    }

    let scores = disc.forward(tape, d_params, &images)?;
    let total = tape.sum_all(scores);
    let back = tape.backward(total, &xhat_vars)?;
    if back.grads.iter().any(|g| !tape.value(*g).is_all_finite()) {
        return Err(TrainError::NonFinite {
            what: "interpolate gradient",
            step,
        });
    }

    // Per-sample squared norm summed over every scale.
    let mut norm_sq: Option<Var> = None;
    for g in &back.grads {
        let sq = tape.mul(*g, *g)?;
        let per = tape.sample_sum(sq)?;
        norm_sq = Some(match norm_sq {
            Some(acc) => tape.add(acc, per)?,
            None => per,
        });
    }
    let norm_sq = norm_sq.expect("at least one scale");
    let norm = tape.sqrt(norm_sq);
    let norms = tape.value(norm).data().iter().map(|v| v.as_f64()).collect();
    let shifted = tape.add_scalar(norm, T::from_f64(-1.0));
    let sq = tape.mul(shifted, shifted)?;
    let sum = tape.sum_all(sq);
    let gp = tape.scale(sum, T::from_f64(1.0 / n as f64));
    Ok(GpOutput { gp, norms })
}

/// Discriminator loss pieces, kept separate for metrics.
pub struct DLossOutput {
    pub loss: Var,
    pub gp: Var,
    pub norms: Vec<f64>,
}

/// `mean D(fake) - mean D(real) + lambda * GP` over detached image sets.
#[allow(clippy::too_many_arguments)]
pub fn d_loss<T: Real>(
    tape: &mut Tape<T>,
    disc: &Discriminator<T>,
    d_params: &[Var],
    real: &ScaleImageSet<T>,
    fake: &ScaleImageSet<T>,
    stream: &mut RngStream,
    lambda_gp: f64,
    step: u64,
) -> Result<DLossOutput, TrainError> {
    let real_vars = leaf_images(tape, real, false)?;
    let fake_vars = leaf_images(tape, fake, false)?;
    let real_scores = disc.forward(tape, d_params, &real_vars)?;
    let fake_scores = disc.forward(tape, d_params, &fake_vars)?;
    let mean_real = tape.mean_all(real_scores);
    let mean_fake = tape.mean_all(fake_scores);
    let wasserstein = tape.sub(mean_fake, mean_real)?;
    let gp_out = gradient_penalty(tape, disc, d_params, real, fake, stream, step)?;
    let weighted = tape.scale(gp_out.gp, T::from_f64(lambda_gp));
    let loss = tape.add(wasserstein, weighted)?;
    Ok(DLossOutput {
        loss,
        gp: gp_out.gp,
        norms: gp_out.norms,
    })
}

/// `-mean D(fake)` over live (generator-connected) images.
pub fn g_loss<T: Real>(
    tape: &mut Tape<T>,
    disc: &Discriminator<T>,
    d_params: &[Var],
    fake: &ImageVarSet,
) -> Result<Var, TrainError> {
    let scores = disc.forward(tape, d_params, fake)?;
    let mean = tape.mean_all(scores);
    Ok(tape.neg(mean))
}
