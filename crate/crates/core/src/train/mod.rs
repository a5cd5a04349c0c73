//! WGAN-GP training: losses, gradient penalty, RMSProp, the alternating
//! loop over multi-scale pyramids, checkpointing, and metrics.

mod checkpoint;
pub mod config;
mod looper;
pub mod loss;
mod pyramid;
mod rmsprop;

pub use checkpoint::{
    load_checkpoint, read_checkpoint_from, save_checkpoint, write_checkpoint_to, Blob, Checkpoint,
    Snapshot, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::TrainConfig;
pub use looper::{steps_per_epoch, train_loop, StepMetrics, Trainer};
pub use loss::{d_loss, g_loss, gradient_penalty, leaf_images, read_images, DLossOutput, GpOutput};
pub use pyramid::build_pyramid;
pub use rmsprop::{rmsprop_step, RmsProp};
