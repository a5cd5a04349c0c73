//! Model builders: generator/discriminator pairs for every experiment
//! variant, built from one declarative configuration, plus the symbolic
//! shape audit and parameter counting.

mod audit;
pub mod config;
mod discriminator;
mod generator;
mod images;
mod params;
pub mod plan;

pub use audit::{parameter_count, shape_audit, AuditRow, ShapeAudit, TraceRow};
pub use config::{
    all_band_names, base_channels, BandGroup, BandGroupSpec, ModelConfig, ScaleKey, Variant,
    GROUP_10M, GROUP_20M,
};
pub use discriminator::{build_discriminator, Discriminator};
pub use generator::{build_generator, Generator};
pub use images::{ImageVarSet, ScaleImageSet};
pub use params::{ParamEntry, ParamId, ParamStore};
