//! Data pipeline: tile storage, normalization, band grouping, filtering,
//! the synthetic dataset generator, and deterministic batch iteration.

pub mod dataset;
pub mod filter;
pub mod sample;
pub mod synthetic;
pub mod tile;

pub use dataset::{epoch_batches, TileDataset};
pub use filter::{filter_sample, FilterDecision, FilterReason, FilterThresholds};
pub use sample::{denormalize, normalize, stack, upsample_20m_nearest, MultiResSample};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use tile::{read_tile, read_tile_from, write_tile, write_tile_to, Band, Tile, TILE_MAGIC, TILE_VERSION};
