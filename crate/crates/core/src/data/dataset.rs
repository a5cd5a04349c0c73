//! Tile collections and deterministic batch iteration.

use std::path::Path;

use crate::error::DataError;
use crate::tensor::RngStream;

use super::tile::{read_tile, write_tile, Tile};

/// Ordered collection of tiles backed by the tile file format.
#[derive(Debug, Clone)]
pub struct TileDataset {
    pub tiles: Vec<Tile>,
}

impl TileDataset {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    /// Load every `*.mstl` file under `dir`, sorted by file name.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, DataError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "mstl"))
            .collect();
        paths.sort();
        let tiles = paths
            .iter()
            .map(read_tile)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TileDataset { tiles })
    }

    /// Write tiles as `tile_00000.mstl`, `tile_00001.mstl`, ... under `dir`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<(), DataError> {
        std::fs::create_dir_all(&dir)?;
        for (i, tile) in self.tiles.iter().enumerate() {
            write_tile(dir.as_ref().join(format!("tile_{i:05}.mstl")), tile)?;
        }
        Ok(())
    }
}

/// Index batches of one epoch: a seeded permutation of `0..n` chunked into
/// `batch_size` groups, final partial batch dropped.
pub fn epoch_batches(n: usize, batch_size: usize, stream: &mut RngStream) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1 && batch_size <= n, "batch_size {batch_size} out of range for {n} samples");
    let order = stream.shuffled_indices(n);
    order
        .chunks_exact(batch_size)
        .map(|c| c.to_vec())
        .collect()
}
