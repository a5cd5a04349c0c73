//! Normalized band-group samples and the maps between tiles and samples.

use crate::error::DataError;
use crate::model::config::{GROUP_10M, GROUP_20M};
use crate::tensor::{kernels, Real, TensorData};

use super::tile::{Band, Tile};

/// Reflectance midpoint of the linear map `v -> v / 5000 - 1`.
const HALF_RANGE: f64 = 5000.0;

/// One training example: band groups at their native resolutions, values in
/// `[-1, 1]`. Channel orders are fixed: (blue, green, red, NIR) and
/// (red-edge 1..3, narrow NIR, SWIR1, SWIR2).
#[derive(Debug, Clone)]
pub struct MultiResSample<T> {
    /// `[4, H, W]`
    pub group_10m: TensorData<T>,
    /// `[6, H/2, W/2]`
    pub group_20m: TensorData<T>,
}

impl<T: Real> MultiResSample<T> {
    pub fn resolution(&self) -> usize {
        self.group_10m.shape()[1]
    }
}

/// Normalize a tile into a sample: linear map `v -> v / 5000 - 1` per band,
/// groups assembled in the fixed channel orders. The affine math runs in
/// double precision regardless of `T`.
pub fn normalize<T: Real>(tile: &Tile) -> Result<MultiResSample<T>, DataError> {
    tile.validate()?;
    let collect_group = |names: &[&str], divisor: u8| -> Result<TensorData<T>, DataError> {
        let d = divisor as u32;
        let (h, w) = ((tile.height / d) as usize, (tile.width / d) as usize);
        let mut data = Vec::with_capacity(names.len() * h * w);
        for name in names {
            let band = tile
                .band(name)
                .ok_or_else(|| DataError::MissingBand((*name).into()))?;
            if band.resolution_divisor != divisor {
                return Err(DataError::Invalid {
                    context: format!("band {name}"),
                    detail: format!(
                        "expected resolution divisor {divisor}, found {}",
                        band.resolution_divisor
                    ),
                });
            }
            data.extend(
                band.plane
                    .data()
                    .iter()
                    .map(|&v| T::from_f64(v as f64 / HALF_RANGE - 1.0)),
            );
        }
        Ok(TensorData::new(vec![names.len(), h, w], data).expect("assembled group extent"))
    };
    Ok(MultiResSample {
        group_10m: collect_group(GROUP_10M.band_names, GROUP_10M.resolution_divisor)?,
        group_20m: collect_group(GROUP_20M.band_names, GROUP_20M.resolution_divisor)?,
    })
}

/// Invert [`normalize`]: map `[-1, 1]` back to reflectance, clamping into
/// `[0, 10000]`.
pub fn denormalize<T: Real>(sample: &MultiResSample<T>) -> Tile {
    let to_band = |name: &str, divisor: u8, plane_data: &[T], h: usize, w: usize| Band {
        name: name.into(),
        resolution_divisor: divisor,
        plane: TensorData::new(
            vec![h, w],
            plane_data
                .iter()
                .map(|v| (((v.as_f64() + 1.0) * HALF_RANGE).clamp(0.0, 10000.0)) as f32)
                .collect(),
        )
        .expect("plane extent"),
    };
    let (h, w) = (sample.group_10m.shape()[1], sample.group_10m.shape()[2]);
    let mut bands = Vec::with_capacity(10);
    for (i, name) in GROUP_10M.band_names.iter().enumerate() {
        bands.push(to_band(
            name,
            1,
            &sample.group_10m.data()[i * h * w..(i + 1) * h * w],
            h,
            w,
        ));
    }
    let (h2, w2) = (sample.group_20m.shape()[1], sample.group_20m.shape()[2]);
    for (i, name) in GROUP_20M.band_names.iter().enumerate() {
        bands.push(to_band(
            name,
            2,
            &sample.group_20m.data()[i * h2 * w2..(i + 1) * h2 * w2],
            h2,
            w2,
        ));
    }
    Tile {
        width: w as u32,
        height: h as u32,
        bands,
    }
}

/// Pixel-replicate the 20m group onto the 10m grid and concatenate it after
/// the 10m group: `[10, H, W]`.
pub fn upsample_20m_nearest<T: Real>(sample: &MultiResSample<T>) -> TensorData<T> {
    let up = kernels::upsample_nearest2x(&sample.group_20m);
    let (h, w) = (sample.group_10m.shape()[1], sample.group_10m.shape()[2]);
    debug_assert_eq!(up.shape(), &[6, h, w]);
    let mut data = Vec::with_capacity(10 * h * w);
    data.extend_from_slice(sample.group_10m.data());
    data.extend_from_slice(up.data());
    TensorData::new(vec![10, h, w], data).expect("ten-band stack extent")
}

/// Stack per-sample planes `[C, H, W]` into a batch `[N, C, H, W]`.
pub fn stack<T: Real>(planes: &[&TensorData<T>]) -> TensorData<T> {
    assert!(!planes.is_empty());
    let shape = planes[0].shape();
    let mut out_shape = vec![planes.len()];
    out_shape.extend_from_slice(shape);
    let mut data = Vec::with_capacity(planes.len() * planes[0].numel());
    for p in planes {
        debug_assert_eq!(p.shape(), shape);
        data.extend_from_slice(p.data());
    }
    TensorData::new(out_shape, data).expect("stacked extent")
}
