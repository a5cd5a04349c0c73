//! Bit-exact multispectral tile storage.
//!
//! Layout, all integers little-endian:
//! magic `MSTL`, u32 version = 1, u32 width, u32 height, u32 band count,
//! then per band: u32 name length + UTF-8 name, u8 resolution divisor,
//! raw 4-byte floats row-major at the band's own extent.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::DataError;
use crate::tensor::TensorData;

pub const TILE_MAGIC: [u8; 4] = *b"MSTL";
pub const TILE_VERSION: u32 = 1;

/// One spectral band: a plane of reflectance values in `[0, 10000]` at
/// `(height / divisor, width / divisor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub name: String,
    pub resolution_divisor: u8,
    pub plane: TensorData<f32>,
}

/// One training tile at full extent `(width, height)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub width: u32,
    pub height: u32,
    pub bands: Vec<Band>,
}

impl Tile {
    pub fn band(&self, name: &str) -> Option<&Band> {
        self.bands.iter().find(|b| b.name == name)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.bands.is_empty() {
            return Err(DataError::EmptyBands);
        }
        if self.width % 2 != 0 || self.height % 2 != 0 {
            return Err(DataError::Invalid {
                context: "tile extent".into(),
                detail: format!("{}x{} not divisible by 2", self.width, self.height),
            });
        }
        for band in &self.bands {
            if !matches!(band.resolution_divisor, 1 | 2) {
                return Err(DataError::Invalid {
                    context: format!("band {}", band.name),
                    detail: format!("resolution divisor {} not in {{1,2}}", band.resolution_divisor),
                });
            }
            let d = band.resolution_divisor as u32;
            let expect = (self.height / d, self.width / d);
            let got = (band.plane.shape()[0] as u32, band.plane.shape()[1] as u32);
            if band.plane.rank() != 2 || got != expect {
                return Err(DataError::BandExtent {
                    band: band.name.clone(),
                    divisor: band.resolution_divisor,
                    got: (got.1, got.0),
                    expected: (expect.1, expect.0),
                });
            }
            let bad = band
                .plane
                .data()
                .iter()
                .filter(|v| !v.is_finite() || **v < 0.0 || **v > 10000.0)
                .count();
            if bad > 0 {
                return Err(DataError::OutOfRange { count: bad });
            }
        }
        Ok(())
    }
}

fn write_u32(w: &mut impl Write, v: u32) -> Result<(), DataError> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], context: &str) -> Result<(), DataError> {
    r.read_exact(buf).map_err(|_| DataError::Truncated {
        context: context.into(),
    })
}

fn read_u32(r: &mut impl Read, context: &str) -> Result<u32, DataError> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, context)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn write_tile_to(w: &mut impl Write, tile: &Tile) -> Result<(), DataError> {
    tile.validate()?;
    w.write_all(&TILE_MAGIC)?;
    write_u32(w, TILE_VERSION)?;
    write_u32(w, tile.width)?;
    write_u32(w, tile.height)?;
    write_u32(w, tile.bands.len() as u32)?;
    for band in &tile.bands {
        write_u32(w, band.name.len() as u32)?;
        w.write_all(band.name.as_bytes())?;
        w.write_all(&[band.resolution_divisor])?;
        for v in band.plane.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_tile_from(r: &mut impl Read) -> Result<Tile, DataError> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic, "magic")?;
    if magic != TILE_MAGIC {
        return Err(DataError::BadMagic {
            expected: TILE_MAGIC,
            found: magic,
        });
    }
    let version = read_u32(r, "version")?;
    if version != TILE_VERSION {
        return Err(DataError::UnsupportedVersion {
            expected: TILE_VERSION,
            found: version,
        });
    }
    let width = read_u32(r, "width")?;
    let height = read_u32(r, "height")?;
    let band_count = read_u32(r, "band count")?;
    let mut bands = Vec::with_capacity(band_count as usize);
    for i in 0..band_count {
        let name_len = read_u32(r, "band name length")? as usize;
        let mut name_buf = vec![0u8; name_len];
        read_exact(r, &mut name_buf, "band name")?;
        let name = String::from_utf8(name_buf).map_err(|e| DataError::Invalid {
            context: format!("band {i} name"),
            detail: e.to_string(),
        })?;
        let mut div = [0u8; 1];
        read_exact(r, &mut div, "resolution divisor")?;
        let divisor = div[0];
        if !matches!(divisor, 1 | 2) {
            return Err(DataError::Invalid {
                context: format!("band {name}"),
                detail: format!("resolution divisor {divisor} not in {{1,2}}"),
            });
        }
        let (h, w) = (height / divisor as u32, width / divisor as u32);
        let count = (h as usize) * (w as usize);
        let mut raw = vec![0u8; count * 4];
        read_exact(r, &mut raw, &format!("band {name} plane"))?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let plane = TensorData::new(vec![h as usize, w as usize], data)
            .expect("plane length fixed by extent");
        bands.push(Band {
            name,
            resolution_divisor: divisor,
            plane,
        });
    }
    let tile = Tile {
        width,
        height,
        bands,
    };
    tile.validate()?;
    Ok(tile)
}

pub fn write_tile(path: impl AsRef<Path>, tile: &Tile) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tile_to(&mut w, tile)?;
    w.flush()?;
    Ok(())
}

pub fn read_tile(path: impl AsRef<Path>) -> Result<Tile, DataError> {
    let mut r = BufReader::new(File::open(path)?);
    read_tile_from(&mut r)
}
