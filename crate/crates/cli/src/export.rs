//! `msgan export`: render three named bands of a tile as a binary PPM,
//! mapping normalized [-1, 1] linearly onto [0, 255] with clamping.

use std::io::Write;
use std::path::Path;

use msgan_core::data::read_tile;

fn resolve_band_name(raw: &str) -> &str {
    match raw {
        "r" => "red",
        "g" => "green",
        "b" => "blue",
        other => other,
    }
}

/// Reflectance -> byte: normalize to [-1, 1], then round-half-up onto
/// [0, 255].
fn to_byte(reflectance: f32) -> u8 {
    let n = (reflectance as f64 / 5000.0 - 1.0).clamp(-1.0, 1.0);
    let scaled = (n + 1.0) / 2.0 * 255.0;
    (scaled + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn run(tile_path: &Path, bands: &str, out: &Path) -> anyhow::Result<i32> {
    let tile = read_tile(tile_path)?;
    let names: Vec<&str> = bands.split(',').map(|s| resolve_band_name(s.trim())).collect();
    if names.len() != 3 {
        anyhow::bail!("--bands needs exactly three comma-separated names, got {}", names.len());
    }
    let planes: Vec<_> = names
        .iter()
        .map(|name| {
            tile.band(name)
                .ok_or_else(|| anyhow::anyhow!("unknown band name '{name}'"))
        })
        .collect::<Result<_, _>>()?;
    let shape = planes[0].plane.shape().to_vec();
    if planes.iter().any(|b| b.plane.shape() != shape) {
        anyhow::bail!("selected bands have different extents; pick bands of one resolution group");
    }
    let (h, w) = (shape[0], shape[1]);

    let mut buf = Vec::with_capacity(3 * h * w + 32);
    write!(buf, "P6\n{w} {h}\n255\n")?;
    for i in 0..h * w {
        for band in &planes {
            buf.push(to_byte(band.plane.data()[i]));
        }
    }
    std::fs::write(out, &buf)?;
    println!("wrote {}x{} PPM to {}", w, h, out.display());
    Ok(0)
}
