//! `msgan sample`: draw tiles from a trained generator, deterministically
//! per seed.

use std::path::Path;

use msgan_core::data::{write_tile, Band, Tile};
use msgan_core::model::{BandGroup, ModelConfig, ScaleKey, Variant, GROUP_10M, GROUP_20M};
use msgan_core::tensor::{Real, RngStream, Tape, TensorData};
use msgan_core::train::{load_checkpoint, read_images, Trainer};

use crate::precision::Precision;

fn plane_band<T: Real>(
    name: &str,
    divisor: u8,
    data: &TensorData<T>,
    channel: usize,
) -> Band {
    let (h, w) = (data.shape()[2], data.shape()[3]);
    let hw = h * w;
    let plane = TensorData::new(
        vec![h, w],
        data.data()[channel * hw..(channel + 1) * hw]
            .iter()
            .map(|v| {
                // Clamp the critic-side range before denormalizing; the
                // generator head is linear and can overshoot [-1, 1].
                let n = v.as_f64().clamp(-1.0, 1.0);
                ((n + 1.0) * 5000.0).clamp(0.0, 10000.0) as f32
            })
            .collect(),
    )
    .expect("plane extent");
    Band {
        name: name.into(),
        resolution_divisor: divisor,
        plane,
    }
}

/// Assemble one generated image set (batch of 1) into a tile.
fn images_to_tile<T: Real>(
    config: &ModelConfig,
    images: &msgan_core::model::ScaleImageSet<T>,
) -> anyhow::Result<Tile> {
    let top = config.top_resolution;
    let mut bands = Vec::new();
    match config.variant {
        Variant::Rgb => {
            let img = images.require(ScaleKey::new(top, BandGroup::Rgb))?;
            for (c, name) in ["blue", "green", "red"].iter().enumerate() {
                bands.push(plane_band(name, 1, img, c));
            }
        }
        Variant::TenbandInterp => {
            let img = images.require(ScaleKey::new(top, BandGroup::AllBands))?;
            for (c, name) in GROUP_10M
                .band_names
                .iter()
                .chain(GROUP_20M.band_names)
                .enumerate()
            {
                bands.push(plane_band(name, 1, img, c));
            }
        }
        Variant::TenbandGrouped => {
            let ten = images.require(ScaleKey::new(top, BandGroup::TenMeter))?;
            for (c, name) in GROUP_10M.band_names.iter().enumerate() {
                bands.push(plane_band(name, 1, ten, c));
            }
            let twenty = images.require(ScaleKey::new(top / 2, BandGroup::TwentyMeter))?;
            for (c, name) in GROUP_20M.band_names.iter().enumerate() {
                bands.push(plane_band(name, 2, twenty, c));
            }
        }
        Variant::TenbandHybrid => {
            let ten = images.require(ScaleKey::new(top, BandGroup::TenMeter))?;
            for (c, name) in GROUP_10M.band_names.iter().enumerate() {
                bands.push(plane_band(name, 1, ten, c));
            }
            // The 20m bands are channels 4..10 of the ten-band image one
            // octave below the top.
            let all = images.require(ScaleKey::new(top / 2, BandGroup::AllBands))?;
            for (c, name) in GROUP_20M.band_names.iter().enumerate() {
                bands.push(plane_band(name, 2, all, 4 + c));
            }
        }
    }
    Ok(Tile {
        width: top as u32,
        height: top as u32,
        bands,
    })
}

fn run_typed<T: Real>(
    checkpoint: &Path,
    count: usize,
    seed: u64,
    out: &Path,
) -> anyhow::Result<i32> {
    let ckpt = load_checkpoint(checkpoint)?;
    let trainer: Trainer<T> = Trainer::from_checkpoint(&ckpt)?;
    let gen = &trainer.generator;
    let config = &trainer.model_config;
    std::fs::create_dir_all(out)?;

    let mut stream = RngStream::new(seed).substream("sample");
    for i in 0..count {
        let z: TensorData<T> = stream.normal_tensor(vec![1, config.latent_dim]);
        let mut tape = Tape::<T>::new();
        let params = gen.store.bind(&mut tape, false)?;
        let zv = tape.leaf(z, false)?;
        let images = gen.forward(&mut tape, &params, zv)?;
        let data = read_images(&tape, &images);
        let tile = images_to_tile(config, &data)?;
        write_tile(out.join(format!("sample_{i:05}.mstl")), &tile)?;
    }
    println!("wrote {count} sampled tiles to {}", out.display());
    Ok(0)
}

pub fn run(
    precision: Precision,
    checkpoint: &Path,
    count: usize,
    seed: u64,
    out: &Path,
) -> anyhow::Result<i32> {
    match precision {
        Precision::Single => run_typed::<f32>(checkpoint, count, seed, out),
        Precision::Double => run_typed::<f64>(checkpoint, count, seed, out),
    }
}
