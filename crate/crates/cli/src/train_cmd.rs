//! `msgan train`: run the training loop, writing a metrics CSV and a final
//! checkpoint.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use msgan_core::data::{
    filter_sample, generate_synthetic, normalize, FilterThresholds, MultiResSample, TileDataset,
};
use msgan_core::tensor::Real;
use msgan_core::train::{
    load_checkpoint, save_checkpoint, steps_per_epoch, train_loop, StepMetrics, Trainer,
};

use crate::config::{load_run_config, RunConfigFile};
use crate::precision::Precision;

fn load_samples<T: Real>(
    cfg: &RunConfigFile,
    data_override: Option<&Path>,
) -> anyhow::Result<Vec<MultiResSample<T>>> {
    let dataset = if let Some(dir) = data_override {
        TileDataset::load_dir(dir)?
    } else if let Some(data) = &cfg.data {
        if let Some(dir) = &data.dir {
            TileDataset::load_dir(dir)?
        } else if let Some(synth) = &data.synthetic {
            generate_synthetic(&synth.to_spec(), synth.count, synth.size)?
        } else {
            anyhow::bail!("config data section names neither a dir nor a synthetic spec");
        }
    } else {
        anyhow::bail!("no data: pass --data or add a data section to the config");
    };

    let thresholds = FilterThresholds::default();
    let mut kept = Vec::new();
    let mut dropped = 0usize;
    for tile in &dataset.tiles {
        let sample: MultiResSample<T> = normalize(tile)?;
        if filter_sample(&sample, &thresholds).keep() {
            kept.push(sample);
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        println!("filtered out {dropped}/{} tiles", dataset.tiles.len());
    }
    Ok(kept)
}

fn run_typed<T: Real>(
    config_path: Option<&Path>,
    data: Option<&Path>,
    out: &Path,
    steps: Option<u64>,
    resume: Option<&Path>,
) -> anyhow::Result<i32> {
    let mut trainer: Trainer<T>;
    let cfg: RunConfigFile;
    match (resume, config_path) {
        (Some(ckpt_path), _) => {
            let ckpt = load_checkpoint(ckpt_path)?;
            cfg = RunConfigFile {
                model: ckpt.snapshot.model.clone(),
                train: ckpt.snapshot.train.clone(),
                data: None,
            };
            trainer = Trainer::from_checkpoint(&ckpt)?;
            println!("resumed from step {}", trainer.step_count());
        }
        (None, Some(path)) => {
            cfg = load_run_config(path)?;
            trainer = Trainer::new(cfg.model.clone(), cfg.train.clone())?;
        }
        (None, None) => anyhow::bail!("pass --config or --resume"),
    }

    let samples = load_samples::<T>(&cfg, data)?;
    let spe = steps_per_epoch(samples.len(), trainer.train_config.batch_size);
    if spe == 0 {
        anyhow::bail!(
            "{} samples cannot fill one batch of {}",
            samples.len(),
            trainer.train_config.batch_size
        );
    }
    let total_steps = steps.unwrap_or(spe * trainer.train_config.epochs as u64);

    std::fs::create_dir_all(out)?;
    let metrics_path = out.join("metrics.csv");
    let mut metrics = BufWriter::new(File::create(&metrics_path)?);
    writeln!(metrics, "{}", StepMetrics::CSV_HEADER)?;

    let mut rows = 0u64;
    train_loop(&mut trainer, &samples, total_steps, |m| {
        writeln!(metrics, "{}", m.csv_row()).expect("metrics write");
        rows += 1;
    })?;
    metrics.flush()?;

    let ckpt_path = out.join("checkpoint.msgc");
    save_checkpoint(&ckpt_path, &trainer.checkpoint())?;
    println!(
        "trained to step {} ({rows} metric rows) -> {}",
        trainer.step_count(),
        ckpt_path.display()
    );
    Ok(0)
}

pub fn run(
    precision: Precision,
    config: Option<&Path>,
    data: Option<&Path>,
    out: &Path,
    steps: Option<u64>,
    resume: Option<&Path>,
) -> anyhow::Result<i32> {
    match precision {
        Precision::Single => run_typed::<f32>(config, data, out, steps, resume),
        Precision::Double => run_typed::<f64>(config, data, out, steps, resume),
    }
}
