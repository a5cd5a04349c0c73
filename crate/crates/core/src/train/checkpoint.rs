//! Checkpoint format.
//!
//! Layout, integers little-endian: magic `MSGC`, u32 version = 1,
//! length-prefixed UTF-8 config snapshot (JSON: configs, step counter, RNG
//! counters), u32 blob count, then per blob: length-prefixed name, u8 rank,
//! u32 extents, raw 4-byte floats.
//!
//! Blobs cover both parameter stores (`g/`, `d/`) and both optimizer states
//! (`gv/`, `dv/`). Reloading restores a bit-identical single-precision
//! training trajectory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DataError, TrainError};
use crate::model::ModelConfig;
use crate::tensor::{Real, TensorData};

use super::config::TrainConfig;
use super::looper::Trainer;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"MSGC";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON snapshot stored inside the checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub step: u64,
    /// Stream label -> word position.
    pub rng_counters: BTreeMap<String, u64>,
    pub last_g_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub snapshot: Snapshot,
    pub blobs: Vec<Blob>,
}

impl Checkpoint {
    pub fn blob(&self, name: &str) -> Option<&Blob> {
        self.blobs.iter().find(|b| b.name == name)
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

pub fn write_checkpoint_to(w: &mut impl Write, ckpt: &Checkpoint) -> Result<(), DataError> {
    w.write_all(&CHECKPOINT_MAGIC)?;
    write_u32(w, CHECKPOINT_VERSION)?;
    let snapshot = serde_json::to_vec(&ckpt.snapshot)?;
    write_u32(w, snapshot.len() as u32)?;
    w.write_all(&snapshot)?;
    write_u32(w, ckpt.blobs.len() as u32)?;
    for blob in &ckpt.blobs {
        write_u32(w, blob.name.len() as u32)?;
        w.write_all(blob.name.as_bytes())?;
        w.write_all(&[blob.shape.len() as u8])?;
        for &e in &blob.shape {
            write_u32(w, e as u32)?;
        }
        for v in &blob.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint_from(r: &mut impl Read) -> Result<Checkpoint, DataError> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(DataError::BadMagic {
            expected: CHECKPOINT_MAGIC,
            found: magic,
        });
    }
    let version = read_u32(r, "version")?;
    if version != CHECKPOINT_VERSION {
        return Err(DataError::UnsupportedVersion {
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let snap_len = read_u32(r, "snapshot length")? as usize;
    let mut snap_buf = vec![0u8; snap_len];
    read_exact(r, &mut snap_buf, "snapshot")?;
    let snapshot: Snapshot = serde_json::from_slice(&snap_buf)?;
    let blob_count = read_u32(r, "blob count")?;
    let mut blobs = Vec::with_capacity(blob_count as usize);
    for i in 0..blob_count {
        let name_len = read_u32(r, "blob name length")? as usize;
        let mut name_buf = vec![0u8; name_len];
        read_exact(r, &mut name_buf, "blob name")?;
        let name = String::from_utf8(name_buf).map_err(|e| DataError::Invalid {
            context: format!("blob {i} name"),
            detail: e.to_string(),
        })?;
        let mut rank = [0u8; 1];
        read_exact(r, &mut rank, "blob rank")?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            shape.push(read_u32(r, "blob extent")? as usize);
        }
        let count: usize = shape.iter().product();
        let mut raw = vec![0u8; count * 4];
        read_exact(r, &mut raw, &format!("blob {name} data"))?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        blobs.push(Blob {
            name,
            shape,
            values,
        });
    }
    Ok(Checkpoint { snapshot, blobs })
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint_to(&mut w, ckpt)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, DataError> {
    let mut r = BufReader::new(File::open(path)?);
    read_checkpoint_from(&mut r)
}

fn tensor_blob<T: Real>(name: String, data: &TensorData<T>) -> Blob {
    Blob {
        name,
        shape: data.shape().to_vec(),
        values: data.data().iter().map(|v| v.as_f64() as f32).collect(),
    }
}

fn blob_tensor<T: Real>(blob: &Blob) -> TensorData<T> {
    TensorData::new(
        blob.shape.clone(),
        blob.values.iter().map(|&v| T::from_f64(v as f64)).collect(),
    )
    .expect("blob shape consistent")
}

impl<T: Real> Trainer<T> {
    /// Snapshot the full training state.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut rng_counters = BTreeMap::new();
        rng_counters.insert("d/latent".to_string(), self.latent_d.counter());
        rng_counters.insert("g/latent".to_string(), self.latent_g.counter());
        rng_counters.insert("d/eps".to_string(), self.eps_stream.counter());

        let mut blobs = Vec::new();
        for entry in self.generator.store.iter() {
            blobs.push(tensor_blob(format!("g/{}", entry.name), &entry.data));
        }
        for entry in self.discriminator.store.iter() {
            blobs.push(tensor_blob(format!("d/{}", entry.name), &entry.data));
        }
        for (entry, state) in self.generator.store.iter().zip(self.g_opt.states()) {
            blobs.push(tensor_blob(format!("gv/{}", entry.name), state));
        }
        for (entry, state) in self.discriminator.store.iter().zip(self.d_opt.states()) {
            blobs.push(tensor_blob(format!("dv/{}", entry.name), state));
        }
        Checkpoint {
            snapshot: Snapshot {
                model: self.model_config.clone(),
                train: self.train_config.clone(),
                step: self.step,
                rng_counters,
                last_g_loss: self.last_g_loss,
            },
            blobs,
        }
    }

    /// Rebuild a trainer from a checkpoint, restoring parameters, optimizer
    /// states, step counter, and RNG positions.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, TrainError> {
        let mut trainer = Trainer::new(ckpt.snapshot.model.clone(), ckpt.snapshot.train.clone())?;

        let restore_store = |store: &mut crate::model::ParamStore<T>,
                             prefix: &str|
         -> Result<(), TrainError> {
            for entry in store.iter_mut() {
                let name = format!("{prefix}/{}", entry.name);
                let blob = ckpt.blob(&name).ok_or_else(|| {
                    TrainError::Data(DataError::Invalid {
                        context: "checkpoint".into(),
                        detail: format!("missing blob {name}"),
                    })
                })?;
                if blob.shape != entry.data.shape() {
                    return Err(TrainError::Data(DataError::Invalid {
                        context: format!("blob {name}"),
                        detail: format!("shape {:?} != {:?}", blob.shape, entry.data.shape()),
                    }));
                }
                entry.data = blob_tensor(blob);
            }
            Ok(())
        };
        restore_store(&mut trainer.generator.store, "g")?;
        restore_store(&mut trainer.discriminator.store, "d")?;

        let restore_states = |store: &crate::model::ParamStore<T>,
                              states: &mut [TensorData<T>],
                              prefix: &str|
         -> Result<(), TrainError> {
            for (entry, state) in store.iter().zip(states.iter_mut()) {
                let name = format!("{prefix}/{}", entry.name);
                let blob = ckpt.blob(&name).ok_or_else(|| {
                    TrainError::Data(DataError::Invalid {
                        context: "checkpoint".into(),
                        detail: format!("missing blob {name}"),
                    })
                })?;
                *state = blob_tensor(blob);
            }
            Ok(())
        };
        restore_states(
            &trainer.generator.store,
            trainer.g_opt.states_mut(),
            "gv",
        )?;
        restore_states(
            &trainer.discriminator.store,
            trainer.d_opt.states_mut(),
            "dv",
        )?;

        let counters = &ckpt.snapshot.rng_counters;
        let restore_counter = |stream: &mut crate::tensor::RngStream, label: &str| {
            if let Some(&c) = counters.get(label) {
                stream.set_counter(c);
            }
        };
        restore_counter(&mut trainer.latent_d, "d/latent");
        restore_counter(&mut trainer.latent_g, "g/latent");
        restore_counter(&mut trainer.eps_stream, "d/eps");
        trainer.step = ckpt.snapshot.step;
        trainer.last_g_loss = ckpt.snapshot.last_g_loss;
        Ok(trainer)
    }
}
