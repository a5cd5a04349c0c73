//! Procedural dataset: correlated Gaussian random fields with controllable
//! spatial smoothness, mapped into the reflectance range. Serves as the
//! ground-truth corpus for desk-scale verification.

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::model::config::all_band_names;
use crate::tensor::{kernels, RngStream, TensorData};

use super::dataset::TileDataset;
use super::tile::{Band, Tile};

/// Specification of the synthetic distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    /// 10x10 symmetric PSD cross-band correlation, unit diagonal.
    #[serde(default = "default_correlation")]
    pub correlation: Vec<Vec<f64>>,
    /// Number of separable binomial smoothing passes; the spatial
    /// correlation length grows like sqrt(passes).
    #[serde(default = "default_smoothness")]
    pub smoothness: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_smoothness() -> usize {
    3
}

/// One-factor default: band i and j correlate as `load[i] * load[j]`.
/// PSD by construction.
fn default_correlation() -> Vec<Vec<f64>> {
    let load = [0.8, 0.8, 0.8, 0.6, 0.65, 0.65, 0.65, 0.6, 0.7, 0.7];
    (0..10)
        .map(|i| {
            (0..10)
                .map(|j| if i == j { 1.0 } else { load[i] * load[j] })
                .collect()
        })
        .collect()
}

impl SyntheticSpec {
    pub fn default_with_seed(seed: u64) -> Self {
        SyntheticSpec {
            correlation: default_correlation(),
            smoothness: default_smoothness(),
            seed,
        }
    }

    pub fn identity_with_seed(seed: u64) -> Self {
        SyntheticSpec {
            correlation: (0..10)
                .map(|i| (0..10).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            smoothness: default_smoothness(),
            seed,
        }
    }

    /// Cholesky factor of the correlation matrix, with a 1e-9 diagonal
    /// jitter as the PSD tolerance. Rejects non-PSD input.
    pub fn cholesky(&self) -> Result<Vec<Vec<f64>>, DataError> {
        let n = 10;
        if self.correlation.len() != n || self.correlation.iter().any(|r| r.len() != n) {
            return Err(DataError::Invalid {
                context: "correlation matrix".into(),
                detail: "must be 10x10".into(),
            });
        }
        for i in 0..n {
            if (self.correlation[i][i] - 1.0).abs() > 1e-9 {
                return Err(DataError::Invalid {
                    context: "correlation matrix".into(),
                    detail: format!("diagonal entry {i} is {}, expected 1", self.correlation[i][i]),
                });
            }
            for j in 0..i {
                if (self.correlation[i][j] - self.correlation[j][i]).abs() > 1e-12 {
                    return Err(DataError::Invalid {
                        context: "correlation matrix".into(),
                        detail: format!("asymmetric at ({i},{j})"),
                    });
                }
            }
        }
        let mut l = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.correlation[i][j];
                if i == j {
                    sum += 1e-9;
                }
                for k in 0..j {
                    sum -= l[i][k] * l[j][k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(DataError::Invalid {
                            context: "correlation matrix".into(),
                            detail: format!("not positive semi-definite (pivot {i})"),
                        });
                    }
                    l[i][j] = sum.sqrt();
                } else {
                    l[i][j] = sum / l[j][j];
                }
            }
        }
        Ok(l)
    }
}

/// One separable binomial pass `[1,4,6,4,1]/16` per axis, clamped borders.
fn binomial_pass(field: &mut [f64], h: usize, w: usize, scratch: &mut [f64]) {
    const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    // Horizontal.
    for i in 0..h {
        let row = &field[i * w..(i + 1) * w];
        let out = &mut scratch[i * w..(i + 1) * w];
        for j in 0..w {
            let mut acc = 0.0;
            for (t, k) in K.iter().enumerate() {
                let jj = (j + t).saturating_sub(2).min(w - 1);
                acc += k * row[jj];
            }
            out[j] = acc;
        }
    }
    // Vertical.
    for j in 0..w {
        for i in 0..h {
            let mut acc = 0.0;
            for (t, k) in K.iter().enumerate() {
                let ii = (i + t).saturating_sub(2).min(h - 1);
                acc += k * scratch[ii * w + j];
            }
            field[i * w + j] = acc;
        }
    }
}

/// Interior variance shrink of `passes` binomial passes along both axes:
/// `(C(8p, 4p) / 16^(2p))^2` per pixel; fields are rescaled by its inverse
/// square root to stay near unit variance.
fn variance_factor(passes: usize) -> f64 {
    if passes == 0 {
        return 1.0;
    }
    // Central binomial coefficient C(8p, 4p) via multiplicative formula.
    let n = 8 * passes;
    let k = 4 * passes;
    let mut ln_c = 0.0f64;
    for i in 1..=k {
        ln_c += ((n - k + i) as f64).ln() - (i as f64).ln();
    }
    let per_axis = (ln_c - (2.0 * passes as f64) * 16f64.ln()).exp();
    per_axis * per_axis
}

/// Generate `n` tiles of extent `size` x `size`. Each sample mixes ten white
/// fields by the Cholesky factor of the correlation (so cross-band
/// correlations match the spec), smooths every band with the same kernel,
/// and maps to reflectance `5000 + 1500 * field` clamped to `[0, 10000]`.
/// The 20m bands are box-downsampled from their full-resolution fields.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    n: usize,
    size: usize,
) -> Result<TileDataset, DataError> {
    if size < 2 || size % 2 != 0 {
        return Err(DataError::Invalid {
            context: "synthetic size".into(),
            detail: format!("{size} must be even and >= 2"),
        });
    }
    if spec.smoothness > 8 {
        return Err(DataError::Invalid {
            context: "smoothness".into(),
            detail: format!("{} passes exceed the supported maximum of 8", spec.smoothness),
        });
    }
    let chol = spec.cholesky()?;
    let names = all_band_names();
    let rescale = 1.0 / variance_factor(spec.smoothness).sqrt();
    let root = RngStream::new(spec.seed);
    let hw = size * size;

    let mut tiles = Vec::with_capacity(n);
    let mut scratch = vec![0.0f64; hw];
    for sample_idx in 0..n {
        let mut stream = root.substream(&format!("synth/{sample_idx}"));
        // Ten white fields, drawn band-major.
        let mut white = Vec::with_capacity(10);
        for _ in 0..10 {
            let t: TensorData<f64> = stream.normal_tensor(vec![size, size]);
            white.push(t.into_data());
        }
        let mut bands = Vec::with_capacity(10);
        for (b, name) in names.iter().enumerate() {
            // Mix, smooth, rescale.
            let mut field = vec![0.0f64; hw];
            for (k, w) in white.iter().enumerate().take(b + 1) {
                let c = chol[b][k];
                if c != 0.0 {
                    for (f, v) in field.iter_mut().zip(w) {
                        *f += c * v;
                    }
                }
            }
            for _ in 0..spec.smoothness {
                binomial_pass(&mut field, size, size, &mut scratch);
            }
            for f in field.iter_mut() {
                *f *= rescale;
            }
            let full = TensorData::new(vec![size, size], field).expect("field extent");
            let divisor = if b < 4 { 1u8 } else { 2u8 };
            let plane_f64 = if divisor == 2 {
                kernels::avg_pool2x(&full)
            } else {
                full
            };
            let plane = TensorData::new(
                plane_f64.shape().to_vec(),
                plane_f64
                    .data()
                    .iter()
                    .map(|f| (5000.0 + 1500.0 * f).clamp(0.0, 10000.0) as f32)
                    .collect(),
            )
            .expect("plane extent");
            bands.push(Band {
                name: (*name).into(),
                resolution_divisor: divisor,
                plane,
            });
        }
        let tile = Tile {
            width: size as u32,
            height: size as u32,
            bands,
        };
        tile.validate()?;
        tiles.push(tile);
    }
    Ok(TileDataset { tiles })
}
