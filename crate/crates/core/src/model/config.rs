//! Architecture-family configuration and band-group metadata.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Base channel schedule: 512 up to 32x32, then halving per octave
/// (256 at 64, 128 at 128, 64 at 256).
pub fn base_channels(scale: usize) -> usize {
    (16384 / scale).min(512)
}

/// Which spectral bands an image carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandGroup {
    /// Blue, green, red.
    Rgb,
    /// All ten bands on one grid.
    AllBands,
    /// The four 10m bands.
    TenMeter,
    /// The six 20m bands.
    TwentyMeter,
}

impl BandGroup {
    pub fn channels(self) -> usize {
        match self {
            BandGroup::Rgb => 3,
            BandGroup::AllBands => 10,
            BandGroup::TenMeter => 4,
            BandGroup::TwentyMeter => 6,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BandGroup::Rgb => "rgb",
            BandGroup::AllBands => "all",
            BandGroup::TenMeter => "10m",
            BandGroup::TwentyMeter => "20m",
        }
    }
}

/// Static description of one resolution group of Sentinel-2 bands.
#[derive(Debug, Clone, Copy)]
pub struct BandGroupSpec {
    pub group: BandGroup,
    pub band_names: &'static [&'static str],
    /// 1 for 10m bands, 2 for 20m bands.
    pub resolution_divisor: u8,
}

impl BandGroupSpec {
    pub fn channel_count(&self) -> usize {
        self.band_names.len()
    }
}

pub const GROUP_10M: BandGroupSpec = BandGroupSpec {
    group: BandGroup::TenMeter,
    band_names: &["blue", "green", "red", "nir"],
    resolution_divisor: 1,
};

pub const GROUP_20M: BandGroupSpec = BandGroupSpec {
    group: BandGroup::TwentyMeter,
    band_names: &[
        "red_edge_1",
        "red_edge_2",
        "red_edge_3",
        "narrow_nir",
        "swir1",
        "swir2",
    ],
    resolution_divisor: 2,
};

/// All ten band names, 10m group first.
pub fn all_band_names() -> Vec<&'static str> {
    let mut names = GROUP_10M.band_names.to_vec();
    names.extend_from_slice(GROUP_20M.band_names);
    names
}

/// Experiment variant families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Three-channel output at every scale.
    Rgb,
    /// Ten channels at every scale; 20m bands live on the 10m grid via
    /// nearest-neighbor upsampling in the data pipeline.
    TenbandInterp,
    /// Two band groups emitted at their native resolutions and processed by
    /// parallel discriminator branches that merge two octaves below the top.
    TenbandGrouped,
    /// Only the 10m group at the top scale; all ten bands below.
    TenbandHybrid,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Rgb => "rgb",
            Variant::TenbandInterp => "tenband_interp",
            Variant::TenbandGrouped => "tenband_grouped",
            Variant::TenbandHybrid => "tenband_hybrid",
        }
    }
}

/// One image position in the generator-to-discriminator contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScaleKey {
    pub resolution: usize,
    pub group: BandGroup,
}

impl ScaleKey {
    pub fn new(resolution: usize, group: BandGroup) -> Self {
        ScaleKey { resolution, group }
    }
}

fn default_top_resolution() -> usize {
    256
}

fn default_latent_dim() -> usize {
    512
}

fn default_width_factor() -> f64 {
    1.0
}

/// Declarative description of one generator/discriminator pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    #[serde(default = "default_top_resolution")]
    pub top_resolution: usize,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    /// Multiplies every channel count in the schedule; 1/2 is the
    /// reduced-filter family.
    #[serde(default = "default_width_factor")]
    pub width_factor: f64,
    /// Keep one 3x3 convolution per block and emit images only at
    /// {4, 16, 64, 256}.
    #[serde(default)]
    pub conv_thinning: bool,
    /// Output channel count per band group; fixed by the variant.
    #[serde(default)]
    pub m_channels: Option<Vec<usize>>,
}

impl ModelConfig {
    pub fn new(variant: Variant, top_resolution: usize) -> Self {
        ModelConfig {
            variant,
            top_resolution,
            latent_dim: default_latent_dim(),
            width_factor: default_width_factor(),
            conv_thinning: false,
            m_channels: None,
        }
    }

    pub fn with_width(mut self, width_factor: f64) -> Self {
        self.width_factor = width_factor;
        self
    }

    pub fn with_latent_dim(mut self, latent_dim: usize) -> Self {
        self.latent_dim = latent_dim;
        self
    }

    pub fn with_conv_thinning(mut self, thinning: bool) -> Self {
        self.conv_thinning = thinning;
        self
    }

    /// Channel counts per band group as fixed by the variant.
    pub fn variant_m_channels(&self) -> Vec<usize> {
        match self.variant {
            Variant::Rgb => vec![3],
            Variant::TenbandInterp => vec![10],
            Variant::TenbandGrouped | Variant::TenbandHybrid => vec![4, 6],
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let t = self.top_resolution;
        if !t.is_power_of_two() || !(4..=256).contains(&t) {
            return Err(ModelError::UnsupportedConfig(format!(
                "top_resolution {t} must be a power of two in [4, 256]"
            )));
        }
        if self.latent_dim == 0 {
            return Err(ModelError::UnsupportedConfig("latent_dim must be positive".into()));
        }
        if !(self.width_factor > 0.0 && self.width_factor <= 1.0) {
            return Err(ModelError::UnsupportedConfig(format!(
                "width_factor {} must be in (0, 1]",
                self.width_factor
            )));
        }
        if self.conv_thinning {
            if !matches!(t, 4 | 16 | 64 | 256) {
                return Err(ModelError::UnsupportedConfig(format!(
                    "conv_thinning emits only scales 4/16/64/256; top_resolution {t} is not one of them"
                )));
            }
            if self.variant == Variant::TenbandGrouped {
                return Err(ModelError::UnsupportedConfig(
                    "conv_thinning is not defined for the grouped variant".into(),
                ));
            }
        }
        match self.variant {
            Variant::TenbandGrouped if t < 16 => {
                return Err(ModelError::UnsupportedConfig(format!(
                    "grouped variant needs top_resolution >= 16 (branches merge at top/4), got {t}"
                )));
            }
            Variant::TenbandHybrid if t < 8 => {
                return Err(ModelError::UnsupportedConfig(format!(
                    "hybrid variant needs top_resolution >= 8 (ten-band scales below the top), got {t}"
                )));
            }
            _ => {}
        }
        if let Some(m) = &self.m_channels {
            let fixed = self.variant_m_channels();
            if *m != fixed {
                return Err(ModelError::UnsupportedConfig(format!(
                    "m_channels {m:?} conflicts with variant {} (expects {fixed:?})",
                    self.variant.label()
                )));
            }
        }
        Ok(())
    }

    /// Scales carrying generator blocks and emitted images, ascending.
    pub fn scale_list(&self) -> Vec<usize> {
        if self.conv_thinning {
            [4usize, 16, 64, 256]
                .into_iter()
                .filter(|s| *s <= self.top_resolution)
                .collect()
        } else {
            let mut scales = Vec::new();
            let mut s = 4;
            while s <= self.top_resolution {
                scales.push(s);
                s *= 2;
            }
            scales
        }
    }

    /// Width-scaled channel count at a scale (floor, minimum 1).
    pub fn channels(&self, scale: usize) -> usize {
        (((base_channels(scale) as f64) * self.width_factor).floor() as usize).max(1)
    }

    /// Output channels of the image emitted for `group`.
    pub fn group_channels(&self, group: BandGroup) -> usize {
        group.channels()
    }

    /// The ordered image contract between generator and discriminator:
    /// which (resolution, band group) images exist for this variant.
    pub fn image_plan(&self) -> Vec<ScaleKey> {
        let scales = self.scale_list();
        let top = self.top_resolution;
        let mut plan = Vec::new();
        for &s in &scales {
            match self.variant {
                Variant::Rgb => plan.push(ScaleKey::new(s, BandGroup::Rgb)),
                Variant::TenbandInterp => plan.push(ScaleKey::new(s, BandGroup::AllBands)),
                Variant::TenbandGrouped => {
                    plan.push(ScaleKey::new(s, BandGroup::TenMeter));
                    if s <= top / 2 {
                        plan.push(ScaleKey::new(s, BandGroup::TwentyMeter));
                    }
                }
                Variant::TenbandHybrid => {
                    if s == top {
                        plan.push(ScaleKey::new(s, BandGroup::TenMeter));
                    } else {
                        plan.push(ScaleKey::new(s, BandGroup::AllBands));
                    }
                }
            }
        }
        plan
    }
}
