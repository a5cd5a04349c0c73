//! Threshold predicates standing in for cloud and water screening.

use crate::tensor::Real;

use super::sample::MultiResSample;

/// Filter thresholds over normalized (`[-1, 1]`) samples.
#[derive(Debug, Clone, Copy)]
pub struct FilterThresholds {
    /// Drop when the mean of the blue/green/red channels exceeds this.
    pub cloud_mean_rgb: f64,
    /// A pixel counts as water when its NIR value is below this.
    pub water_nir: f64,
    /// Drop when the water pixel fraction exceeds this.
    pub water_fraction: f64,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        FilterThresholds {
            cloud_mean_rgb: 0.6,
            water_nir: -0.7,
            water_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterReason {
    Cloud,
    Water,
}

impl FilterReason {
    pub fn label(self) -> &'static str {
        match self {
            FilterReason::Cloud => "cloud",
            FilterReason::Water => "water",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Drop(FilterReason),
}

impl FilterDecision {
    pub fn keep(self) -> bool {
        matches!(self, FilterDecision::Keep)
    }
}

/// Keep/drop decision over a normalized sample.
pub fn filter_sample<T: Real>(
    sample: &MultiResSample<T>,
    thresholds: &FilterThresholds,
) -> FilterDecision {
    let g10 = &sample.group_10m;
    let hw = g10.shape()[1] * g10.shape()[2];

    let rgb = &g10.data()[..3 * hw];
    let mean_rgb: f64 = rgb.iter().map(|v| v.as_f64()).sum::<f64>() / (3 * hw) as f64;
    if mean_rgb > thresholds.cloud_mean_rgb {
        return FilterDecision::Drop(FilterReason::Cloud);
    }

    let nir = &g10.data()[3 * hw..4 * hw];
    let water = nir
        .iter()
        .filter(|v| v.as_f64() < thresholds.water_nir)
        .count();
    if water as f64 / hw as f64 > thresholds.water_fraction {
        return FilterDecision::Drop(FilterReason::Water);
    }

    FilterDecision::Keep
}
