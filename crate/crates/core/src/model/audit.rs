//! Shape audit: trace both networks symbolically and compare every layer
//! against the published schedules.
//!
//! The expected side is generated from literal channel tables and layout
//! rules written down here; the computed side traces the builder plans. The
//! two paths share no arithmetic, so a builder regression surfaces as a
//! mismatched row.

use super::config::{ModelConfig, Variant};
use super::plan::{discriminator_plan, generator_plan, AbsorbPlan, DiscBlockPlan};
use crate::error::ModelError;

/// One traced layer: block label, operation, activation, output (C, H, W).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub block: String,
    pub operation: String,
    pub activation: String,
    pub shape: (usize, usize, usize),
}

impl TraceRow {
    fn new(
        block: impl Into<String>,
        operation: impl Into<String>,
        activation: impl Into<String>,
        shape: (usize, usize, usize),
    ) -> Self {
        TraceRow {
            block: block.into(),
            operation: operation.into(),
            activation: activation.into(),
            shape,
        }
    }
}

/// One audit line: the expected row, the computed row (if the computed trace
/// has a row at this position), and the verdict.
#[derive(Debug, Clone)]
pub struct AuditRow {
    pub expected: TraceRow,
    pub computed: Option<TraceRow>,
    pub matches: bool,
}

#[derive(Debug, Clone)]
pub struct ShapeAudit {
    pub generator: Vec<AuditRow>,
    pub discriminator: Vec<AuditRow>,
}

impl ShapeAudit {
    pub fn all_match(&self) -> bool {
        self.generator.iter().chain(&self.discriminator).all(|r| r.matches)
    }

    pub fn mismatch_count(&self) -> usize {
        self.generator
            .iter()
            .chain(&self.discriminator)
            .filter(|r| !r.matches)
            .count()
    }
}

fn zip_rows(expected: Vec<TraceRow>, computed: Vec<TraceRow>) -> Vec<AuditRow> {
    let mut rows = Vec::with_capacity(expected.len().max(computed.len()));
    let mut computed = computed.into_iter();
    for e in expected {
        let c = computed.next();
        let matches = c.as_ref() == Some(&e);
        rows.push(AuditRow {
            expected: e,
            computed: c,
            matches,
        });
    }
    for extra in computed {
        rows.push(AuditRow {
            expected: TraceRow::new("", "(end of schedule)", "-", (0, 0, 0)),
            computed: Some(extra),
            matches: false,
        });
    }
    rows
}

/// Audit a configuration. Exact match is required row by row.
pub fn shape_audit(config: &ModelConfig) -> Result<ShapeAudit, ModelError> {
    config.validate()?;
    let gen = zip_rows(expected_generator_rows(config), trace_generator(config)?);
    let disc = zip_rows(
        expected_discriminator_rows(config),
        trace_discriminator(config)?,
    );
    Ok(ShapeAudit {
        generator: gen,
        discriminator: disc,
    })
}

/// Exact trainable parameter total for both networks of a configuration.
pub fn parameter_count(config: &ModelConfig) -> Result<usize, ModelError> {
    Ok(generator_plan(config)?.parameter_count() + discriminator_plan(config)?.parameter_count())
}

// ---------------------------------------------------------------------------
// Computed side: plan traces
// ---------------------------------------------------------------------------

fn trace_generator(config: &ModelConfig) -> Result<Vec<TraceRow>, ModelError> {
    let plan = generator_plan(config)?;
    let mut rows = Vec::new();
    rows.push(TraceRow::new(
        "",
        "Latent Vector",
        "Norm",
        (config.latent_dim, 1, 1),
    ));
    let mut res = 4;
    let mut block_no = 0;
    for b in &plan.blocks {
        block_no += 1;
        let label = format!("{block_no}.");
        let mut first = true;
        if let Some(lm) = b.latent_map {
            rows.push(TraceRow::new(
                label.clone(),
                "Conv 4x4",
                "LReLU",
                (lm.out_w / 16, 4, 4),
            ));
            first = false;
        }
        for _ in 0..b.upsamples {
            res *= 2;
            let carried = b.convs[0].cin;
            rows.push(TraceRow::new("", "Upsample", "-", (carried, res, res)));
        }
        for c in &b.convs {
            let lbl = if first { label.clone() } else { String::new() };
            first = false;
            rows.push(TraceRow::new(lbl, "Conv 3x3", "LReLU", (c.cout, res, res)));
        }
    }
    Ok(rows)
}

fn trace_disc_blocks(
    config: &ModelConfig,
    blocks: &[DiscBlockPlan],
    mut feat: usize,
    rows: &mut Vec<TraceRow>,
    image_no: &mut usize,
    block_no: &mut usize,
    ends_at_head: bool,
) {
    for (i, b) in blocks.iter().enumerate() {
        let s = b.scale;
        match &b.absorb {
            AbsorbPlan::FromImage { key, cout } => {
                *image_no += 1;
                rows.push(TraceRow::new(
                    "",
                    format!("Image {image_no}"),
                    "-",
                    (key.group.channels(), s, s),
                ));
                rows.push(TraceRow::new("", "From RGB", "-", (*cout, s, s)));
                feat = *cout;
            }
            AbsorbPlan::Concat { keys } => {
                *image_no += 1;
                let m: usize = keys.iter().map(|k| config.group_channels(k.group)).sum();
                rows.push(TraceRow::new("", format!("Image {image_no}"), "-", (m, s, s)));
                feat += m;
                rows.push(TraceRow::new("", "Concat", "-", (feat, s, s)));
            }
        }
        *block_no += 1;
        rows.push(TraceRow::new(
            format!("{block_no}."),
            "MiniBatchStd",
            "-",
            (feat + 1, s, s),
        ));
        for c in &b.convs {
            rows.push(TraceRow::new("", "Conv 3x3", "LReLU", (c.cout, s, s)));
            feat = c.cout;
        }
        let mut res = s;
        for _ in 0..b.pools {
            res /= 2;
            rows.push(TraceRow::new("", "Max Pool", "-", (feat, res, res)));
        }
        if ends_at_head && i + 1 == blocks.len() {
            rows.push(TraceRow::new("", "Fully Connected", "Linear", (1, 1, 1)));
        }
    }
}

fn trace_discriminator(config: &ModelConfig) -> Result<Vec<TraceRow>, ModelError> {
    let plan = discriminator_plan(config)?;
    let mut rows = Vec::new();
    let mut image_no = 0;
    let mut block_no = 0;
    if plan.trunk.is_empty() {
        trace_disc_blocks(
            config,
            &plan.branches[0].blocks,
            0,
            &mut rows,
            &mut image_no,
            &mut block_no,
            true,
        );
    } else {
        for br in &plan.branches {
            trace_disc_blocks(config, &br.blocks, 0, &mut rows, &mut image_no, &mut block_no, false);
        }
        let merged: usize = plan.branches.iter().map(|b| b.out_channels).sum();
        let merge_scale = plan.trunk[0].scale;
        rows.push(TraceRow::new(
            "",
            "Merge Concat",
            "-",
            (merged, merge_scale, merge_scale),
        ));
        trace_disc_blocks(
            config,
            &plan.trunk,
            merged,
            &mut rows,
            &mut image_no,
            &mut block_no,
            true,
        );
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Expected side: literal schedules
// ---------------------------------------------------------------------------

/// Published channel schedule, scale -> channels at width 1.
const TABLE_CHANNELS: &[(usize, usize)] = &[
    (4, 512),
    (8, 512),
    (16, 512),
    (32, 512),
    (64, 256),
    (128, 128),
    (256, 64),
];

fn table_channels(scale: usize, width: f64) -> usize {
    let base = TABLE_CHANNELS
        .iter()
        .find(|(s, _)| *s == scale)
        .map(|(_, c)| *c)
        .expect("scale within published schedule");
    (((base as f64) * width).floor() as usize).max(1)
}

fn expected_generator_rows(config: &ModelConfig) -> Vec<TraceRow> {
    let w = config.width_factor;
    let scales = config.scale_list();
    let mut rows = Vec::new();
    rows.push(TraceRow::new(
        "",
        "Latent Vector",
        "Norm",
        (config.latent_dim, 1, 1),
    ));
    let convs_per_block = if config.conv_thinning { 1 } else { 2 };
    for (i, &s) in scales.iter().enumerate() {
        let label = format!("{}.", i + 1);
        let c = table_channels(s, w);
        if i == 0 {
            rows.push(TraceRow::new(label, "Conv 4x4", "LReLU", (c, 4, 4)));
            rows.push(TraceRow::new("", "Conv 3x3", "LReLU", (c, 4, 4)));
            continue;
        }
        let prev = scales[i - 1];
        let carried = table_channels(prev, w);
        let mut res = prev;
        while res < s {
            res *= 2;
            rows.push(TraceRow::new("", "Upsample", "-", (carried, res, res)));
        }
        for j in 0..convs_per_block {
            let lbl = if j == 0 { label.clone() } else { String::new() };
            rows.push(TraceRow::new(lbl, "Conv 3x3", "LReLU", (c, s, s)));
        }
    }
    rows
}

/// Expected rows of one top-down path. `m_at(scale)` gives the image
/// channels concatenated/absorbed per scale; `entry` the From-RGB output.
#[allow(clippy::too_many_arguments)]
fn expected_path_rows(
    config: &ModelConfig,
    scales: &[usize],
    m_at: impl Fn(usize) -> usize,
    entry_from_image: bool,
    mut feat: usize,
    rows: &mut Vec<TraceRow>,
    image_no: &mut usize,
    block_no: &mut usize,
    ends_at_head: bool,
) {
    let w = config.width_factor;
    for (i, &s) in scales.iter().enumerate() {
        let c = table_channels(s, w);
        let m = m_at(s);
        *image_no += 1;
        rows.push(TraceRow::new("", format!("Image {image_no}"), "-", (m, s, s)));
        if i == 0 && entry_from_image {
            rows.push(TraceRow::new("", "From RGB", "-", (c, s, s)));
            feat = c;
        } else {
            feat += m;
            rows.push(TraceRow::new("", "Concat", "-", (feat, s, s)));
        }
        *block_no += 1;
        rows.push(TraceRow::new(
            format!("{block_no}."),
            "MiniBatchStd",
            "-",
            (feat + 1, s, s),
        ));
        let is_last = i + 1 == scales.len();
        let head_block = is_last && ends_at_head;
        let next = match scales.get(i + 1) {
            Some(&n) => n,
            None => s / 2,
        };
        rows.push(TraceRow::new("", "Conv 3x3", "LReLU", (c, s, s)));
        feat = c;
        if !config.conv_thinning {
            let c2 = if head_block {
                table_channels(4, w)
            } else {
                table_channels(next, w)
            };
            rows.push(TraceRow::new("", "Conv 3x3", "LReLU", (c2, s, s)));
            feat = c2;
        }
        if head_block {
            rows.push(TraceRow::new("", "Fully Connected", "Linear", (1, 1, 1)));
        } else {
            let mut res = s;
            while res > next {
                res /= 2;
                rows.push(TraceRow::new("", "Max Pool", "-", (feat, res, res)));
            }
        }
    }
}

fn expected_discriminator_rows(config: &ModelConfig) -> Vec<TraceRow> {
    let mut scales = config.scale_list();
    scales.reverse();
    let top = config.top_resolution;
    let w = config.width_factor;
    let mut rows = Vec::new();
    let mut image_no = 0;
    let mut block_no = 0;

    match config.variant {
        Variant::Rgb | Variant::TenbandInterp => {
            let m = if config.variant == Variant::Rgb { 3 } else { 10 };
            expected_path_rows(
                config,
                &scales,
                |_| m,
                true,
                0,
                &mut rows,
                &mut image_no,
                &mut block_no,
                true,
            );
        }
        Variant::TenbandHybrid => {
            expected_path_rows(
                config,
                &scales,
                |s| if s == top { 4 } else { 10 },
                true,
                0,
                &mut rows,
                &mut image_no,
                &mut block_no,
                true,
            );
        }
        Variant::TenbandGrouped => {
            expected_path_rows(
                config,
                &[top, top / 2],
                |_| 4,
                true,
                0,
                &mut rows,
                &mut image_no,
                &mut block_no,
                false,
            );
            expected_path_rows(
                config,
                &[top / 2],
                |_| 6,
                true,
                0,
                &mut rows,
                &mut image_no,
                &mut block_no,
                false,
            );
            let merged = 2 * table_channels(top / 4, w);
            rows.push(TraceRow::new(
                "",
                "Merge Concat",
                "-",
                (merged, top / 4, top / 4),
            ));
            let trunk: Vec<usize> = scales.iter().copied().filter(|&s| s <= top / 4).collect();
            expected_path_rows(
                config,
                &trunk,
                |_| 10,
                false,
                merged,
                &mut rows,
                &mut image_no,
                &mut block_no,
                true,
            );
        }
    }
    rows
}
