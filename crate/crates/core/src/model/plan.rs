//! Symbolic layer plans. A plan is pure arithmetic derived from a
//! [`ModelConfig`]: builders materialize parameters from it, the shape audit
//! traces it without allocating tensors, and parameter counting sums it.

use super::config::{BandGroup, ModelConfig, ScaleKey, Variant};
use crate::error::ModelError;

#[derive(Debug, Clone, Copy)]
pub struct ConvShape {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub pad: usize,
}

impl ConvShape {
    fn conv3(cin: usize, cout: usize) -> Self {
        ConvShape {
            cin,
            cout,
            k: 3,
            pad: 1,
        }
    }

    fn conv1(cin: usize, cout: usize) -> Self {
        ConvShape {
            cin,
            cout,
            k: 1,
            pad: 0,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.cout * self.cin * self.k * self.k + self.cout
    }
}

/// The 4x4 map out of the latent, realized as a dense layer with the
/// conv-equivalent fan-in (`latent_dim * 16`).
#[derive(Debug, Clone, Copy)]
pub struct LatentMapShape {
    pub in_w: usize,
    pub out_w: usize,
    pub fan_in: usize,
}

#[derive(Debug, Clone)]
pub struct GenBlockPlan {
    pub scale: usize,
    /// 2x upsamples applied before the convolutions.
    pub upsamples: usize,
    /// Present on the first block only.
    pub latent_map: Option<LatentMapShape>,
    pub convs: Vec<ConvShape>,
}

#[derive(Debug, Clone, Copy)]
pub struct EmissionPlan {
    /// Block scale the image is emitted at.
    pub scale: usize,
    pub group: BandGroup,
    pub cin: usize,
    pub m: usize,
    /// Average-pool once after emission (the 20m group of the grouped
    /// variant), so the image lands at `scale / 2`.
    pub pooled: bool,
}

impl EmissionPlan {
    pub fn key(&self) -> ScaleKey {
        let resolution = if self.pooled { self.scale / 2 } else { self.scale };
        ScaleKey::new(resolution, self.group)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorPlan {
    pub blocks: Vec<GenBlockPlan>,
    pub emissions: Vec<EmissionPlan>,
}

#[derive(Debug, Clone)]
pub enum AbsorbPlan {
    /// First block of a path: absorb an image through a 1x1 convolution.
    FromImage { key: ScaleKey, cout: usize },
    /// Concatenate images onto incoming features, in key order.
    Concat { keys: Vec<ScaleKey> },
}

#[derive(Debug, Clone)]
pub struct DiscBlockPlan {
    pub scale: usize,
    pub absorb: AbsorbPlan,
    pub convs: Vec<ConvShape>,
    /// Max pools after the convolutions (0 on the final block).
    pub pools: usize,
}

#[derive(Debug, Clone)]
pub struct DiscBranchPlan {
    pub label: &'static str,
    pub blocks: Vec<DiscBlockPlan>,
    /// Feature channels leaving the branch.
    pub out_channels: usize,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorPlan {
    /// One branch for single-path variants; 10m and 20m branches for the
    /// grouped variant. Branch outputs are concatenated channel-wise.
    pub branches: Vec<DiscBranchPlan>,
    pub trunk: Vec<DiscBlockPlan>,
    /// Fully connected head: (input width, 1).
    pub head_in: usize,
}

/// Build the generator plan. The config must validate.
pub fn generator_plan(cfg: &ModelConfig) -> Result<GeneratorPlan, ModelError> {
    cfg.validate()?;
    let scales = cfg.scale_list();
    let top = cfg.top_resolution;
    let mut blocks = Vec::with_capacity(scales.len());
    for (i, &s) in scales.iter().enumerate() {
        if i == 0 {
            let c4 = cfg.channels(4);
            blocks.push(GenBlockPlan {
                scale: s,
                upsamples: 0,
                latent_map: Some(LatentMapShape {
                    in_w: cfg.latent_dim,
                    out_w: c4 * 16,
                    fan_in: cfg.latent_dim * 16,
                }),
                convs: vec![ConvShape::conv3(c4, c4)],
            });
        } else {
            let prev = scales[i - 1];
            let upsamples = (s / prev).trailing_zeros() as usize;
            let cin = cfg.channels(prev);
            let cout = cfg.channels(s);
            let convs = if cfg.conv_thinning {
                vec![ConvShape::conv3(cin, cout)]
            } else {
                vec![ConvShape::conv3(cin, cout), ConvShape::conv3(cout, cout)]
            };
            blocks.push(GenBlockPlan {
                scale: s,
                upsamples,
                latent_map: None,
                convs,
            });
        }
    }

    let mut emissions = Vec::new();
    for &s in &scales {
        let cin = cfg.channels(s);
        match cfg.variant {
            Variant::Rgb => emissions.push(EmissionPlan {
                scale: s,
                group: BandGroup::Rgb,
                cin,
                m: 3,
                pooled: false,
            }),
            Variant::TenbandInterp => emissions.push(EmissionPlan {
                scale: s,
                group: BandGroup::AllBands,
                cin,
                m: 10,
                pooled: false,
            }),
            Variant::TenbandGrouped => {
                emissions.push(EmissionPlan {
                    scale: s,
                    group: BandGroup::TenMeter,
                    cin,
                    m: 4,
                    pooled: false,
                });
                if s >= 8 {
                    emissions.push(EmissionPlan {
                        scale: s,
                        group: BandGroup::TwentyMeter,
                        cin,
                        m: 6,
                        pooled: true,
                    });
                }
            }
            Variant::TenbandHybrid => {
                if s == top {
                    emissions.push(EmissionPlan {
                        scale: s,
                        group: BandGroup::TenMeter,
                        cin,
                        m: 4,
                        pooled: false,
                    });
                } else {
                    emissions.push(EmissionPlan {
                        scale: s,
                        group: BandGroup::AllBands,
                        cin,
                        m: 10,
                        pooled: false,
                    });
                }
            }
        }
    }
    Ok(GeneratorPlan { blocks, emissions })
}

/// Image channels concatenated below the top scale for single-path variants.
fn concat_m(cfg: &ModelConfig) -> usize {
    match cfg.variant {
        Variant::Rgb => 3,
        Variant::TenbandInterp | Variant::TenbandHybrid | Variant::TenbandGrouped => 10,
    }
}

fn concat_keys(cfg: &ModelConfig, s: usize) -> Vec<ScaleKey> {
    match cfg.variant {
        Variant::Rgb => vec![ScaleKey::new(s, BandGroup::Rgb)],
        Variant::TenbandInterp => vec![ScaleKey::new(s, BandGroup::AllBands)],
        Variant::TenbandHybrid => vec![ScaleKey::new(s, BandGroup::AllBands)],
        Variant::TenbandGrouped => vec![
            ScaleKey::new(s, BandGroup::TenMeter),
            ScaleKey::new(s, BandGroup::TwentyMeter),
        ],
    }
}

/// Blocks of one top-down path over `scales` (descending), starting from
/// `first_in` channels entering the first block (inclusive of any images its
/// absorb step contributes). With `ends_at_head`, the last block keeps its
/// spatial extent and feeds the fully connected head; otherwise every block
/// pools down one octave (branch paths that stop at the merge point).
fn path_blocks(
    cfg: &ModelConfig,
    scales: &[usize],
    first_absorb: AbsorbPlan,
    first_in: usize,
    concat_extra: impl Fn(usize) -> usize,
    keys_at: impl Fn(usize) -> Vec<ScaleKey>,
    ends_at_head: bool,
) -> (Vec<DiscBlockPlan>, usize) {
    let mut blocks = Vec::with_capacity(scales.len());
    let mut feat = first_in;
    for (i, &s) in scales.iter().enumerate() {
        let absorb = if i == 0 {
            first_absorb.clone()
        } else {
            AbsorbPlan::Concat { keys: keys_at(s) }
        };
        if i > 0 {
            feat += concat_extra(s);
        }
        let is_last = i + 1 == scales.len();
        let head_block = is_last && ends_at_head;
        let next_scale = match scales.get(i + 1) {
            Some(&n) => n,
            None => s / 2,
        };
        let conv1_out = cfg.channels(s);
        let convs = if cfg.conv_thinning {
            vec![ConvShape::conv3(feat + 1, conv1_out)]
        } else if head_block {
            vec![
                ConvShape::conv3(feat + 1, conv1_out),
                ConvShape::conv3(conv1_out, cfg.channels(4)),
            ]
        } else {
            vec![
                ConvShape::conv3(feat + 1, conv1_out),
                ConvShape::conv3(conv1_out, cfg.channels(next_scale)),
            ]
        };
        let pools = if head_block {
            0
        } else {
            (s / next_scale).trailing_zeros() as usize
        };
        feat = convs.last().expect("at least one conv").cout;
        blocks.push(DiscBlockPlan {
            scale: s,
            absorb,
            convs,
            pools,
        });
    }
    (blocks, feat)
}

/// Build the discriminator plan. The config must validate.
pub fn discriminator_plan(cfg: &ModelConfig) -> Result<DiscriminatorPlan, ModelError> {
    cfg.validate()?;
    let mut scales = cfg.scale_list();
    scales.reverse();
    let top = cfg.top_resolution;

    match cfg.variant {
        Variant::Rgb | Variant::TenbandInterp | Variant::TenbandHybrid => {
            let top_group = match cfg.variant {
                Variant::Rgb => BandGroup::Rgb,
                Variant::TenbandInterp => BandGroup::AllBands,
                Variant::TenbandHybrid => BandGroup::TenMeter,
                Variant::TenbandGrouped => unreachable!(),
            };
            let entry = cfg.channels(top);
            let (blocks, _) = path_blocks(
                cfg,
                &scales,
                AbsorbPlan::FromImage {
                    key: ScaleKey::new(top, top_group),
                    cout: entry,
                },
                entry,
                |_| concat_m(cfg),
                |s| concat_keys(cfg, s),
                true,
            );
            Ok(DiscriminatorPlan {
                branches: vec![DiscBranchPlan {
                    label: "main",
                    blocks,
                    out_channels: 0,
                }],
                trunk: Vec::new(),
                head_in: cfg.channels(4) * 16,
            })
        }
        Variant::TenbandGrouped => {
            // 10m branch covers [top, top/2]; 20m branch covers [top/2];
            // both land at top/4 where features merge and the trunk follows
            // the base schedule with ten-channel image concats.
            let ten_scales = [top, top / 2];
            let entry10 = cfg.channels(top);
            let (ten_blocks, ten_out) = path_blocks(
                cfg,
                &ten_scales,
                AbsorbPlan::FromImage {
                    key: ScaleKey::new(top, BandGroup::TenMeter),
                    cout: entry10,
                },
                entry10,
                |_| 4,
                |s| vec![ScaleKey::new(s, BandGroup::TenMeter)],
                false,
            );
            let twenty_scales = [top / 2];
            let entry20 = cfg.channels(top / 2);
            let (twenty_blocks, twenty_out) = path_blocks(
                cfg,
                &twenty_scales,
                AbsorbPlan::FromImage {
                    key: ScaleKey::new(top / 2, BandGroup::TwentyMeter),
                    cout: entry20,
                },
                entry20,
                |_| 6,
                |s| vec![ScaleKey::new(s, BandGroup::TwentyMeter)],
                false,
            );

            let trunk_scales: Vec<usize> = scales.iter().copied().filter(|&s| s <= top / 4).collect();
            let merged = ten_out + twenty_out;
            let first_keys = concat_keys(cfg, trunk_scales[0]);
            let (trunk, _) = path_blocks(
                cfg,
                &trunk_scales,
                AbsorbPlan::Concat { keys: first_keys },
                merged + 10,
                |_| 10,
                |s| concat_keys(cfg, s),
                true,
            );
            Ok(DiscriminatorPlan {
                branches: vec![
                    DiscBranchPlan {
                        label: "10m",
                        blocks: ten_blocks,
                        out_channels: ten_out,
                    },
                    DiscBranchPlan {
                        label: "20m",
                        blocks: twenty_blocks,
                        out_channels: twenty_out,
                    },
                ],
                trunk,
                head_in: cfg.channels(4) * 16,
            })
        }
    }
}

impl GeneratorPlan {
    pub fn parameter_count(&self) -> usize {
        let mut total = 0;
        for b in &self.blocks {
            if let Some(lm) = b.latent_map {
                total += lm.in_w * lm.out_w + lm.out_w;
            }
            total += b.convs.iter().map(ConvShape::parameter_count).sum::<usize>();
        }
        for e in &self.emissions {
            total += ConvShape::conv1(e.cin, e.m).parameter_count();
        }
        total
    }
}

impl DiscriminatorPlan {
    pub fn parameter_count(&self) -> usize {
        let mut total = 0;
        for block in self
            .branches
            .iter()
            .flat_map(|b| &b.blocks)
            .chain(&self.trunk)
        {
            if let AbsorbPlan::FromImage { key, cout } = &block.absorb {
                total += ConvShape::conv1(key.group.channels(), *cout).parameter_count();
            }
            total += block.convs.iter().map(ConvShape::parameter_count).sum::<usize>();
        }
        total + (self.head_in + 1)
    }
}
