use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::config::{DegradationConfig, DownMethod};
use crate::degrade::{DownSpec, GaussianNoiseSpec, JpegSpec};
use crate::error::{Error, Result};
use crate::image::ResizeMethod;
use crate::isp::{sample_sensor_spec, CalibrationPool, SensorNoiseSpec};
use crate::kernels::{BlurKind, BlurSpec};
use crate::rng::DegradeRng;

/// The six shuffled positions of the degradation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    BlurIso,
    BlurAniso,
    Down,
    Gaussian,
    InnerJpeg,
    Sensor,
}

impl Slot {
    pub const ALL: [Slot; 6] = [
        Self::BlurIso,
        Self::BlurAniso,
        Self::Down,
        Self::Gaussian,
        Self::InnerJpeg,
        Self::Sensor,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "params", rename_all = "snake_case")]
pub enum Op {
    Blur(BlurSpec),
    Downsample(DownSpec),
    /// First half of a split down-up; resizes by `a / s`.
    DownStage1(DownSpec),
    /// Second half of a split down-up; resizes to the final LR size.
    DownStage2(DownSpec),
    GaussianNoise {
        spec: GaussianNoiseSpec,
        seed: u64,
    },
    Jpeg(JpegSpec),
    SensorNoise {
        spec: SensorNoiseSpec,
        seed: u64,
        pool_fingerprint: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub slot: Slot,
    pub applied: bool,
    #[serde(flatten)]
    pub op: Op,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "codec", rename_all = "snake_case")]
pub enum FinalEncode {
    Jpeg(JpegSpec),
    /// No final compression; the LR is stored as PNG.
    Lossless,
}

/// A fully materialized degradation: replaying it needs only the HR image and
/// the calibration pool named by any sensor step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationPlan {
    /// Net HR-to-LR scale factor.
    pub scale: u32,
    /// Optional antialiased x1/2 resize before the sequence.
    pub pre_scale: Option<ResizeMethod>,
    pub steps: Vec<Step>,
    /// Optional antialiased x1/2 resize after the sequence.
    #[serde(default)]
    pub post_scale: Option<ResizeMethod>,
    pub final_encode: FinalEncode,
    pub seed: u64,
}

impl DegradationPlan {
    /// Scale of the shuffled sequence itself, without any pre- or post-scale.
    pub fn sequence_scale(&self) -> u32 {
        let halvings = u32::from(self.pre_scale.is_some()) + u32::from(self.post_scale.is_some());
        self.scale >> halvings
    }

    /// Slot order, one entry per slot; a split down-up counts at its first stage.
    pub fn slot_order(&self) -> Vec<Slot> {
        self.steps
            .iter()
            .filter(|s| !matches!(s.op, Op::DownStage2(_)))
            .map(|s| s.slot)
            .collect()
    }

    pub fn step(&self, slot: Slot) -> Option<&Step> {
        self.steps.iter().find(|s| s.slot == slot)
    }

    pub fn is_applied(&self, slot: Slot) -> bool {
        self.steps.iter().any(|s| s.slot == slot && s.applied)
    }

    pub fn down_spec(&self) -> Option<&DownSpec> {
        self.steps.iter().find_map(|s| match &s.op {
            Op::Downsample(d) | Op::DownStage1(d) => Some(d),
            _ => None,
        })
    }

    pub fn is_split(&self) -> bool {
        self.steps.iter().any(|s| matches!(s.op, Op::DownStage1(_)))
    }

    /// Structural checks: slot/op agreement, one downsampler, valid specs.
    pub fn validate(&self) -> Result<()> {
        if self.scale != 2 && self.scale != 4 {
            return Err(Error::invalid(format!(
                "plan scale must be 2 or 4, got {}",
                self.scale
            )));
        }
        for extra in [self.pre_scale, self.post_scale] {
            if extra == Some(ResizeMethod::Nearest) {
                return Err(Error::invalid(
                    "pre- and post-scale must be bilinear or bicubic",
                ));
            }
        }
        if self.sequence_scale() < 2 {
            return Err(Error::invalid(
                "pre- and post-scale need a sequence of scale 2 inside a scale-4 plan",
            ));
        }
        let s = f64::from(self.sequence_scale());
        let mut seen = [false; 6];
        for step in &self.steps {
            if matches!(step.op, Op::DownStage2(_)) {
                continue;
            }
            if std::mem::replace(&mut seen[step.slot.index()], true) {
                return Err(Error::invalid(format!(
                    "slot {:?} appears twice",
                    step.slot
                )));
            }
        }
        let mut downs = 0;
        let mut stage1_at = None;
        for (i, step) in self.steps.iter().enumerate() {
            let ok = match (&step.op, step.slot) {
                (Op::Blur(b), Slot::BlurIso) => b.kind() == BlurKind::Iso,
                (Op::Blur(b), Slot::BlurAniso) => b.kind() == BlurKind::Aniso,
                (Op::Downsample(_) | Op::DownStage1(_) | Op::DownStage2(_), Slot::Down) => true,
                (Op::GaussianNoise { .. }, Slot::Gaussian) => true,
                (Op::Jpeg(_), Slot::InnerJpeg) => true,
                (Op::SensorNoise { .. }, Slot::Sensor) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "step {i} does not match slot {:?}",
                    step.slot
                )));
            }
            match &step.op {
                Op::Blur(b) => {
                    b.kernel()?;
                }
                Op::Downsample(d) | Op::DownStage1(d) | Op::DownStage2(d) => {
                    if !step.applied {
                        return Err(Error::invalid("the downsampler cannot be gated off"));
                    }
                    d.validate()?;
                    if (d.scale() - s).abs() > 1e-12 {
                        return Err(Error::invalid(format!(
                            "downsampler scale {} differs from plan scale {s}",
                            d.scale()
                        )));
                    }
                    match step.op {
                        Op::Downsample(_) => downs += 1,
                        Op::DownStage1(_) => stage1_at = Some((i, *d)),
                        _ => match stage1_at.take() {
                            Some((_, first)) if first == *d => downs += 1,
                            _ => {
                                return Err(Error::invalid(
                                    "down-up second stage without a matching first stage",
                                ))
                            }
                        },
                    }
                    if matches!(step.op, Op::DownStage1(_) | Op::DownStage2(_))
                        && !matches!(d, DownSpec::DownUp { .. })
                    {
                        return Err(Error::invalid("split stages require a down-up downsampler"));
                    }
                }
                Op::GaussianNoise { spec, .. } => {
                    crate::degrade::psd_factor(&spec.covariance())?;
                }
                Op::Jpeg(j) => j.validate()?,
                Op::SensorNoise { .. } => {}
            }
        }
        if downs != 1 || stage1_at.is_some() {
            return Err(Error::invalid("a plan needs exactly one downsampler"));
        }
        if let FinalEncode::Jpeg(j) = &self.final_encode {
            j.validate()?;
        }
        Ok(())
    }
}

fn pick<T: Copy>(items: &[T], rng: &mut DegradeRng) -> T {
    items[rng.random_range(0..items.len())]
}

fn uniform(rng: &mut DegradeRng, lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Samples a plan.
///
/// Draw order: pre-scale gate and method (scale 4 only), slot permutation,
/// then each slot's parameters in canonical slot order, the down-up split,
/// and the final quality. Every slot is always materialized; gates only set
/// `applied`.
pub fn sample_plan(
    cfg: &DegradationConfig,
    pool: &CalibrationPool,
    seed: u64,
    rng: &mut DegradeRng,
) -> Result<DegradationPlan> {
    PlanSampler::new(cfg, pool)?.sample(seed, rng)
}

/// Samples many plans from one config and pool, validating the config and
/// hashing the pool once.
pub struct PlanSampler<'a> {
    cfg: &'a DegradationConfig,
    pool: &'a CalibrationPool,
    pool_fingerprint: String,
}

impl<'a> PlanSampler<'a> {
    pub fn new(cfg: &'a DegradationConfig, pool: &'a CalibrationPool) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            pool,
            pool_fingerprint: pool.fingerprint(),
        })
    }

    /// Same draws as [`sample_plan`].
    pub fn sample(&self, seed: u64, rng: &mut DegradeRng) -> Result<DegradationPlan> {
        let (cfg, pool) = (self.cfg, self.pool);
        let mut pre_scale = None;
        if cfg.scale == 4 {
            let gate = rng.random::<f64>() < cfg.pre_scale_prob;
            let method = pick(&cfg.pre_scale_methods, rng);
            pre_scale = gate.then_some(method);
        }
        let s = if pre_scale.is_some() { 2 } else { cfg.scale };
        let sf = f64::from(s);

        let mut order = Slot::ALL;
        order.shuffle(rng);

        let ranges = cfg.blur_ranges(s);
        let iso = ranges.sample(BlurKind::Iso, rng);
        let aniso = ranges.sample(BlurKind::Aniso, rng);

        let down = match pick(&cfg.downsamplers, rng) {
            DownMethod::Nearest => DownSpec::Nearest {
                scale: sf,
                pre_blur_sigma: uniform(rng, cfg.nearest_sigma_min, cfg.nearest_sigma_factor * sf),
            },
            DownMethod::Bilinear => DownSpec::Bilinear { scale: sf },
            DownMethod::Bicubic => DownSpec::Bicubic { scale: sf },
            DownMethod::DownUp => DownSpec::DownUp {
                scale: sf,
                a: uniform(rng, cfg.down_up_a_min, sf),
                stage1: pick(&cfg.down_up_methods, rng),
                stage2: pick(&cfg.down_up_methods, rng),
            },
        };
        let split_draw = rng.random::<f64>() < cfg.down_up_split_prob;

        // Same draws as `sample_noise_specs`, keeping the quality of a gated-off inner JPEG.
        let gaussian = cfg.noise.sample_gaussian(rng);
        let inner_present = rng.random::<f64>() < cfg.noise.inner_jpeg_prob;
        let inner_spec = cfg.noise.sample_quality(rng);
        let gaussian_seed = rng.next_u64();

        let sensor_gate = rng.random::<f64>() < cfg.sensor_prob;
        let sensor = sample_sensor_spec(pool, &cfg.camera, rng)?;
        let sensor_seed = rng.next_u64();
        let pool_fingerprint = &self.pool_fingerprint;

        let final_quality = rng.random_range(cfg.final_jpeg_quality[0]..=cfg.final_jpeg_quality[1]);

        let split = split_draw && matches!(down, DownSpec::DownUp { .. });
        let mut steps = Vec::with_capacity(7);
        for slot in order {
            let step = match slot {
                Slot::BlurIso => Step {
                    slot,
                    applied: cfg.enable_iso_blur,
                    op: Op::Blur(iso),
                },
                Slot::BlurAniso => Step {
                    slot,
                    applied: cfg.enable_aniso_blur,
                    op: Op::Blur(aniso),
                },
                Slot::Down if split => Step {
                    slot,
                    applied: true,
                    op: Op::DownStage1(down),
                },
                Slot::Down => Step {
                    slot,
                    applied: true,
                    op: Op::Downsample(down),
                },
                Slot::Gaussian => Step {
                    slot,
                    applied: cfg.enable_gaussian,
                    op: Op::GaussianNoise {
                        spec: gaussian,
                        seed: gaussian_seed,
                    },
                },
                Slot::InnerJpeg => Step {
                    slot,
                    applied: cfg.enable_inner_jpeg && inner_present,
                    op: Op::Jpeg(inner_spec),
                },
                Slot::Sensor => Step {
                    slot,
                    applied: cfg.enable_sensor && sensor_gate,
                    op: Op::SensorNoise {
                        spec: sensor.clone(),
                        seed: sensor_seed,
                        pool_fingerprint: pool_fingerprint.clone(),
                    },
                },
            };
            steps.push(step);
        }
        if split {
            let first = steps
                .iter()
                .position(|s| matches!(s.op, Op::DownStage1(_)))
                .expect("split plan has a first stage");
            let at = rng.random_range(first + 1..=steps.len());
            steps.insert(
                at,
                Step {
                    slot: Slot::Down,
                    applied: true,
                    op: Op::DownStage2(down),
                },
            );
        }

        let final_encode = if cfg.enable_final_jpeg {
            FinalEncode::Jpeg(JpegSpec::new(final_quality))
        } else {
            FinalEncode::Lossless
        };
        Ok(DegradationPlan {
            scale: cfg.scale,
            pre_scale,
            steps,
            post_scale: None,
            final_encode,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicKind {
    Bicubic,
    Traditional,
}

/// The two classical special cases.
///
/// `Bicubic`: one antialiased bicubic downsampler and lossless output.
/// `Traditional`: blur with `kernel`, plain `s`-strided subsampling, then
/// channel-independent Gaussian noise of level `sigma`, lossless output.
pub fn classic_plan(
    kind: ClassicKind,
    scale: u32,
    kernel: Option<BlurSpec>,
    sigma: Option<f64>,
    seed: u64,
) -> Result<DegradationPlan> {
    let sf = f64::from(scale);
    let steps = match kind {
        ClassicKind::Bicubic => vec![Step {
            slot: Slot::Down,
            applied: true,
            op: Op::Downsample(DownSpec::Bicubic { scale: sf }),
        }],
        ClassicKind::Traditional => {
            let kernel = kernel.unwrap_or(BlurSpec::Iso {
                size: 7,
                sigma: 0.1,
            });
            let slot = match kernel.kind() {
                BlurKind::Iso => Slot::BlurIso,
                BlurKind::Aniso => Slot::BlurAniso,
            };
            let sigma = sigma.unwrap_or(0.0);
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return Err(Error::invalid("noise level must be finite and nonnegative"));
            }
            vec![
                Step {
                    slot,
                    applied: true,
                    op: Op::Blur(kernel),
                },
                Step {
                    slot: Slot::Down,
                    applied: true,
                    op: Op::Downsample(DownSpec::Stride { scale: sf }),
                },
                Step {
                    slot: Slot::Gaussian,
                    applied: sigma > 0.0,
                    op: Op::GaussianNoise {
                        spec: GaussianNoiseSpec::ChannelIndependent { sigma },
                        seed,
                    },
                },
            ]
        }
    };
    let plan = DegradationPlan {
        scale,
        pre_scale: None,
        steps,
        post_scale: None,
        final_encode: FinalEncode::Lossless,
        seed,
    };
    plan.validate()?;
    Ok(plan)
}
