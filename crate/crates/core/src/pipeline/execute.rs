use super::manifest::{InputIdentity, LrFormat, Manifest};
use super::plan::{DegradationPlan, FinalEncode, Op};
use crate::degrade::{
    add_gaussian_noise, apply_blur, down_up_stage1, down_up_stage2, downsample, downsampled_dims,
    jpeg_noise, jpeg_round_trip, DownSpec,
};
use crate::error::{Error, Result};
use crate::image::{encode_png, resize, ImageF};
use crate::isp::{apply_sensor_noise, CalibrationPool};
use crate::kernels::SHIFTED_KERNEL_SIZE;
use crate::rng::{content_hash, substream, DegradeRng};

/// Output of one plan execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Degraded {
    /// The LR exactly as a reader of `encoded` sees it, or the clamped
    /// float result for lossless plans.
    pub lr: ImageF,
    /// The emitted file: JPEG bytes, or PNG bytes for lossless plans.
    pub encoded: Vec<u8>,
    pub manifest: Manifest,
}

/// Random stream of a noise step, keyed by its recorded seed.
pub fn op_rng(op: &Op) -> Option<DegradeRng> {
    match op {
        Op::GaussianNoise { seed, .. } => Some(substream(*seed, "op/gaussian-noise", &[])),
        Op::SensorNoise { seed, .. } => Some(substream(*seed, "op/sensor-noise", &[])),
        _ => None,
    }
}

fn kernel_fits(size: usize, h: usize, w: usize) -> bool {
    size < 2 * h.min(w)
}

/// Walks the plan over image sizes without touching pixels.
pub fn check_dims(
    plan: &DegradationPlan,
    h: usize,
    w: usize,
    channels: usize,
) -> Result<(usize, usize)> {
    plan.validate()?;
    if channels != 3 {
        return Err(Error::invalid(format!(
            "plans run on 3-channel images, got {channels}"
        )));
    }
    let s = plan.scale as usize;
    if h == 0 || w == 0 || !h.is_multiple_of(s) || !w.is_multiple_of(s) {
        return Err(Error::invalid(format!(
            "HR {h}x{w} is not divisible by the scale {s}"
        )));
    }
    let (mut h, mut w) = (h, w);
    if plan.pre_scale.is_some() {
        if h % 2 != 0 || w % 2 != 0 {
            return Err(Error::invalid("pre-scaled HR needs even dimensions"));
        }
        (h, w) = (h / 2, w / 2);
    }
    let mut target = None;
    for (i, step) in plan.steps.iter().enumerate() {
        let too_small =
            |what: &str| Error::invalid(format!("step {i} ({what}) does not fit a {h}x{w} image"));
        match &step.op {
            Op::Blur(b) if step.applied && !kernel_fits(b.size(), h, w) => {
                return Err(too_small("blur"))
            }
            Op::Downsample(d) => {
                if let DownSpec::Nearest { .. } = d {
                    if !kernel_fits(SHIFTED_KERNEL_SIZE, h, w) {
                        return Err(too_small("nearest pre-blur"));
                    }
                }
                (h, w) = downsampled_dims(h, w, d.scale())?;
            }
            Op::DownStage1(d) => {
                let DownSpec::DownUp { scale, a, .. } = *d else {
                    unreachable!("validated")
                };
                target = Some(downsampled_dims(h, w, scale)?);
                (h, w) = crate::degrade::down_up_mid_dims(h, w, scale, a);
            }
            Op::DownStage2(_) => (h, w) = target.take().expect("validated"),
            Op::SensorNoise { .. } if step.applied && (h < 3 || w < 3) => {
                return Err(too_small("sensor noise"))
            }
            _ => {}
        }
    }
    if plan.post_scale.is_some() {
        (h, w) = downsampled_dims(h, w, 2.0)?;
    }
    Ok((h, w))
}

/// Runs the plan on a pre-cropped 3-channel HR image. Sizes are checked
/// before any pixel work.
pub fn execute_plan(
    hr: &ImageF,
    plan: &DegradationPlan,
    pool: &CalibrationPool,
) -> Result<Degraded> {
    let (lr_h, lr_w) = check_dims(plan, hr.height(), hr.width(), hr.channels())?;
    let fingerprint = plan
        .steps
        .iter()
        .any(|s| s.applied && matches!(s.op, Op::SensorNoise { .. }))
        .then(|| pool.fingerprint());
    let mut img = match plan.pre_scale {
        Some(method) => resize(hr, hr.height() / 2, hr.width() / 2, method, true)?,
        None => hr.clone(),
    };
    let mut target = None;
    for step in plan.steps.iter().filter(|s| s.applied) {
        img = match &step.op {
            Op::Blur(b) => apply_blur(&img, b)?,
            Op::Downsample(d) => downsample(&img, d)?,
            Op::DownStage1(d) => {
                target = Some(downsampled_dims(img.height(), img.width(), d.scale())?);
                down_up_stage1(&img, d)?
            }
            Op::DownStage2(d) => down_up_stage2(&img, d, target.take().expect("validated"))?,
            Op::GaussianNoise { spec, .. } => {
                let mut rng = op_rng(&step.op).expect("noise step");
                add_gaussian_noise(&img, spec, &mut rng)?
            }
            Op::Jpeg(j) => jpeg_noise(&img, j)?,
            Op::SensorNoise {
                spec,
                pool_fingerprint,
                ..
            } => {
                if fingerprint.as_deref() != Some(pool_fingerprint.as_str()) {
                    return Err(Error::Job(format!(
                        "sensor step was sampled from calibration pool {pool_fingerprint}, not {}",
                        fingerprint.as_deref().unwrap_or("?")
                    )));
                }
                let mut rng = op_rng(&step.op).expect("noise step");
                apply_sensor_noise(&img, spec, pool, &mut rng)?
            }
        };
    }
    if let Some(method) = plan.post_scale {
        img = resize(&img, lr_h, lr_w, method, true)?;
    }
    debug_assert_eq!(img.dims(), (lr_h, lr_w));
    img.clamp_in_place();
    let (lr, encoded, lr_format) = match &plan.final_encode {
        FinalEncode::Jpeg(j) => {
            let (lr, bytes) = jpeg_round_trip(&img, j)?;
            (lr, bytes, LrFormat::Jpeg)
        }
        FinalEncode::Lossless => {
            let bytes = encode_png(&img)?;
            (img, bytes, LrFormat::Png)
        }
    };
    let manifest = Manifest::new(
        InputIdentity {
            path: None,
            sha256: hex::encode(content_hash(hr)),
            crop: None,
        },
        None,
        plan.clone(),
        (hr.height(), hr.width()),
        (lr.height(), lr.width()),
        lr_format,
        &encoded,
    );
    Ok(Degraded {
        lr,
        encoded,
        manifest,
    })
}
