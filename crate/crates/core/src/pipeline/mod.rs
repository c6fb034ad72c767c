//! Random-shuffle scheduling: sample a [`DegradationPlan`], execute it, and
//! record a replayable [`Manifest`].

mod config;
mod execute;
mod manifest;
mod plan;

pub use config::{DegradationConfig, DownMethod};
pub use execute::{check_dims, execute_plan, op_rng, Degraded};
pub use manifest::{InputIdentity, LrFormat, Manifest, MANIFEST_SCHEMA_VERSION, PIPELINE_VERSION};
pub use plan::{
    classic_plan, sample_plan, ClassicKind, DegradationPlan, FinalEncode, Op, PlanSampler, Slot,
    Step,
};

use crate::error::Result;
use crate::image::{CropRect, ImageF};
use crate::isp::CalibrationPool;
use crate::rng::{content_hash, substream};

/// Side lengths of a prepared HR are multiples of `4 * scale`.
pub fn crop_multiple(scale: u32) -> usize {
    4 * scale as usize
}

/// Center-crops to a multiple of `4 * scale` and expands gray to RGB.
pub fn prepare_hr(source: &ImageF, scale: u32) -> Result<(ImageF, CropRect)> {
    let rect = source.center_crop_rect(crop_multiple(scale));
    if rect.height == 0 || rect.width == 0 {
        return Err(crate::Error::invalid(format!(
            "{}x{} is smaller than one {}-pixel block",
            source.height(),
            source.width(),
            crop_multiple(scale)
        )));
    }
    Ok((source.crop(rect)?.to_rgb(), rect))
}

/// Samples and executes a plan for `source`. The plan stream is keyed by
/// `(seed, content hash of the prepared HR)`.
pub fn degrade(
    source: &ImageF,
    cfg: &DegradationConfig,
    seed: u64,
    pool: &CalibrationPool,
) -> Result<Degraded> {
    let (hr, crop) = prepare_hr(source, cfg.scale)?;
    let hash = content_hash(&hr);
    let mut rng = substream(seed, "plan", &hash);
    let plan = sample_plan(cfg, pool, seed, &mut rng)?;
    let mut out = execute_plan(&hr, &plan, pool)?;
    out.manifest.input.crop = Some(crop);
    out.manifest.config_sha256 = Some(cfg.fingerprint());
    Ok(out)
}

#[cfg(test)]
mod tests;
