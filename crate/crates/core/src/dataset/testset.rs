use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{file_name, list_images, stem, worker_pool, Layout, Summary};
use crate::degrade::{DownSpec, JpegSpec};
use crate::error::{Error, Result};
use crate::image::{read_image, ResizeMethod};
use crate::isp::CalibrationPool;
use crate::kernels::{sample_blur_spec, BlurKind};
use crate::pipeline::{
    classic_plan, degrade, execute_plan, prepare_hr, ClassicKind, DegradationConfig,
    DegradationPlan, Degraded, FinalEncode, Op, Slot, Step,
};
use crate::rng::{content_hash, derive_seed, substream};

/// Pre-blur of the nearest downsampler in types II and III: the narrowest
/// allowed, so the sampled anisotropic kernel is the only real blur.
const TESTSET_NEAREST_SIGMA: f64 = 0.1;

/// Type III JPEG qualities are uniform over these integers.
pub const TYPE3_QUALITY: [u8; 2] = [41, 90];

/// The four x4 test degradations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestsetKind {
    /// Bicubic downsampling, LR stored as PNG.
    I,
    /// Anisotropic blur, then shift-corrected nearest x1/4. LR stored as PNG.
    II,
    /// Anisotropic blur, nearest x1/2, bicubic x1/2, then JPEG.
    III,
    /// The full random-shuffle pipeline.
    IV,
}

impl TestsetKind {
    pub const ALL: [TestsetKind; 4] = [Self::I, Self::II, Self::III, Self::IV];

    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Self::I),
            2 => Ok(Self::II),
            3 => Ok(Self::III),
            4 => Ok(Self::IV),
            _ => Err(Error::invalid(format!(
                "test-set type must be 1 to 4, got {n}"
            ))),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::I => "testset/I",
            Self::II => "testset/II",
            Self::III => "testset/III",
            Self::IV => "testset/IV",
        }
    }

    /// The fixed plan of types I to III for a prepared HR with content hash `key`.
    pub fn plan(self, seed: u64, key: &[u8]) -> Result<DegradationPlan> {
        let mut rng = substream(seed, self.label(), key);
        let blur_and_nearest = |scale: u32, rng: &mut _| -> Result<Vec<Step>> {
            let blur = sample_blur_spec(scale, BlurKind::Aniso, rng)?;
            let down = DownSpec::Nearest {
                scale: f64::from(scale),
                pre_blur_sigma: TESTSET_NEAREST_SIGMA,
            };
            Ok(vec![
                Step {
                    slot: Slot::BlurAniso,
                    applied: true,
                    op: Op::Blur(blur),
                },
                Step {
                    slot: Slot::Down,
                    applied: true,
                    op: Op::Downsample(down),
                },
            ])
        };
        let plan = match self {
            Self::I => classic_plan(ClassicKind::Bicubic, 4, None, None, seed)?,
            Self::II => DegradationPlan {
                scale: 4,
                pre_scale: None,
                steps: blur_and_nearest(4, &mut rng)?,
                post_scale: None,
                final_encode: FinalEncode::Lossless,
                seed,
            },
            Self::III => {
                let steps = blur_and_nearest(2, &mut rng)?;
                let quality = rng.random_range(TYPE3_QUALITY[0]..=TYPE3_QUALITY[1]);
                DegradationPlan {
                    scale: 4,
                    pre_scale: None,
                    steps,
                    post_scale: Some(ResizeMethod::Bicubic),
                    final_encode: FinalEncode::Jpeg(JpegSpec::new(quality)),
                    seed,
                }
            }
            Self::IV => return Err(Error::invalid("type IV plans are sampled by the pipeline")),
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Degrades one source image.
    pub fn degrade(
        self,
        source: &crate::image::ImageF,
        seed: u64,
        cfg: &DegradationConfig,
        pool: &CalibrationPool,
    ) -> Result<Degraded> {
        if self == Self::IV {
            let cfg = DegradationConfig {
                scale: 4,
                ..cfg.clone()
            };
            return degrade(source, &cfg, seed, pool);
        }
        let (hr, crop) = prepare_hr(source, 4)?;
        let plan = self.plan(seed, &content_hash(&hr))?;
        let mut out = execute_plan(&hr, &plan, pool)?;
        out.manifest.input.crop = Some(crop);
        Ok(out)
    }
}

/// Regenerates a x4 test set of `kind` from every image in `hr_dir`. Type IV
/// uses `cfg` with its scale forced to 4.
pub fn make_testset(
    kind: TestsetKind,
    hr_dir: &Path,
    out_dir: &Path,
    seed: u64,
    cfg: &DegradationConfig,
    workers: usize,
) -> Result<Summary> {
    if workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    let pool = cfg.load_pool()?;
    let inputs = list_images(hr_dir)?;
    let layout = Layout::create(out_dir, false)?;
    let outcomes = worker_pool(workers)?.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, path)| -> Result<bool> {
                let source = match read_image(path) {
                    Ok(img) => img,
                    Err(e) => {
                        log::warn!("skipping {}: {e}", path.display());
                        return Ok(false);
                    }
                };
                let item_seed = derive_seed(seed, "item", i as u64);
                let mut out = match kind.degrade(&source, item_seed, cfg, &pool) {
                    Ok(out) => out,
                    Err(Error::InvalidArgument(msg)) => {
                        log::warn!("skipping {}: {msg}", path.display());
                        return Ok(false);
                    }
                    Err(e) => return Err(e),
                };
                out.manifest.input.path = Some(file_name(path));
                let hr = out.manifest.prepare_input(&source)?;
                layout.write_pair(&format!("{}_0", stem(path)), &hr, &out)?;
                Ok(true)
            })
            .collect::<Vec<_>>()
    });
    let mut summary = Summary {
        inputs: inputs.len(),
        laplacian_threshold: 0.0,
        ..Summary::default()
    };
    for (path, ok) in inputs.iter().zip(outcomes) {
        if ok? {
            summary.processed += 1;
            summary.pairs_written += 1;
        } else {
            summary.skipped.push(file_name(path));
        }
    }
    layout.write_summary(&summary)?;
    Ok(summary)
}
