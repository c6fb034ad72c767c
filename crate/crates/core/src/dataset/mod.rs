//! Batch generation of paired LR/HR datasets.
//!
//! Output layout, for an output directory `out`:
//!
//! ```text
//! out/HR/<stem>_<variant>.png
//! out/LR/<stem>_<variant>.{jpg|png}
//! out/manifests/<stem>_<variant>.json
//! out/patches/{HR,LR}/<stem>_<variant>_<k>.png   (only with patch emission)
//! out/summary.json
//! ```
//!
//! Every item draws from its own seed, derived from the master seed and the
//! item's position in the sorted input listing, so the tree does not depend
//! on the worker count or scheduling.

mod metrics;
mod patches;
mod testset;

pub use metrics::{psnr_dirs, psnr_y};
pub use patches::{crop_patch_pairs, PatchPair, LR_PATCH_SIZE};
pub use testset::{make_testset, TestsetKind};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{laplacian_variance, read_image, write_png, ImageF};
use crate::isp::CalibrationPool;
use crate::pipeline::{degrade, DegradationConfig, Degraded};
use crate::rng::{derive_seed, substream};

/// Default rejection threshold on the variance of the Laplacian of unit-range
/// luma. Loose on purpose: it removes clearly defocused sources only.
pub const DEFAULT_LAPLACIAN_THRESHOLD: f64 = 1e-5;

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "PNG", "JPG"];

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSettings {
    /// Patch pairs cropped from each (HR, LR) pair.
    pub per_item: usize,
}

#[derive(Debug, Clone)]
pub struct DatasetJob {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub config: DegradationConfig,
    pub seed: u64,
    pub variants: usize,
    pub workers: usize,
    pub patches: Option<PatchSettings>,
    pub laplacian_threshold: f64,
}

impl DatasetJob {
    pub fn new(
        input_dir: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        config: DegradationConfig,
        seed: u64,
    ) -> Self {
        Self {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            config,
            seed,
            variants: 1,
            workers: 1,
            patches: None,
            laplacian_threshold: DEFAULT_LAPLACIAN_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants == 0 || self.workers == 0 {
            return Err(Error::invalid(
                "variant and worker counts must be at least 1",
            ));
        }
        if matches!(&self.patches, Some(p) if p.per_item == 0) {
            return Err(Error::invalid("patch count must be at least 1"));
        }
        if !(self.laplacian_threshold >= 0.0) {
            return Err(Error::invalid("laplacian threshold must be nonnegative"));
        }
        self.config.validate()
    }
}

/// What a job did. Contains nothing schedule-dependent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub inputs: usize,
    pub processed: usize,
    pub pairs_written: usize,
    pub patches_written: usize,
    pub rejected_blurry: Vec<String>,
    pub skipped: Vec<String>,
    pub laplacian_threshold: f64,
}

impl Summary {
    pub fn has_warnings(&self) -> bool {
        self.processed == 0 || !self.skipped.is_empty()
    }
}

/// Image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && IMAGE_EXTENSIONS.contains(&ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub(crate) fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub(crate) struct Layout {
    root: PathBuf,
}

impl Layout {
    pub(crate) fn create(root: &Path, patches: bool) -> Result<Self> {
        let mut dirs = vec![root.join("HR"), root.join("LR"), root.join("manifests")];
        if patches {
            dirs.push(root.join("patches/HR"));
            dirs.push(root.join("patches/LR"));
        }
        for d in &dirs {
            std::fs::create_dir_all(d).map_err(|e| job_io(d, e))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    fn write(&self, rel: String, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        std::fs::write(&path, bytes).map_err(|e| job_io(&path, e))
    }

    fn write_png(&self, rel: String, img: &ImageF) -> Result<()> {
        let path = self.root.join(rel);
        write_png(&path, img).map_err(|e| match e {
            Error::Io { path, source } => job_io(&path, source),
            other => other,
        })
    }

    /// Writes one (HR, LR, manifest) triple named `name`.
    pub(crate) fn write_pair(&self, name: &str, hr: &ImageF, out: &Degraded) -> Result<()> {
        self.write_png(format!("HR/{name}.png"), hr)?;
        self.write(
            format!("LR/{name}.{}", out.manifest.lr_format.extension()),
            &out.encoded,
        )?;
        self.write(
            format!("manifests/{name}.json"),
            out.manifest.to_json().as_bytes(),
        )
    }

    pub(crate) fn write_summary(&self, summary: &Summary) -> Result<()> {
        let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
        text.push('\n');
        self.write("summary.json".into(), text.as_bytes())
    }
}

fn job_io(path: &Path, e: std::io::Error) -> Error {
    Error::Job(format!("cannot write {}: {e}", path.display()))
}

pub(crate) fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Job(e.to_string()))
}

enum ItemOutcome {
    Done { pairs: usize, patches: usize },
    Blurry,
    Skipped,
}

/// Degrades every accepted image in `job.input_dir` `job.variants` times.
pub fn generate_pairs(job: &DatasetJob) -> Result<Summary> {
    job.validate()?;
    let pool = job.config.load_pool()?;
    let inputs = list_images(&job.input_dir)?;
    let layout = Layout::create(&job.output_dir, job.patches.is_some())?;
    if inputs.is_empty() {
        log::warn!("no images in {}", job.input_dir.display());
    }

    let outcomes = worker_pool(job.workers)?.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, path)| process_item(job, &pool, &layout, i as u64, path))
            .collect::<Vec<_>>()
    });

    let mut summary = Summary {
        inputs: inputs.len(),
        laplacian_threshold: job.laplacian_threshold,
        ..Summary::default()
    };
    for (path, outcome) in inputs.iter().zip(outcomes) {
        match outcome? {
            ItemOutcome::Done { pairs, patches } => {
                summary.processed += 1;
                summary.pairs_written += pairs;
                summary.patches_written += patches;
            }
            ItemOutcome::Blurry => summary.rejected_blurry.push(file_name(path)),
            ItemOutcome::Skipped => summary.skipped.push(file_name(path)),
        }
    }
    layout.write_summary(&summary)?;
    log::info!(
        "{} of {} images processed, {} pairs, {} rejected as blurry (threshold {:e}), {} skipped",
        summary.processed,
        summary.inputs,
        summary.pairs_written,
        summary.rejected_blurry.len(),
        summary.laplacian_threshold,
        summary.skipped.len()
    );
    Ok(summary)
}

fn process_item(
    job: &DatasetJob,
    pool: &CalibrationPool,
    layout: &Layout,
    index: u64,
    path: &Path,
) -> Result<ItemOutcome> {
    let source = match read_image(path) {
        Ok(img) => img,
        Err(e) => {
            log::warn!("skipping {}: {e}", path.display());
            return Ok(ItemOutcome::Skipped);
        }
    };
    let sharpness = laplacian_variance(&source)?;
    if sharpness < job.laplacian_threshold {
        log::info!(
            "rejecting {} as blurry (laplacian variance {sharpness:e})",
            path.display()
        );
        return Ok(ItemOutcome::Blurry);
    }
    let item_seed = derive_seed(job.seed, "item", index);
    let base = stem(path);
    let mut patches = 0;
    for v in 0..job.variants {
        let seed = derive_seed(item_seed, "variant", v as u64);
        let mut out = match degrade(&source, &job.config, seed, pool) {
            Ok(out) => out,
            Err(Error::InvalidArgument(msg)) => {
                log::warn!("skipping {}: {msg}", path.display());
                return Ok(ItemOutcome::Skipped);
            }
            Err(e) => return Err(e),
        };
        out.manifest.input.path = Some(file_name(path));
        let hr = out.manifest.prepare_input(&source)?;
        let name = format!("{base}_{v}");
        layout.write_pair(&name, &hr, &out)?;
        if let Some(settings) = &job.patches {
            let mut rng = substream(seed, "patches", &[]);
            let scale = job.config.scale as usize;
            match crop_patch_pairs(&hr, &out.lr, scale, settings.per_item, &mut rng) {
                Ok(pairs) => {
                    for (k, pair) in pairs.iter().enumerate() {
                        layout.write_png(format!("patches/HR/{name}_{k}.png"), &pair.hr)?;
                        layout.write_png(format!("patches/LR/{name}_{k}.png"), &pair.lr)?;
                    }
                    patches += pairs.len();
                }
                Err(e) => log::warn!("no patches for {name}: {e}"),
            }
        }
    }
    Ok(ItemOutcome::Done {
        pairs: job.variants,
        patches,
    })
}

#[cfg(test)]
mod tests;
