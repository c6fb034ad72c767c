use serde::{Deserialize, Serialize};

use super::execute::{execute_plan, Degraded};
use super::plan::DegradationPlan;
use crate::error::{Error, Result};
use crate::image::{CropRect, ImageF};
use crate::isp::CalibrationPool;
use crate::rng::{content_hash, sha256_hex, RNG_ALGORITHM};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const PIPELINE_VERSION: &str = concat!("degrade-forge ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrFormat {
    Jpeg,
    Png,
}

impl LrFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Jpeg => "jpg",
            Self::Png => "png",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputIdentity {
    pub path: Option<String>,
    /// Content hash of the HR actually degraded (after crop and RGB expansion).
    pub sha256: String,
    /// Crop applied to the decoded source image.
    pub crop: Option<CropRect>,
}

/// Provenance of one LR output. Fields serialize in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub pipeline_version: String,
    pub rng_algorithm: String,
    pub input: InputIdentity,
    pub config_sha256: Option<String>,
    pub plan: DegradationPlan,
    pub hr_dims: [usize; 2],
    pub lr_dims: [usize; 2],
    pub lr_format: LrFormat,
    pub lr_sha256: String,
}

impl Manifest {
    pub fn new(
        input: InputIdentity,
        config_sha256: Option<String>,
        plan: DegradationPlan,
        hr_dims: (usize, usize),
        lr_dims: (usize, usize),
        lr_format: LrFormat,
        encoded: &[u8],
    ) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            pipeline_version: PIPELINE_VERSION.to_string(),
            rng_algorithm: RNG_ALGORITHM.to_string(),
            input,
            config_sha256,
            plan,
            hr_dims: [hr_dims.0, hr_dims.1],
            lr_dims: [lr_dims.0, lr_dims.1],
            lr_format,
            lr_sha256: sha256_hex(encoded),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(MANIFEST_SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(Error::Manifest(format!(
                "manifest schema version {v} is not supported (expected {MANIFEST_SCHEMA_VERSION})"
            )))
            }
            None => return Err(Error::Manifest("manifest has no schema_version".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Manifest(e.to_string()))
    }

    /// Crops `source` as recorded and checks it against the input hash.
    pub fn prepare_input(&self, source: &ImageF) -> Result<ImageF> {
        let img = match self.input.crop {
            Some(rect) => source.crop(rect)?,
            None => source.clone(),
        }
        .to_rgb();
        let got = hex::encode(content_hash(&img));
        if got != self.input.sha256 {
            return Err(Error::Manifest(format!(
                "input hash {got} does not match manifest {}",
                self.input.sha256
            )));
        }
        Ok(img)
    }

    /// Re-executes the recorded plan on the decoded source image. The plan is
    /// trusted as written; compare `lr_sha256` to detect divergence.
    pub fn replay(&self, source: &ImageF, pool: &CalibrationPool) -> Result<Degraded> {
        let hr = self.prepare_input(source)?;
        let mut out = execute_plan(&hr, &self.plan, pool)?;
        out.manifest.input = self.input.clone();
        out.manifest.config_sha256 = self.config_sha256.clone();
        Ok(out)
    }
}
