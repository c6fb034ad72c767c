use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::degrade::jpeg::{MAX_QUALITY, MIN_QUALITY};
use crate::degrade::NoiseSampling;
use crate::error::{Error, Result};
use crate::image::ResizeMethod;
use crate::isp::{CalibrationPool, CameraSampling};
use crate::kernels::BlurRanges;
use crate::rng::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownMethod {
    Nearest,
    Bilinear,
    Bicubic,
    DownUp,
}

impl DownMethod {
    pub const ALL: [DownMethod; 4] = [Self::Nearest, Self::Bilinear, Self::Bicubic, Self::DownUp];
}

/// Every range and probability of the degradation model. Keys omitted from a
/// TOML document take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationConfig {
    /// Net scale factor, 2 or 4.
    pub scale: u32,
    pub enable_iso_blur: bool,
    pub enable_aniso_blur: bool,
    pub blur_x2: BlurRanges,
    pub blur_x4: BlurRanges,
    pub downsamplers: Vec<DownMethod>,
    /// Nearest pre-blur sigma is drawn from `[min, factor * s]`.
    pub nearest_sigma_min: f64,
    pub nearest_sigma_factor: f64,
    /// Lower end of the down-up factor `a`; the upper end is `s`.
    pub down_up_a_min: f64,
    pub down_up_methods: Vec<ResizeMethod>,
    pub down_up_split_prob: f64,
    pub enable_gaussian: bool,
    pub enable_inner_jpeg: bool,
    pub noise: NoiseSampling,
    pub enable_sensor: bool,
    pub sensor_prob: f64,
    pub camera: CameraSampling,
    /// Calibration pool file; the built-in pool when absent.
    pub calibration_pool: Option<PathBuf>,
    /// When off, the LR is emitted losslessly.
    pub enable_final_jpeg: bool,
    pub final_jpeg_quality: [u8; 2],
    /// Probability of the x1/2 pre-scale at scale 4.
    pub pre_scale_prob: f64,
    pub pre_scale_methods: Vec<ResizeMethod>,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        Self {
            scale: 4,
            enable_iso_blur: true,
            enable_aniso_blur: true,
            blur_x2: BlurRanges::for_scale(2),
            blur_x4: BlurRanges::for_scale(4),
            downsamplers: DownMethod::ALL.to_vec(),
            nearest_sigma_min: 0.1,
            nearest_sigma_factor: 0.6,
            down_up_a_min: 0.5,
            down_up_methods: vec![ResizeMethod::Bilinear, ResizeMethod::Bicubic],
            down_up_split_prob: 0.5,
            enable_gaussian: true,
            enable_inner_jpeg: true,
            noise: NoiseSampling::default(),
            enable_sensor: true,
            sensor_prob: 0.25,
            camera: CameraSampling::default(),
            calibration_pool: None,
            enable_final_jpeg: true,
            final_jpeg_quality: [MIN_QUALITY, MAX_QUALITY],
            pre_scale_prob: 0.25,
            pre_scale_methods: vec![ResizeMethod::Bilinear, ResizeMethod::Bicubic],
        }
    }
}

impl DegradationConfig {
    pub fn with_scale(scale: u32) -> Self {
        Self {
            scale,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, recorded in manifests.
    pub fn fingerprint(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    pub fn blur_ranges(&self, scale: u32) -> &BlurRanges {
        if scale >= 4 {
            &self.blur_x4
        } else {
            &self.blur_x2
        }
    }

    /// The configured pool file, or the built-in pool.
    pub fn load_pool(&self) -> Result<CalibrationPool> {
        match &self.calibration_pool {
            Some(path) => CalibrationPool::load(path),
            None => Ok(CalibrationPool::builtin()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.scale != 2 && self.scale != 4 {
            return bad("scale must be 2 or 4");
        }
        self.blur_x2.validate()?;
        self.blur_x4.validate()?;
        self.noise.validate()?;
        self.camera.validate()?;
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.down_up_split_prob) || !prob(self.sensor_prob) || !prob(self.pre_scale_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.downsamplers.is_empty() {
            return bad("at least one downsampler is required");
        }
        let resize_ok =
            |v: &[ResizeMethod]| !v.is_empty() && v.iter().all(|m| *m != ResizeMethod::Nearest);
        if !resize_ok(&self.down_up_methods) || !resize_ok(&self.pre_scale_methods) {
            return bad(
                "down-up and pre-scale methods must be a non-empty subset of bilinear and bicubic",
            );
        }
        if !(self.nearest_sigma_min > 0.0)
            || !(self.nearest_sigma_factor * 2.0 >= self.nearest_sigma_min)
        {
            return bad("nearest pre-blur sigma range must be positive and ordered");
        }
        if !(self.down_up_a_min > 0.0 && self.down_up_a_min <= 2.0) {
            return bad("down-up lower factor must lie in (0, 2]");
        }
        let q = self.final_jpeg_quality;
        if q[0] < 1 || q[1] > 100 || q[0] > q[1] {
            return bad("final JPEG quality range must be ordered within [1, 100]");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(
            DegradationConfig::from_toml_str("").unwrap(),
            DegradationConfig::default()
        );
    }

    #[test]
    fn toml_round_trip_and_partial_override() {
        let cfg = DegradationConfig::default();
        assert_eq!(
            DegradationConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg
        );
        let partial = DegradationConfig::from_toml_str(
            "scale = 2\nsensor_prob = 0.5\n[noise]\ninner_jpeg_prob = 0.1\n",
        )
        .unwrap();
        assert_eq!(partial.scale, 2);
        assert_eq!(partial.sensor_prob, 0.5);
        assert_eq!(partial.noise.inner_jpeg_prob, 0.1);
        assert_eq!(partial.noise.mode_probs, [0.2, 0.4, 0.4]);
        assert_ne!(partial.fingerprint(), cfg.fingerprint());
    }

    #[test]
    fn rejects_invalid_values() {
        for doc in [
            "scale = 3",
            "sensor_prob = 1.5",
            "downsamplers = []",
            "unknown_key = 1",
            "final_jpeg_quality = [90, 30]",
        ] {
            assert!(DegradationConfig::from_toml_str(doc).is_err(), "{doc}");
        }
    }
}
