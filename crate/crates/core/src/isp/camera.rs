//! Sampled camera configurations.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{pool::row_major, BayerPattern, CalibrationPool};
use crate::error::{Error, Result};
use crate::mat3::{self, Mat3};
use crate::rng::DegradeRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub exposure_gain: f64,
    pub red_gain: f64,
    pub blue_gain: f64,
    /// Camera RGB to XYZ (D50), row-major.
    #[serde(with = "row_major")]
    pub ccm: Mat3,
    pub ccm_entry: usize,
    pub ccm_weight: f64,
    pub tone_curve_id: usize,
    pub shot_noise: f64,
    pub read_noise: f64,
}

impl CameraParams {
    /// Per-channel gains applied in camera space: exposure folded into white balance.
    pub fn channel_gains(&self) -> [f64; 3] {
        let e = self.exposure_gain;
        [e * self.red_gain, e, e * self.blue_gain]
    }

    /// `w·FM1 + (1−w)·FM2` of one pool entry.
    pub fn blend_ccm(pool: &CalibrationPool, entry: usize, w: f64) -> Result<Mat3> {
        let e = pool
            .entries
            .get(entry)
            .ok_or_else(|| Error::invalid(format!("calibration entry {entry} out of range")))?;
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = w * e.forward_matrix_1[i][j] + (1.0 - w) * e.forward_matrix_2[i][j];
            }
        }
        Ok(m)
    }

    pub fn validate(&self, pool: &CalibrationPool) -> Result<()> {
        let finite = [
            self.exposure_gain,
            self.red_gain,
            self.blue_gain,
            self.shot_noise,
            self.read_noise,
        ]
        .iter()
        .chain(self.ccm.iter().flatten())
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("camera parameters must be finite"));
        }
        if self.exposure_gain <= 0.0 || self.red_gain <= 0.0 || self.blue_gain <= 0.0 {
            return Err(Error::invalid("camera gains must be positive"));
        }
        if self.shot_noise < 0.0 || self.read_noise < 0.0 {
            return Err(Error::invalid("raw noise parameters must be nonnegative"));
        }
        if self.tone_curve_id >= pool.len() {
            return Err(Error::invalid(format!(
                "tone curve {} not in pool",
                self.tone_curve_id
            )));
        }
        if mat3::inverse(&self.ccm).is_none() {
            return Err(Error::invalid("color correction matrix is singular"));
        }
        Ok(())
    }
}

/// Sampling ranges for camera parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSampling {
    /// log2 of the exposure gain.
    pub exposure_log2: [f64; 2],
    pub red_gain: [f64; 2],
    pub blue_gain: [f64; 2],
    /// Shot-noise range; sampled log-uniformly.
    pub shot_noise: [f64; 2],
    /// `log(read) ~ N(slope·log(shot) + intercept, std)`.
    pub read_log_slope: f64,
    pub read_log_intercept: f64,
    pub read_log_std: f64,
    pub bayer_patterns: Vec<BayerPattern>,
}

impl Default for CameraSampling {
    fn default() -> Self {
        Self {
            exposure_log2: [-0.1, 0.3],
            red_gain: [1.2, 2.4],
            blue_gain: [1.2, 2.4],
            shot_noise: [1e-4, 1.2e-2],
            read_log_slope: 2.18,
            read_log_intercept: 1.20,
            read_log_std: 0.26,
            bayer_patterns: vec![BayerPattern::Rggb],
        }
    }
}

impl CameraSampling {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: &[f64; 2], pos: bool| {
            r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && (!pos || r[0] > 0.0)
        };
        if !ordered(&self.exposure_log2, false)
            || !ordered(&self.red_gain, true)
            || !ordered(&self.blue_gain, true)
            || !ordered(&self.shot_noise, true)
        {
            return Err(Error::Config(
                "camera sampling ranges must be ordered and positive".into(),
            ));
        }
        if !(self.read_log_std >= 0.0)
            || !self.read_log_slope.is_finite()
            || !self.read_log_intercept.is_finite()
        {
            return Err(Error::Config("invalid read-noise model".into()));
        }
        if self.bayer_patterns.is_empty() {
            return Err(Error::Config(
                "at least one Bayer pattern is required".into(),
            ));
        }
        Ok(())
    }
}

fn uniform(rng: &mut DegradeRng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

/// Draw order: exposure, red, blue, ccm entry, weight, tone curve, shot, read.
pub fn sample_camera_params(
    pool: &CalibrationPool,
    cfg: &CameraSampling,
    rng: &mut DegradeRng,
) -> Result<CameraParams> {
    if pool.is_empty() {
        return Err(Error::Config("calibration pool is empty".into()));
    }
    let exposure_gain = uniform(rng, cfg.exposure_log2).exp2();
    let red_gain = uniform(rng, cfg.red_gain);
    let blue_gain = uniform(rng, cfg.blue_gain);
    let ccm_entry = rng.random_range(0..pool.len());
    let ccm_weight: f64 = rng.random_range(0.0..=1.0);
    let tone_curve_id = rng.random_range(0..pool.len());
    let log_shot = uniform(rng, [cfg.shot_noise[0].ln(), cfg.shot_noise[1].ln()]);
    let mean = cfg.read_log_slope * log_shot + cfg.read_log_intercept;
    let log_read = Normal::new(mean, cfg.read_log_std)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(rng);
    let ccm = CameraParams::blend_ccm(pool, ccm_entry, ccm_weight)?;
    if mat3::inverse(&ccm).is_none() {
        return Err(Error::invalid(
            "sampled color correction matrix is singular",
        ));
    }
    Ok(CameraParams {
        exposure_gain,
        red_gain,
        blue_gain,
        ccm,
        ccm_entry,
        ccm_weight,
        tone_curve_id,
        shot_noise: log_shot.exp(),
        read_noise: log_read.exp(),
    })
}

pub fn sample_pattern(cfg: &CameraSampling, rng: &mut DegradeRng) -> BayerPattern {
    match cfg.bayer_patterns.len() {
        1 => cfg.bayer_patterns[0],
        n => cfg.bayer_patterns[rng.random_range(0..n)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn exposure_is_log_uniform() {
        let pool = CalibrationPool::builtin();
        let cfg = CameraSampling::default();
        let mut rng = seeded(5);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let c = sample_camera_params(&pool, &cfg, &mut rng).unwrap();
            let l = c.exposure_gain.log2();
            assert!((-0.1..=0.3).contains(&l));
            assert!((1.2..=2.4).contains(&c.red_gain) && (1.2..=2.4).contains(&c.blue_gain));
            assert!((0.0..=1.0).contains(&c.ccm_weight));
            assert!((1e-4..=1.2e-2).contains(&c.shot_noise));
            assert!(c.read_noise > 0.0);
            sum += l;
        }
        assert!((sum / n as f64 - 0.1).abs() < 0.01);
    }

    #[test]
    fn blend_endpoints_are_exact() {
        let pool = CalibrationPool::builtin();
        for (i, e) in pool.entries.iter().enumerate() {
            assert_eq!(
                CameraParams::blend_ccm(&pool, i, 1.0).unwrap(),
                e.forward_matrix_1
            );
            assert_eq!(
                CameraParams::blend_ccm(&pool, i, 0.0).unwrap(),
                e.forward_matrix_2
            );
        }
    }

    #[test]
    fn tone_choice_is_independent_of_ccm_entry() {
        let pool = CalibrationPool::builtin();
        let cfg = CameraSampling::default();
        let mut rng = seeded(9);
        let n = pool.len();
        let mut counts = vec![0usize; n * n];
        for _ in 0..9000 {
            let c = sample_camera_params(&pool, &cfg, &mut rng).unwrap();
            counts[c.ccm_entry * n + c.tone_curve_id] += 1;
        }
        let expect = 9000.0 / (n * n) as f64;
        assert!(
            counts
                .iter()
                .all(|&c| (c as f64 - expect).abs() < 0.15 * expect),
            "{counts:?}"
        );
    }

    #[test]
    fn sampling_is_reproducible_and_needs_entries() {
        let pool = CalibrationPool::builtin();
        let cfg = CameraSampling::default();
        let a = sample_camera_params(&pool, &cfg, &mut seeded(3)).unwrap();
        let b = sample_camera_params(&pool, &cfg, &mut seeded(3)).unwrap();
        assert_eq!(a, b);
        let empty = CalibrationPool {
            schema_version: 1,
            entries: vec![],
        };
        assert!(matches!(
            sample_camera_params(&empty, &cfg, &mut seeded(3)),
            Err(Error::Config(_))
        ));
    }
}
