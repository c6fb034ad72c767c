use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::jpeg::{JpegSpec, MAX_QUALITY, MIN_QUALITY};
use crate::error::{Error, Result};
use crate::image::ImageF;

pub use crate::mat3::Mat3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    General,
    ChannelIndependent,
    Gray,
}

/// Zero-mean cross-channel Gaussian noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GaussianNoiseSpec {
    General {
        sigma: f64,
        covariance: Mat3,
    },
    /// Covariance `sigma^2 * I`.
    ChannelIndependent {
        sigma: f64,
    },
    /// Covariance `sigma^2 * ones`: the same draw on every channel.
    Gray {
        sigma: f64,
    },
}

impl GaussianNoiseSpec {
    pub fn mode(&self) -> NoiseMode {
        match self {
            GaussianNoiseSpec::General { .. } => NoiseMode::General,
            GaussianNoiseSpec::ChannelIndependent { .. } => NoiseMode::ChannelIndependent,
            GaussianNoiseSpec::Gray { .. } => NoiseMode::Gray,
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            GaussianNoiseSpec::General { sigma, .. }
            | GaussianNoiseSpec::ChannelIndependent { sigma }
            | GaussianNoiseSpec::Gray { sigma } => sigma,
        }
    }

    pub fn covariance(&self) -> Mat3 {
        match *self {
            GaussianNoiseSpec::General { covariance, .. } => covariance,
            GaussianNoiseSpec::ChannelIndependent { sigma } => {
                let v = sigma * sigma;
                [[v, 0.0, 0.0], [0.0, v, 0.0], [0.0, 0.0, v]]
            }
            GaussianNoiseSpec::Gray { sigma } => [[sigma * sigma; 3]; 3],
        }
    }
}

/// Lower-triangular `L` with `L L^T = cov` for a symmetric positive
/// semidefinite matrix; rank-deficient directions get zero columns.
pub fn psd_factor(cov: &Mat3) -> Result<Mat3> {
    let scale = (cov[0][0].abs() + cov[1][1].abs() + cov[2][2].abs()).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    for i in 0..3 {
        for j in 0..3 {
            if !cov[i][j].is_finite() || (cov[i][j] - cov[j][i]).abs() > tol {
                return Err(Error::invalid("covariance must be finite and symmetric"));
            }
        }
    }
    let mut l = [[0.0; 3]; 3];
    for j in 0..3 {
        let d = cov[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d < -tol {
            return Err(Error::invalid("covariance is not positive semidefinite"));
        }
        if d <= tol {
            for i in j + 1..3 {
                let off = cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if off.abs() > 1e-9 * scale {
                    return Err(Error::invalid("covariance is not positive semidefinite"));
                }
            }
            continue;
        }
        let root = d.sqrt();
        l[j][j] = root;
        for i in j + 1..3 {
            l[i][j] = (cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / root;
        }
    }
    Ok(l)
}

/// Random Gram-matrix covariance scaled so the mean per-channel variance is
/// `sigma^2`.
pub fn sample_general_covariance<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for row in &mut m {
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
    let mut gram = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            gram[i][j] = (0..3).map(|k| m[k][i] * m[k][j]).sum();
        }
    }
    let trace = gram[0][0] + gram[1][1] + gram[2][2];
    let f = 3.0 * sigma * sigma / trace;
    for i in 0..3 {
        for j in 0..i {
            // Exact symmetry.
            gram[j][i] = gram[i][j];
        }
    }
    gram.map(|row| row.map(|v| v * f))
}

/// Adds one noise vector per pixel and clamps. Three standard normals are
/// drawn per pixel in every mode so the stream layout does not depend on it.
pub fn add_gaussian_noise<R: Rng + ?Sized>(
    img: &ImageF,
    spec: &GaussianNoiseSpec,
    rng: &mut R,
) -> Result<ImageF> {
    if img.channels() != 3 {
        return Err(Error::invalid("Gaussian noise needs a 3-channel image"));
    }
    let factor = match spec {
        GaussianNoiseSpec::General { covariance, .. } => Some(psd_factor(covariance)?),
        _ => None,
    };
    let sigma = spec.sigma();
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let z: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = match (spec, &factor) {
            (GaussianNoiseSpec::Gray { .. }, _) => [sigma * z[0]; 3],
            (GaussianNoiseSpec::ChannelIndependent { .. }, _) => {
                [sigma * z[0], sigma * z[1], sigma * z[2]]
            }
            (_, Some(l)) => [
                l[0][0] * z[0],
                l[1][0] * z[0] + l[1][1] * z[1],
                l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2],
            ],
            (_, None) => unreachable!(),
        };
        for (v, d) in px.iter_mut().zip(n) {
            *v = (*v + d).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Sampling distribution for the Gaussian and inner-JPEG noise slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSampling {
    /// Probabilities of general, channel-independent, and gray modes.
    pub mode_probs: [f64; 3],
    /// Inclusive range of `sigma * 255`, sampled uniformly over integers.
    pub sigma_levels: [u32; 2],
    pub inner_jpeg_prob: f64,
    pub jpeg_quality: [u8; 2],
}

impl Default for NoiseSampling {
    fn default() -> Self {
        Self {
            mode_probs: [0.2, 0.4, 0.4],
            sigma_levels: [1, 25],
            inner_jpeg_prob: 0.75,
            jpeg_quality: [MIN_QUALITY, MAX_QUALITY],
        }
    }
}

impl NoiseSampling {
    pub fn validate(&self) -> Result<()> {
        let probs_ok = self.mode_probs.iter().all(|p| (0.0..=1.0).contains(p))
            && (self.mode_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        let q = self.jpeg_quality;
        if !probs_ok
            || self.sigma_levels[0] > self.sigma_levels[1]
            || !(0.0..=1.0).contains(&self.inner_jpeg_prob)
            || q[0] < 1
            || q[1] > 100
            || q[0] > q[1]
        {
            return Err(Error::Config(format!("invalid noise sampling {self:?}")));
        }
        Ok(())
    }

    pub fn sample_gaussian<R: Rng + ?Sized>(&self, rng: &mut R) -> GaussianNoiseSpec {
        let u: f64 = rng.random();
        let level = rng.random_range(self.sigma_levels[0]..=self.sigma_levels[1]);
        let sigma = f64::from(level) / 255.0;
        if u < self.mode_probs[0] {
            GaussianNoiseSpec::General {
                sigma,
                covariance: sample_general_covariance(sigma, rng),
            }
        } else if u < self.mode_probs[0] + self.mode_probs[1] {
            GaussianNoiseSpec::ChannelIndependent { sigma }
        } else {
            GaussianNoiseSpec::Gray { sigma }
        }
    }

    pub fn sample_quality<R: Rng + ?Sized>(&self, rng: &mut R) -> JpegSpec {
        JpegSpec::new(rng.random_range(self.jpeg_quality[0]..=self.jpeg_quality[1]))
    }
}

/// Draws the Gaussian noise spec (always) and the inner JPEG spec (with its
/// configured probability).
pub fn sample_noise_specs<R: Rng + ?Sized>(
    cfg: &NoiseSampling,
    rng: &mut R,
) -> (GaussianNoiseSpec, Option<JpegSpec>) {
    let gaussian = cfg.sample_gaussian(rng);
    let present = rng.random::<f64>() < cfg.inner_jpeg_prob;
    let quality = cfg.sample_quality(rng);
    (gaussian, present.then_some(quality))
}
