//! Tabulated tone curves and the sRGB transfer function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TONE_SAMPLES: usize = 1025;

/// A strictly increasing map of [0,1] onto itself, sampled at `TONE_SAMPLES`
/// evenly spaced inputs and linearly interpolated between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ToneCurve {
    samples: Vec<f64>,
}

impl ToneCurve {
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.len() != TONE_SAMPLES {
            return Err(Error::invalid(format!(
                "tone curve needs {TONE_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if samples[0].abs() > 1e-9 || (samples[TONE_SAMPLES - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("tone curve must map 0 to 0 and 1 to 1"));
        }
        if samples.windows(2).any(|p| !(p[1] > p[0])) || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tone curve must be strictly increasing"));
        }
        let mut samples = samples;
        samples[0] = 0.0;
        samples[TONE_SAMPLES - 1] = 1.0;
        Ok(Self { samples })
    }

    pub fn from_fn(f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = (TONE_SAMPLES - 1) as f64;
        Self::from_samples((0..TONE_SAMPLES).map(|i| f(i as f64 / n)).collect())
    }

    pub fn linear() -> Self {
        Self::from_fn(|x| x).expect("identity is a valid curve")
    }

    pub fn smoothstep() -> Self {
        Self::from_fn(|x| x * x * (3.0 - 2.0 * x)).expect("smoothstep is a valid curve")
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) {
            return Err(Error::invalid("power curve exponent must be positive"));
        }
        Self::from_fn(|x| x.powf(exponent))
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Forward map; inputs are clamped to [0,1].
    pub fn apply(&self, x: f64) -> f64 {
        let n = (TONE_SAMPLES - 1) as f64;
        let t = x.clamp(0.0, 1.0) * n;
        let i = (t.floor() as usize).min(TONE_SAMPLES - 2);
        let f = t - i as f64;
        self.samples[i] + f * (self.samples[i + 1] - self.samples[i])
    }

    /// Exact inverse of [`apply`](Self::apply); inputs are clamped to [0,1].
    pub fn invert(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        let j = self.samples.partition_point(|&s| s <= y);
        let i = j.saturating_sub(1).min(TONE_SAMPLES - 2);
        let (lo, hi) = (self.samples[i], self.samples[i + 1]);
        let f = ((y - lo) / (hi - lo)).clamp(0.0, 1.0);
        (i as f64 + f) / (TONE_SAMPLES - 1) as f64
    }
}

impl TryFrom<Vec<f64>> for ToneCurve {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::from_samples(v)
    }
}

impl From<ToneCurve> for Vec<f64> {
    fn from(t: ToneCurve) -> Self {
        t.samples
    }
}

pub fn srgb_encode(x: f64) -> f64 {
    if x <= 0.0031308 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_decode(y: f64) -> f64 {
    if y <= 0.04045 {
        y / 12.92
    } else {
        ((y + 0.055) / 1.055).powf(2.4)
    }
}
