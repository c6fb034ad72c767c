//! Gaussian blur kernel synthesis and blur-parameter sampling.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Kernel2D;

pub const MIN_KERNEL_SIZE: usize = 7;
pub const MAX_KERNEL_SIZE: usize = 21;
/// Support of the pre-blur kernel used by shift-corrected nearest downsampling.
pub const SHIFTED_KERNEL_SIZE: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlurKind {
    Iso,
    Aniso,
}

/// Parameters of one Gaussian blur; the kernel itself is always re-derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BlurSpec {
    Iso {
        size: usize,
        sigma: f64,
    },
    Aniso {
        size: usize,
        sigma_major: f64,
        sigma_minor: f64,
        theta: f64,
    },
}

impl BlurSpec {
    pub fn kind(&self) -> BlurKind {
        match self {
            BlurSpec::Iso { .. } => BlurKind::Iso,
            BlurSpec::Aniso { .. } => BlurKind::Aniso,
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            BlurSpec::Iso { size, .. } | BlurSpec::Aniso { size, .. } => size,
        }
    }

    pub fn kernel(&self) -> Result<Kernel2D> {
        match *self {
            BlurSpec::Iso { size, sigma } => iso_gaussian(size, sigma),
            BlurSpec::Aniso {
                size,
                sigma_major,
                sigma_minor,
                theta,
            } => aniso_gaussian(size, sigma_major, sigma_minor, theta),
        }
    }
}

fn check_size(size: usize) -> Result<()> {
    if size.is_multiple_of(2) || size == 0 {
        return Err(Error::invalid(format!(
            "kernel size must be odd and positive, got {size}"
        )));
    }
    Ok(())
}

fn check_sigma(name: &str, sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "{name} must be positive, got {sigma}"
        )));
    }
    Ok(())
}

/// Evaluates `density(dy, dx)` on the centered integer grid, zeroes cells
/// below machine epsilon relative to the peak, and normalizes.
fn gaussian_grid(size: usize, density: impl Fn(f64, f64) -> f64) -> Result<Kernel2D> {
    let half = (size / 2) as f64;
    let mut w: Vec<f64> = (0..size * size)
        .map(|i| density((i / size) as f64 - half, (i % size) as f64 - half))
        .collect();
    let peak = w.iter().copied().fold(0.0, f64::max);
    for v in &mut w {
        if *v < f64::EPSILON * peak {
            *v = 0.0;
        }
    }
    Kernel2D::normalized(size, size, w)
}

pub fn iso_gaussian(size: usize, sigma: f64) -> Result<Kernel2D> {
    check_size(size)?;
    check_sigma("sigma", sigma)?;
    let denom = 2.0 * sigma * sigma;
    gaussian_grid(size, |dy, dx| (-(dy * dy + dx * dx) / denom).exp())
}

/// Rotated elliptical Gaussian with covariance `R(theta) diag(major^2, minor^2) R(theta)^T`.
/// At `theta = 0` the major axis is horizontal.
pub fn aniso_gaussian(
    size: usize,
    sigma_major: f64,
    sigma_minor: f64,
    theta: f64,
) -> Result<Kernel2D> {
    check_size(size)?;
    check_sigma("sigma_major", sigma_major)?;
    check_sigma("sigma_minor", sigma_minor)?;
    if !theta.is_finite() {
        return Err(Error::invalid("theta must be finite"));
    }
    let (s, c) = theta.sin_cos();
    let (i1, i2) = (
        1.0 / (sigma_major * sigma_major),
        1.0 / (sigma_minor * sigma_minor),
    );
    // Entries of the inverse covariance over (x, y) = (dx, dy).
    let a = c * c * i1 + s * s * i2;
    let b = c * s * (i1 - i2);
    let d = s * s * i1 + c * c * i2;
    gaussian_grid(size, |dy, dx| {
        (-0.5 * (a * dx * dx + 2.0 * b * dx * dy + d * dy * dy)).exp()
    })
}

/// Isotropic Gaussian whose mass is moved by `(dy, dx)` pixels through
/// bilinear resampling of the centered kernel; samples falling off the grid
/// contribute zero and the result is renormalized.
pub fn shifted_iso_gaussian(size: usize, sigma: f64, shift: (f64, f64)) -> Result<Kernel2D> {
    let base = iso_gaussian(size, sigma)?;
    let limit = size as f64 / 2.0 - 1.0;
    let (dy, dx) = shift;
    if !(dy.abs() < limit && dx.abs() < limit) {
        return Err(Error::invalid(format!(
            "shift ({dy}, {dx}) exceeds limit {limit}"
        )));
    }
    let sample = |y: f64, x: f64| -> f64 {
        let (y0, x0) = (y.floor(), x.floor());
        let (fy, fx) = (y - y0, x - x0);
        let at = |r: f64, c: f64| -> f64 {
            if r < 0.0 || c < 0.0 || r >= size as f64 || c >= size as f64 {
                0.0
            } else {
                base.get(r as usize, c as usize)
            }
        };
        (1.0 - fy) * ((1.0 - fx) * at(y0, x0) + fx * at(y0, x0 + 1.0))
            + fy * ((1.0 - fx) * at(y0 + 1.0, x0) + fx * at(y0 + 1.0, x0 + 1.0))
    };
    let w = (0..size * size)
        .map(|i| sample((i / size) as f64 - dy, (i % size) as f64 - dx))
        .collect();
    Kernel2D::normalized(size, size, w)
}

/// Sampling ranges for one scale factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlurRanges {
    pub min_size: usize,
    pub max_size: usize,
    pub iso_sigma: [f64; 2],
    pub aniso_sigma: [f64; 2],
}

impl BlurRanges {
    pub fn for_scale(scale: u32) -> Self {
        let (iso_hi, aniso_hi) = if scale >= 4 { (2.8, 8.0) } else { (2.4, 6.0) };
        Self {
            min_size: MIN_KERNEL_SIZE,
            max_size: MAX_KERNEL_SIZE,
            iso_sigma: [0.1, iso_hi],
            aniso_sigma: [0.5, aniso_hi],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes_ok =
            self.min_size % 2 == 1 && self.max_size % 2 == 1 && self.min_size <= self.max_size;
        let range_ok = |r: [f64; 2]| r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite();
        if !sizes_ok || !range_ok(self.iso_sigma) || !range_ok(self.aniso_sigma) {
            return Err(Error::Config(format!("invalid blur ranges {self:?}")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, kind: BlurKind, rng: &mut R) -> BlurSpec {
        let steps = (self.max_size - self.min_size) / 2;
        let size = self.min_size + 2 * rng.random_range(0..=steps);
        match kind {
            BlurKind::Iso => BlurSpec::Iso {
                size,
                sigma: rng.random_range(self.iso_sigma[0]..=self.iso_sigma[1]),
            },
            BlurKind::Aniso => {
                let theta = rng.random_range(0.0..=PI);
                let sigma_major = rng.random_range(self.aniso_sigma[0]..=self.aniso_sigma[1]);
                let sigma_minor = rng.random_range(self.aniso_sigma[0]..=self.aniso_sigma[1]);
                BlurSpec::Aniso {
                    size,
                    sigma_major,
                    sigma_minor,
                    theta,
                }
            }
        }
    }
}

impl Default for BlurRanges {
    fn default() -> Self {
        Self::for_scale(2)
    }
}

/// Draws a blur with the default ranges for `scale` (2 or 4).
pub fn sample_blur_spec<R: Rng + ?Sized>(
    scale: u32,
    kind: BlurKind,
    rng: &mut R,
) -> Result<BlurSpec> {
    if scale != 2 && scale != 4 {
        return Err(Error::invalid(format!("scale must be 2 or 4, got {scale}")));
    }
    Ok(BlurRanges::for_scale(scale).sample(kind, rng))
}
