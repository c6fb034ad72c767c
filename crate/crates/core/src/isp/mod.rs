//! Processed camera sensor noise.
//!
//! An RGB image is unprocessed to a synthetic Bayer raw, corrupted with
//! heteroscedastic shot/read noise, then rendered back through a forward ISP:
//! demosaic, exposure and white balance, camera to XYZ (D50), XYZ to linear
//! sRGB, tone curve, sRGB gamma.

mod camera;
mod demosaic;
mod pool;
mod tone;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use camera::{sample_camera_params, sample_pattern, CameraParams, CameraSampling};
pub use demosaic::{demosaic_malvar, mosaic};
pub use pool::{CalibrationEntry, CalibrationPool, POOL_SCHEMA_VERSION};
pub use tone::{srgb_decode, srgb_encode, ToneCurve, TONE_SAMPLES};

use crate::error::{Error, Result};
use crate::image::ImageF;
use crate::mat3::{self, Mat3};
use crate::rng::DegradeRng;

/// XYZ (D50) to linear sRGB, Bradford-adapted.
pub const XYZ_D50_TO_SRGB: Mat3 = [
    [3.1338561, -1.6168667, -0.4906146],
    [-0.9787684, 1.9161415, 0.0334540],
    [0.0719453, -0.2289914, 1.4052427],
];

pub fn srgb_to_xyz_d50() -> Mat3 {
    mat3::inverse(&XYZ_D50_TO_SRGB).expect("fixed matrix is invertible")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BayerPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl BayerPattern {
    pub const ALL: [BayerPattern; 4] = [Self::Rggb, Self::Bggr, Self::Grbg, Self::Gbrg];

    /// Channel (0 red, 1 green, 2 blue) sampled at `(r, c)`.
    pub fn color_at(self, r: usize, c: usize) -> usize {
        let tile = match self {
            Self::Rggb => [[0, 1], [1, 2]],
            Self::Bggr => [[2, 1], [1, 0]],
            Self::Grbg => [[1, 0], [2, 1]],
            Self::Gbrg => [[1, 2], [0, 1]],
        };
        tile[r % 2][c % 2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawBayer {
    height: usize,
    width: usize,
    pattern: BayerPattern,
    values: Vec<f64>,
}

impl RawBayer {
    /// Dimensions must be even and at least 4; values finite and within [0,1].
    pub fn new(
        height: usize,
        width: usize,
        pattern: BayerPattern,
        values: Vec<f64>,
    ) -> Result<Self> {
        if !height.is_multiple_of(2) || !width.is_multiple_of(2) || height < 4 || width < 4 {
            return Err(Error::invalid(format!(
                "raw dimensions must be even and >= 4, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::invalid("raw sample count does not match dimensions"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("raw samples must lie in [0,1]"));
        }
        Ok(Self {
            height,
            width,
            pattern,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pattern(&self) -> BayerPattern {
        self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn tone_curve<'a>(cam: &CameraParams, pool: &'a CalibrationPool) -> Result<&'a ToneCurve> {
    cam.validate(pool)?;
    Ok(&pool.entries[cam.tone_curve_id].tone_curve)
}

/// Renders a raw mosaic to clamped sRGB.
pub fn forward_isp(raw: &RawBayer, cam: &CameraParams, pool: &CalibrationPool) -> Result<ImageF> {
    let tone = tone_curve(cam, pool)?;
    let gains = cam.channel_gains();
    let to_rgb = mat3::mul(&XYZ_D50_TO_SRGB, &cam.ccm);
    let mut img = demosaic_malvar(raw);
    for px in img.data_mut().chunks_exact_mut(3) {
        let balanced = [px[0] * gains[0], px[1] * gains[1], px[2] * gains[2]];
        let lin = mat3::apply(&to_rgb, balanced);
        for k in 0..3 {
            px[k] = srgb_encode(tone.apply(lin[k].clamp(0.0, 1.0))).clamp(0.0, 1.0);
        }
    }
    Ok(img)
}

/// Unprocesses a 3-channel sRGB image to a clamped raw mosaic.
pub fn reverse_isp(
    img: &ImageF,
    cam: &CameraParams,
    pattern: BayerPattern,
    pool: &CalibrationPool,
) -> Result<RawBayer> {
    if img.channels() != 3 {
        return Err(Error::invalid("reverse ISP needs a 3-channel image"));
    }
    let tone = tone_curve(cam, pool)?;
    let gains = cam.channel_gains();
    let ccm_inv = mat3::inverse(&cam.ccm)
        .ok_or_else(|| Error::invalid("color correction matrix is singular"))?;
    let to_cam = mat3::mul(&ccm_inv, &srgb_to_xyz_d50());
    let (h, w) = (img.height(), img.width());
    let mut values = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let p = img.pixel(r, c);
            let lin = [0, 1, 2].map(|k| tone.invert(srgb_decode(p[k].clamp(0.0, 1.0))));
            let cam_rgb = mat3::apply(&to_cam, lin);
            let k = pattern.color_at(r, c);
            values.push((cam_rgb[k] / gains[k]).clamp(0.0, 1.0));
        }
    }
    RawBayer::new(h, w, pattern, values)
}

/// Adds zero-mean Gaussian noise with variance `shot·x + read` at every site.
pub fn add_raw_noise(
    raw: &RawBayer,
    shot: f64,
    read: f64,
    rng: &mut DegradeRng,
) -> Result<RawBayer> {
    if !(shot >= 0.0 && read >= 0.0) || !shot.is_finite() || !read.is_finite() {
        return Err(Error::invalid(
            "shot and read noise must be finite and nonnegative",
        ));
    }
    let values = raw
        .values
        .iter()
        .map(|&x| {
            let z: f64 = StandardNormal.sample(rng);
            (x + (shot * x + read).sqrt() * z).clamp(0.0, 1.0)
        })
        .collect();
    Ok(RawBayer {
        values,
        ..raw.clone()
    })
}

/// One materialized sensor-noise draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNoiseSpec {
    pub camera: CameraParams,
    pub pattern: BayerPattern,
}

pub fn sample_sensor_spec(
    pool: &CalibrationPool,
    cfg: &CameraSampling,
    rng: &mut DegradeRng,
) -> Result<SensorNoiseSpec> {
    let camera = sample_camera_params(pool, cfg, rng)?;
    let pattern = sample_pattern(cfg, rng);
    Ok(SensorNoiseSpec { camera, pattern })
}

/// Reverse ISP, raw noise from `rng`, forward ISP. Odd dimensions are
/// mirror-padded by one row or column and cropped back afterwards.
pub fn apply_sensor_noise(
    img: &ImageF,
    spec: &SensorNoiseSpec,
    pool: &CalibrationPool,
    rng: &mut DegradeRng,
) -> Result<ImageF> {
    with_even_dims(img, |even| {
        let raw = reverse_isp(even, &spec.camera, spec.pattern, pool)?;
        let noisy = add_raw_noise(&raw, spec.camera.shot_noise, spec.camera.read_noise, rng)?;
        forward_isp(&noisy, &spec.camera, pool)
    })
}

/// Noise-free reverse-then-forward rendering.
pub fn isp_round_trip(
    img: &ImageF,
    cam: &CameraParams,
    pattern: BayerPattern,
    pool: &CalibrationPool,
) -> Result<ImageF> {
    with_even_dims(img, |even| {
        forward_isp(&reverse_isp(even, cam, pattern, pool)?, cam, pool)
    })
}

pub fn processed_sensor_noise(
    img: &ImageF,
    pool: &CalibrationPool,
    cfg: &CameraSampling,
    rng: &mut DegradeRng,
) -> Result<ImageF> {
    let spec = sample_sensor_spec(pool, cfg, rng)?;
    apply_sensor_noise(img, &spec, pool, rng)
}

fn with_even_dims(img: &ImageF, f: impl FnOnce(&ImageF) -> Result<ImageF>) -> Result<ImageF> {
    let (h, w) = (img.height(), img.width());
    if h % 2 == 0 && w % 2 == 0 {
        return f(img);
    }
    if h < 2 || w < 2 {
        return Err(Error::invalid("image too small for sensor noise"));
    }
    let (ph, pw) = (h + h % 2, w + w % 2);
    let ch = img.channels();
    let padded = ImageF::from_fn(ph, pw, ch, |r, c, k| {
        let r = if r == h { h - 2 } else { r };
        let c = if c == w { w - 2 } else { c };
        img.get(r, c, k)
    });
    let out = f(&padded)?;
    out.crop(crate::image::CropRect {
        top: 0,
        left: 0,
        height: h,
        width: w,
    })
}
