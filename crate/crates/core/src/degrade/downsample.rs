use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{convolve_reflect_strided, resize, ImageF, ResizeMethod};
use crate::kernels::{shifted_iso_gaussian, SHIFTED_KERNEL_SIZE};

/// One downsampling operator with its concrete parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DownSpec {
    /// Shift-corrected Gaussian pre-blur followed by keeping every
    /// `scale`-th pixel.
    Nearest {
        scale: f64,
        pre_blur_sigma: f64,
    },
    Bilinear {
        scale: f64,
    },
    Bicubic {
        scale: f64,
    },
    /// Resize by `a / scale`, then to the final `1 / scale` size.
    DownUp {
        scale: f64,
        a: f64,
        stage1: ResizeMethod,
        stage2: ResizeMethod,
    },
    /// Plain `scale`-strided subsampling with no pre-filter.
    Stride {
        scale: f64,
    },
}

impl DownSpec {
    pub fn scale(&self) -> f64 {
        match *self {
            DownSpec::Nearest { scale, .. }
            | DownSpec::Bilinear { scale }
            | DownSpec::Bicubic { scale }
            | DownSpec::DownUp { scale, .. }
            | DownSpec::Stride { scale } => scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.scale();
        if !(s > 1.0) || !s.is_finite() {
            return Err(Error::invalid(format!(
                "downsampling scale must exceed 1, got {s}"
            )));
        }
        match *self {
            DownSpec::Nearest { pre_blur_sigma, .. } => {
                if s.fract() != 0.0 {
                    return Err(Error::invalid(
                        "nearest downsampling needs an integer scale",
                    ));
                }
                if !(pre_blur_sigma > 0.0) || !pre_blur_sigma.is_finite() {
                    return Err(Error::invalid("pre-blur sigma must be positive"));
                }
            }
            DownSpec::Stride { .. } if s.fract() != 0.0 => {
                return Err(Error::invalid(
                    "strided downsampling needs an integer scale",
                ));
            }
            DownSpec::DownUp { a, .. } if !(0.5..=s).contains(&a) => {
                return Err(Error::invalid(format!(
                    "down-up factor {a} outside [1/2, {s}]"
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Output size `(floor(h / s), floor(w / s))`.
pub fn downsampled_dims(h: usize, w: usize, scale: f64) -> Result<(usize, usize)> {
    let dims = (
        (h as f64 / scale).floor() as usize,
        (w as f64 / scale).floor() as usize,
    );
    if dims.0 == 0 || dims.1 == 0 {
        return Err(Error::invalid(format!(
            "{h}x{w} is too small for scale {scale}"
        )));
    }
    Ok(dims)
}

/// Intermediate size after the first down-up stage.
pub(crate) fn down_up_mid_dims(h: usize, w: usize, scale: f64, a: f64) -> (usize, usize) {
    let f = a / scale;
    (
        ((h as f64 * f).round() as usize).max(1),
        ((w as f64 * f).round() as usize).max(1),
    )
}

/// First half of down-up sampling: resize by `a / scale`.
pub fn down_up_stage1(img: &ImageF, spec: &DownSpec) -> Result<ImageF> {
    let DownSpec::DownUp {
        scale, a, stage1, ..
    } = *spec
    else {
        return Err(Error::invalid("down-up stage applied to another method"));
    };
    spec.validate()?;
    let (h, w) = down_up_mid_dims(img.height(), img.width(), scale, a);
    resize(img, h, w, stage1, true)
}

/// Second half of down-up sampling: resize to the final LR size `target`.
pub fn down_up_stage2(img: &ImageF, spec: &DownSpec, target: (usize, usize)) -> Result<ImageF> {
    let DownSpec::DownUp { stage2, .. } = *spec else {
        return Err(Error::invalid("down-up stage applied to another method"));
    };
    resize(img, target.0, target.1, stage2, true)
}

pub fn downsample(img: &ImageF, spec: &DownSpec) -> Result<ImageF> {
    spec.validate()?;
    let scale = spec.scale();
    let (oh, ow) = downsampled_dims(img.height(), img.width(), scale)?;
    match *spec {
        DownSpec::Nearest { pre_blur_sigma, .. } => {
            let shift = 0.5 * (scale - 1.0);
            let kernel = shifted_iso_gaussian(SHIFTED_KERNEL_SIZE, pre_blur_sigma, (shift, shift))?;
            let out = convolve_reflect_strided(img, &kernel, scale as usize)?;
            crop_to(out, oh, ow)
        }
        DownSpec::Stride { .. } => {
            let step = scale as usize;
            Ok(ImageF::from_fn(oh, ow, img.channels(), |r, c, ch| {
                img.get(r * step, c * step, ch)
            }))
        }
        DownSpec::Bilinear { .. } => resize(img, oh, ow, ResizeMethod::Bilinear, true),
        DownSpec::Bicubic { .. } => resize(img, oh, ow, ResizeMethod::Bicubic, true),
        DownSpec::DownUp { .. } => {
            let mid = down_up_stage1(img, spec)?;
            down_up_stage2(&mid, spec, (oh, ow))
        }
    }
}

fn crop_to(img: ImageF, h: usize, w: usize) -> Result<ImageF> {
    if img.dims() == (h, w) {
        return Ok(img);
    }
    img.crop(crate::image::CropRect {
        top: 0,
        left: 0,
        height: h,
        width: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_specs(scale: f64) -> Vec<DownSpec> {
        vec![
            DownSpec::Nearest {
                scale,
                pre_blur_sigma: 0.6 * scale,
            },
            DownSpec::Bilinear { scale },
            DownSpec::Bicubic { scale },
            DownSpec::DownUp {
                scale,
                a: 0.5,
                stage1: ResizeMethod::Bicubic,
                stage2: ResizeMethod::Bilinear,
            },
            DownSpec::DownUp {
                scale,
                a: 1.7,
                stage1: ResizeMethod::Bilinear,
                stage2: ResizeMethod::Bicubic,
            },
            DownSpec::Stride { scale },
        ]
    }

    #[test]
    fn constant_maps_to_constant_of_right_size() {
        for scale in [2.0, 4.0] {
            let img = ImageF::filled(48, 64, 3, 0.42);
            for spec in all_specs(scale) {
                let out = downsample(&img, &spec).unwrap();
                assert_eq!(
                    out.dims(),
                    (48 / scale as usize, 64 / scale as usize),
                    "{spec:?}"
                );
                assert!(
                    out.data().iter().all(|v| (v - 0.42).abs() < 1e-12),
                    "{spec:?}"
                );
            }
        }
    }

    #[test]
    fn floor_sizes_for_uncropped_inputs() {
        let img = crate::synth::natural_image(45, 38, 2);
        for spec in all_specs(4.0) {
            assert_eq!(downsample(&img, &spec).unwrap().dims(), (11, 9), "{spec:?}");
        }
    }

    #[test]
    fn down_up_with_a_equal_scale_is_single_resize() {
        let img = crate::synth::natural_image(64, 48, 5);
        for scale in [2.0, 4.0] {
            let spec = DownSpec::DownUp {
                scale,
                a: scale,
                stage1: ResizeMethod::Bilinear,
                stage2: ResizeMethod::Bicubic,
            };
            let out = downsample(&img, &spec).unwrap();
            let single = resize(
                &img,
                64 / scale as usize,
                48 / scale as usize,
                ResizeMethod::Bicubic,
                true,
            )
            .unwrap();
            for (a, b) in out.data().iter().zip(single.data()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    /// On a linear ramp every symmetric low-pass filter returns the ramp value
    /// at the filter center, so sample differences divided by the slope give
    /// the sub-pixel position each path actually samples.
    fn ramp_offset(spec: &DownSpec, scale: f64) -> f64 {
        let slope = 1.0 / 256.0;
        let img = ImageF::from_fn(64, 128, 3, |_, c, _| 0.25 + c as f64 * slope);
        let reference = downsample(&img, &DownSpec::Bicubic { scale }).unwrap();
        let out = downsample(&img, spec).unwrap();
        let (h, w) = out.dims();
        let mut sum = 0.0;
        let mut n = 0.0;
        for r in 0..h {
            for c in 4..w - 4 {
                sum += (out.get(r, c, 0) - reference.get(r, c, 0)) / slope;
                n += 1.0;
            }
        }
        sum / n
    }

    #[test]
    fn nearest_is_aligned_with_bicubic_on_ramp() {
        for scale in [2.0, 4.0] {
            for sigma in [0.3, 0.6 * scale] {
                let off = ramp_offset(
                    &DownSpec::Nearest {
                        scale,
                        pre_blur_sigma: sigma,
                    },
                    scale,
                );
                assert!(off.abs() < 0.1, "scale {scale} sigma {sigma}: offset {off}");
            }
            let raw = ramp_offset(&DownSpec::Stride { scale }, scale);
            assert!(
                (raw + 0.5 * (scale - 1.0)).abs() < 0.1,
                "stride offset {raw}"
            );
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let img = ImageF::filled(32, 32, 3, 0.5);
        assert!(downsample(
            &img,
            &DownSpec::Nearest {
                scale: 2.5,
                pre_blur_sigma: 1.0
            }
        )
        .is_err());
        assert!(downsample(&img, &DownSpec::Bicubic { scale: 1.0 }).is_err());
        let bad = DownSpec::DownUp {
            scale: 2.0,
            a: 3.0,
            stage1: ResizeMethod::Bicubic,
            stage2: ResizeMethod::Bicubic,
        };
        assert!(downsample(&img, &bad).is_err());
        assert!(downsample(
            &ImageF::filled(3, 3, 3, 0.5),
            &DownSpec::Bicubic { scale: 4.0 }
        )
        .is_err());
    }
}
