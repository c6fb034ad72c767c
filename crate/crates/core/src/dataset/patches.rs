use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{CropRect, ImageF};

pub const LR_PATCH_SIZE: usize = 72;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair {
    /// LR crop origin `(row, col)`; the HR origin is this times the scale.
    pub origin: (usize, usize),
    pub lr: ImageF,
    pub hr: ImageF,
}

/// Crops `count` aligned training pairs: a 72x72 LR patch at a uniform origin
/// and the `72s x 72s` HR patch covering the same field of view.
pub fn crop_patch_pairs<R: Rng + ?Sized>(
    hr: &ImageF,
    lr: &ImageF,
    scale: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<PatchPair>> {
    let (lh, lw) = lr.dims();
    if scale == 0 || hr.dims() != (lh * scale, lw * scale) {
        return Err(Error::invalid(format!(
            "HR {:?} is not LR {:?} times {scale}",
            hr.dims(),
            lr.dims()
        )));
    }
    if lh < LR_PATCH_SIZE || lw < LR_PATCH_SIZE {
        return Err(Error::invalid(format!(
            "LR {lh}x{lw} is smaller than a {LR_PATCH_SIZE}-pixel patch"
        )));
    }
    let p = LR_PATCH_SIZE;
    (0..count)
        .map(|_| {
            let r = rng.random_range(0..=lh - p);
            let c = rng.random_range(0..=lw - p);
            Ok(PatchPair {
                origin: (r, c),
                lr: lr.crop(CropRect {
                    top: r,
                    left: c,
                    height: p,
                    width: p,
                })?,
                hr: hr.crop(CropRect {
                    top: r * scale,
                    left: c * scale,
                    height: p * scale,
                    width: p * scale,
                })?,
            })
        })
        .collect()
}
