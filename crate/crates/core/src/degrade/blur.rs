use crate::error::Result;
use crate::image::{convolve_reflect, ImageF};
use crate::kernels::BlurSpec;

/// Blurs with the kernel synthesized from `spec` and clamps to `[0, 1]`.
pub fn apply_blur(img: &ImageF, spec: &BlurSpec) -> Result<ImageF> {
    let kernel = spec.kernel()?;
    Ok(convolve_reflect(img, &kernel)?.clamped())
}
