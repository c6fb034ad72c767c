use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{read_image, rgb_to_ycbcr_y, ImageF};

/// PSNR on the luma channel, `10 log10(1 / MSE)` with unit-range values.
/// Identical images give `f64::INFINITY`.
pub fn psnr_y(a: &ImageF, b: &ImageF) -> Result<f64> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(Error::invalid(format!(
            "PSNR needs equal shapes, got {:?}x{} and {:?}x{}",
            a.dims(),
            a.channels(),
            b.dims(),
            b.channels()
        )));
    }
    let (ya, yb) = (rgb_to_ycbcr_y(a)?, rgb_to_ycbcr_y(b)?);
    let n = ya.data().len() as f64;
    let mse = ya
        .data()
        .iter()
        .zip(yb.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

/// PSNR for every file in `dist` whose stem matches a file in `reference`,
/// sorted by stem.
pub fn psnr_dirs(reference: &Path, dist: &Path) -> Result<Vec<(String, f64)>> {
    let refs = super::list_images(reference)?;
    let mut out = Vec::new();
    for d in super::list_images(dist)? {
        let name = super::stem(&d);
        let Some(r) = refs.iter().find(|r| super::stem(r) == name) else {
            log::warn!("no reference for {}", d.display());
            continue;
        };
        out.push((name, psnr_y(&read_image(r)?, &read_image(&d)?)?));
    }
    Ok(out)
}
