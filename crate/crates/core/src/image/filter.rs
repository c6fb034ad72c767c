use super::{rgb_to_ycbcr_y, ImageF, Kernel2D};
use crate::error::{Error, Result};

/// Mirror index without repeating the edge sample (`-1 -> 1`, `n -> n - 2`).
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let last = n as isize - 1;
    let mut i = i;
    // A single fold suffices for pads up to n - 1; loop to stay total.
    while i < 0 || i > last {
        i = if i < 0 { -i } else { 2 * last - i };
    }
    i as usize
}

fn pad_plane(plane: &[f64], h: usize, w: usize, ph: usize, pw: usize) -> Vec<f64> {
    let (hp, wp) = (h + 2 * ph, w + 2 * pw);
    let mut out = vec![0.0; hp * wp];
    for r in 0..hp {
        let sr = reflect_index(r as isize - ph as isize, h);
        let src = &plane[sr * w..(sr + 1) * w];
        let dst = &mut out[r * wp..(r + 1) * wp];
        for (c, d) in dst.iter_mut().enumerate() {
            *d = src[reflect_index(c as isize - pw as isize, w)];
        }
    }
    out
}

fn check_kernel_fits(img: &ImageF, k: &Kernel2D) -> Result<()> {
    if img.is_empty() {
        return Err(Error::invalid("cannot filter an empty image"));
    }
    let (h, w) = img.dims();
    if k.height() > 2 * h - 1 || k.width() > 2 * w - 1 {
        return Err(Error::invalid(format!(
            "kernel {}x{} exceeds reflectable extent of {h}x{w} image",
            k.height(),
            k.width()
        )));
    }
    Ok(())
}

/// Filters every channel with `k` using reflection padding; output has the
/// input's dimensions. Accumulation order per sample is fixed, so results are
/// bit-reproducible.
pub fn convolve_reflect(img: &ImageF, k: &Kernel2D) -> Result<ImageF> {
    convolve_reflect_strided(img, k, 1)
}

/// Same as [`convolve_reflect`] followed by keeping every `step`-th row and
/// column starting at index 0, computing only the retained rows.
pub fn convolve_reflect_strided(img: &ImageF, k: &Kernel2D, step: usize) -> Result<ImageF> {
    if step == 0 {
        return Err(Error::invalid("stride must be at least 1"));
    }
    check_kernel_fits(img, k)?;
    let (h, w) = img.dims();
    let (kh, kw) = (k.height(), k.width());
    let (ph, pw) = (kh / 2, kw / 2);
    let wp = w + 2 * pw;
    let (oh, ow) = (h.div_ceil(step), w.div_ceil(step));

    let taps: Vec<(usize, usize, f64)> = (0..kh)
        .flat_map(|ky| (0..kw).map(move |kx| (ky, kx)))
        .map(|(ky, kx)| (ky, kx, k.get(ky, kx)))
        .filter(|&(_, _, wt)| wt != 0.0)
        .collect();

    let mut planes = Vec::with_capacity(img.channels());
    let mut acc = vec![0.0; w];
    for ch in 0..img.channels() {
        let padded = pad_plane(&img.plane(ch), h, w, ph, pw);
        let mut out = vec![0.0; oh * ow];
        for (orow, r) in (0..h).step_by(step).enumerate() {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for &(ky, kx, wt) in &taps {
                let src = &padded[(r + ky) * wp + kx..(r + ky) * wp + kx + w];
                for (a, &s) in acc.iter_mut().zip(src) {
                    *a += wt * s;
                }
            }
            let dst = &mut out[orow * ow..(orow + 1) * ow];
            for (d, &a) in dst.iter_mut().zip(acc.iter().step_by(step)) {
                *d = a;
            }
        }
        planes.push(out);
    }
    ImageF::from_planes(oh, ow, &planes)
}

/// Response of the 4-neighbour Laplacian stencil with reflection padding.
pub fn laplacian(img: &ImageF) -> Result<ImageF> {
    if img.is_empty() {
        return Err(Error::invalid("cannot filter an empty image"));
    }
    let (h, w) = img.dims();
    let mut out = ImageF::new(h, w, img.channels());
    for r in 0..h {
        let up = reflect_index(r as isize - 1, h);
        let down = reflect_index(r as isize + 1, h);
        for c in 0..w {
            let left = reflect_index(c as isize - 1, w);
            let right = reflect_index(c as isize + 1, w);
            for ch in 0..img.channels() {
                let v = img.get(up, c, ch)
                    + img.get(down, c, ch)
                    + img.get(r, left, ch)
                    + img.get(r, right, ch)
                    - 4.0 * img.get(r, c, ch);
                out.set(r, c, ch, v);
            }
        }
    }
    Ok(out)
}

/// Variance of the Laplacian response, computed on luma for RGB inputs.
/// Low values indicate blurry content.
pub fn laplacian_variance(img: &ImageF) -> Result<f64> {
    let gray = if img.channels() == 3 {
        rgb_to_ycbcr_y(img)?
    } else {
        img.clone()
    };
    let resp = laplacian(&gray)?;
    let n = resp.data().len() as f64;
    let mean = resp.data().iter().sum::<f64>() / n;
    Ok(resp
        .data()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n)
}
