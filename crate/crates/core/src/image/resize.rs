use serde::{Deserialize, Serialize};

use super::ImageF;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeMethod {
    Nearest,
    Bilinear,
    Bicubic,
}

/// Cubic convolution coefficient.
const CUBIC_A: f64 = -0.5;

fn cubic(x: f64) -> f64 {
    let t = x.abs();
    if t <= 1.0 {
        ((CUBIC_A + 2.0) * t - (CUBIC_A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((CUBIC_A * t - 5.0 * CUBIC_A) * t + 8.0 * CUBIC_A) * t - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

fn triangle(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

impl ResizeMethod {
    fn support(self) -> f64 {
        match self {
            ResizeMethod::Nearest => 0.5,
            ResizeMethod::Bilinear => 1.0,
            ResizeMethod::Bicubic => 2.0,
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            ResizeMethod::Nearest => unreachable!("nearest uses point sampling"),
            ResizeMethod::Bilinear => triangle(x),
            ResizeMethod::Bicubic => cubic(x),
        }
    }
}

/// Symmetric boundary extension that repeats the edge sample (`-1 -> 0`).
fn mirror(j: isize, n: usize) -> usize {
    let n = n as isize;
    let mut j = j;
    loop {
        if j < 0 {
            j = -j - 1;
        } else if j >= n {
            j = 2 * n - j - 1;
        } else {
            return j as usize;
        }
    }
}

struct Contribution {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

fn contributions(
    in_len: usize,
    out_len: usize,
    method: ResizeMethod,
    antialias: bool,
) -> Vec<Contribution> {
    let scale = out_len as f64 / in_len as f64;
    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            if method == ResizeMethod::Nearest {
                let j = (((i as f64 + 0.5) / scale).floor() as usize).min(in_len - 1);
                return Contribution {
                    indices: vec![j],
                    weights: vec![1.0],
                };
            }
            let stretch = if antialias && scale < 1.0 { scale } else { 1.0 };
            let support = method.support() / stretch;
            let first = (center - support).floor() as isize;
            let last = (center + support).ceil() as isize;
            let mut indices = Vec::new();
            let mut weights = Vec::new();
            for j in first..=last {
                let w = stretch * method.eval(stretch * (center - j as f64));
                if w != 0.0 {
                    indices.push(mirror(j, in_len));
                    weights.push(w);
                }
            }
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            Contribution { indices, weights }
        })
        .collect()
}

/// Resamples to `out_h x out_w` with pixel centers aligned. When
/// `antialias` is set and the image shrinks, the interpolation kernel is
/// widened by the inverse scale. Nearest is always point sampling.
pub fn resize(
    img: &ImageF,
    out_h: usize,
    out_w: usize,
    method: ResizeMethod,
    antialias: bool,
) -> Result<ImageF> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid(format!(
            "resize target {out_h}x{out_w} has a zero side"
        )));
    }
    if img.is_empty() {
        return Err(Error::invalid("cannot resize an empty image"));
    }
    let (h, w) = img.dims();
    let ch = img.channels();

    // Vertical pass.
    let rows = contributions(h, out_h, method, antialias);
    let row_len = w * ch;
    let mut tmp = vec![0.0; out_h * row_len];
    for (r, contrib) in rows.iter().enumerate() {
        let dst = &mut tmp[r * row_len..(r + 1) * row_len];
        for (&j, &wt) in contrib.indices.iter().zip(&contrib.weights) {
            let src = &img.data()[j * row_len..(j + 1) * row_len];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += wt * s;
            }
        }
    }

    // Horizontal pass.
    let cols = contributions(w, out_w, method, antialias);
    let mut out = vec![0.0; out_h * out_w * ch];
    for r in 0..out_h {
        let src = &tmp[r * row_len..(r + 1) * row_len];
        for (c, contrib) in cols.iter().enumerate() {
            let base = (r * out_w + c) * ch;
            for k in 0..ch {
                let mut acc = 0.0;
                for (&j, &wt) in contrib.indices.iter().zip(&contrib.weights) {
                    acc += wt * src[j * ch + k];
                }
                out[base + k] = acc;
            }
        }
    }
    ImageF::from_vec(out_h, out_w, ch, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Non-separable reference: every output sample is an explicit double sum
    /// over the full input with independently computed 1D weights.
    fn reference_resize(img: &ImageF, oh: usize, ow: usize) -> ImageF {
        fn keys(x: f64) -> f64 {
            let t = x.abs();
            if t <= 1.0 {
                1.5 * t.powi(3) - 2.5 * t.powi(2) + 1.0
            } else if t < 2.0 {
                -0.5 * t.powi(3) + 2.5 * t.powi(2) - 4.0 * t + 2.0
            } else {
                0.0
            }
        }
        fn weights_1d(n_in: usize, n_out: usize) -> Vec<Vec<f64>> {
            let s = n_out as f64 / n_in as f64;
            let k = s.min(1.0);
            (0..n_out)
                .map(|i| {
                    let x = (i as f64 + 0.5) / s - 0.5;
                    let mut w = vec![0.0; n_in];
                    let reach = (2.0 / k).ceil() as isize + 2;
                    for j in (x.floor() as isize - reach)..=(x.floor() as isize + reach) {
                        let v = k * keys(k * (x - j as f64));
                        let mut idx = j;
                        while idx < 0 || idx >= n_in as isize {
                            idx = if idx < 0 {
                                -idx - 1
                            } else {
                                2 * n_in as isize - idx - 1
                            };
                        }
                        w[idx as usize] += v;
                    }
                    let s: f64 = w.iter().sum();
                    w.iter().map(|v| v / s).collect()
                })
                .collect()
        }
        let wy = weights_1d(img.height(), oh);
        let wx = weights_1d(img.width(), ow);
        ImageF::from_fn(oh, ow, img.channels(), |r, c, ch| {
            let mut acc = 0.0;
            for y in 0..img.height() {
                for x in 0..img.width() {
                    acc += wy[r][y] * wx[c][x] * img.get(y, x, ch);
                }
            }
            acc
        })
    }

    fn test_image() -> ImageF {
        ImageF::from_fn(13, 11, 3, |r, c, ch| {
            (((r * 7 + c * 3 + ch * 11) % 17) as f64 / 16.0).sqrt()
        })
    }

    #[test]
    fn same_size_is_identity() {
        let img = test_image();
        for method in [
            ResizeMethod::Nearest,
            ResizeMethod::Bilinear,
            ResizeMethod::Bicubic,
        ] {
            for aa in [false, true] {
                let out = resize(&img, 13, 11, method, aa).unwrap();
                for (a, b) in out.data().iter().zip(img.data()) {
                    assert!((a - b).abs() < 1e-12, "{method:?} aa={aa}");
                }
            }
        }
    }

    #[test]
    fn constants_survive_every_method() {
        let img = ImageF::filled(12, 9, 3, 0.625);
        for method in [
            ResizeMethod::Nearest,
            ResizeMethod::Bilinear,
            ResizeMethod::Bicubic,
        ] {
            for aa in [false, true] {
                for (oh, ow) in [(6, 4), (24, 19), (5, 9), (1, 1)] {
                    let out = resize(&img, oh, ow, method, aa).unwrap();
                    assert_eq!(out.dims(), (oh, ow));
                    assert!(out.data().iter().all(|v| (v - 0.625).abs() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn checkerboard_bicubic_half_matches_reference() {
        let board = ImageF::from_fn(8, 8, 1, |r, c, _| ((r + c) % 2) as f64);
        let fast = resize(&board, 4, 4, ResizeMethod::Bicubic, true).unwrap();
        let slow = reference_resize(&board, 4, 4);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn general_bicubic_matches_reference() {
        let img = test_image();
        for (oh, ow) in [(6, 5), (4, 3), (20, 17), (13, 5)] {
            let fast = resize(&img, oh, ow, ResizeMethod::Bicubic, true).unwrap();
            let slow = reference_resize(&img, oh, ow);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-10, "{oh}x{ow}");
            }
        }
    }

    #[test]
    fn zero_target_rejected() {
        assert!(resize(&test_image(), 0, 4, ResizeMethod::Bilinear, true).is_err());
    }

    #[test]
    fn cubic_kernel_interpolates() {
        assert_eq!(cubic(0.0), 1.0);
        assert_eq!(cubic(1.0), 0.0);
        assert_eq!(cubic(2.0), 0.0);
        assert!((cubic(0.5) - 0.5625).abs() < 1e-15);
    }
}
