//! Malvar-He-Cutler gradient-corrected bilinear demosaicing.

use super::{BayerPattern, RawBayer};
use crate::image::ImageF;

// Each stencil is applied as-is and divided by 8.
pub(crate) const G_AT_RB: [[f64; 5]; 5] = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [-1.0, 2.0, 4.0, 2.0, -1.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];

/// Color at a green site whose horizontal neighbors carry that color.
pub(crate) const AT_G_ROW: [[f64; 5]; 5] = [
    [0.0, 0.0, 0.5, 0.0, 0.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [-1.0, 4.0, 5.0, 4.0, -1.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.5, 0.0, 0.0],
];

/// Color at a green site whose vertical neighbors carry that color.
pub(crate) const AT_G_COL: [[f64; 5]; 5] = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, -1.0, 4.0, -1.0, 0.0],
    [0.5, 0.0, 5.0, 0.0, 0.5],
    [0.0, -1.0, 4.0, -1.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];

/// Red at a blue site, or blue at a red site.
pub(crate) const RB_AT_BR: [[f64; 5]; 5] = [
    [0.0, 0.0, -1.5, 0.0, 0.0],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [-1.5, 0.0, 6.0, 0.0, -1.5],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [0.0, 0.0, -1.5, 0.0, 0.0],
];

const PAD: usize = 2;

/// Demosaics to a 3-channel image. Output is not clamped.
///
/// Borders use mirror padding without edge repetition, which keeps the color
/// filter parity of every padded site.
pub fn demosaic_malvar(raw: &RawBayer) -> ImageF {
    let (h, w) = (raw.height(), raw.width());
    let pw = w + 2 * PAD;
    let ph = h + 2 * PAD;
    let mut padded = vec![0.0; ph * pw];
    for r in 0..ph {
        let sr = reflect(r as isize - PAD as isize, h);
        for c in 0..pw {
            let sc = reflect(c as isize - PAD as isize, w);
            padded[r * pw + c] = raw.values()[sr * w + sc];
        }
    }
    let stencil = |k: &[[f64; 5]; 5], r: usize, c: usize| -> f64 {
        let mut acc = 0.0;
        for (dy, row) in k.iter().enumerate() {
            let base = (r + dy) * pw + c;
            for (dx, &wt) in row.iter().enumerate() {
                if wt != 0.0 {
                    acc += wt * padded[base + dx];
                }
            }
        }
        acc / 8.0
    };
    let pattern = raw.pattern();
    let mut out = ImageF::new(h, w, 3);
    let data = out.data_mut();
    for r in 0..h {
        for c in 0..w {
            let site = pattern.color_at(r, c);
            let v = raw.values()[r * w + c];
            let mut px = [0.0; 3];
            px[site] = v;
            match site {
                1 => {
                    let row_color = pattern.color_at(r, c + 1);
                    let col_color = 2 - row_color;
                    px[row_color] = stencil(&AT_G_ROW, r, c);
                    px[col_color] = stencil(&AT_G_COL, r, c);
                }
                _ => {
                    px[1] = stencil(&G_AT_RB, r, c);
                    px[2 - site] = stencil(&RB_AT_BR, r, c);
                }
            }
            data[(r * w + c) * 3..(r * w + c) * 3 + 3].copy_from_slice(&px);
        }
    }
    out
}

/// Samples each pixel's CFA color.
pub fn mosaic(img: &ImageF, pattern: BayerPattern) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(img.get(r, c, pattern.color_at(r, c)));
        }
    }
    out
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let i = if i < 0 { -i } else { i };
    (if i >= n { 2 * (n - 1) - i } else { i }) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_normalized() {
        for k in [&G_AT_RB, &AT_G_ROW, &AT_G_COL, &RB_AT_BR] {
            let s: f64 = k.iter().flatten().sum();
            assert_eq!(s, 8.0);
        }
    }

    #[test]
    fn uniform_mosaic_is_reproduced() {
        for pattern in BayerPattern::ALL {
            let raw = RawBayer::new(6, 8, pattern, vec![0.37; 48]).unwrap();
            let img = demosaic_malvar(&raw);
            assert!(img.data().iter().all(|v| (v - 0.37).abs() < 1e-15));
        }
    }

    #[test]
    fn impulse_at_green_site_gives_published_red_weights() {
        // RGGB: (2,3) is green with red horizontal neighbors.
        let (h, w) = (12, 12);
        let (r0, c0) = (6, 5);
        let mut values = vec![0.0; h * w];
        values[r0 * w + c0] = 1.0;
        let raw = RawBayer::new(h, w, BayerPattern::Rggb, values).unwrap();
        assert_eq!(BayerPattern::Rggb.color_at(r0, c0), 1);
        let img = demosaic_malvar(&raw);
        // Red reconstructed at each site in the neighborhood picks up the impulse
        // through the stencil of that site, evaluated at the mirrored offset.
        let published_red_at_g_row = [
            [0.0, 0.0, 0.5, 0.0, 0.0],
            [0.0, -1.0, 0.0, -1.0, 0.0],
            [-1.0, 4.0, 5.0, 4.0, -1.0],
            [0.0, -1.0, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.5, 0.0, 0.0],
        ];
        let published_red_at_g_col = [
            [0.0, 0.0, -1.0, 0.0, 0.0],
            [0.0, -1.0, 4.0, -1.0, 0.0],
            [0.5, 0.0, 5.0, 0.0, 0.5],
            [0.0, -1.0, 4.0, -1.0, 0.0],
            [0.0, 0.0, -1.0, 0.0, 0.0],
        ];
        let published_red_at_b = [
            [0.0, 0.0, -1.5, 0.0, 0.0],
            [0.0, 2.0, 0.0, 2.0, 0.0],
            [-1.5, 0.0, 6.0, 0.0, -1.5],
            [0.0, 2.0, 0.0, 2.0, 0.0],
            [0.0, 0.0, -1.5, 0.0, 0.0],
        ];
        for dy in -2i32..=2 {
            for dx in -2i32..=2 {
                let r = (r0 as i32 + dy) as usize;
                let c = (c0 as i32 + dx) as usize;
                // Weight of the impulse seen from site (r,c) sits at offset (-dy,-dx).
                let (ky, kx) = ((2 - dy) as usize, (2 - dx) as usize);
                let expected = match (r % 2, c % 2) {
                    (0, 0) => 0.0, // red site: own value, impulse is not red
                    (0, 1) => published_red_at_g_row[ky][kx] / 8.0,
                    (1, 0) => published_red_at_g_col[ky][kx] / 8.0,
                    _ => published_red_at_b[ky][kx] / 8.0,
                };
                assert_eq!(img.get(r, c, 0), expected, "offset ({dy},{dx})");
            }
        }
    }

    #[test]
    fn mosaic_then_demosaic_keeps_sampled_channel() {
        let img = crate::synth::natural_image(16, 16, 3);
        for pattern in BayerPattern::ALL {
            let raw = RawBayer::new(16, 16, pattern, mosaic(&img, pattern)).unwrap();
            let back = demosaic_malvar(&raw);
            for r in 0..16 {
                for c in 0..16 {
                    let ch = pattern.color_at(r, c);
                    assert_eq!(back.get(r, c, ch), img.get(r, c, ch));
                }
            }
        }
    }
}
