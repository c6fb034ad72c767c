//! Procedural test imagery.
//!
//! Produces deterministic images with smooth shading, sharp object edges, and
//! fine texture, standing in for a natural-image corpus in tests, benchmarks,
//! and the `preview` command.

use std::f64::consts::PI;

use rand::Rng;

use crate::image::ImageF;
use crate::rng::substream;

struct Wave {
    fy: f64,
    fx: f64,
    phase: f64,
    amp: [f64; 3],
}

enum Shape {
    Ellipse {
        cy: f64,
        cx: f64,
        ry: f64,
        rx: f64,
        angle: f64,
    },
    Rect {
        top: f64,
        left: f64,
        bottom: f64,
        right: f64,
    },
}

impl Shape {
    /// Signed distance-like value: negative inside.
    fn distance(&self, y: f64, x: f64) -> f64 {
        match *self {
            Shape::Ellipse {
                cy,
                cx,
                ry,
                rx,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let (dy, dx) = (y - cy, x - cx);
                let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
                let r = ((u / rx).powi(2) + (v / ry).powi(2)).sqrt();
                (r - 1.0) * rx.min(ry)
            }
            Shape::Rect {
                top,
                left,
                bottom,
                right,
            } => {
                let dy = (top - y).max(y - bottom);
                let dx = (left - x).max(x - right);
                dy.max(dx)
            }
        }
    }
}

const MAX_WAVE_FREQUENCY: f64 = 0.25;

/// Deterministic natural-looking RGB image with values inside `[0.02, 0.98]`.
pub fn natural_image(height: usize, width: usize, seed: u64) -> ImageF {
    let mut rng = substream(seed, "synth/natural", &[]);
    let scale = height.max(width).max(1) as f64;

    let base: [f64; 3] = [
        rng.random_range(0.3..0.6),
        rng.random_range(0.3..0.6),
        rng.random_range(0.3..0.6),
    ];
    let mut waves = Vec::new();
    for i in 0..24 {
        // Roughly 1/f amplitude falloff from a few cycles per image to fine texture.
        let cycles = 0.5 * 1.25f64.powi(i);
        let dir = rng.random_range(0.0..PI);
        let f = cycles / scale;
        let a = 0.12 / (1.0 + 0.6 * i as f64);
        let lum = rng.random_range(-a..a);
        let jitter = [
            rng.random_range(-a..a),
            rng.random_range(-a..a),
            rng.random_range(-a..a),
        ];
        let phase = rng.random_range(0.0..2.0 * PI);
        // Camera output is band-limited; nothing finer than a 4-pixel period.
        if f > MAX_WAVE_FREQUENCY {
            continue;
        }
        waves.push(Wave {
            fy: f * dir.sin(),
            fx: f * dir.cos(),
            phase,
            amp: jitter.map(|j| lum + j * 0.3),
        });
    }

    let n_shapes = 6 + (scale / 24.0) as usize;
    let mut shapes = Vec::new();
    for _ in 0..n_shapes.min(40) {
        let size = rng.random_range(0.05..0.3) * scale;
        let cy = rng.random_range(0.0..height as f64);
        let cx = rng.random_range(0.0..width as f64);
        let shape = if rng.random_bool(0.5) {
            Shape::Ellipse {
                cy,
                cx,
                ry: size * rng.random_range(0.4..1.0),
                rx: size * rng.random_range(0.4..1.0),
                angle: rng.random_range(0.0..PI),
            }
        } else {
            let (hh, hw) = (
                size * rng.random_range(0.3..1.0),
                size * rng.random_range(0.3..1.0),
            );
            Shape::Rect {
                top: cy - hh,
                left: cx - hw,
                bottom: cy + hh,
                right: cx + hw,
            }
        };
        let gray: f64 = rng.random_range(0.1..0.9);
        let color = [
            (gray + rng.random_range(-0.15..0.15)).clamp(0.05, 0.95),
            (gray + rng.random_range(-0.15..0.15)).clamp(0.05, 0.95),
            (gray + rng.random_range(-0.15..0.15)).clamp(0.05, 0.95),
        ];
        let opacity = rng.random_range(0.5..0.95);
        // Edge softness in pixels; a 1 px tanh scale is a 2.2 px 10-90% edge, about
        // the sharpest a Bayer camera records.
        let softness = rng.random_range(1.0..3.0);
        shapes.push((shape, color, opacity, softness));
    }

    let mut img = ImageF::new(height, width, 3);
    for r in 0..height {
        for c in 0..width {
            let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
            let mut px = base;
            for wv in &waves {
                let s = (2.0 * PI * (wv.fy * y + wv.fx * x) + wv.phase).sin();
                for k in 0..3 {
                    px[k] += wv.amp[k] * s;
                }
            }
            for (shape, color, opacity, softness) in &shapes {
                let d = shape.distance(y, x);
                let cover = opacity * 0.5 * (1.0 - (d / softness).tanh());
                for k in 0..3 {
                    px[k] = px[k] * (1.0 - cover) + color[k] * cover;
                }
            }
            for (k, v) in px.iter().enumerate() {
                img.set(r, c, k, v.clamp(0.02, 0.98));
            }
        }
    }
    img
}

/// Fixed corpus used by the statistical and acceptance tests.
pub fn test_corpus(height: usize, width: usize) -> Vec<ImageF> {
    (0..4)
        .map(|i| natural_image(height, width, 1000 + i))
        .collect()
}
