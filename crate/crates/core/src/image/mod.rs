//! Floating-point image container, kernels, and the filtering and resampling
//! primitives every degradation operator builds on.

mod color;
mod filter;
mod io;
mod resize;

pub use color::{rgb_to_ycbcr_y, LUMA_B, LUMA_G, LUMA_OFFSET, LUMA_R};
#[cfg(test)]
pub(crate) use filter::reflect_index as filter_reflect_index;
pub use filter::{convolve_reflect, convolve_reflect_strided, laplacian, laplacian_variance};
pub use io::{decode_image, encode_png, read_image, write_png};
pub use resize::{resize, ResizeMethod};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real-valued image, row-major with interleaved channels. Nominal range is
/// `[0, 1]`; intermediate results may leave it until clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageF {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Rectangle of an image in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl ImageF {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "unsupported channel count {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "buffer length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(row, col, channel)` for every sample.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut img = Self::new(height, width, channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    let v = f(r, c, ch);
                    img.set(r, c, ch, v);
                }
            }
        }
        img
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn is_empty(&self) -> bool {
        self.height == 0 || self.width == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[self.index(row, col, ch)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f64) {
        let i = self.index(row, col, ch);
        self.data[i] = value;
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[f64] {
        let i = self.index(row, col, 0);
        &self.data[i..i + self.channels]
    }

    /// Copies one channel out as a contiguous `height * width` plane.
    pub fn plane(&self, ch: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(ch)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    pub fn set_plane(&mut self, ch: usize, plane: &[f64]) {
        assert_eq!(plane.len(), self.height * self.width);
        for (dst, &src) in self
            .data
            .iter_mut()
            .skip(ch)
            .step_by(self.channels)
            .zip(plane)
        {
            *dst = src;
        }
    }

    pub fn from_planes(height: usize, width: usize, planes: &[Vec<f64>]) -> Result<Self> {
        let mut img = Self::from_vec(
            height,
            width,
            planes.len(),
            vec![0.0; height * width * planes.len()],
        )?;
        for (ch, p) in planes.iter().enumerate() {
            if p.len() != height * width {
                return Err(Error::invalid("plane length mismatch"));
            }
            img.set_plane(ch, p);
        }
        Ok(img)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn clamp_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn clamped(mut self) -> Self {
        self.clamp_in_place();
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn crop(&self, rect: CropRect) -> Result<Self> {
        if rect.top + rect.height > self.height || rect.left + rect.width > self.width {
            return Err(Error::invalid(format!(
                "crop {rect:?} exceeds image {}x{}",
                self.height, self.width
            )));
        }
        let mut out = Self::new(rect.height, rect.width, self.channels);
        let row_len = rect.width * self.channels;
        for r in 0..rect.height {
            let src = self.index(rect.top + r, rect.left, 0);
            let dst = r * row_len;
            out.data[dst..dst + row_len].copy_from_slice(&self.data[src..src + row_len]);
        }
        Ok(out)
    }

    /// Largest centered crop whose sides are multiples of `multiple`.
    pub fn center_crop_rect(&self, multiple: usize) -> CropRect {
        let height = self.height / multiple * multiple;
        let width = self.width / multiple * multiple;
        CropRect {
            top: (self.height - height) / 2,
            left: (self.width - width) / 2,
            height,
            width,
        }
    }

    /// Expands a single-channel image to three identical channels.
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Self {
            data,
            channels: 3,
            ..*self
        }
    }

    /// Quantizes to 8 bits with `round(v * 255)` after clamping.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }

    pub fn from_u8(height: usize, width: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::from_vec(
            height,
            width,
            channels,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }
}

#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Odd-sized, nonnegative 2D kernel normalized to unit sum.
///
/// Kernels are applied as correlations: weight `(i, j)` multiplies the input
/// sample at offset `(i - height / 2, j - width / 2)` from the output pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D {
    height: usize,
    width: usize,
    weights: Vec<f64>,
}

pub const KERNEL_SUM_TOLERANCE: f64 = 1e-8;

impl Kernel2D {
    pub fn new(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if height.is_multiple_of(2) || width.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel sides must be odd, got {height}x{width}"
            )));
        }
        if weights.len() != height * width {
            return Err(Error::invalid(
                "kernel weight count does not match its shape",
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(
                "kernel weights must be finite and nonnegative",
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > KERNEL_SUM_TOLERANCE {
            return Err(Error::invalid(format!("kernel sums to {sum}, expected 1")));
        }
        Ok(Self {
            height,
            width,
            weights,
        })
    }

    /// Normalizes arbitrary nonnegative weights to unit sum.
    pub fn normalized(height: usize, width: usize, mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::invalid("kernel has no mass"));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Self::new(height, width, weights)
    }

    pub fn delta(size: usize) -> Result<Self> {
        let mut w = vec![0.0; size * size];
        if size % 2 == 1 {
            w[size * size / 2] = 1.0;
        }
        Self::new(size, size, w)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut w = vec![0.0; self.weights.len()];
        for r in 0..self.height {
            for c in 0..self.width {
                w[c * self.height + r] = self.get(r, c);
            }
        }
        Self {
            height: self.width,
            width: self.height,
            weights: w,
        }
    }

    pub fn rotate180(&self) -> Self {
        let mut w = self.weights.clone();
        w.reverse();
        Self {
            weights: w,
            ..*self
        }
    }

    /// Weighted mean offset `(dy, dx)` relative to the kernel center.
    pub fn centroid(&self) -> (f64, f64) {
        let (cy, cx) = ((self.height / 2) as f64, (self.width / 2) as f64);
        let mut sy = 0.0;
        let mut sx = 0.0;
        let mut total = 0.0;
        for r in 0..self.height {
            for c in 0..self.width {
                let w = self.get(r, c);
                sy += w * (r as f64 - cy);
                sx += w * (c as f64 - cx);
                total += w;
            }
        }
        (sy / total, sx / total)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.height, self.width), (other.height, other.width));
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_rejects_even_and_unnormalized() {
        assert!(Kernel2D::new(2, 3, vec![1.0 / 6.0; 6]).is_err());
        assert!(Kernel2D::new(3, 3, vec![0.2; 9]).is_err());
        assert!(Kernel2D::new(1, 1, vec![-1.0]).is_err());
        assert!(Kernel2D::new(3, 3, vec![1.0 / 9.0; 9]).is_ok());
    }

    #[test]
    fn planes_round_trip() {
        let img = ImageF::from_fn(4, 5, 3, |r, c, ch| (r * 100 + c * 10 + ch) as f64);
        let planes: Vec<_> = (0..3).map(|ch| img.plane(ch)).collect();
        assert_eq!(ImageF::from_planes(4, 5, &planes).unwrap(), img);
    }

    #[test]
    fn center_crop_is_centered() {
        let img = ImageF::new(37, 50, 3);
        let rect = img.center_crop_rect(8);
        assert_eq!(
            rect,
            CropRect {
                top: 2,
                left: 1,
                height: 32,
                width: 48
            }
        );
        assert_eq!(img.crop(rect).unwrap().dims(), (32, 48));
    }

    #[test]
    fn u8_quantization_rounds_and_clamps() {
        let img = ImageF::from_vec(1, 2, 1, vec![-0.5, 0.5]).unwrap();
        assert_eq!(img.to_u8(), vec![0, 128]);
        assert_eq!(quantize_u8(1.7), 255);
    }
}
