//! Baseline JPEG compression noise.
//!
//! The encoder is self-contained so quantization tables, chroma subsampling,
//! and output bytes are fixed by this crate rather than by a codec version.

mod decoder;
mod encoder;
mod tables;

pub use decoder::decode_jpeg;
pub use encoder::{encode_jpeg, quality_scale, quant_tables, scaled_table};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageF;

pub const MIN_QUALITY: u8 = 30;
pub const MAX_QUALITY: u8 = 95;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChromaSubsampling {
    #[default]
    #[serde(rename = "4:2:0")]
    Yuv420,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JpegSpec {
    pub quality: u8,
    #[serde(default)]
    pub chroma_subsampling: ChromaSubsampling,
}

impl JpegSpec {
    pub fn new(quality: u8) -> Self {
        Self {
            quality,
            chroma_subsampling: ChromaSubsampling::Yuv420,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=100).contains(&self.quality) {
            return Err(Error::invalid(format!(
                "JPEG quality {} outside 1..=100",
                self.quality
            )));
        }
        Ok(())
    }
}

/// Encodes at `spec.quality` and returns both the decoded image and the
/// exact byte stream.
pub fn jpeg_round_trip(img: &ImageF, spec: &JpegSpec) -> Result<(ImageF, Vec<u8>)> {
    spec.validate()?;
    let bytes = encode_jpeg(img, spec.quality)?;
    let decoded = decode_jpeg(&bytes)?;
    Ok((decoded, bytes))
}

/// Compresses and decompresses `img`, introducing blocking and ringing.
pub fn jpeg_noise(img: &ImageF, spec: &JpegSpec) -> Result<ImageF> {
    jpeg_round_trip(img, spec).map(|(decoded, _)| decoded)
}

/// Extracts every 8-bit DQT table from a JPEG stream as `(id, natural-order table)`.
pub fn parse_dqt(bytes: &[u8]) -> Result<Vec<(u8, [u8; 64])>> {
    let mut out = Vec::new();
    let mut pos = 2;
    while pos + 4 <= bytes.len() {
        if bytes[pos] != 0xFF {
            return Err(Error::Codec("expected marker".into()));
        }
        let marker = bytes[pos + 1];
        if marker == 0xDA || marker == 0xD9 {
            break;
        }
        let len = u16::from_be_bytes([bytes[pos + 2], bytes[pos + 3]]) as usize;
        let end = pos + 2 + len;
        if end > bytes.len() {
            return Err(Error::Codec("truncated segment".into()));
        }
        if marker == 0xDB {
            let mut s = &bytes[pos + 4..end];
            while s.len() >= 65 {
                if s[0] >> 4 != 0 {
                    return Err(Error::Codec("16-bit tables unsupported".into()));
                }
                let mut t = [0u8; 64];
                for (k, &z) in tables::ZIGZAG.iter().enumerate() {
                    t[z as usize] = s[1 + k];
                }
                out.push((s[0] & 15, t));
                s = &s[65..];
            }
        }
        pos = end;
    }
    Ok(out)
}
