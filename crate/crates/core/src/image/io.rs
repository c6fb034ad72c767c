use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use super::ImageF;
use crate::error::{Error, Result};

/// Decodes PNG or JPEG bytes into a 3-channel unit-range image.
pub fn decode_image(bytes: &[u8]) -> Result<ImageF> {
    let dynamic = image::load_from_memory(bytes).map_err(|e| Error::Codec(e.to_string()))?;
    from_dynamic(dynamic)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageF> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| Error::Codec(format!("{}: {e}", path.display())))
}

fn from_dynamic(dynamic: DynamicImage) -> Result<ImageF> {
    let rgb = dynamic.to_rgb8();
    let (w, h) = rgb.dimensions();
    ImageF::from_u8(h as usize, w as usize, 3, rgb.as_raw())
}

/// Encodes with `round(v * 255)` after clamping.
pub fn encode_png(img: &ImageF) -> Result<Vec<u8>> {
    let (h, w) = (img.height() as u32, img.width() as u32);
    let bytes = img.to_u8();
    let dynamic = match img.channels() {
        3 => DynamicImage::ImageRgb8(
            RgbImage::from_raw(w, h, bytes).ok_or_else(|| Error::Codec("bad rgb buffer".into()))?,
        ),
        _ => DynamicImage::ImageLuma8(
            GrayImage::from_raw(w, h, bytes)
                .ok_or_else(|| Error::Codec("bad gray buffer".into()))?,
        ),
    };
    let mut out = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn write_png(path: impl AsRef<Path>, img: &ImageF) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_png(img)?).map_err(|e| Error::io(path, e))
}
