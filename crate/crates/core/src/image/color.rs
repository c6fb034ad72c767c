use super::ImageF;
use crate::error::{Error, Result};

/// BT.601 studio-swing luma coefficients for unit-range RGB, in 8-bit units.
pub const LUMA_R: f64 = 65.481;
pub const LUMA_G: f64 = 128.553;
pub const LUMA_B: f64 = 24.966;
pub const LUMA_OFFSET: f64 = 16.0;

/// Studio-swing BT.601 luma of a unit-range RGB image, returned in unit range
/// (black maps to 16/255, white to 235/255).
pub fn rgb_to_ycbcr_y(img: &ImageF) -> Result<ImageF> {
    if img.channels() != 3 {
        return Err(Error::invalid(format!(
            "luma conversion needs 3 channels, got {}",
            img.channels()
        )));
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| (LUMA_R * p[0] + LUMA_G * p[1] + LUMA_B * p[2] + LUMA_OFFSET) / 255.0)
        .collect();
    ImageF::from_vec(img.height(), img.width(), 1, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn luma_of(rgb: [f64; 3]) -> f64 {
        let img = ImageF::from_vec(1, 1, 3, rgb.to_vec()).unwrap();
        rgb_to_ycbcr_y(&img).unwrap().get(0, 0, 0)
    }

    #[test]
    fn closed_form_points() {
        assert!((luma_of([0.0, 0.0, 0.0]) - 16.0 / 255.0).abs() < 1e-12);
        assert!((luma_of([1.0, 1.0, 1.0]) - 235.0 / 255.0).abs() < 1e-12);
        assert!((luma_of([0.0, 1.0, 0.0]) - (128.553 + 16.0) / 255.0).abs() < 1e-12);
    }

    #[test]
    fn gray_input_rejected() {
        assert!(rgb_to_ycbcr_y(&ImageF::new(2, 2, 1)).is_err());
    }
}
