//! Shades-of-gray color constancy.
//!
//! The illuminant estimate per channel is the Minkowski p-mean of the
//! normalized channel values, L2-normalized across channels. `p = 1` is
//! gray-world; large `p` tends to max-RGB. Correction is a diagonal gain
//! that maps the illuminant onto equal-energy gray.

use crate::error::{Error, Result};
use crate::imgcore::RgbImage;

pub const DEFAULT_MINKOWSKI_P: f64 = 6.0;

const GRAY_COMPONENT: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Unit-length estimate of the scene illuminant color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Illuminant {
    rgb: [f64; 3],
}

impl Illuminant {
    /// Normalizes `rgb` to unit length; every component must be positive.
    pub fn new(rgb: [f64; 3]) -> Result<Self> {
        if rgb.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::invalid(
                "illuminant",
                format!("components {rgb:?} must be positive and finite"),
            ));
        }
        let norm = rgb.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(Illuminant {
            rgb: rgb.map(|c| c / norm),
        })
    }

    pub fn achromatic() -> Self {
        Illuminant {
            rgb: [GRAY_COMPONENT; 3],
        }
    }

    pub fn rgb(&self) -> [f64; 3] {
        self.rgb
    }

    /// Per-channel gains that map this illuminant to gray.
    pub fn gains(&self) -> [f64; 3] {
        self.rgb.map(|e| GRAY_COMPONENT / e)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(
            "Minkowski order",
            format!("p = {p}, expected a finite value >= 1"),
        ));
    }
    Ok(())
}

/// Estimates the illuminant from float pixels in `[0, 1]`.
pub fn estimate_illuminant_f64(pixels: &[[f64; 3]], p: f64) -> Result<Illuminant> {
    check_p(p)?;
    if pixels.is_empty() {
        return Err(Error::invalid("image", "no pixels"));
    }
    let mut acc = [0.0f64; 3];
    for px in pixels {
        for c in 0..3 {
            acc[c] += px[c].powf(p);
        }
    }
    let n = pixels.len() as f64;
    let est = acc.map(|s| (s / n).powf(1.0 / p));
    if let Some(c) = est.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::invalid(
            "illuminant",
            format!(
                "degenerate estimate: channel {} is identically zero",
                ["R", "G", "B"][c]
            ),
        ));
    }
    Illuminant::new(est)
}

/// Estimates the illuminant of an 8-bit image.
pub fn estimate_illuminant(image: &RgbImage, p: f64) -> Result<Illuminant> {
    let pixels: Vec<[f64; 3]> = image
        .pixels()
        .map(|px| px.map(|v| v as f64 / 255.0))
        .collect();
    estimate_illuminant_f64(&pixels, p)
}

/// Applies the von Kries gains of `illum`, rounding and clamping to 8 bits.
pub fn correct(image: &RgbImage, illum: &Illuminant) -> RgbImage {
    let gains = illum.gains();
    let data = image
        .as_bytes()
        .chunks_exact(3)
        .flat_map(|px| {
            let mut out = [0u8; 3];
            for c in 0..3 {
                out[c] = (px[c] as f64 * gains[c]).round().clamp(0.0, 255.0) as u8;
            }
            out
        })
        .collect();
    RgbImage::from_raw(image.width(), image.height(), data)
}

/// Estimate followed by correction.
pub fn normalize(image: &RgbImage, p: f64) -> Result<RgbImage> {
    let illum = estimate_illuminant(image, p)?;
    Ok(correct(image, &illum))
}
