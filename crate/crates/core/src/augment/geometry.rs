//! Flips and scale-then-refit for images and masks.

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, RgbImage};

fn flip_h_raw<T: Copy>(data: &[T], width: usize, channels: usize) -> Vec<T> {
    let row_len = width * channels;
    let mut out = Vec::with_capacity(data.len());
    for row in data.chunks_exact(row_len) {
        for px in row.chunks_exact(channels).rev() {
            out.extend_from_slice(px);
        }
    }
    out
}

fn flip_v_raw<T: Copy>(data: &[T], width: usize, channels: usize) -> Vec<T> {
    data.chunks_exact(width * channels)
        .rev()
        .flatten()
        .copied()
        .collect()
}

pub fn flip_h(image: &RgbImage) -> RgbImage {
    let data = flip_h_raw(image.as_bytes(), image.width() as usize, 3);
    RgbImage::from_raw(image.width(), image.height(), data)
}

pub fn flip_v(image: &RgbImage) -> RgbImage {
    let data = flip_v_raw(image.as_bytes(), image.width() as usize, 3);
    RgbImage::from_raw(image.width(), image.height(), data)
}

pub fn flip_mask_h(mask: &BinaryMask) -> BinaryMask {
    let data = flip_h_raw(mask.as_slice(), mask.width() as usize, 1);
    BinaryMask::from_raw(mask.width(), mask.height(), data)
}

pub fn flip_mask_v(mask: &BinaryMask) -> BinaryMask {
    let data = flip_v_raw(mask.as_slice(), mask.width() as usize, 1);
    BinaryMask::from_raw(mask.width(), mask.height(), data)
}

/// Mirror-reflects `i` into `0..len` without repeating the edge sample.
pub(crate) fn reflect(i: i64, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as i64 - 1);
    let k = i.rem_euclid(period);
    (if k >= len as i64 { period - k } else { k }) as usize
}

/// Per-axis plan: for each output coordinate, the coordinate in the resized
/// (not yet refitted) axis it reads from.
#[derive(Debug, Clone)]
pub(crate) struct AxisFit {
    pub original: usize,
    pub resized: usize,
    pub lookup: Vec<usize>,
}

impl AxisFit {
    pub fn new(original: usize, resized: usize) -> Self {
        let lookup = if resized >= original {
            let offset = (resized - original) / 2;
            (0..original).map(|o| o + offset).collect()
        } else {
            let pad = ((original - resized) / 2) as i64;
            (0..original)
                .map(|o| reflect(o as i64 - pad, resized))
                .collect()
        };
        AxisFit {
            original,
            resized,
            lookup,
        }
    }

    /// Continuous source position of resized coordinate `r` (pixel centers
    /// at half-integers), clamped to the source extent.
    fn source_pos(&self, r: usize) -> f64 {
        // One rounding: (2r + 1)·n is exact, the division is correctly rounded.
        let s = ((2 * r + 1) * self.original) as f64 / (2 * self.resized) as f64;
        (s - 0.5).clamp(0.0, (self.original - 1) as f64)
    }

    /// (lower index, upper index, fraction) for bilinear reads.
    pub fn bilinear_taps(&self) -> Vec<(usize, usize, f64)> {
        self.lookup
            .iter()
            .map(|&r| {
                let s = self.source_pos(r);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(self.original - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    }

    /// Source index for nearest-neighbor reads.
    pub fn nearest_taps(&self) -> Vec<usize> {
        // floor((r + 0.5)·n / m) in integers.
        self.lookup
            .iter()
            .map(|&r| ((2 * r + 1) * self.original / (2 * self.resized)).min(self.original - 1))
            .collect()
    }
}

fn scaled_len(len: u32, factor: f64) -> Result<usize> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::invalid(
            "scale factor",
            format!("{factor} must be positive and finite"),
        ));
    }
    let n = (len as f64 * factor).round();
    if n < 1.0 {
        return Err(Error::invalid(
            "scale factor",
            format!("{factor} shrinks a side of {len} pixels to nothing"),
        ));
    }
    Ok(n as usize)
}

pub(crate) fn fits(width: u32, height: u32, factor: f64) -> Result<(AxisFit, AxisFit)> {
    Ok((
        AxisFit::new(width as usize, scaled_len(width, factor)?),
        AxisFit::new(height as usize, scaled_len(height, factor)?),
    ))
}

/// Bilinear resize by `factor` to `round(w·f) × round(h·f)`, then center-crop
/// (enlarged) or reflect-pad (shrunk) back to the original size.
pub fn scale(image: &RgbImage, factor: f64) -> Result<RgbImage> {
    let (fx, fy) = fits(image.width(), image.height(), factor)?;
    let xt = fx.bilinear_taps();
    let yt = fy.bilinear_taps();
    let w = image.width() as usize;
    let src = image.as_bytes();
    let mut data = Vec::with_capacity(src.len());
    for &(y0, y1, ty) in &yt {
        for &(x0, x1, tx) in &xt {
            for c in 0..3 {
                let at = |x: usize, y: usize| src[(y * w + x) * 3 + c] as f64;
                let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * tx;
                let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * tx;
                let v = top + (bottom - top) * ty;
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(RgbImage::from_raw(image.width(), image.height(), data))
}

/// Same geometry as [`scale`] with nearest-neighbor reads, so values stay
/// in {0, 1}.
pub fn scale_mask(mask: &BinaryMask, factor: f64) -> Result<BinaryMask> {
    let (fx, fy) = fits(mask.width(), mask.height(), factor)?;
    let xt = fx.nearest_taps();
    let yt = fy.nearest_taps();
    let w = mask.width() as usize;
    let src = mask.as_slice();
    let mut data = Vec::with_capacity(src.len());
    for &y in &yt {
        for &x in &xt {
            data.push(src[y * w + x]);
        }
    }
    Ok(BinaryMask::from_raw(mask.width(), mask.height(), data))
}
