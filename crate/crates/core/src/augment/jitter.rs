//! Color jitter: brightness, contrast, saturation, hue, in that order.
//!
//! Work happens on `[0, 1]` floats; every stage clamps, and the result is
//! quantized to 8 bits once at the end.

use super::AugmentSpec;
use crate::imgcore::RgbImage;

fn luma(p: [f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

fn clamp01(p: [f64; 3]) -> [f64; 3] {
    p.map(|v| v.clamp(0.0, 1.0))
}

fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    [h, s, max]
}

fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = (h6.floor() as usize).min(5);
    let f = h6 - sector as f64;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Applies the four jitter stages with strengths `draw[k] * max_delta[k]`,
/// `draw` in `[-1, 1]`. Stages with zero strength are skipped.
pub fn color_jitter(image: &RgbImage, spec: &AugmentSpec, draw: [f64; 4]) -> RgbImage {
    let brightness = draw[0] * spec.brightness_max_delta;
    let contrast = 1.0 + draw[1] * spec.contrast_max_delta;
    let saturation = 1.0 + draw[2] * spec.saturation_max_delta;
    let hue_shift = draw[3] * spec.hue_max_delta;

    let mut px: Vec<[f64; 3]> = image
        .pixels()
        .map(|p| p.map(|v| v as f64 / 255.0))
        .collect();

    if brightness != 0.0 {
        for p in &mut px {
            *p = clamp01(p.map(|v| v + brightness));
        }
    }
    if contrast != 1.0 {
        let mean = px.iter().map(|&p| luma(p)).sum::<f64>() / px.len() as f64;
        for p in &mut px {
            *p = clamp01(p.map(|v| mean + (v - mean) * contrast));
        }
    }
    if saturation != 1.0 {
        for p in &mut px {
            let l = luma(*p);
            *p = clamp01(p.map(|v| l + (v - l) * saturation));
        }
    }
    if hue_shift != 0.0 {
        for p in &mut px {
            let [h, s, v] = rgb_to_hsv(*p);
            *p = clamp01(hsv_to_rgb([h + hue_shift, s, v]));
        }
    }

    let data = px
        .iter()
        .flat_map(|p| p.map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8))
        .collect();
    RgbImage::from_raw(image.width(), image.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> AugmentSpec {
        AugmentSpec::default()
    }

    #[test]
    fn zero_draw_is_identity() {
        let img = RgbImage::from_fn(16, 16, |x, y| [(x * 16) as u8, (y * 16) as u8, ((x * y) % 256) as u8]).unwrap();
        assert_eq!(color_jitter(&img, &spec(), [0.0; 4]), img);
    }

    #[test]
    fn gray_ignores_saturation_and_hue() {
        let img = RgbImage::from_fn(8, 3, |x, _| [x as u8 * 30; 3]).unwrap();
        for draw in [[0.0, 0.0, 1.0, 1.0], [0.0, 0.0, -1.0, -0.3], [0.0, 0.0, 0.5, 0.9]] {
            assert_eq!(color_jitter(&img, &spec(), draw), img);
        }
    }

    #[test]
    fn full_brightness_on_black() {
        let img = RgbImage::filled(3, 3, [0, 0, 0]).unwrap();
        let out = color_jitter(&img, &spec(), [1.0, 0.0, 0.0, 0.0]);
        assert!(out.as_bytes().iter().all(|&v| v == 64));
    }

    #[test]
    fn hsv_roundtrip() {
        for r in (0..=255).step_by(17) {
            for g in (0..=255).step_by(51) {
                for b in (0..=255).step_by(85) {
                    let p = [r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0];
                    let q = hsv_to_rgb(rgb_to_hsv(p));
                    for c in 0..3 {
                        assert!((p[c] - q[c]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn full_turn_hue_is_identity() {
        let img = RgbImage::from_fn(4, 4, |x, y| [200, (x * 60) as u8, (y * 60) as u8]).unwrap();
        let mut s = spec();
        s.hue_max_delta = 0.5;
        // two half-turns
        let once = color_jitter(&img, &s, [0.0, 0.0, 0.0, 1.0]);
        let twice = color_jitter(&once, &s, [0.0, 0.0, 0.0, 1.0]);
        for (a, b) in twice.as_bytes().iter().zip(img.as_bytes()) {
            assert!((*a as i32 - *b as i32).abs() <= 1);
        }
    }
}
