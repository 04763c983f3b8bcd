//! Seeded data augmentation.
//!
//! Every random choice for output `index` comes from a ChaCha stream seeded
//! by `mix(spec.seed, index)`, so any entry can be regenerated alone and
//! parallel generation gives the same bytes as sequential generation.

mod geometry;
mod jitter;
mod plan;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use geometry::{flip_h, flip_mask_h, flip_mask_v, flip_v, scale, scale_mask};
pub use jitter::color_jitter;
pub use plan::{balance_plan, PlanEntry, SamplePlan, DEFAULT_TARGET_PER_CLASS};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, RgbImage};

/// Augmentation settings. Defaults are the segmentation configuration
/// (flips, 0.8–1.2 scaling and color jitter).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSpec {
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    /// Inclusive `(low, high)` range of the scale factor.
    pub scale_range: (f64, f64),
    /// In `[0, 1]` intensity units.
    pub brightness_max_delta: f64,
    pub contrast_max_delta: f64,
    pub saturation_max_delta: f64,
    /// Fraction of a full hue turn.
    pub hue_max_delta: f64,
    pub color_jitter: bool,
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        AugmentSpec {
            flip_horizontal: true,
            flip_vertical: true,
            scale_range: (0.8, 1.2),
            brightness_max_delta: 64.0 / 255.0,
            contrast_max_delta: 0.75,
            saturation_max_delta: 0.25,
            hue_max_delta: 0.04,
            color_jitter: true,
            seed: 0,
        }
    }
}

impl AugmentSpec {
    /// Classification setting: color constancy replaces jitter.
    pub fn classification() -> Self {
        AugmentSpec {
            color_jitter: false,
            ..Self::default()
        }
    }

    /// Everything off; [`apply`] becomes the identity.
    pub fn disabled() -> Self {
        AugmentSpec {
            flip_horizontal: false,
            flip_vertical: false,
            scale_range: (1.0, 1.0),
            color_jitter: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (low, high) = self.scale_range;
        if !(low > 0.0 && low <= high && high.is_finite()) {
            return Err(Error::invalid(
                "augment spec",
                format!("scale range [{low}, {high}] must satisfy 0 < low <= high"),
            ));
        }
        let deltas = [
            ("brightness_max_delta", self.brightness_max_delta),
            ("contrast_max_delta", self.contrast_max_delta),
            ("saturation_max_delta", self.saturation_max_delta),
            ("hue_max_delta", self.hue_max_delta),
        ];
        for (name, d) in deltas {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid(
                    "augment spec",
                    format!("{name} = {d} must be a finite value >= 0"),
                ));
            }
        }
        if self.hue_max_delta > 0.5 {
            return Err(Error::invalid(
                "augment spec",
                format!("hue_max_delta = {} exceeds half a turn", self.hue_max_delta),
            ));
        }
        Ok(())
    }

    /// Reads `{prefix}flip_horizontal`, `{prefix}scale_low`, ... from `cfg`.
    pub fn apply_config(&mut self, cfg: &mut Config, prefix: &str) -> Result<()> {
        let key = |k: &str| format!("{prefix}{k}");
        cfg.take_into(&key("flip_horizontal"), &mut self.flip_horizontal)?;
        cfg.take_into(&key("flip_vertical"), &mut self.flip_vertical)?;
        cfg.take_into(&key("scale_low"), &mut self.scale_range.0)?;
        cfg.take_into(&key("scale_high"), &mut self.scale_range.1)?;
        cfg.take_into(&key("brightness_max_delta"), &mut self.brightness_max_delta)?;
        cfg.take_into(&key("contrast_max_delta"), &mut self.contrast_max_delta)?;
        cfg.take_into(&key("saturation_max_delta"), &mut self.saturation_max_delta)?;
        cfg.take_into(&key("hue_max_delta"), &mut self.hue_max_delta)?;
        cfg.take_into(&key("color_jitter"), &mut self.color_jitter)?;
        cfg.take_into(&key("seed"), &mut self.seed)?;
        self.validate()
    }

    /// Draws the parameters of output `index`.
    pub fn draw(&self, index: u64) -> AugmentParams {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, index));
        // Fixed draw layout regardless of what is enabled.
        let flip_h = rng.random_bool(0.5);
        let flip_v = rng.random_bool(0.5);
        let u: f64 = rng.random();
        let jitter: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        let (low, high) = self.scale_range;
        AugmentParams {
            flip_h: flip_h && self.flip_horizontal,
            flip_v: flip_v && self.flip_vertical,
            scale: if low == high { low } else { low + (high - low) * u },
            jitter: self.color_jitter.then_some(jitter),
        }
    }
}

/// splitmix64 finalizer over the (seed, index) pair.
pub fn mix(seed: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(index))
}

/// Concrete random choices for one augmented sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub flip_h: bool,
    pub flip_v: bool,
    pub scale: f64,
    pub jitter: Option<[f64; 4]>,
}

impl AugmentParams {
    pub fn identity() -> Self {
        AugmentParams {
            flip_h: false,
            flip_v: false,
            scale: 1.0,
            jitter: None,
        }
    }
}

/// Applies drawn parameters: flips, then scaling, then (image only) jitter.
pub fn apply_params(
    image: &RgbImage,
    mask: Option<&BinaryMask>,
    params: &AugmentParams,
    spec: &AugmentSpec,
) -> Result<(RgbImage, Option<BinaryMask>)> {
    if let Some(m) = mask {
        if m.dimensions() != image.dimensions() {
            return Err(Error::dims(image.dimensions(), m.dimensions()));
        }
    }
    let mut img = image.clone();
    let mut msk = mask.cloned();
    if params.flip_h {
        img = flip_h(&img);
        msk = msk.map(|m| flip_mask_h(&m));
    }
    if params.flip_v {
        img = flip_v(&img);
        msk = msk.map(|m| flip_mask_v(&m));
    }
    if params.scale != 1.0 {
        img = scale(&img, params.scale)?;
        msk = msk.map(|m| scale_mask(&m, params.scale)).transpose()?;
    }
    if let Some(draw) = params.jitter {
        img = color_jitter(&img, spec, draw);
    }
    Ok((img, msk))
}

/// Augments one sample with the parameters drawn for `index`.
pub fn apply(
    image: &RgbImage,
    mask: Option<&BinaryMask>,
    spec: &AugmentSpec,
    index: u64,
) -> Result<(RgbImage, Option<BinaryMask>)> {
    spec.validate()?;
    apply_params(image, mask, &spec.draw(index), spec)
}
