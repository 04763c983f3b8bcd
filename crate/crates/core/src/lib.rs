//! Non-neural pipeline for dermoscopy lesion analysis.
//!
//! The crate covers everything around the networks of a lesion
//! segmentation / attribute detection / diagnosis entry:
//!
//! 1. **imgcore** – validated raster and table types with PNG, PMAP and CSV IO.
//! 2. **augment** – seeded flips, scaling and color jitter; class-balancing plans.
//! 3. **colorconst** – shades-of-gray illuminant estimation and correction.
//! 4. **postprocess** – dense-CRF refinement, marker watershed and
//!    largest-component selection of lesion probabilities.
//! 5. **fusion** – attribute masking by the lesion and hierarchical
//!    diagnosis fusion.
//! 6. **metrics** – thresholded Jaccard and balanced multi-class accuracy.
//!
//! Per-image and per-pixel loops go through [`exec`], which uses rayon when
//! the `parallel` feature is enabled. Results are identical either way.

pub mod augment;
pub mod colorconst;
pub mod config;
pub mod error;
pub mod exec;
pub mod fusion;
pub mod imgcore;
pub mod metrics;
pub mod postprocess;

pub use error::{Error, Result};
pub use imgcore::{
    Attribute, BinaryMask, ClassDistribution, ConfusionMatrix, DiseaseClass, ProbMap, RgbImage,
};
