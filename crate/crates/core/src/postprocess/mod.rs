//! Lesion mask refinement: CRF, marker watershed, largest component.

mod components;
mod crf;
mod watershed;

use std::path::Path;

pub use components::{label_components, largest_component, Connectivity};
pub use crf::{crf_refine, CrfParams, PROB_EPSILON};
pub use watershed::watershed;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::imgcore::{save_mask_png, save_probmap, BinaryMask, ProbMap, RgbImage};

/// Marker label of confident background.
pub const LABEL_BACKGROUND: u32 = 1;
/// Marker label of confident lesion.
pub const LABEL_LESION: u32 = 2;

/// Per-pixel region labels; 0 means unassigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    num_labels: u32,
}

impl LabelMap {
    pub fn new(width: u32, height: u32, labels: Vec<u32>, num_labels: u32) -> Result<Self> {
        if labels.len() != width as usize * height as usize || labels.is_empty() {
            return Err(Error::invalid(
                "label map",
                format!("{} labels for {width}x{height}", labels.len()),
            ));
        }
        if let Some(l) = labels.iter().find(|&&l| l > num_labels) {
            return Err(Error::invalid(
                "label map",
                format!("label {l} exceeds declared count {num_labels}"),
            ));
        }
        Ok(LabelMap {
            width,
            height,
            labels,
            num_labels,
        })
    }

    pub(crate) fn from_raw(width: u32, height: u32, labels: Vec<u32>, num_labels: u32) -> Self {
        debug_assert!(labels.iter().all(|&l| l <= num_labels));
        LabelMap {
            width,
            height,
            labels,
            num_labels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_labels(&self) -> u32 {
        self.num_labels
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn contains(&self, label: u32) -> bool {
        self.labels.contains(&label)
    }

    pub fn mask_of(&self, label: u32) -> BinaryMask {
        let data = self.labels.iter().map(|&l| (l == label) as u8).collect();
        BinaryMask::from_raw(self.width, self.height, data)
    }
}

fn single_channel(prob: &ProbMap) -> Result<()> {
    if prob.channels() != 1 {
        return Err(Error::invalid(
            "probability map",
            format!("expected one channel, got {}", prob.channels()),
        ));
    }
    Ok(())
}

/// `value >= threshold` becomes foreground.
pub fn binarize(prob: &ProbMap, threshold: f64) -> Result<BinaryMask> {
    single_channel(prob)?;
    let data = prob
        .as_slice()
        .iter()
        .map(|&v| (v as f64 >= threshold) as u8)
        .collect();
    Ok(BinaryMask::from_raw(prob.width(), prob.height(), data))
}

/// Seeds for the watershed: `>= fg` is lesion, `<= bg` is background, the
/// rest is left for flooding.
pub fn derive_markers(prob: &ProbMap, fg_threshold: f64, bg_threshold: f64) -> Result<LabelMap> {
    single_channel(prob)?;
    if !(fg_threshold > bg_threshold) {
        return Err(Error::invalid(
            "marker thresholds",
            format!("foreground {fg_threshold} must exceed background {bg_threshold}"),
        ));
    }
    let labels = prob
        .as_slice()
        .iter()
        .map(|&v| {
            let v = v as f64;
            if v >= fg_threshold {
                LABEL_LESION
            } else if v <= bg_threshold {
                LABEL_BACKGROUND
            } else {
                0
            }
        })
        .collect();
    Ok(LabelMap::from_raw(prob.width(), prob.height(), labels, 2))
}

/// Settings of [`postprocess_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub crf: CrfParams,
    pub use_crf: bool,
    pub use_watershed: bool,
    pub fg_threshold: f64,
    pub bg_threshold: f64,
    pub binarize_threshold: f64,
    pub connectivity: Connectivity,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            crf: CrfParams::default(),
            use_crf: true,
            use_watershed: true,
            fg_threshold: 0.8,
            bg_threshold: 0.2,
            binarize_threshold: 0.5,
            connectivity: Connectivity::Eight,
        }
    }
}

impl ChainParams {
    /// Reads `crf.*` and `postprocess.*` keys.
    pub fn apply_config(&mut self, cfg: &mut Config) -> Result<()> {
        self.crf.apply_config(cfg, "crf.")?;
        cfg.take_into("postprocess.crf", &mut self.use_crf)?;
        cfg.take_into("postprocess.watershed", &mut self.use_watershed)?;
        cfg.take_into("postprocess.fg_threshold", &mut self.fg_threshold)?;
        cfg.take_into("postprocess.bg_threshold", &mut self.bg_threshold)?;
        cfg.take_into("postprocess.binarize_threshold", &mut self.binarize_threshold)?;
        cfg.take_into("postprocess.connectivity", &mut self.connectivity)?;
        Ok(())
    }
}

/// Every intermediate of one [`postprocess_chain`] run.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub refined: ProbMap,
    /// `None` when the watershed is disabled.
    pub markers: Option<LabelMap>,
    /// `None` when the watershed is disabled or fell back to thresholding.
    pub regions: Option<LabelMap>,
    pub candidate: BinaryMask,
    pub mask: BinaryMask,
}

impl ChainTrace {
    /// Writes `refined.pmap`, `markers.png`, `regions.png`, `candidate.png`
    /// and `mask.png` into `dir`, prefixed by `stem_`.
    pub fn dump(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let at = |name: &str| dir.join(format!("{stem}_{name}"));
        save_probmap(&self.refined, at("refined.pmap"))?;
        if let Some(m) = &self.markers {
            save_labels_png(m, &at("markers.png"))?;
        }
        if let Some(r) = &self.regions {
            save_labels_png(r, &at("regions.png"))?;
        }
        save_mask_png(&self.candidate, at("candidate.png"))?;
        save_mask_png(&self.mask, at("mask.png"))
    }
}

fn save_labels_png(labels: &LabelMap, path: &Path) -> Result<()> {
    // Labels 0/1/2 spread over the gray range for viewing.
    let data: Vec<f32> = labels
        .labels()
        .iter()
        .map(|&l| l as f32 / labels.num_labels().max(1) as f32)
        .collect();
    let map = ProbMap::from_raw(labels.width(), labels.height(), 1, data);
    crate::imgcore::save_probmap_png16(&map, path)
}

/// CRF, then marker watershed on `1 - p`, then the largest lesion component.
/// Without lesion seeds the refined map is thresholded instead.
pub fn postprocess_chain(image: &RgbImage, prob: &ProbMap, params: &ChainParams) -> Result<BinaryMask> {
    postprocess_chain_traced(image, prob, params).map(|t| t.mask)
}

pub fn postprocess_chain_traced(
    image: &RgbImage,
    prob: &ProbMap,
    params: &ChainParams,
) -> Result<ChainTrace> {
    single_channel(prob)?;
    if image.dimensions() != prob.dimensions() {
        return Err(Error::dims(image.dimensions(), prob.dimensions()));
    }
    let refined = if params.use_crf {
        crf_refine(image, prob, &params.crf)?
    } else {
        prob.clone()
    };
    let mut markers = None;
    let mut regions = None;
    let candidate = if params.use_watershed {
        let seeds = derive_markers(&refined, params.fg_threshold, params.bg_threshold)?;
        let candidate = if seeds.contains(LABEL_LESION) {
            let elevation: Vec<f32> = refined.as_slice().iter().map(|&p| 1.0 - p).collect();
            let elevation = ProbMap::from_raw(refined.width(), refined.height(), 1, elevation);
            let flooded = watershed(&elevation, &seeds)?;
            let lesion = flooded.mask_of(LABEL_LESION);
            regions = Some(flooded);
            lesion
        } else {
            binarize(&refined, params.binarize_threshold)?
        };
        markers = Some(seeds);
        candidate
    } else {
        binarize(&refined, params.binarize_threshold)?
    };
    let mask = largest_component(&candidate, params.connectivity);
    Ok(ChainTrace {
        refined,
        markers,
        regions,
        candidate,
        mask,
    })
}
