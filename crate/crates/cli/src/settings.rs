//! Run settings merged from defaults, the `--config` file and flags.

use std::path::Path;

use dermpipe_core::augment::{AugmentSpec, DEFAULT_TARGET_PER_CLASS};
use dermpipe_core::colorconst::DEFAULT_MINKOWSKI_P;
use dermpipe_core::config::Config;
use dermpipe_core::fusion::FusionMode;
use dermpipe_core::postprocess::ChainParams;

use crate::report::ReportFormat;
use crate::Failure;

#[derive(Debug, Clone)]
pub struct Settings {
    pub chain: ChainParams,
    pub augment: AugmentSpec,
    pub target_per_class: usize,
    pub minkowski_p: f64,
    pub attr_threshold: f64,
    pub fusion: FusionMode,
    pub jobs: usize,
    pub report: ReportFormat,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            chain: ChainParams::default(),
            augment: AugmentSpec::default(),
            target_per_class: DEFAULT_TARGET_PER_CLASS,
            minkowski_p: DEFAULT_MINKOWSKI_P,
            attr_threshold: 0.5,
            fusion: FusionMode::Soft,
            jobs: 0,
            report: ReportFormat::Csv,
        }
    }
}

fn usage(e: dermpipe_core::Error) -> Failure {
    Failure::Usage(e.to_string())
}

impl Settings {
    /// Defaults overridden by the keys of `path`. Every key must be known.
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let mut s = Settings::default();
        let Some(path) = path else {
            return Ok(s);
        };
        if !path.is_file() {
            return Err(Failure::Usage(format!(
                "config file {} does not exist",
                path.display()
            )));
        }
        let mut cfg = Config::load(path).map_err(usage)?;
        s.chain.apply_config(&mut cfg).map_err(usage)?;
        s.augment.apply_config(&mut cfg, "augment.").map_err(usage)?;
        cfg.take_into("augment.target_per_class", &mut s.target_per_class)
            .map_err(usage)?;
        cfg.take_into("color.p", &mut s.minkowski_p).map_err(usage)?;
        cfg.take_into("eval.attr_threshold", &mut s.attr_threshold)
            .map_err(usage)?;
        if let Some(mode) = cfg.take::<String>("fusion.mode").map_err(usage)? {
            s.fusion = parse_fusion(&mode)?;
        }
        if let Some(seed) = cfg.take::<u64>("seed").map_err(usage)? {
            s.augment.seed = seed;
        }
        cfg.take_into("jobs", &mut s.jobs).map_err(usage)?;
        cfg.take_into("report", &mut s.report).map_err(usage)?;
        cfg.finish().map_err(usage)?;
        Ok(s)
    }

    /// Checks parameter ranges once all overrides are in.
    pub fn validate(&self) -> Result<(), Failure> {
        self.chain.crf.validate().map_err(usage)?;
        self.augment.validate().map_err(usage)?;
        let c = &self.chain;
        if !(0.0..=1.0).contains(&c.bg_threshold)
            || !(0.0..=1.0).contains(&c.fg_threshold)
            || c.fg_threshold <= c.bg_threshold
        {
            return Err(Failure::Usage(format!(
                "marker thresholds must satisfy 0 <= bg < fg <= 1, got bg {} fg {}",
                c.bg_threshold, c.fg_threshold
            )));
        }
        if !(0.0..=1.0).contains(&c.binarize_threshold) {
            return Err(Failure::Usage(format!(
                "binarize threshold {} outside [0, 1]",
                c.binarize_threshold
            )));
        }
        if !(self.minkowski_p.is_finite() && self.minkowski_p >= 1.0) {
            return Err(Failure::Usage(format!(
                "Minkowski p must be finite and >= 1, got {}",
                self.minkowski_p
            )));
        }
        if !(0.0..=1.0).contains(&self.attr_threshold) {
            return Err(Failure::Usage(format!(
                "attribute threshold {} outside [0, 1]",
                self.attr_threshold
            )));
        }
        Ok(())
    }
}

fn parse_fusion(s: &str) -> Result<FusionMode, Failure> {
    match s.trim().to_ascii_lowercase().as_str() {
        "soft" => Ok(FusionMode::Soft),
        "hard" => Ok(FusionMode::Hard),
        other => Err(Failure::Usage(format!(
            "fusion.mode {other:?}, expected soft or hard"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Settings, Failure> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, text).unwrap();
        Settings::load(Some(&path))
    }

    #[test]
    fn keys_override_defaults() {
        let s = load("crf.iterations = 2\ncolor.p = 3\nfusion.mode = hard\nseed = 9\nreport = jsonl\n").unwrap();
        assert_eq!(s.chain.crf.iterations, 2);
        assert_eq!(s.minkowski_p, 3.0);
        assert_eq!(s.fusion, FusionMode::Hard);
        assert_eq!(s.augment.seed, 9);
        assert_eq!(s.report, ReportFormat::Jsonl);
    }

    #[test]
    fn unknown_key_is_usage_error() {
        match load("crf.iteratoins = 2\n") {
            Err(Failure::Usage(msg)) => assert!(msg.contains("crf.iteratoins"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_usage_error() {
        assert!(matches!(
            Settings::load(Some(Path::new("/nonexistent/run.cfg"))),
            Err(Failure::Usage(_))
        ));
    }

    #[test]
    fn bad_thresholds_rejected() {
        let mut s = Settings::default();
        s.chain.fg_threshold = 0.1;
        assert!(s.validate().is_err());
    }
}
