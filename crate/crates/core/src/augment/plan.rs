//! Class-balancing oversampling plans.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix, AugmentParams, AugmentSpec};
use crate::error::{Error, Result};
use crate::imgcore::DiseaseClass;

pub const DEFAULT_TARGET_PER_CLASS: usize = 20_000;

/// Stream id reserved for per-class shuffles, far from any entry index.
const SHUFFLE_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub image: String,
    pub class: DiseaseClass,
    pub entry_index: u64,
    pub params: AugmentParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    entries: Vec<PlanEntry>,
}

impl SamplePlan {
    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, class: DiseaseClass) -> usize {
        self.entries.iter().filter(|e| e.class == class).count()
    }

    /// CSV with header `image,class,entry_index`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("image,class,entry_index\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.image, e.class, e.entry_index));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    /// Parses a plan file, re-drawing each entry's parameters from `spec`.
    pub fn parse(text: &str, spec: &AugmentSpec) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["image", "class", "entry_index"] {
            return Err(Error::Csv(format!(
                "plan header must be image,class,entry_index, found {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut entries = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            let row = i + 2;
            let image = rec.get(0).unwrap_or_default().to_string();
            if image.is_empty() {
                return Err(Error::Csv(format!("plan row {row}: empty image id")));
            }
            let class: DiseaseClass = rec
                .get(1)
                .unwrap_or_default()
                .parse()
                .map_err(|e| Error::Csv(format!("plan row {row}: {e}")))?;
            let entry_index: u64 = rec
                .get(2)
                .unwrap_or_default()
                .parse()
                .map_err(|_| Error::Csv(format!("plan row {row}: bad entry_index")))?;
            entries.push(PlanEntry {
                image,
                class,
                entry_index,
                params: spec.draw(entry_index),
            });
        }
        Ok(SamplePlan { entries })
    }

    pub fn load(path: impl AsRef<Path>, spec: &AugmentSpec) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, spec)
    }
}

/// Oversamples every class in `classes` to exactly `target_per_class`
/// entries by cycling through its images in a seeded shuffle order.
///
/// Labels of classes outside `classes` are ignored. Entry indices are
/// assigned consecutively in class order, and each entry's parameters are
/// drawn from `spec` at that index; the plan is a pure function of
/// `(labels, classes, target_per_class, spec)`.
pub fn balance_plan(
    labels: &BTreeMap<String, DiseaseClass>,
    classes: &[DiseaseClass],
    target_per_class: usize,
    spec: &AugmentSpec,
) -> Result<SamplePlan> {
    spec.validate()?;
    let mut by_class: BTreeMap<DiseaseClass, Vec<&str>> = BTreeMap::new();
    for (image, class) in labels {
        by_class.entry(*class).or_default().push(image);
    }
    let mut ordered: Vec<DiseaseClass> = classes.to_vec();
    ordered.sort();
    ordered.dedup();
    let mut entries = Vec::with_capacity(ordered.len() * target_per_class);
    let mut next_index = 0u64;
    for class in ordered {
        let mut images = by_class.get(&class).cloned().unwrap_or_default();
        if images.is_empty() {
            return Err(Error::invalid(
                "balance plan",
                format!("class {class} has no images"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, SHUFFLE_STREAM | class.index() as u64));
        images.shuffle(&mut rng);
        for k in 0..target_per_class {
            entries.push(PlanEntry {
                image: images[k % images.len()].to_string(),
                class,
                entry_index: next_index,
                params: spec.draw(next_index),
            });
            next_index += 1;
        }
    }
    Ok(SamplePlan { entries })
}
