//! Cross-task combination: masking attribute maps by the lesion, and
//! turning the three-level diagnosis hierarchy into one distribution.
//!
//! Hierarchy: level 1 separates NV from everything else, level 2 separates
//! MEL and BKL from the rest, level 3 picks among BCC, AKIEC, DF and VASC.
//! Each level is read as a distribution conditional on reaching it, so
//! the fused probabilities are products along the path.

use crate::error::{Error, Result};
use crate::imgcore::{
    argmax_index, BinaryMask, ClassDistribution, ClassTable, DiseaseClass, ProbMap, ProbTable,
    CLASS_COLUMNS, DISTRIBUTION_SUM_TOLERANCE,
};

pub const LEVEL1_COLUMNS: [&str; 2] = ["NV", "OTHER"];
pub const LEVEL2_COLUMNS: [&str; 3] = ["MEL", "BKL", "OTHER"];
pub const LEVEL3_COLUMNS: [&str; 4] = ["BCC", "AKIEC", "DF", "VASC"];

/// Zeroes every attribute channel outside the lesion.
pub fn refine_attributes(attr: &ProbMap, lesion: &BinaryMask) -> Result<ProbMap> {
    if attr.dimensions() != lesion.dimensions() {
        return Err(Error::dims(attr.dimensions(), lesion.dimensions()));
    }
    let channels = attr.channels() as usize;
    let mut data = attr.as_slice().to_vec();
    for (px, &inside) in data.chunks_exact_mut(channels).zip(lesion.as_slice()) {
        if inside == 0 {
            px.fill(0.0);
        }
    }
    Ok(ProbMap::from_raw(attr.width(), attr.height(), attr.channels(), data))
}

fn check_level<const N: usize>(name: &str, level: &[f64; N]) -> Result<()> {
    if let Some(v) = level.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(
            "hierarchy level",
            format!("{name} value {v} outside [0, 1]"),
        ));
    }
    let sum: f64 = level.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOLERANCE {
        return Err(Error::invalid(
            "hierarchy level",
            format!("{name} sums to {sum}"),
        ));
    }
    Ok(())
}

/// Outputs of the three per-level classifiers for one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOutputs {
    /// NV, OTHER
    level1: [f64; 2],
    /// MEL, BKL, OTHER
    level2: [f64; 3],
    /// BCC, AKIEC, DF, VASC
    level3: [f64; 4],
}

impl HierarchyOutputs {
    pub fn new(level1: [f64; 2], level2: [f64; 3], level3: [f64; 4]) -> Result<Self> {
        check_level("level 1", &level1)?;
        check_level("level 2", &level2)?;
        check_level("level 3", &level3)?;
        Ok(HierarchyOutputs {
            level1,
            level2,
            level3,
        })
    }

    pub fn level1(&self) -> &[f64; 2] {
        &self.level1
    }

    pub fn level2(&self) -> &[f64; 3] {
        &self.level2
    }

    pub fn level3(&self) -> &[f64; 4] {
        &self.level3
    }
}

/// Soft fusion: each class probability is the product of the branch
/// probabilities on its path.
pub fn hierarchy_fuse(h: &HierarchyOutputs) -> ClassDistribution {
    // Levels are only required to sum to 1 within tolerance; normalizing
    // them first makes the product telescope to 1 up to rounding.
    let [nv, other1] = normalized(h.level1);
    let [mel, bkl, other2] = normalized(h.level2);
    let [bcc, akiec, df, vasc] = normalized(h.level3);
    let deep = other1 * other2;
    let mut probs = [0.0; 7];
    probs[DiseaseClass::Mel.index()] = other1 * mel;
    probs[DiseaseClass::Nv.index()] = nv;
    probs[DiseaseClass::Bcc.index()] = deep * bcc;
    probs[DiseaseClass::Akiec.index()] = deep * akiec;
    probs[DiseaseClass::Bkl.index()] = other1 * bkl;
    probs[DiseaseClass::Df.index()] = deep * df;
    probs[DiseaseClass::Vasc.index()] = deep * vasc;
    ClassDistribution::new(probs).expect("product of valid levels is a distribution")
}

fn normalized<const N: usize>(level: [f64; N]) -> [f64; N] {
    let sum: f64 = level.iter().sum();
    if sum == 1.0 {
        level
    } else {
        level.map(|v| (v / sum).min(1.0))
    }
}

/// Hard routing: follow the argmax branch at every level (ties to the first
/// column) and return a one-hot distribution.
pub fn hierarchy_route_hard(h: &HierarchyOutputs) -> ClassDistribution {
    let class = if argmax_index(&h.level1) == 0 {
        DiseaseClass::Nv
    } else {
        match argmax_index(&h.level2) {
            0 => DiseaseClass::Mel,
            1 => DiseaseClass::Bkl,
            _ => [
                DiseaseClass::Bcc,
                DiseaseClass::Akiec,
                DiseaseClass::Df,
                DiseaseClass::Vasc,
            ][argmax_index(&h.level3)],
        }
    };
    ClassDistribution::one_hot(class)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    #[default]
    Soft,
    Hard,
}

/// Per-level tables keyed by image.
pub struct LevelTables {
    pub level1: ProbTable<2>,
    pub level2: ProbTable<3>,
    pub level3: ProbTable<4>,
}

impl LevelTables {
    pub fn load(
        level1: impl AsRef<std::path::Path>,
        level2: impl AsRef<std::path::Path>,
        level3: impl AsRef<std::path::Path>,
    ) -> Result<Self> {
        Ok(LevelTables {
            level1: ProbTable::load(level1, LEVEL1_COLUMNS)?,
            level2: ProbTable::load(level2, LEVEL2_COLUMNS)?,
            level3: ProbTable::load(level3, LEVEL3_COLUMNS)?,
        })
    }
}

/// Fuses every image of the three level tables into a canonical
/// classification table. The id sets must be identical and non-empty.
pub fn fuse_tables(tables: &LevelTables, mode: FusionMode) -> Result<ClassTable> {
    let ids1: Vec<&String> = tables.level1.rows().keys().collect();
    let ids2: Vec<&String> = tables.level2.rows().keys().collect();
    let ids3: Vec<&String> = tables.level3.rows().keys().collect();
    if ids1 != ids2 || ids1 != ids3 {
        let mismatched: Vec<&String> = ids1
            .iter()
            .chain(&ids2)
            .chain(&ids3)
            .copied()
            .filter(|id| {
                tables.level1.get(id).is_none()
                    || tables.level2.get(id).is_none()
                    || tables.level3.get(id).is_none()
            })
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        return Err(Error::invalid(
            "level tables",
            format!("image ids differ between levels: {mismatched:?}"),
        ));
    }
    if ids1.is_empty() {
        return Err(Error::invalid("level tables", "no images"));
    }
    let mut out = ClassTable::new(CLASS_COLUMNS);
    for (id, l1) in tables.level1.rows() {
        let h = HierarchyOutputs::new(
            *l1,
            *tables.level2.get(id).expect("ids checked"),
            *tables.level3.get(id).expect("ids checked"),
        )
        .map_err(|e| Error::invalid("level tables", format!("image {id}: {e}")))?;
        let fused = match mode {
            FusionMode::Soft => hierarchy_fuse(&h),
            FusionMode::Hard => hierarchy_route_hard(&h),
        };
        out.insert(id.clone(), *fused.probs());
    }
    Ok(out)
}
