use super::classes::DiseaseClass;
use crate::error::{Error, Result};

/// Tolerance on the sum of a distribution.
pub const DISTRIBUTION_SUM_TOLERANCE: f64 = 1e-6;

/// Seven-way disease probability vector in canonical class order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassDistribution {
    probs: [f64; 7],
}

impl ClassDistribution {
    pub fn new(probs: [f64; 7]) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(
                "class distribution",
                format!("probability {p} outside [0, 1]"),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOLERANCE {
            return Err(Error::invalid(
                "class distribution",
                format!("probabilities sum to {sum}"),
            ));
        }
        Ok(ClassDistribution { probs })
    }

    pub fn one_hot(class: DiseaseClass) -> Self {
        let mut probs = [0.0; 7];
        probs[class.index()] = 1.0;
        ClassDistribution { probs }
    }

    pub fn probs(&self) -> &[f64; 7] {
        &self.probs
    }

    pub fn prob(&self, class: DiseaseClass) -> f64 {
        self.probs[class.index()]
    }

    /// Most probable class; ties go to the lowest canonical index.
    pub fn argmax(&self) -> DiseaseClass {
        argmax(&self.probs)
    }
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn argmax(values: &[f64; 7]) -> DiseaseClass {
    DiseaseClass::ALL[argmax_index(values)]
}

/// 7x7 counts; `counts[t][p]` is the number of samples of true class `t`
/// predicted as `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; 7]; 7],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; 7]; 7]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn record(&mut self, truth: DiseaseClass, predicted: DiseaseClass) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn counts(&self) -> &[[u64; 7]; 7] {
        &self.counts
    }

    pub fn get(&self, truth: DiseaseClass, predicted: DiseaseClass) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    /// Ground-truth count of a class.
    pub fn row_sum(&self, truth: DiseaseClass) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}
