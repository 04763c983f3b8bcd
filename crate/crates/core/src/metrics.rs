//! Challenge scoring: thresholded Jaccard for lesion and attribute masks,
//! balanced multi-class accuracy for diagnosis.

use crate::error::{Error, Result};
use crate::exec;
use crate::imgcore::{
    argmax_index, Attribute, BinaryMask, ClassTable, ConfusionMatrix, DiseaseClass, ProbMap,
};

/// Per-image Jaccard below this counts as zero.
pub const JACCARD_THRESHOLD: f64 = 0.65;

/// Raw and challenge-thresholded Jaccard of one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegScore {
    pub raw_jaccard: f64,
    pub thresholded: f64,
}

impl SegScore {
    pub fn new(raw_jaccard: f64) -> Result<Self> {
        Ok(SegScore {
            raw_jaccard,
            thresholded: thresholded_jaccard(raw_jaccard, JACCARD_THRESHOLD)?,
        })
    }
}

fn intersection_union(pred: &[u8], gt: &[u8]) -> (u64, u64) {
    pred.iter().zip(gt).fold((0, 0), |(i, u), (&a, &b)| {
        (i + (a & b) as u64, u + (a | b) as u64)
    })
}

/// |A ∩ B| / |A ∪ B| over foreground pixels; two empty masks score 1.
pub fn jaccard(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    if pred.dimensions() != gt.dimensions() {
        return Err(Error::dims(pred.dimensions(), gt.dimensions()));
    }
    let (inter, union) = intersection_union(pred.as_slice(), gt.as_slice());
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Zeroes scores strictly below `threshold`.
pub fn thresholded_jaccard(j: f64, threshold: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&j) {
        return Err(Error::invalid("jaccard", format!("{j} outside [0, 1]")));
    }
    Ok(if j >= threshold { j } else { 0.0 })
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn compensated_mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Per-pair scores, in input order.
pub fn seg_scores(pairs: &[(BinaryMask, BinaryMask)]) -> Result<Vec<SegScore>> {
    exec::map(pairs, |(pred, gt)| SegScore::new(jaccard(pred, gt)?))
        .into_iter()
        .collect()
}

/// Mean thresholded Jaccard over a dataset.
pub fn dataset_seg_score(pairs: &[(BinaryMask, BinaryMask)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("dataset", "no image pairs to score"));
    }
    let scores = seg_scores(pairs)?;
    let thresholded: Vec<f64> = scores.iter().map(|s| s.thresholded).collect();
    Ok(compensated_mean(&thresholded))
}

/// Jaccard of each of the five attribute channels plus their plain mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeScores {
    pub per_attribute: [f64; 5],
    pub mean: f64,
}

impl AttributeScores {
    pub fn get(&self, attribute: Attribute) -> f64 {
        self.per_attribute[attribute as usize]
    }
}

fn require_five(map: &ProbMap, what: &str) -> Result<()> {
    if map.channels() as usize != Attribute::COUNT {
        return Err(Error::invalid(
            "attribute map",
            format!("{what} has {} channels, expected 5", map.channels()),
        ));
    }
    Ok(())
}

/// Scores a 5-channel attribute prediction against binary ground truth.
/// Prediction channels are binarized at `bin_threshold` (inclusive).
pub fn attribute_scores(pred: &ProbMap, gt: &ProbMap, bin_threshold: f64) -> Result<AttributeScores> {
    require_five(pred, "prediction")?;
    require_five(gt, "ground truth")?;
    if pred.dimensions() != gt.dimensions() {
        return Err(Error::dims(pred.dimensions(), gt.dimensions()));
    }
    if let Some(v) = gt.as_slice().iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid(
            "attribute ground truth",
            format!("value {v} is not 0 or 1"),
        ));
    }
    let mut inter = [0u64; 5];
    let mut union = [0u64; 5];
    for (p, g) in pred.as_slice().chunks_exact(5).zip(gt.as_slice().chunks_exact(5)) {
        for c in 0..5 {
            let a = p[c] as f64 >= bin_threshold;
            let b = g[c] == 1.0;
            inter[c] += (a && b) as u64;
            union[c] += (a || b) as u64;
        }
    }
    let mut per_attribute = [0.0; 5];
    for c in 0..5 {
        per_attribute[c] = if union[c] == 0 {
            1.0
        } else {
            inter[c] as f64 / union[c] as f64
        };
    }
    Ok(AttributeScores {
        per_attribute,
        mean: compensated_sum(per_attribute) / 5.0,
    })
}

/// Mean recall over classes that occur in the ground truth.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let recalls = per_class_recall(cm);
    let present: Vec<f64> = recalls.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::invalid("confusion matrix", "no ground-truth samples"));
    }
    Ok(compensated_mean(&present))
}

/// Recall of each class, `None` when the class has no ground-truth samples.
pub fn per_class_recall(cm: &ConfusionMatrix) -> [Option<f64>; 7] {
    let mut out = [None; 7];
    for class in DiseaseClass::ALL {
        let row = cm.row_sum(class);
        if row > 0 {
            out[class.index()] = Some(cm.get(class, class) as f64 / row as f64);
        }
    }
    out
}

/// Builds the confusion matrix of `pred` (argmax per row, lowest index wins
/// ties) against one-hot `gt`. Both tables must cover the same ids.
pub fn confusion_from_csv(pred: &ClassTable, gt: &ClassTable) -> Result<ConfusionMatrix> {
    let only_pred: Vec<&String> = pred.rows().keys().filter(|k| gt.get(k).is_none()).collect();
    let only_gt: Vec<&String> = gt.rows().keys().filter(|k| pred.get(k).is_none()).collect();
    if !only_pred.is_empty() || !only_gt.is_empty() {
        return Err(Error::invalid(
            "classification tables",
            format!(
                "ids without a partner: prediction-only {}, ground-truth-only {}",
                preview(&only_pred),
                preview(&only_gt)
            ),
        ));
    }
    if gt.is_empty() {
        return Err(Error::invalid("classification tables", "no shared image ids"));
    }
    let mut cm = ConfusionMatrix::new();
    for (image, truth) in gt.rows() {
        let truth_class = one_hot_class(truth).ok_or_else(|| {
            Error::invalid(
                "ground truth",
                format!("row {image} is not one-hot: {truth:?}"),
            )
        })?;
        let row = pred.get(image).expect("key sets checked above");
        cm.record(truth_class, DiseaseClass::ALL[argmax_index(row)]);
    }
    Ok(cm)
}

fn one_hot_class(row: &[f64; 7]) -> Option<DiseaseClass> {
    let ones: Vec<usize> = (0..7).filter(|&i| row[i] == 1.0).collect();
    let zeros = row.iter().filter(|&&v| v == 0.0).count();
    (ones.len() == 1 && zeros == 6).then(|| DiseaseClass::ALL[ones[0]])
}

fn preview(ids: &[&String]) -> String {
    if ids.is_empty() {
        return "[]".into();
    }
    let shown: Vec<&str> = ids.iter().take(5).map(|s| s.as_str()).collect();
    let more = ids.len().saturating_sub(5);
    if more > 0 {
        format!("[{} … +{more}]", shown.join(", "))
    } else {
        format!("[{}]", shown.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::CLASS_COLUMNS;

    fn mask(w: u32, h: u32, ones: &[(u32, u32)]) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| ones.contains(&(x, y))).unwrap()
    }

    #[test]
    fn jaccard_examples() {
        let a = mask(3, 3, &[(0, 0), (1, 1)]);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        let b = mask(3, 3, &[(2, 2)]);
        assert_eq!(jaccard(&a, &b).unwrap(), 0.0);
        // (row, col) = (0,0),(0,1) vs (0,1),(1,1): intersection 1, union 3
        let p = mask(2, 2, &[(0, 0), (1, 0)]);
        let g = mask(2, 2, &[(1, 0), (1, 1)]);
        assert!((jaccard(&p, &g).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let z = BinaryMask::zeros(2, 2).unwrap();
        assert_eq!(jaccard(&z, &z).unwrap(), 1.0);
        assert!(jaccard(&z, &BinaryMask::zeros(2, 3).unwrap()).is_err());
    }

    #[test]
    fn threshold_boundary() {
        assert_eq!(thresholded_jaccard(0.64, JACCARD_THRESHOLD).unwrap(), 0.0);
        assert_eq!(thresholded_jaccard(0.65, JACCARD_THRESHOLD).unwrap(), 0.65);
        assert_eq!(thresholded_jaccard(1.0, JACCARD_THRESHOLD).unwrap(), 1.0);
        assert!(thresholded_jaccard(1.01, JACCARD_THRESHOLD).is_err());
        assert!(thresholded_jaccard(-0.1, JACCARD_THRESHOLD).is_err());
    }

    #[test]
    fn dataset_means() {
        let a = mask(5, 1, &[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)]);
        assert_eq!(dataset_seg_score(&[(a.clone(), a.clone())]).unwrap(), 1.0);
        // 4/5 = 0.8 and 1/5 -> 0
        let b = mask(5, 1, &[(0, 0), (1, 0), (2, 0), (3, 0)]);
        let c = mask(5, 1, &[(0, 0)]);
        let s = dataset_seg_score(&[(b, a.clone()), (c, a.clone())]).unwrap();
        assert!((s - 0.4).abs() < 1e-15);
        let many = vec![(a.clone(), a.clone()); 10];
        assert_eq!(dataset_seg_score(&many).unwrap(), 1.0);
        assert!(dataset_seg_score(&[]).is_err());
    }

    fn five(w: u32, h: u32, f: impl Fn(u32, u32, u32) -> f32) -> ProbMap {
        let mut data = Vec::new();
        for y in 0..h {
            for x in 0..w {
                for c in 0..5 {
                    data.push(f(x, y, c));
                }
            }
        }
        ProbMap::new(w, h, 5, data).unwrap()
    }

    #[test]
    fn attribute_examples() {
        let gt = five(4, 4, |x, y, _| ((x + y) % 2) as f32);
        let s = attribute_scores(&gt, &gt, 0.5).unwrap();
        assert_eq!(s.per_attribute, [1.0; 5]);
        assert_eq!(s.mean, 1.0);

        let pred = five(4, 4, |x, y, c| if c == 2 { 1.0 - ((x + y) % 2) as f32 } else { ((x + y) % 2) as f32 });
        let s = attribute_scores(&pred, &gt, 0.5).unwrap();
        assert_eq!(s.per_attribute, [1.0, 1.0, 0.0, 1.0, 1.0]);
        assert!((s.mean - 0.8).abs() < 1e-15);

        let zero = five(2, 2, |_, _, _| 0.0);
        assert_eq!(attribute_scores(&zero, &zero, 0.5).unwrap().per_attribute, [1.0; 5]);
    }

    #[test]
    fn attribute_errors() {
        let one = ProbMap::new(1, 1, 1, vec![0.0]).unwrap();
        let z = five(1, 1, |_, _, _| 0.0);
        assert!(attribute_scores(&one, &z, 0.5).is_err());
        assert!(attribute_scores(&z, &five(2, 1, |_, _, _| 0.0), 0.5).is_err());
        assert!(attribute_scores(&z, &five(1, 1, |_, _, _| 0.5), 0.5).is_err());
    }

    #[test]
    fn balanced_accuracy_examples() {
        let mut diag = [[0u64; 7]; 7];
        for (i, row) in diag.iter_mut().enumerate() {
            row[i] = 3 + i as u64;
        }
        assert_eq!(balanced_accuracy(&ConfusionMatrix::from_counts(diag)).unwrap(), 1.0);

        // Always predicting MEL on 10 samples per class.
        let mut fixed = [[0u64; 7]; 7];
        for row in fixed.iter_mut() {
            row[0] = 10;
        }
        let ba = balanced_accuracy(&ConfusionMatrix::from_counts(fixed)).unwrap();
        assert!((ba - 1.0 / 7.0).abs() < 1e-15);

        let mut two = [[0u64; 7]; 7];
        two[0][0] = 10;
        two[1][1] = 5;
        two[1][0] = 5;
        assert_eq!(balanced_accuracy(&ConfusionMatrix::from_counts(two)).unwrap(), 0.75);

        assert!(balanced_accuracy(&ConfusionMatrix::new()).is_err());
    }

    fn table(rows: &[(&str, [f64; 7])]) -> ClassTable {
        let mut t = ClassTable::new(CLASS_COLUMNS);
        for (id, r) in rows {
            t.insert(*id, *r);
        }
        t
    }

    #[test]
    fn confusion_examples() {
        let nv = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let cm = confusion_from_csv(&table(&[("a", nv)]), &table(&[("a", nv)])).unwrap();
        assert_eq!(cm.get(DiseaseClass::Nv, DiseaseClass::Nv), 1);

        let tie = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let cm = confusion_from_csv(&table(&[("a", tie)]), &table(&[("a", nv)])).unwrap();
        assert_eq!(cm.get(DiseaseClass::Nv, DiseaseClass::Mel), 1);

        assert!(confusion_from_csv(&table(&[]), &table(&[])).is_err());
        assert!(confusion_from_csv(&table(&[("a", nv)]), &table(&[("b", nv)])).is_err());
        let soft = [0.2, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0];
        let err = confusion_from_csv(&table(&[("a", nv)]), &table(&[("a", soft)])).unwrap_err();
        assert!(err.to_string().contains("not one-hot"));
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut xs = vec![1e16];
        xs.extend(std::iter::repeat_n(1.0, 1000));
        xs.push(-1e16);
        assert_eq!(compensated_sum(xs), 1000.0);
    }
}
