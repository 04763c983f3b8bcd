mod oracle;

use dermpipe_core::imgcore::{ClassTable, CLASS_COLUMNS};
use dermpipe_core::metrics::{
    balanced_accuracy, confusion_from_csv, dataset_seg_score, jaccard, per_class_recall,
    thresholded_jaccard, JACCARD_THRESHOLD,
};
use dermpipe_core::{BinaryMask, ConfusionMatrix, DiseaseClass};
use proptest::prelude::*;
use rand::Rng;

fn mask_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (1u32..=20, 1u32..=20).prop_flat_map(|(w, h)| {
        let n = (w * h) as usize;
        (
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(a, b)| {
                let to = |v: Vec<bool>| BinaryMask::new(w, h, v.into_iter().map(u8::from).collect()).unwrap();
                (to(a), to(b))
            })
    })
}

#[test]
fn jaccard_matches_brute_force_on_random_masks() {
    let mut rng = oracle::rng(11);
    for _ in 0..300 {
        let w = rng.random_range(1..=64);
        let h = rng.random_range(1..=64);
        let density = rng.random_range(0.0..1.0);
        let a = oracle::random_mask(&mut rng, w, h, density);
        let b = oracle::random_mask(&mut rng, w, h, density);
        assert_eq!(jaccard(&a, &b).unwrap(), oracle::jaccard(&a, &b));
    }
}

#[test]
fn threshold_boundary_is_inclusive() {
    assert_eq!(thresholded_jaccard(0.65, JACCARD_THRESHOLD).unwrap(), 0.65);
    assert_eq!(thresholded_jaccard(0.6499999, JACCARD_THRESHOLD).unwrap(), 0.0);
}

#[test]
fn fixed_class_predictor_scores_one_seventh() {
    let mut cm = ConfusionMatrix::new();
    for truth in DiseaseClass::ALL {
        for _ in 0..10 {
            cm.record(truth, DiseaseClass::Nv);
        }
    }
    assert!((balanced_accuracy(&cm).unwrap() - 1.0 / 7.0).abs() < 1e-15);
}

fn one_hot(class: usize) -> [f64; 7] {
    let mut row = [0.0; 7];
    row[class] = 1.0;
    row
}

#[test]
fn balanced_accuracy_from_tables_matches_oracle() {
    let mut rng = oracle::rng(5);
    for _ in 0..50 {
        let n = rng.random_range(1..60);
        let mut pred = ClassTable::new(CLASS_COLUMNS);
        let mut gt = ClassTable::new(CLASS_COLUMNS);
        let mut pairs = Vec::new();
        for i in 0..n {
            let truth = rng.random_range(0..7);
            let scores: [f64; 7] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
            let predicted = scores
                .iter()
                .enumerate()
                .fold(0, |best, (k, &v)| if v > scores[best] { k } else { best });
            let id = format!("ISIC_{i:07}");
            pred.insert(id.clone(), scores);
            gt.insert(id, one_hot(truth));
            pairs.push((truth, predicted));
        }
        let cm = confusion_from_csv(&pred, &gt).unwrap();
        let got = balanced_accuracy(&cm).unwrap();
        assert!((got - oracle::balanced_accuracy(&pairs)).abs() < 1e-12);
    }
}

fn confusion() -> impl Strategy<Value = [[u64; 7]; 7]> {
    prop::array::uniform7(prop::array::uniform7(0u64..50))
        .prop_filter("some class present", |m| m.iter().flatten().any(|&c| c > 0))
}

proptest! {
    #[test]
    fn jaccard_is_symmetric_and_bounded((a, b) in mask_pair()) {
        let ab = jaccard(&a, &b).unwrap();
        prop_assert_eq!(ab, jaccard(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn thresholded_never_in_gap(j in 0.0f64..=1.0) {
        let t = thresholded_jaccard(j, JACCARD_THRESHOLD).unwrap();
        prop_assert!(t == 0.0 || t >= JACCARD_THRESHOLD);
        prop_assert!(t == 0.0 || t == j);
    }

    #[test]
    fn dataset_score_is_permutation_invariant(
        pairs in prop::collection::vec(mask_pair(), 1..12),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut oracle::rng(seed));
        let a = dataset_seg_score(&pairs).unwrap();
        let b = dataset_seg_score(&shuffled).unwrap();
        prop_assert!((a - b).abs() <= 1e-15);
    }

    #[test]
    fn balanced_accuracy_ignores_row_scaling(
        counts in confusion(),
        row in 0usize..7,
        k in 1u64..20,
    ) {
        let base = ConfusionMatrix::from_counts(counts);
        let mut scaled_counts = counts;
        scaled_counts[row].iter_mut().for_each(|c| *c *= k);
        let scaled = ConfusionMatrix::from_counts(scaled_counts);
        prop_assert_eq!(per_class_recall(&base), per_class_recall(&scaled));
        prop_assert_eq!(balanced_accuracy(&base).unwrap(), balanced_accuracy(&scaled).unwrap());
    }
}
