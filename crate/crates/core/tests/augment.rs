mod oracle;

use std::collections::BTreeMap;

use dermpipe_core::augment::{
    apply, apply_params, balance_plan, flip_h, flip_mask_h, flip_mask_v, flip_v, scale,
    AugmentParams, AugmentSpec, SamplePlan,
};
use dermpipe_core::{BinaryMask, DiseaseClass, RgbImage};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn checker_upscale_matches_reference_resampler() {
    let checker = RgbImage::from_fn(2, 2, |x, y| if (x + y) % 2 == 0 { [0, 0, 0] } else { [255, 255, 255] }).unwrap();
    let got = scale(&checker, 2.0).unwrap();
    assert_eq!(got, oracle::scale_reference(&checker, 2.0));
    // Central 2×2 of the 4×4 resample: 5/8 own value, 3/8 the other color.
    assert_eq!(got.pixel(0, 0), [96; 3]);
    assert_eq!(got.pixel(1, 0), [159; 3]);
}

#[test]
fn scale_matches_reference_resampler() {
    let mut rng = oracle::rng(41);
    for _ in 0..60 {
        let w = rng.random_range(1..=30);
        let h = rng.random_range(1..=30);
        let image = oracle::random_image(&mut rng, w, h);
        let f = rng.random_range(0.8..=1.2);
        assert_eq!(scale(&image, f).unwrap(), oracle::scale_reference(&image, f));
    }
}

#[test]
fn sparse_mask_transforms_match_coordinate_oracle() {
    let mut rng = oracle::rng(42);
    let spec = AugmentSpec::default();
    for index in 0..80u64 {
        let w = rng.random_range(3..=40u32);
        let h = rng.random_range(3..=40u32);
        let mask = oracle::random_mask(&mut rng, w, h, 0.05);
        let image = RgbImage::filled(w, h, [10, 20, 30]).unwrap();
        let p = spec.draw(index);
        let (_, got) = apply_params(&image, Some(&mask), &p, &spec).unwrap();
        let got = got.unwrap();
        for y in 0..h as usize {
            for x in 0..w as usize {
                let (sx, sy) =
                    oracle::augmented_source(x, y, w as usize, h as usize, p.flip_h, p.flip_v, p.scale);
                assert_eq!(
                    got.get(x as u32, y as u32),
                    mask.get(sx as u32, sy as u32),
                    "index {index} at ({x},{y})"
                );
            }
        }
    }
}

#[test]
fn same_seed_same_bytes() {
    let image = oracle::random_image(&mut oracle::rng(1), 33, 27);
    let mask = oracle::random_mask(&mut oracle::rng(2), 33, 27, 0.3);
    let spec = AugmentSpec {
        seed: 77,
        ..AugmentSpec::default()
    };
    for index in 0..20 {
        let a = apply(&image, Some(&mask), &spec, index).unwrap();
        let b = dermpipe_core::exec::sequential(|| apply(&image, Some(&mask), &spec, index).unwrap());
        assert_eq!(a.0.as_bytes(), b.0.as_bytes());
        assert_eq!(a.1, b.1);
    }
}

fn skewed_labels(counts: &[usize]) -> BTreeMap<String, DiseaseClass> {
    let mut labels = BTreeMap::new();
    for (k, &n) in counts.iter().enumerate() {
        let class = DiseaseClass::from_index(k).unwrap();
        for i in 0..n {
            labels.insert(format!("{}_{i:05}", class.code()), class);
        }
    }
    labels
}

#[test]
fn plan_balances_skewed_classes() {
    let labels = skewed_labels(&[700, 100, 10, 3, 50, 1, 7]);
    let spec = AugmentSpec::classification();
    let plan = balance_plan(&labels, &DiseaseClass::ALL, 2000, &spec).unwrap();
    for class in DiseaseClass::ALL {
        assert_eq!(plan.count(class), 2000);
    }
    // Every source image of a class is used before any repeats.
    let df: Vec<&str> = plan
        .entries()
        .iter()
        .filter(|e| e.class == DiseaseClass::Df)
        .map(|e| e.image.as_str())
        .collect();
    assert!(df.iter().all(|&i| i == "DF_00000"));
    let vasc: Vec<&str> = plan
        .entries()
        .iter()
        .filter(|e| e.class == DiseaseClass::Vasc)
        .take(7)
        .map(|e| e.image.as_str())
        .collect();
    let mut uniq = vasc.clone();
    uniq.sort();
    uniq.dedup();
    assert_eq!(uniq.len(), 7);
}

#[test]
fn plan_roundtrips_through_csv() {
    let labels = skewed_labels(&[4, 2, 1, 1, 1, 1, 1]);
    let spec = AugmentSpec {
        seed: 3,
        ..AugmentSpec::default()
    };
    let plan = balance_plan(&labels, &DiseaseClass::ALL, 9, &spec).unwrap();
    let back = SamplePlan::parse(&plan.to_csv_string(), &spec).unwrap();
    assert_eq!(back, plan);
}

#[test]
fn plan_rejects_empty_class() {
    let labels = skewed_labels(&[4, 0, 1, 1, 1, 1, 1]);
    let err = balance_plan(&labels, &DiseaseClass::ALL, 5, &AugmentSpec::default()).unwrap_err();
    assert!(err.to_string().contains("NV"), "{err}");
}

fn image() -> impl Strategy<Value = RgbImage> {
    (1u32..=12, 1u32..=12).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), (w * h * 3) as usize)
            .prop_map(move |d| RgbImage::new(w, h, d).unwrap())
    })
}

proptest! {
    #[test]
    fn flips_are_involutions(img in image()) {
        prop_assert_eq!(&flip_h(&flip_h(&img)), &img);
        prop_assert_eq!(&flip_v(&flip_v(&img)), &img);
        let m = BinaryMask::from_fn(img.width(), img.height(), |x, y| img.pixel(x, y)[0] > 127).unwrap();
        prop_assert_eq!(&flip_mask_h(&flip_mask_h(&m)), &m);
        prop_assert_eq!(&flip_mask_v(&flip_mask_v(&m)), &m);
    }

    #[test]
    fn unit_scale_is_identity(img in image()) {
        prop_assert_eq!(&scale(&img, 1.0).unwrap(), &img);
    }

    #[test]
    fn outputs_keep_shape(img in image(), seed in any::<u64>(), index in any::<u64>()) {
        let spec = AugmentSpec { seed, ..AugmentSpec::default() };
        let m = BinaryMask::zeros(img.width(), img.height()).unwrap();
        let (a, b) = apply(&img, Some(&m), &spec, index).unwrap();
        prop_assert_eq!(a.dimensions(), img.dimensions());
        prop_assert_eq!(b.unwrap().dimensions(), img.dimensions());
    }

    #[test]
    fn identity_params_change_nothing(img in image()) {
        let spec = AugmentSpec::default();
        let (a, _) = apply_params(&img, None, &AugmentParams::identity(), &spec).unwrap();
        prop_assert_eq!(a, img);
    }

    #[test]
    fn drawn_scale_in_range(seed in any::<u64>(), index in any::<u64>()) {
        let spec = AugmentSpec { seed, ..AugmentSpec::default() };
        let p = spec.draw(index);
        prop_assert!((0.8..=1.2).contains(&p.scale));
        prop_assert_eq!(p, spec.draw(index));
    }
}
