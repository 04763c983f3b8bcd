//! Subcommand drivers. Each returns the report to print.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use dermpipe_core::augment::{apply_params, balance_plan, SamplePlan};
use dermpipe_core::colorconst::{correct, estimate_illuminant};
use dermpipe_core::exec;
use dermpipe_core::fusion::{fuse_tables, LevelTables};
use dermpipe_core::imgcore::{
    load_class_table, load_mask_png, load_probmap, load_rgb_png, save_mask_png, save_rgb_png,
};
use dermpipe_core::metrics::{
    attribute_scores, balanced_accuracy, compensated_mean, confusion_from_csv, jaccard,
    per_class_recall, SegScore,
};
use dermpipe_core::postprocess::{postprocess_chain_traced, ChainTrace};
use dermpipe_core::{Attribute, BinaryMask, ClassDistribution, DiseaseClass, RgbImage};

use crate::files::{create_dir, list_stems, pair_stems, require_exists};
use crate::report::{Cell, Report, Table};
use crate::settings::Settings;
use crate::Failure;

fn at(stem: &str, e: dermpipe_core::Error) -> Failure {
    Failure::Data(format!("{stem}: {e}"))
}

/// Runs `f` over every item and fails with the first error in item order.
fn try_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>, Failure>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, Failure> + Sync + Send,
{
    exec::map(items, f).into_iter().collect()
}

pub fn eval_seg(pred: &Path, gt: &Path) -> Result<Report, Failure> {
    let pairs = pair_stems(
        list_stems(pred, &["png"])?,
        &list_stems(gt, &["png"])?,
        "predictions",
        "ground truth",
    )?;
    let scores = try_map(&pairs, |(stem, p, g)| {
        let p = load_mask_png(p).map_err(|e| at(stem, e))?;
        let g = load_mask_png(g).map_err(|e| at(stem, e))?;
        let j = jaccard(&p, &g).map_err(|e| at(stem, e))?;
        SegScore::new(j).map_err(|e| at(stem, e))
    })?;
    let mut table = Table::new(["image", "raw_jaccard", "thresholded"]);
    for ((stem, _, _), s) in pairs.iter().zip(&scores) {
        table.push(vec![stem.as_str().into(), s.raw_jaccard.into(), s.thresholded.into()]);
    }
    let raw: Vec<f64> = scores.iter().map(|s| s.raw_jaccard).collect();
    let thr: Vec<f64> = scores.iter().map(|s| s.thresholded).collect();
    table.push(vec![
        "mean".into(),
        compensated_mean(&raw).into(),
        compensated_mean(&thr).into(),
    ]);
    let mut report = Report::default();
    report.add(table);
    Ok(report)
}

pub fn eval_attr(pred: &Path, gt: &Path, settings: &Settings) -> Result<Report, Failure> {
    let pairs = pair_stems(
        list_stems(pred, &["pmap"])?,
        &list_stems(gt, &["pmap"])?,
        "predictions",
        "ground truth",
    )?;
    let scores = try_map(&pairs, |(stem, p, g)| {
        let p = load_probmap(p).map_err(|e| at(stem, e))?;
        let g = load_probmap(g).map_err(|e| at(stem, e))?;
        attribute_scores(&p, &g, settings.attr_threshold).map_err(|e| at(stem, e))
    })?;
    let mut columns = vec!["image"];
    columns.extend(Attribute::ALL.iter().map(|a| a.name()));
    columns.push("mean");
    let mut table = Table::new(columns);
    for ((stem, _, _), s) in pairs.iter().zip(&scores) {
        let mut row: Vec<Cell> = vec![stem.as_str().into()];
        row.extend(s.per_attribute.iter().map(|&v| Cell::from(v)));
        row.push(s.mean.into());
        table.push(row);
    }
    let mut summary: Vec<Cell> = vec!["mean".into()];
    for a in Attribute::ALL {
        let column: Vec<f64> = scores.iter().map(|s| s.get(a)).collect();
        summary.push(compensated_mean(&column).into());
    }
    let all: Vec<f64> = scores.iter().flat_map(|s| s.per_attribute).collect();
    summary.push(compensated_mean(&all).into());
    table.push(summary);
    let mut report = Report::default();
    report.add(table);
    Ok(report)
}

pub fn eval_cls(pred: &Path, gt: &Path) -> Result<Report, Failure> {
    require_exists(pred, "prediction table")?;
    require_exists(gt, "ground-truth table")?;
    let pred = load_class_table(pred)?;
    let gt = load_class_table(gt)?;
    let cm = confusion_from_csv(&pred, &gt)?;
    let accuracy = balanced_accuracy(&cm)?;
    let recall = per_class_recall(&cm);
    let mut report = Report::default();
    let mut head = Table::new(["metric", "value"]);
    head.push(vec!["balanced_accuracy".into(), accuracy.into()]);
    head.push(vec!["images".into(), cm.total().into()]);
    report.add(head);
    let mut columns = vec!["truth"];
    columns.extend(DiseaseClass::ALL.iter().map(|c| c.code()));
    columns.push("recall");
    let mut matrix = Table::new(columns);
    for truth in DiseaseClass::ALL {
        let mut row: Vec<Cell> = vec![truth.code().into()];
        row.extend(DiseaseClass::ALL.iter().map(|&p| Cell::from(cm.get(truth, p))));
        row.push(recall[truth.index()].into());
        matrix.push(row);
    }
    report.add(matrix);
    Ok(report)
}

pub struct PostprocessArgs<'a> {
    pub prob: &'a Path,
    pub image: &'a Path,
    pub out: &'a Path,
    pub debug_dir: Option<&'a Path>,
}

pub fn postprocess(args: &PostprocessArgs, settings: &Settings) -> Result<Report, Failure> {
    require_exists(args.prob, "probability input")?;
    require_exists(args.image, "image input")?;
    let jobs: Vec<(String, PathBuf, PathBuf, PathBuf)> = if args.prob.is_dir() {
        if !args.image.is_dir() {
            return Err(Failure::Usage(
                "--prob is a directory, so --image must be one too".into(),
            ));
        }
        create_dir(args.out)?;
        pair_stems(
            list_stems(args.prob, &["png", "pmap"])?,
            &list_stems(args.image, &["png"])?,
            "probability maps",
            "images",
        )?
        .into_iter()
        .map(|(stem, p, i)| {
            let out = args.out.join(format!("{stem}.png"));
            (stem, p, i, out)
        })
        .collect()
    } else {
        if args.image.is_dir() || args.out.is_dir() {
            return Err(Failure::Usage(
                "--prob is a file, so --image and --out must be files too".into(),
            ));
        }
        let stem = stem_of(args.prob);
        vec![(stem, args.prob.into(), args.image.into(), args.out.into())]
    };
    if let Some(dir) = args.debug_dir {
        create_dir(dir)?;
    }
    let rows = try_map(&jobs, |(stem, p, i, out)| {
        let prob = load_probmap(p).map_err(|e| at(stem, e))?;
        let image = load_rgb_png(i).map_err(|e| at(stem, e))?;
        let trace: ChainTrace =
            postprocess_chain_traced(&image, &prob, &settings.chain).map_err(|e| at(stem, e))?;
        if let Some(dir) = args.debug_dir {
            trace.dump(dir, stem).map_err(|e| at(stem, e))?;
        }
        save_mask_png(&trace.mask, out).map_err(|e| at(stem, e))?;
        Ok(vec![
            Cell::from(stem.as_str()),
            trace.mask.count_ones().into(),
            trace.regions.is_some().into(),
        ])
    })?;
    let mut table = Table::new(["image", "lesion_pixels", "watershed"]);
    rows.into_iter().for_each(|r| table.push(r));
    let mut report = Report::default();
    report.add(table);
    Ok(report)
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image")
        .to_string()
}

pub fn augment_plan(
    labels: &Path,
    out: &Path,
    classes: Option<&[DiseaseClass]>,
    settings: &Settings,
) -> Result<Report, Failure> {
    require_exists(labels, "label table")?;
    let table = load_class_table(labels)?;
    let mut by_image = BTreeMap::new();
    for (image, row) in table.rows() {
        let dist = ClassDistribution::new(*row).map_err(|e| at(image, e))?;
        by_image.insert(image.clone(), dist.argmax());
    }
    let classes: Vec<DiseaseClass> = match classes {
        Some(c) => c.to_vec(),
        None => DiseaseClass::ALL.to_vec(),
    };
    let plan = balance_plan(&by_image, &classes, settings.target_per_class, &settings.augment)?;
    plan.save(out)?;
    let mut t = Table::new(["class", "source_images", "entries"]);
    let wanted: BTreeSet<DiseaseClass> = classes.iter().copied().collect();
    for class in wanted {
        let sources = by_image.values().filter(|&&c| c == class).count();
        t.push(vec![class.code().into(), sources.into(), plan.count(class).into()]);
    }
    let mut report = Report::default();
    report.add(t);
    Ok(report)
}

pub struct AugmentRunArgs<'a> {
    pub plan: &'a Path,
    pub images: &'a Path,
    pub masks: Option<&'a Path>,
    pub out: &'a Path,
}

pub fn augment_run(args: &AugmentRunArgs, settings: &Settings) -> Result<Report, Failure> {
    require_exists(args.plan, "plan")?;
    require_exists(args.images, "image directory")?;
    if let Some(m) = args.masks {
        require_exists(m, "mask directory")?;
    }
    let spec = &settings.augment;
    let plan = SamplePlan::load(args.plan, spec)?;
    if plan.is_empty() {
        return Err(Failure::Data(format!("plan {} has no entries", args.plan.display())));
    }
    create_dir(args.out)?;
    let names: Vec<String> = plan
        .entries()
        .iter()
        .map(|e| e.image.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let sources: Vec<(RgbImage, Option<BinaryMask>)> = try_map(&names, |name| {
        let image = load_rgb_png(args.images.join(format!("{name}.png"))).map_err(|e| at(name, e))?;
        let mask = match args.masks {
            Some(dir) => Some(load_mask_png(dir.join(format!("{name}.png"))).map_err(|e| at(name, e))?),
            None => None,
        };
        Ok((image, mask))
    })?;
    let sources: BTreeMap<&str, &(RgbImage, Option<BinaryMask>)> =
        names.iter().map(String::as_str).zip(&sources).collect();
    let rows = try_map(plan.entries(), |entry| {
        let (image, mask) = sources[entry.image.as_str()];
        let name = format!("{}_{}", entry.image, entry.entry_index);
        let (img, msk) = apply_params(image, mask.as_ref(), &entry.params, spec)
            .map_err(|e| at(&name, e))?;
        save_rgb_png(&img, args.out.join(format!("{name}.png"))).map_err(|e| at(&name, e))?;
        if let Some(m) = msk {
            save_mask_png(&m, args.out.join(format!("{name}_mask.png"))).map_err(|e| at(&name, e))?;
        }
        Ok(vec![
            Cell::from(name),
            entry.image.as_str().into(),
            entry.class.code().into(),
            entry.entry_index.into(),
            entry.params.flip_h.into(),
            entry.params.flip_v.into(),
            entry.params.scale.into(),
        ])
    })?;
    let mut table = Table::new([
        "output",
        "image",
        "class",
        "entry_index",
        "flip_h",
        "flip_v",
        "scale",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    let mut report = Report::default();
    report.add(table);
    Ok(report)
}

pub fn color_constancy(input: &Path, output: &Path, settings: &Settings) -> Result<Report, Failure> {
    require_exists(input, "input")?;
    let jobs: Vec<(String, PathBuf, PathBuf)> = if input.is_dir() {
        create_dir(output)?;
        list_stems(input, &["png"])?
            .into_iter()
            .map(|(stem, path)| {
                let out = output.join(format!("{stem}.png"));
                (stem, path, out)
            })
            .collect()
    } else {
        if output.is_dir() {
            return Err(Failure::Usage(
                "input is a file, so the output must be a file too".into(),
            ));
        }
        vec![(stem_of(input), input.into(), output.into())]
    };
    let rows = try_map(&jobs, |(stem, src, dst)| {
        let image = load_rgb_png(src).map_err(|e| at(stem, e))?;
        let illum = estimate_illuminant(&image, settings.minkowski_p).map_err(|e| at(stem, e))?;
        save_rgb_png(&correct(&image, &illum), dst).map_err(|e| at(stem, e))?;
        let [r, g, b] = illum.rgb();
        Ok(vec![Cell::from(stem.as_str()), r.into(), g.into(), b.into()])
    })?;
    let mut table = Table::new(["image", "e_r", "e_g", "e_b"]);
    rows.into_iter().for_each(|r| table.push(r));
    let mut report = Report::default();
    report.add(table);
    Ok(report)
}

pub fn fuse_hierarchy(
    levels: [&Path; 3],
    out: &Path,
    settings: &Settings,
) -> Result<Report, Failure> {
    for (k, path) in levels.iter().enumerate() {
        require_exists(path, &format!("level {} table", k + 1))?;
    }
    let tables = LevelTables::load(levels[0], levels[1], levels[2])?;
    let fused = fuse_tables(&tables, settings.fusion)?;
    fused.save(out)?;
    let mut table = Table::new(["image", "predicted", "probability"]);
    for (image, row) in fused.rows() {
        let dist = ClassDistribution::new(*row).map_err(|e| at(image, e))?;
        let class = dist.argmax();
        table.push(vec![image.as_str().into(), class.code().into(), dist.prob(class).into()]);
    }
    let mut report = Report::default();
    report.add(table);
    Ok(report)
}
