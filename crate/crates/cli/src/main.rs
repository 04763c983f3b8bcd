//! `dermpipe`: batch driver for scoring, mask post-processing,
//! augmentation, color constancy and hierarchical class fusion.

mod commands;
mod files;
mod report;
mod settings;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use dermpipe_core::fusion::FusionMode;
use dermpipe_core::postprocess::Connectivity;
use dermpipe_core::DiseaseClass;

use crate::report::ReportFormat;
use crate::settings::Settings;

/// Exit code 1 for usage problems, 2 for bad or missing data.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl From<dermpipe_core::Error> for Failure {
    fn from(e: dermpipe_core::Error) -> Self {
        match e {
            dermpipe_core::Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "dermpipe", version, about = "Dermoscopy lesion pipeline: scoring, post-processing, augmentation, color constancy and class fusion")]
struct Cli {
    /// key = value settings file; unknown keys are rejected
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Augmentation seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Report format written to stdout
    #[arg(long, global = true, value_enum)]
    report: Option<ReportFormat>,
    /// Omit the timestamped header line of the report
    #[arg(long, global = true)]
    no_banner: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predicted lesion masks against ground truth (paired by file stem)
    EvalSeg {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Score 5-channel attribute maps (.pmap) against ground truth
    EvalAttr {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Prediction binarization threshold
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Balanced multi-class accuracy of a prediction table
    EvalCls {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// CRF refinement, marker watershed and largest-component cleanup
    Postprocess(PostprocessCmd),
    /// Class-balancing plans and deterministic augmentation
    #[command(subcommand)]
    Augment(AugmentCmd),
    /// Shades-of-gray white balancing of a PNG or a directory of PNGs
    ColorConstancy {
        /// Minkowski norm order
        #[arg(long)]
        p: Option<f64>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Fuse three level tables into one 7-class table
    FuseHierarchy {
        #[arg(long)]
        level1: PathBuf,
        #[arg(long)]
        level2: PathBuf,
        #[arg(long)]
        level3: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Argmax routing instead of the soft product
        #[arg(long)]
        hard: bool,
    },
}

#[derive(Args)]
struct PostprocessCmd {
    /// Probability map (16-bit PNG or .pmap) or a directory of them
    #[arg(long)]
    prob: PathBuf,
    /// RGB image or a directory of them
    #[arg(long)]
    image: PathBuf,
    /// Output mask file or directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    no_crf: bool,
    #[arg(long)]
    no_watershed: bool,
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long)]
    w_spatial: Option<f64>,
    #[arg(long)]
    sigma_spatial: Option<f64>,
    #[arg(long)]
    w_bilateral: Option<f64>,
    #[arg(long)]
    sigma_bilateral_xy: Option<f64>,
    #[arg(long)]
    sigma_bilateral_rgb: Option<f64>,
    /// Full-resolution dense inference, no truncation or downsampling
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    fg_threshold: Option<f64>,
    #[arg(long)]
    bg_threshold: Option<f64>,
    /// 4 or 8
    #[arg(long)]
    connectivity: Option<Connectivity>,
    /// Also write every intermediate stage here
    #[arg(long)]
    debug_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AugmentCmd {
    /// Oversample every class to the same count
    Plan {
        /// One-hot ground-truth table (image,MEL,NV,...)
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        target: Option<usize>,
        /// Comma-separated class codes; all seven by default
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<DiseaseClass>>,
    },
    /// Render every plan entry as `{image}_{entry_index}.png`
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        images: PathBuf,
        /// Masks named like the images; written as `{image}_{entry_index}_mask.png`
        #[arg(long)]
        masks: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_jitter: bool,
    },
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::EvalSeg { .. } => "eval-seg",
        Command::EvalAttr { .. } => "eval-attr",
        Command::EvalCls { .. } => "eval-cls",
        Command::Postprocess(_) => "postprocess",
        Command::Augment(AugmentCmd::Plan { .. }) => "augment plan",
        Command::Augment(AugmentCmd::Run { .. }) => "augment run",
        Command::ColorConstancy { .. } => "color-constancy",
        Command::FuseHierarchy { .. } => "fuse-hierarchy",
    }
}

fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let mut s = Settings::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        s.augment.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        s.jobs = jobs;
    }
    if let Some(report) = cli.report {
        s.report = report;
    }
    match &cli.command {
        Command::EvalAttr { threshold, .. } => {
            if let Some(t) = threshold {
                s.attr_threshold = *t;
            }
        }
        Command::Postprocess(p) => {
            let c = &mut s.chain;
            c.use_crf &= !p.no_crf;
            c.use_watershed &= !p.no_watershed;
            c.crf.exact |= p.exact;
            let crf = &mut c.crf;
            let overrides = [
                (p.w_spatial, &mut crf.w_spatial),
                (p.sigma_spatial, &mut crf.sigma_spatial),
                (p.w_bilateral, &mut crf.w_bilateral),
                (p.sigma_bilateral_xy, &mut crf.sigma_bilateral_xy),
                (p.sigma_bilateral_rgb, &mut crf.sigma_bilateral_rgb),
            ];
            for (value, slot) in overrides {
                if let Some(v) = value {
                    *slot = v;
                }
            }
            if let Some(i) = p.iterations {
                crf.iterations = i;
            }
            if let Some(t) = p.fg_threshold {
                c.fg_threshold = t;
            }
            if let Some(t) = p.bg_threshold {
                c.bg_threshold = t;
            }
            if let Some(k) = p.connectivity {
                c.connectivity = k;
            }
        }
        Command::Augment(AugmentCmd::Plan { target, .. }) => {
            if let Some(t) = target {
                s.target_per_class = *t;
            }
        }
        Command::Augment(AugmentCmd::Run { no_jitter, .. }) => {
            s.augment.color_jitter &= !no_jitter;
        }
        Command::ColorConstancy { p, .. } => {
            if let Some(p) = p {
                s.minkowski_p = *p;
            }
        }
        Command::FuseHierarchy { hard, .. } => {
            if *hard {
                s.fusion = FusionMode::Hard;
            }
        }
        _ => {}
    }
    s.validate()?;
    Ok(s)
}

fn dispatch(cli: &Cli, s: &Settings) -> Result<report::Report, Failure> {
    match &cli.command {
        Command::EvalSeg { pred, gt } => commands::eval_seg(pred, gt),
        Command::EvalAttr { pred, gt, .. } => commands::eval_attr(pred, gt, s),
        Command::EvalCls { pred, gt } => commands::eval_cls(pred, gt),
        Command::Postprocess(p) => commands::postprocess(
            &commands::PostprocessArgs {
                prob: &p.prob,
                image: &p.image,
                out: &p.out,
                debug_dir: p.debug_dir.as_deref(),
            },
            s,
        ),
        Command::Augment(AugmentCmd::Plan {
            labels,
            out,
            classes,
            ..
        }) => commands::augment_plan(labels, out, classes.as_deref(), s),
        Command::Augment(AugmentCmd::Run {
            plan,
            images,
            masks,
            out,
            ..
        }) => commands::augment_run(
            &commands::AugmentRunArgs {
                plan,
                images,
                masks: masks.as_deref(),
                out,
            },
            s,
        ),
        Command::ColorConstancy { input, output, .. } => commands::color_constancy(input, output, s),
        Command::FuseHierarchy {
            level1,
            level2,
            level3,
            out,
            ..
        } => commands::fuse_hierarchy([level1, level2, level3], out, s),
    }
}

#[cfg(feature = "parallel")]
fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<R: Send>(_jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    Ok(f())
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let s = settings(cli)?;
    let report = with_jobs(s.jobs, || dispatch(cli, &s))??;
    let banner = (!cli.no_banner).then(|| {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        format!(
            "dermpipe {} {} generated_at_unix={secs}",
            env!("CARGO_PKG_VERSION"),
            command_name(&cli.command)
        )
    });
    Ok(report.render(s.report, banner.as_deref()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
