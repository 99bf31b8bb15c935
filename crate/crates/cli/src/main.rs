use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use endofuse_core::dataset::{load_manifest, synthesize_dataset, Dataset, FeatureTable, SynthSpec};
use endofuse_core::metrics::{evaluate, MetricsReport};
use endofuse_core::radiomics::DEFAULT_GRAY_LEVELS;
use endofuse_core::training::{
    fit, normalize_dataset, stratified_split, write_epoch_log, Checkpoint, EpochLog,
};
use serde_json::json;

mod config;
mod extract;
mod plot;

#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(
    name = "endofuse",
    version,
    about = "Radiomics + DenseNet fusion classifier pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Split {
    /// The validation split recorded in the checkpoint.
    Val,
    /// Every manifest entry.
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic texture dataset (PNG images and manifest.csv).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 64)]
        side: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract central and peripheral radiomics features into one CSV.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Central disk radius as a fraction of half the shorter side.
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        /// Gray levels for texture matrices.
        #[arg(long, default_value_t = DEFAULT_GRAY_LEVELS)]
        bins: usize,
        /// Images are resized to side x side before extraction.
        #[arg(long, default_value_t = 64)]
        side: usize,
    },
    /// Train the fusion model.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Flat `key = value` file of model and training settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `seed` from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from a checkpoint written by an earlier run; optimizer moments restart from zero.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint and write metrics.json and roc.csv.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Split::Val)]
        split: Split,
        #[arg(long, default_value_t = 64)]
        batch: usize,
    },
    /// Render training curves and ROC curves as SVG.
    Plot {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        roc: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Writes through a temporary sibling so a file is never left half written.
pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".partial");
    let tmp = path.with_file_name(name);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn read_table(path: &Path) -> Result<FeatureTable> {
    FeatureTable::read_csv(path).with_context(|| format!("reading features {}", path.display()))
}

fn epoch_line(l: &EpochLog, total: usize) -> String {
    format!(
        "epoch {:>3}/{total}  train_loss {:.4}  train_acc {:.4}  val_loss {:.4}  val_acc {:.4}",
        l.epoch, l.train_loss, l.train_acc, l.val_loss, l.val_acc
    )
}

fn cmd_train(
    manifest: &Path,
    features: &Path,
    config: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    resume: Option<&Path>,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => config::load(p)?,
        None => config::RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    let resume = resume
        .map(|p| Checkpoint::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;
    if let Some(c) = &resume {
        cfg.model = c.params.config().clone();
        cfg.num_classes_set = true;
    }
    let classes = cfg.num_classes_set.then_some(cfg.model.num_classes);
    let manifest = load_manifest(manifest, classes)
        .with_context(|| format!("reading manifest {}", manifest.display()))?;
    if !cfg.num_classes_set {
        cfg.model.num_classes = manifest.num_classes();
        println!("num_classes = {} (from manifest)", cfg.model.num_classes);
    }
    cfg.model.validate()?;
    cfg.train.validate()?;
    for w in cfg.model.warnings() {
        eprintln!("warning: {w}");
    }
    let table = read_table(features)?;
    let data = Dataset::load(&manifest, &table, cfg.model.input_side)
        .context("aligning manifest with feature table")?;
    create_dir(out)?;

    let log_path = out.join("train_log.csv");
    let mut logs: Vec<EpochLog> = Vec::new();
    let mut log_error = None;
    let total = cfg.train.epochs;
    let result = fit(&cfg.model, &cfg.train, &data, resume, |l| {
        println!("{}", epoch_line(l, total));
        logs.push(l.clone());
        if let Err(e) = write_epoch_log(&log_path, &logs) {
            log_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_error {
        return Err(e.into());
    }
    write_epoch_log(&log_path, &result.logs)?;
    result.final_checkpoint.save(&out.join("final.ckpt"))?;
    result.best_checkpoint.save(&out.join("best.ckpt"))?;
    println!(
        "best val_acc at epoch {}; wrote final.ckpt, best.ckpt, train_log.csv to {}",
        result.best_checkpoint.epoch,
        out.display()
    );
    Ok(())
}

fn table_row(r: &MetricsReport) -> String {
    format!(
        "ACC {}  Sensitivity {}  F1 {}  Precision {}",
        r.accuracy, r.sensitivity, r.f1, r.precision
    )
}

fn cmd_eval(
    checkpoint: &Path,
    manifest: &Path,
    features: &Path,
    out: &Path,
    split: Split,
    batch: usize,
) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)
        .with_context(|| format!("loading {}", checkpoint.display()))?;
    let model = ckpt.params.config();
    let manifest = load_manifest(manifest, Some(model.num_classes))
        .with_context(|| format!("reading manifest {}", manifest.display()))?;
    let table = read_table(features)?;
    if let Some(missing) = ckpt
        .norm
        .columns
        .iter()
        .find(|c| table.column_index(c).is_none())
    {
        bail!(
            "feature column {missing:?} required by the checkpoint is missing from {}",
            features.display()
        );
    }
    let data = Dataset::load(&manifest, &table, model.input_side)
        .context("aligning manifest with feature table")?;
    let data = match split {
        Split::All => data,
        Split::Val => {
            let (_, val) = stratified_split(data.labels(), ckpt.val_fraction, ckpt.seed)?;
            data.subset(&val)
        }
    };
    let data = normalize_dataset(&data, &ckpt.norm)?;
    let ev = evaluate(&ckpt.params, &data, batch.max(1))?;
    create_dir(out)?;
    let mut doc = serde_json::to_value(&ev.report)?;
    doc["split"] = json!(match split {
        Split::Val => "val",
        Split::All => "all",
    });
    doc["checkpoint_epoch"] = json!(ckpt.epoch);
    write_file(
        &out.join("metrics.json"),
        (serde_json::to_string_pretty(&doc)? + "\n").as_bytes(),
    )?;
    endofuse_core::metrics::write_roc_csv(&out.join("roc.csv"), &ev.curves)?;
    println!("{}", table_row(&ev.report));
    for (c, a) in ev.report.auc.iter().enumerate() {
        match a {
            Some(a) => println!("class {c}: AUC {a:.4}"),
            None => println!("class {c}: AUC undefined (class absent or alone in split)"),
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth {
            out,
            classes,
            per_class,
            side,
            seed,
        } => {
            let manifest = synthesize_dataset(
                SynthSpec {
                    classes,
                    per_class,
                    side,
                    seed,
                },
                &out,
            )?;
            println!(
                "wrote {} images and {}",
                classes * per_class,
                manifest.display()
            );
        }
        Command::Extract {
            manifest,
            out,
            radius,
            bins,
            side,
        } => {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                create_dir(dir)?;
            }
            let t = extract::run(&extract::ExtractArgs {
                manifest: &manifest,
                out: &out,
                radius,
                bins,
                side,
            })?;
            println!(
                "wrote {} rows x {} features to {}",
                t.n_rows(),
                t.n_cols(),
                out.display()
            );
        }
        Command::Train {
            manifest,
            features,
            config,
            out,
            seed,
            resume,
        } => {
            cmd_train(
                &manifest,
                &features,
                config.as_deref(),
                &out,
                seed,
                resume.as_deref(),
            )?;
        }
        Command::Eval {
            checkpoint,
            manifest,
            features,
            out,
            split,
            batch,
        } => {
            cmd_eval(&checkpoint, &manifest, &features, &out, split, batch)?;
        }
        Command::Plot { log, roc, out } => {
            plot::run(&log, &roc, &out)?;
            println!("wrote {} and {}", plot::TRAINING_SVG, plot::ROC_SVG);
        }
    }
    Ok(())
}
