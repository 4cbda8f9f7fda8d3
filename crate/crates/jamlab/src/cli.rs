//! Command-line front end: dataset generation, training, evaluation,
//! gate reports, and the two analysis checks behind one `jamlab` binary.
//!
//! Every command is a pure function of (config, flags, data): a TOML run
//! config supplies defaults, command-line flags override it, and all
//! randomness flows from explicit seeds. Checkpoints produced here use
//! f32 weights. Worker count (`--jobs`, env `JAMLAB_JOBS`) never changes
//! any output, only wall time.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    self, fnv1a, generate_dataset, load_dataset, DatasetManifest, GenerationConfig, MANIFEST_NAME,
};
use crate::model::{load_checkpoint, save_checkpoint, FusionMode, GfNet, ModelConfig};
use crate::prng::Stream;
use crate::signal::{class_by_name, CLASS_TABLE, N_CLASSES};
use crate::theory::{
    ambiguity_csv, ambiguity_demo, ambiguity_verdict, reliability_csv, reliability_curve,
    reliability_verdict,
};
use crate::train::{
    evaluate, gate_buckets_csv, gate_report, train, FeatureCache, TrainOptions,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "jamlab", version, about = "Desk-scale GNSS interference classification lab")]
pub struct Cli {
    /// Worker threads for generation and evaluation (fallback: env
    /// JAMLAB_JOBS, then all cores). Outputs never depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a dataset of calibrated composite snapshots
    Generate(GenerateArgs),
    /// Train the gated-fusion classifier on a dataset directory
    Train(TrainArgs),
    /// Evaluate a checkpoint: accuracy, per-JSR buckets, family F1
    Eval(EvalArgs),
    /// Report the per-JSR distribution of both fusion gates
    ReportGates(ReportGatesArgs),
    /// Run an analysis check (spectrogram ambiguity, modality reliability)
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// TOML run config supplying defaults for everything below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated class names or numeric ids (default: all 21)
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Lowest JSR in dB (grid steps by --jsr-step up to --jsr-max)
    #[arg(long)]
    pub jsr_min: Option<f64>,
    /// Highest JSR in dB
    #[arg(long)]
    pub jsr_max: Option<f64>,
    /// JSR grid step in dB
    #[arg(long)]
    pub jsr_step: Option<f64>,
    /// Training snapshots per (class, JSR) stratum
    #[arg(long)]
    pub per_class: Option<u32>,
    /// Held-out test snapshots per stratum
    #[arg(long)]
    pub test_per_class: Option<u32>,
    /// First snapshot index; shifting it yields a disjoint dataset
    #[arg(long)]
    pub seed_base: Option<u32>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite an existing dataset directory
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML run config supplying defaults for everything below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory (default: config dataset.dir)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Checkpoint output path; loss/val CSVs are written beside it
    #[arg(long, default_value = "model.ckpt")]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Peak learning rate of the warmup+cosine schedule
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Fraction of the training pool held out for validation
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// learned | iq_only | stft_only
    #[arg(long)]
    pub fusion_mode: Option<String>,
    /// Suppress per-epoch progress lines
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint to evaluate
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Dataset directory
    #[arg(long)]
    pub data: PathBuf,
    /// Record subset: test | train | all
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Also print the per-class accuracy table for every JSR bucket
    #[arg(long)]
    pub bucket_by_jsr: bool,
    /// Directory for eval_accuracy.csv and eval_gates.csv
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Override the checkpoint's fusion mode
    #[arg(long)]
    pub fusion_mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportGatesArgs {
    /// Checkpoint to read the gate heads from
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Dataset directory
    #[arg(long)]
    pub data: PathBuf,
    /// Record subset: test | train | all
    #[arg(long, default_value = "test")]
    pub split: String,
    /// CSV output path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(subcommand)]
    pub which: CheckKind,
}

#[derive(Debug, Subcommand)]
pub enum CheckKind {
    /// Averaged spectrograms of bandwidth-matched QAM vs Gaussian noise
    /// nearly coincide while IQ fourth moments separate
    Ambiguity {
        /// JSR of the composite snapshots, dB
        #[arg(long, default_value_t = 40.0)]
        jsr: f64,
        /// Snapshots per batch
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// CSV output path (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Modality discriminability across JSR and the optimal fusion weight
    Reliability {
        /// JSR levels to evaluate, dB (one CSV row each)
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
        jsr: Vec<f64>,
        /// The class pair to discriminate (two names or ids)
        #[arg(long, value_delimiter = ',', default_value = "64QAM,BLGNI")]
        classes: Vec<String>,
        /// Snapshots per class per JSR (minimum 50)
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// CSV output path (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Run configuration file. Every field has a default, so `{}` and a
/// missing file both mean "desk defaults"; unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    /// Full model architecture override. When absent, the desk-scale
    /// default is used with its class count taken from the dataset
    /// manifest; when present, its class count must match the manifest.
    pub model: Option<ModelConfig>,
    pub train: TrainSection,
}

/// Dataset location and generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// Dataset directory.
    pub dir: PathBuf,
    /// Class names or numeric ids; empty means all 21.
    pub classes: Vec<String>,
    /// JSR grid: `jsr_min..=jsr_max` stepping by `jsr_step` dB.
    pub jsr_min: f64,
    pub jsr_max: f64,
    pub jsr_step: f64,
    /// Training snapshots per (class, JSR) stratum.
    pub per_class: u32,
    /// Held-out test snapshots per stratum.
    pub test_per_class: u32,
    /// First snapshot index.
    pub seed_base: u32,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            dir: PathBuf::from("dataset"),
            classes: Vec::new(),
            jsr_min: 10.0,
            jsr_max: 50.0,
            jsr_step: 2.0,
            per_class: 200,
            test_per_class: 0,
            seed_base: 0,
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Peak learning rate of the warmup+cosine schedule.
    pub base_lr: f64,
    pub weight_decay: f64,
    pub warmup_epochs: u64,
    /// Fraction of the training pool held out for validation.
    pub val_fraction: f64,
    /// learned | iq_only | stft_only.
    pub fusion_mode: String,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: 30,
            batch_size: 64,
            seed: 0,
            base_lr: 1e-3,
            weight_decay: 1e-4,
            warmup_epochs: 1,
            val_fraction: 0.1,
            fusion_mode: "learned".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn load_or_default(path: &Option<PathBuf>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(RunConfig::default()),
        }
    }
}

/// Resolves a class list (names or numeric ids, case-insensitive) to
/// class ids; an empty list means every class.
pub fn parse_class_list(items: &[String]) -> Result<Vec<u8>> {
    if items.is_empty() {
        return Ok((0..N_CLASSES as u8).collect());
    }
    items
        .iter()
        .map(|s| {
            let s = s.trim();
            if let Ok(id) = s.parse::<u8>() {
                if (id as usize) < N_CLASSES {
                    return Ok(id);
                }
                return Err(Error::Config(format!("class id {id} out of range")));
            }
            class_by_name(s).map(|c| c.id).ok_or_else(|| {
                Error::Config(format!(
                    "unknown class {s:?}; names are {}",
                    CLASS_TABLE.map(|c| c.name).join(", ")
                ))
            })
        })
        .collect()
}

/// Builds the JSR grid `min..=max` stepping by `step` dB.
pub fn build_jsr_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 {
        return Err(Error::Config(format!("jsr step {step} must be positive")));
    }
    if min > max {
        return Err(Error::Config(format!("jsr range [{min}, {max}] is empty")));
    }
    let mut grid = Vec::new();
    let mut k = 0u32;
    loop {
        let v = min + step * k as f64;
        if v > max + 1e-9 {
            break;
        }
        grid.push(v);
        k += 1;
    }
    Ok(grid)
}

fn thread_pool(jobs: Option<usize>) -> Result<()> {
    let n = match jobs {
        Some(n) => Some(n),
        None => match std::env::var("JAMLAB_JOBS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                Error::Config(format!("JAMLAB_JOBS={v:?} is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    thread_pool(cli.jobs)?;
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::ReportGates(args) => cmd_report_gates(args),
        Command::Check(args) => match args.which {
            CheckKind::Ambiguity { jsr, n, out } => cmd_check_ambiguity(jsr, n, out),
            CheckKind::Reliability { jsr, classes, n, out } => {
                cmd_check_reliability(&jsr, &classes, n, out)
            }
        },
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let cfg = RunConfig::load_or_default(&args.config)?;
    let ds = &cfg.dataset;
    let classes = parse_class_list(args.classes.as_deref().unwrap_or(&ds.classes))?;
    let grid = build_jsr_grid(
        args.jsr_min.unwrap_or(ds.jsr_min),
        args.jsr_max.unwrap_or(ds.jsr_max),
        args.jsr_step.unwrap_or(ds.jsr_step),
    )?;
    let gen = GenerationConfig {
        classes,
        jsr_levels_db: grid,
        train_per_stratum: args.per_class.unwrap_or(ds.per_class),
        test_per_stratum: args.test_per_class.unwrap_or(ds.test_per_class),
        sample_base: args.seed_base.unwrap_or(ds.seed_base),
    };
    let out = args.out.unwrap_or_else(|| ds.dir.clone());

    if out.join(MANIFEST_NAME).exists() && !args.force {
        return Err(Error::Config(format!(
            "{} already holds a dataset; pass --force to overwrite",
            out.display()
        )));
    }

    let manifest = generate_dataset(&gen, &out)?;
    print_strata(&manifest);
    let per = gen.train_per_stratum + gen.test_per_stratum;
    println!(
        "wrote {} records ({} strata x {} each) to {}  [hash {:016x}]",
        manifest.strata.len() as u64 * per as u64,
        manifest.strata.len(),
        per,
        out.display(),
        manifest.config_hash,
    );
    Ok(())
}

fn print_strata(manifest: &DatasetManifest) {
    for &(id, ref name) in &manifest.classes {
        let strata: Vec<&dataset::StratumMeta> =
            manifest.strata.iter().filter(|s| s.class_id == id).collect();
        let train: u32 = strata.iter().map(|s| s.n_train).sum();
        let test: u32 = strata.iter().map(|s| s.n_test).sum();
        println!(
            "  {name:<18} {} strata, {train} train + {test} test snapshots",
            strata.len()
        );
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = RunConfig::load_or_default(&args.config)?;
    let data_dir = args.data.unwrap_or_else(|| cfg.dataset.dir.clone());
    let tr = &cfg.train;
    let seed = args.seed.unwrap_or(tr.seed);
    let val_fraction = args.val_fraction.unwrap_or(tr.val_fraction);
    let mode = FusionMode::parse(args.fusion_mode.as_deref().unwrap_or(&tr.fusion_mode))?;

    let ds = load_dataset(&data_dir)?;
    eprintln!(
        "caching features for {} records ({} classes, {} JSR levels)...",
        ds.records.len(),
        ds.manifest.classes.len(),
        ds.manifest.jsr_levels_db.len()
    );
    let cache = FeatureCache::build(&ds)?;
    let split = dataset::split(&ds, val_fraction, seed)?;

    let mc = match cfg.model {
        Some(mc) => {
            if mc.n_classes != cache.n_classes() {
                return Err(Error::Config(format!(
                    "config pins {} classes but the dataset manifest holds {}",
                    mc.n_classes,
                    cache.n_classes()
                )));
            }
            mc
        }
        None => ModelConfig { n_classes: cache.n_classes(), ..ModelConfig::default() },
    };
    let mut model = GfNet::<f32>::new(mc, &mut Stream::from_raw(seed ^ fnv1a(b"init")))?;

    let opts = TrainOptions {
        epochs: args.epochs.unwrap_or(tr.epochs),
        batch_size: args.batch_size.unwrap_or(tr.batch_size),
        seed,
        base_lr: args.lr.unwrap_or(tr.base_lr),
        weight_decay: args.weight_decay.unwrap_or(tr.weight_decay),
        warmup_epochs: tr.warmup_epochs,
        mode,
        verbose: !args.quiet,
    };
    let outcome = train(&mut model, &cache, &split.train, &split.val, &opts)?;

    save_checkpoint(&args.out, &mut model, &outcome.normalizer, &outcome.state)?;
    let loss_path = sibling(&args.out, "_loss.csv");
    let mut loss_csv = String::from("step,loss\n");
    for (i, l) in outcome.loss_history.iter().enumerate() {
        loss_csv.push_str(&format!("{i},{l:.6}\n"));
    }
    std::fs::write(&loss_path, loss_csv)?;
    let val_path = sibling(&args.out, "_val.csv");
    let mut val_csv = String::from("epoch,val_accuracy\n");
    for (e, a) in outcome.val_accuracy.iter().enumerate() {
        val_csv.push_str(&format!("{e},{a:.6}\n"));
    }
    std::fs::write(&val_path, val_csv)?;

    println!(
        "trained {} steps ({} mode); best validation accuracy {:.4} at epoch {}",
        outcome.state.step,
        outcome.state.fusion_mode,
        outcome.state.best_val_accuracy,
        outcome.best_epoch,
    );
    println!(
        "checkpoint {}; curves {} and {}",
        args.out.display(),
        loss_path.display(),
        val_path.display()
    );
    Ok(())
}

fn split_rows(ds: &dataset::Dataset, which: &str) -> Result<Vec<usize>> {
    match which {
        "test" => Ok(ds.test_indices()),
        "train" => Ok(ds.train_pool()),
        "all" => Ok((0..ds.records.len()).collect()),
        other => Err(Error::Config(format!("unknown split {other:?} (test|train|all)"))),
    }
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let (model, normalizer, state) = load_checkpoint::<f32>(&args.ckpt)?;
    let mode = match &args.fusion_mode {
        Some(m) => FusionMode::parse(m)?,
        None => FusionMode::parse(&state.fusion_mode)?,
    };
    let ds = load_dataset(&args.data)?;
    let cache = FeatureCache::build(&ds)?;
    let rows = split_rows(&ds, &args.split)?;
    let report = evaluate(&model, &cache, &rows, &normalizer, mode)?;

    print!("{}", report.summary_text());
    if args.bucket_by_jsr {
        for b in &report.buckets {
            println!("{} dB per-class accuracy:", b.jsr_db);
            for (label, name) in report.class_names.iter().enumerate() {
                match b.class_accuracy(label) {
                    Some(acc) => println!("  {name:<18} {acc:.4}  ({} samples)", b.per_class[label].0),
                    None => println!("  {name:<18} (no samples)"),
                }
            }
        }
    }
    if let Some(dir) = args.out_dir {
        std::fs::create_dir_all(&dir)?;
        let acc_path = dir.join("eval_accuracy.csv");
        std::fs::write(&acc_path, report.accuracy_csv())?;
        let gates_path = dir.join("eval_gates.csv");
        std::fs::write(&gates_path, report.gates_csv())?;
        println!("wrote {} and {}", acc_path.display(), gates_path.display());
    }
    Ok(())
}

fn cmd_report_gates(args: ReportGatesArgs) -> Result<()> {
    let (model, normalizer, _) = load_checkpoint::<f32>(&args.ckpt)?;
    let ds = load_dataset(&args.data)?;
    let cache = FeatureCache::build(&ds)?;
    let rows = split_rows(&ds, &args.split)?;
    let buckets = gate_report(&model, &cache, &rows, &normalizer)?;

    for b in &buckets {
        eprintln!(
            "{:>5} dB: n {:>5}  g mean {:.3} (std {:.3})  s mean {:.3} (std {:.3})",
            b.jsr_db, b.n, b.g.mean, b.g.std, b.s.mean, b.s.std
        );
    }
    let csv = gate_buckets_csv(&buckets);
    match args.out {
        Some(p) => {
            std::fs::write(&p, csv)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_check_ambiguity(jsr: f64, n: usize, out: Option<PathBuf>) -> Result<()> {
    let result = ambiguity_demo(jsr, n)?;
    eprint!("{}", ambiguity_verdict(&result));
    let csv = ambiguity_csv(std::slice::from_ref(&result));
    match out {
        Some(p) => {
            std::fs::write(&p, csv)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_check_reliability(jsr: &[f64], classes: &[String], n: usize, out: Option<PathBuf>) -> Result<()> {
    let ids = parse_class_list(classes)?;
    if ids.len() != 2 {
        return Err(Error::Config(format!(
            "reliability needs exactly two classes, got {}",
            ids.len()
        )));
    }
    let points = reliability_curve(jsr, (ids[0], ids[1]), n)?;
    eprint!("{}", reliability_verdict(&points));
    let csv = reliability_csv(&points);
    match out {
        Some(p) => {
            std::fs::write(&p, csv)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn class_list_accepts_names_and_ids() {
        assert_eq!(parse_class_list(&[]).unwrap().len(), N_CLASSES);
        let ids = parse_class_list(&["cwi".into(), "64QAM".into(), "20".into()]).unwrap();
        assert_eq!(ids, vec![19, 5, 20]);
        assert!(parse_class_list(&["nonsense".into()]).is_err());
        assert!(parse_class_list(&["200".into()]).is_err());
    }

    #[test]
    fn jsr_grid_shapes() {
        let full = build_jsr_grid(10.0, 50.0, 2.0).unwrap();
        assert_eq!(full.len(), 21);
        assert_eq!(full[0], 10.0);
        assert_eq!(full[20], 50.0);
        assert_eq!(build_jsr_grid(40.0, 40.0, 2.0).unwrap(), vec![40.0]);
        assert!(build_jsr_grid(10.0, 50.0, 0.0).is_err());
        assert!(build_jsr_grid(50.0, 10.0, 2.0).is_err());
    }

    #[test]
    fn run_config_defaults_and_unknown_keys() {
        let empty: RunConfig = toml::from_str("").unwrap();
        assert_eq!(empty, RunConfig::default());
        assert_eq!(empty.train.epochs, 30);
        assert_eq!(empty.train.batch_size, 64);
        assert_eq!(empty.dataset.jsr_step, 2.0);
        assert!(empty.model.is_none());

        let partial: RunConfig = toml::from_str("[train]\nepochs = 5\n").unwrap();
        assert_eq!(partial.train.epochs, 5);
        assert_eq!(partial.train.batch_size, 64);

        assert!(toml::from_str::<RunConfig>("unknown_key = 1\n").is_err());
        assert!(toml::from_str::<RunConfig>("[train]\nnot_a_field = 1\n").is_err());
        assert!(toml::from_str::<RunConfig>("[dataset]\njsr_minimum = 1\n").is_err());
    }

    #[test]
    fn run_config_roundtrips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.train.epochs = 7;
        cfg.dataset.classes = vec!["CWI".into(), "FH".into()];
        cfg.model = Some(ModelConfig::default());
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn flag_parsing_matches_expectations() {
        let cli = Cli::try_parse_from([
            "jamlab", "generate", "--per-class", "1", "--jsr-min", "40", "--jsr-max", "40",
        ])
        .unwrap();
        match cli.command {
            Command::Generate(g) => {
                assert_eq!(g.per_class, Some(1));
                assert_eq!(g.jsr_min, Some(40.0));
                assert!(!g.force);
            }
            _ => panic!("wrong subcommand"),
        }
        let cli = Cli::try_parse_from([
            "jamlab", "check", "reliability", "--jsr", "10,50", "--classes", "64QAM,BLGNI",
        ])
        .unwrap();
        match cli.command {
            Command::Check(c) => match c.which {
                CheckKind::Reliability { jsr, classes, n, .. } => {
                    assert_eq!(jsr, vec![10.0, 50.0]);
                    assert_eq!(classes, vec!["64QAM".to_string(), "BLGNI".to_string()]);
                    assert_eq!(n, 100);
                }
                _ => panic!("wrong check"),
            },
            _ => panic!("wrong subcommand"),
        }
    }
}
