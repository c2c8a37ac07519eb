//! Command-line front end; all real work lives in the library.

use std::path::PathBuf;
use std::process::exit;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use gapnet::cell::CellKind;
use gapnet::dataset::SplitSpec;
use gapnet::error::{Error, Result};
use gapnet::impute::ImputeKind;
use gapnet::run::{
    collect_checkpoints, run_evaluate, run_generate, run_impute, run_project, run_train,
    SplitChoice, TrainJob,
};
use gapnet::synth::SynthConfig;
use gapnet::train::{RegKind, TrainConfig};

#[derive(Parser)]
#[command(
    name = "gapnet",
    version,
    about = "RNN classifiers for multivariate time series with missing values"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset with informative missingness
    Generate(GenerateArgs),
    /// Train a classifier (split -> standardize -> impute -> optimize)
    Train(TrainArgs),
    /// Evaluate checkpoints on a split; writes report, ROC and PCA CSVs
    Evaluate(EvaluateArgs),
    /// Rewrite a dataset with missing entries filled in
    Impute(ImputeArgs),
    /// Project final hidden states to two principal components
    Project(ProjectArgs),
}

/// Optional JSON config file; flags override its entries.
fn read_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("config file {}: {e}", p.display())))
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Output dataset file (JSON lines)
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of episodes
    #[arg(short = 'n', long)]
    n: Option<usize>,
    #[arg(long)]
    t_len: Option<usize>,
    #[arg(long)]
    vars: Option<usize>,
    /// Probability of the positive class
    #[arg(long)]
    class_balance: Option<f64>,
    #[arg(long)]
    missing_rate: Option<f64>,
    /// Extra missingness on designated variables of positives
    #[arg(long)]
    missing_boost: Option<f64>,
    #[arg(long)]
    signal_shift: Option<f64>,
    #[arg(long)]
    onset_day: Option<usize>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl GenerateArgs {
    fn resolve(&self) -> Result<SynthConfig> {
        let mut cfg: SynthConfig = read_config(&self.config)?;
        if let Some(v) = self.n {
            cfg.n_series = v;
        }
        if let Some(v) = self.t_len {
            cfg.t_len = v;
        }
        if let Some(v) = self.vars {
            cfg.n_vars = v;
        }
        if let Some(v) = self.class_balance {
            cfg.class_balance = v;
        }
        if let Some(v) = self.missing_rate {
            cfg.base_missing_rate = v;
        }
        if let Some(v) = self.missing_boost {
            cfg.informative_missing_boost = v;
        }
        if let Some(v) = self.signal_shift {
            cfg.signal_shift = v;
        }
        if let Some(v) = self.onset_day {
            cfg.onset_day = v;
        }
        if let Some(v) = self.noise_std {
            cfg.noise_std = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

/// File-configurable portion of the training command.
#[derive(Default, Deserialize)]
#[serde(default)]
struct TrainFileConfig {
    cell: Option<CellKind>,
    impute: Option<ImputeKind>,
    restarts: Option<usize>,
    standardize: Option<bool>,
    hidden: Option<usize>,
    dropout: Option<f64>,
    lambda: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    reg: Option<RegKind>,
    validation_fraction: Option<f64>,
    train_fraction: Option<f64>,
    split_seed: Option<u64>,
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset file (JSON lines)
    data: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cell: Option<CellKind>,
    /// Imputation method (required for ernn/gru, forbidden for grud)
    #[arg(long)]
    impute: Option<ImputeKind>,
    /// Independent restarts with fresh initializations
    #[arg(long)]
    restarts: Option<usize>,
    /// Disable z-scoring by training-split statistics
    #[arg(long)]
    no_standardize: bool,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Weight-penalty form
    #[arg(long)]
    reg: Option<RegKind>,
    /// Fraction of all episodes held out for validation
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Fraction of the remainder used for training
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl TrainArgs {
    fn resolve(&self) -> Result<TrainJob> {
        let file: TrainFileConfig = read_config(&self.config)?;
        let cell = self
            .cell
            .or(file.cell)
            .ok_or_else(|| Error::Config("--cell is required (ernn, gru, or grud)".into()))?;
        let defaults = TrainConfig::default();
        let split_defaults = SplitSpec::default();
        let config = TrainConfig {
            hidden_size: self.hidden.or(file.hidden).unwrap_or(defaults.hidden_size),
            dropout_rate: self.dropout.or(file.dropout).unwrap_or(defaults.dropout_rate),
            lambda: self.lambda.or(file.lambda).unwrap_or(defaults.lambda),
            batch_size: self.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
            epochs: self.epochs.or(file.epochs).unwrap_or(defaults.epochs),
            learning_rate: self
                .learning_rate
                .or(file.learning_rate)
                .unwrap_or(defaults.learning_rate),
            seed: self.seed.or(file.seed).unwrap_or(defaults.seed),
            reg: self.reg.or(file.reg).unwrap_or(defaults.reg),
            ..defaults
        };
        Ok(TrainJob {
            data: self.data.clone(),
            out_dir: self.out.clone(),
            cell,
            config,
            imputation: self.impute.or(file.impute),
            split: SplitSpec {
                validation_fraction: self
                    .validation_fraction
                    .or(file.validation_fraction)
                    .unwrap_or(split_defaults.validation_fraction),
                train_fraction_of_remainder: self
                    .train_fraction
                    .or(file.train_fraction)
                    .unwrap_or(split_defaults.train_fraction_of_remainder),
                seed: self.split_seed.or(file.split_seed).unwrap_or(split_defaults.seed),
            },
            standardize: !self.no_standardize && file.standardize.unwrap_or(true),
            restarts: self.restarts.or(file.restarts).unwrap_or(1),
        })
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset file the checkpoint was trained from
    data: PathBuf,
    /// Checkpoint file or training output directory (evaluates every restart)
    #[arg(long)]
    checkpoint: PathBuf,
    /// Split to evaluate
    #[arg(long, value_enum, default_value = "test")]
    split: SplitChoice,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Unused; accepted for interface uniformity
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ImputeArgs {
    /// Input dataset file
    data: PathBuf,
    #[arg(long, value_enum)]
    method: ImputeKind,
    /// Output dataset file
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Unused; accepted for interface uniformity
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Dataset file the checkpoint was trained from
    data: PathBuf,
    /// Checkpoint file
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitChoice,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Unused; accepted for interface uniformity
    #[arg(long)]
    seed: Option<u64>,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate(args) => {
            let cfg = args.resolve()?;
            let summary = run_generate(&cfg, &args.out)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "config": cfg,
                    "summary": summary,
                }))
                .expect("serializable")
            );
        }
        Cmd::Train(args) => {
            let job = args.resolve()?;
            let summary = run_train(&job)?;
            for r in &summary.restarts {
                println!(
                    "restart_{:02}: best validation F1 {}",
                    r.restart,
                    r.best_val_f1.map_or("n/a".into(), |f| format!("{f:.4}"))
                );
            }
            if let Some(agg) = &summary.aggregate {
                println!("validation AUC {}  F1 {}", agg.auc.display(), agg.f1.display());
            }
        }
        Cmd::Evaluate(args) => {
            let checkpoints = collect_checkpoints(&args.checkpoint)?;
            let output = run_evaluate(&checkpoints, &args.data, args.split, &args.out)?;
            print!("{}", output.table);
        }
        Cmd::Impute(args) => {
            run_impute(&args.data, args.method, &args.out)?;
            println!("wrote {}", args.out.display());
        }
        Cmd::Project(args) => {
            let proj = run_project(&args.checkpoint, &args.data, args.split, &args.out)?;
            println!(
                "explained variance: {} {}",
                proj.explained_variance[0], proj.explained_variance[1]
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            exit(code);
        }
    };
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        exit(e.exit_code());
    }
}
