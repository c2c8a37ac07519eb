//! End-to-end experiment pipelines behind the command-line interface:
//! generate, train (with restarts), evaluate, impute, project.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell::CellKind;
use crate::checkpoint::{Checkpoint, SeedLineage};
use crate::dataset::{load_episodes, save_episodes, split, standardize, EpisodeSet, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{
    aggregate_restarts, pca_last_states, report, score_set, trapezoid_area, EvalReport,
    RestartSummary, StateProjection,
};
use crate::impute::{ImputationMethod, ImputeKind};
use crate::rng::mix;
use crate::synth::{describe, generate, SynthConfig, SynthSummary};
use crate::train::{train, EpochStats, TrainConfig};

/// Which part of the split to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainJob {
    pub data: PathBuf,
    pub out_dir: PathBuf,
    pub cell: CellKind,
    pub imputation: Option<ImputeKind>,
    pub split: SplitSpec,
    pub standardize: bool,
    pub config: TrainConfig,
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub restart: usize,
    pub best_val_f1: Option<f64>,
    pub val: EvalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRunSummary {
    pub cell: CellKind,
    pub imputation: Option<ImputeKind>,
    pub restarts: Vec<RestartOutcome>,
    /// Mean ± standard error over restarts (absent for a single restart).
    pub aggregate: Option<RestartSummary>,
}

/// Splits, optionally standardizes, trains `restarts` independent models in
/// parallel, and writes one subdirectory per restart plus a summary.
pub fn run_train(job: &TrainJob) -> Result<TrainRunSummary> {
    let set = load_episodes(&job.data)?;
    let (train_raw, val_raw, _test_raw) = split(&set, &job.split)?;
    let raw_stats = train_raw.stats.clone();
    let (train_set, val_set) = if job.standardize {
        (standardize(&train_raw, &raw_stats), standardize(&val_raw, &raw_stats))
    } else {
        (train_raw, val_raw)
    };

    fs::create_dir_all(&job.out_dir)?;
    write_json(&job.out_dir.join("config.json"), job)?;

    type RestartRun = (usize, Checkpoint, Vec<EpochStats>, EvalReport);
    let runs: Vec<Result<RestartRun>> = (0..job.restarts)
        .into_par_iter()
        .map(|r| {
            let train_seed = mix(job.config.seed, r as u64);
            let cfg = TrainConfig { seed: train_seed, ..job.config };
            let outcome = train(&cfg, job.cell, &train_set, &val_set, job.imputation)?;

            let val_scored = match job.imputation {
                Some(kind) => {
                    ImputationMethod::new(kind, train_set.empirical_means.clone())
                        .apply_set(&val_set)
                }
                None => val_set.clone(),
            };
            let (scores, _) = score_set(&outcome.cell, &val_scored)?;
            let val_report = report(&scores, &val_scored.labels, 0.5)?;

            let checkpoint = Checkpoint {
                cell: outcome.cell,
                n_vars: set.n_vars(),
                hidden_size: job.config.hidden_size,
                t_len: set.t_len(),
                variable_names: set.variable_names.clone(),
                stats: raw_stats.clone(),
                empirical_means: train_set.empirical_means.clone(),
                split: job.split,
                standardized: job.standardize,
                imputation: job.imputation,
                seeds: SeedLineage {
                    master_seed: job.config.seed,
                    restart: r,
                    train_seed,
                    split_seed: job.split.seed,
                },
                best_val_f1: outcome.best_val_f1,
            };
            Ok((r, checkpoint, outcome.history, val_report))
        })
        .collect();

    let mut outcomes = Vec::with_capacity(job.restarts);
    let mut val_reports = Vec::with_capacity(job.restarts);
    for run in runs {
        let (r, checkpoint, history, val_report) = run?;
        let dir = job.out_dir.join(format!("restart_{r:02}"));
        fs::create_dir_all(&dir)?;
        checkpoint.save(dir.join("checkpoint.json"))?;
        fs::write(dir.join("history.csv"), history_csv(&history))?;
        write_json(&dir.join("val_report.json"), &val_report)?;
        outcomes.push(RestartOutcome {
            restart: r,
            best_val_f1: checkpoint.best_val_f1,
            val: val_report.clone(),
        });
        val_reports.push(val_report);
    }

    let aggregate =
        if val_reports.len() >= 2 { Some(aggregate_restarts(&val_reports)?) } else { None };
    let summary = TrainRunSummary {
        cell: job.cell,
        imputation: job.imputation,
        restarts: outcomes,
        aggregate,
    };
    write_json(&job.out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Rebuilds the training-time pipeline for one split of a dataset file:
/// same split spec, stored standardization stats, stored imputation method.
pub fn prepare_split(
    checkpoint: &Checkpoint,
    data: &Path,
    which: SplitChoice,
) -> Result<EpisodeSet> {
    let set = load_episodes(data)?;
    checkpoint.check_compat(&set)?;
    let (train_set, val_set, test_set) = split(&set, &checkpoint.split)?;
    let chosen = match which {
        SplitChoice::Train => train_set,
        SplitChoice::Validation => val_set,
        SplitChoice::Test => test_set,
    };
    let mut prepared = if checkpoint.standardized {
        standardize(&chosen, &checkpoint.stats)
    } else {
        chosen
    };
    // model-space means from training time drive imputation and decay
    prepared.empirical_means = checkpoint.empirical_means.clone();
    if let Some(kind) = checkpoint.imputation {
        let method = ImputationMethod::new(kind, checkpoint.empirical_means.clone());
        prepared = method.apply_set(&prepared);
    }
    Ok(prepared)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub reports: Vec<EvalReport>,
    pub aggregate: Option<RestartSummary>,
    /// Table-style lines, one per restart plus the aggregate.
    pub table: String,
}

/// Evaluates one checkpoint file or every `restart_*/checkpoint.json` under
/// a training output directory. Writes `report.json`, `roc.csv`, and
/// `pca.csv` (coordinates of the final hidden states) per checkpoint.
pub fn run_evaluate(
    checkpoints: &[PathBuf],
    data: &Path,
    which: SplitChoice,
    out_dir: &Path,
) -> Result<EvaluateOutput> {
    if checkpoints.is_empty() {
        return Err(Error::Config("no checkpoint to evaluate".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut reports = Vec::new();
    for (i, ck_path) in checkpoints.iter().enumerate() {
        let checkpoint = Checkpoint::load(ck_path)?;
        let prepared = prepare_split(&checkpoint, data, which)?;
        let (scores, states) = score_set(&checkpoint.cell, &prepared)?;
        let rep = report(&scores, &prepared.labels, 0.5)?;
        let projection = pca_last_states(&states, &prepared.labels)?;

        let dir = if checkpoints.len() == 1 {
            out_dir.to_path_buf()
        } else {
            let d = out_dir.join(format!("restart_{i:02}"));
            fs::create_dir_all(&d)?;
            d
        };
        write_json(&dir.join("report.json"), &rep)?;
        fs::write(dir.join("roc.csv"), roc_csv(&rep))?;
        fs::write(dir.join("pca.csv"), pca_csv(&projection))?;
        reports.push(rep);
    }

    let aggregate = if reports.len() >= 2 { Some(aggregate_restarts(&reports)?) } else { None };
    let table = format_table(&reports, aggregate.as_ref());
    if let Some(agg) = &aggregate {
        write_json(&out_dir.join("summary.json"), agg)?;
    }
    Ok(EvaluateOutput { reports, aggregate, table })
}

/// Expands a path into checkpoint files: a file stands for itself, a
/// directory for its `restart_*/checkpoint.json` children.
pub fn collect_checkpoints(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut found = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.is_dir()
                    && p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("restart_"))
            })
            .collect();
        entries.sort();
        for dir in entries {
            let ck = dir.join("checkpoint.json");
            if ck.is_file() {
                found.push(ck);
            }
        }
    }
    if found.is_empty() {
        return Err(Error::Config(format!(
            "no checkpoint found at {} (expected a file or a training output directory)",
            path.display()
        )));
    }
    Ok(found)
}

/// Writes the 2-D projection of final hidden states for external plotting.
pub fn run_project(
    checkpoint_path: &Path,
    data: &Path,
    which: SplitChoice,
    out_dir: &Path,
) -> Result<StateProjection> {
    let checkpoint = Checkpoint::load(checkpoint_path)?;
    let prepared = prepare_split(&checkpoint, data, which)?;
    let (_, states) = score_set(&checkpoint.cell, &prepared)?;
    let projection = pca_last_states(&states, &prepared.labels)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("pca.csv"), pca_csv(&projection))?;
    Ok(projection)
}

/// Generates a synthetic dataset file and returns its summary.
pub fn run_generate(cfg: &SynthConfig, out: &Path) -> Result<SynthSummary> {
    let set = generate(cfg)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    save_episodes(&set, out)?;
    Ok(describe(&set))
}

/// Imputes a dataset file with the chosen method; fallback means are the
/// file's own observed means.
pub fn run_impute(input: &Path, kind: ImputeKind, out: &Path) -> Result<()> {
    let set = load_episodes(input)?;
    let method = ImputationMethod::new(kind, set.empirical_means.clone());
    let imputed = method.apply_set(&set);
    save_episodes(&imputed, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Output formats.

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_f1,val_auc\n");
    for h in history {
        out.push_str(&format!("{},{},{},{}\n", h.epoch, h.train_loss, h.val_f1, h.val_auc));
    }
    out
}

fn roc_csv(rep: &EvalReport) -> String {
    let mut out = String::from("x,y,label\n");
    for p in &rep.roc_points {
        out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
    }
    debug_assert!((trapezoid_area(&rep.roc_points) - rep.auc).abs() < 1e-9);
    out
}

fn pca_csv(proj: &StateProjection) -> String {
    let mut out = String::from("x,y,label\n");
    for (i, &label) in proj.labels.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            proj.coordinates[[i, 0]],
            proj.coordinates[[i, 1]],
            label
        ));
    }
    out
}

fn format_table(reports: &[EvalReport], aggregate: Option<&RestartSummary>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<12} {:>8} {:>8}\n", "run", "AUC", "F1"));
    for (i, r) in reports.iter().enumerate() {
        out.push_str(&format!("{:<12} {:>8.4} {:>8.4}\n", format!("restart_{i:02}"), r.auc, r.f1));
    }
    if let Some(agg) = aggregate {
        out.push_str(&format!(
            "{:<12} {:>12} {:>12}\n",
            "mean",
            agg.auc.display(),
            agg.f1.display()
        ));
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json =
        serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    fs::write(path, json)?;
    Ok(())
}
