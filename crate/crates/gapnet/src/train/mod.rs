//! Mini-batch training with class-weighted loss, dropout on the final
//! state, Adam updates, and best-validation-F1 model selection.

mod adam;
mod gradient;
mod loss;

pub use adam::{AdamParams, AdamState};
pub use gradient::{batch_loss, finite_difference_check, gradients};
pub use loss::{bce, loss, regularizer, LossSpec, RegKind, CLAMP};

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cell::{Cell, CellKind};
use crate::dataset::{class_weights, EpisodeSet};
use crate::error::{Error, Result};
use crate::eval::{auc, f1_score};
use crate::impute::{ImputationMethod, ImputeKind};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub dropout_rate: f64,
    pub lambda: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub reg: RegKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_size: 22,
            dropout_rate: 0.2,
            lambda: 0.001,
            batch_size: 40,
            epochs: 10_000,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            reg: RegKind::SumSquares,
        }
    }
}

impl TrainConfig {
    fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation F1 (the initial
    /// parameters when no epoch ran).
    pub cell: Cell,
    pub best_val_f1: Option<f64>,
    pub history: Vec<EpochStats>,
}

/// Trains one classifier. ERNN and GRU require an imputation method (applied
/// here with fallback means from the training split); the decay cell
/// consumes the masked series directly and rejects imputation.
pub fn train(
    cfg: &TrainConfig,
    kind: CellKind,
    train_set: &EpisodeSet,
    val_set: &EpisodeSet,
    imputation: Option<ImputeKind>,
) -> Result<TrainOutcome> {
    match (kind.handles_missing(), imputation) {
        (true, Some(_)) => {
            return Err(Error::Config(
                "the decay cell consumes missing values directly; drop the imputation method"
                    .into(),
            ))
        }
        (false, None) => {
            return Err(Error::Config(format!(
                "{kind} needs an imputation method (zero, locf, or mean)"
            )))
        }
        _ => {}
    }
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Validation("training and validation splits must be nonempty".into()));
    }
    if train_set.n_vars() != val_set.n_vars() {
        return Err(Error::Validation("train/validation variable counts differ".into()));
    }
    let alpha = class_weights(&train_set.labels)?;
    if val_set.labels.iter().all(|&y| y == val_set.labels[0]) {
        return Err(Error::Validation(
            "validation split has a single class; F1/AUC selection is undefined".into(),
        ));
    }

    let means = Array1::from_vec(train_set.empirical_means.clone());
    let (train_set, val_set) = match imputation {
        Some(kind) => {
            let method = ImputationMethod::new(kind, train_set.empirical_means.clone());
            (method.apply_set(train_set), method.apply_set(val_set))
        }
        None => (train_set.clone(), val_set.clone()),
    };

    let spec = LossSpec { alpha, lambda: cfg.lambda, reg: cfg.reg };
    let mut cell = Cell::init(kind, train_set.n_vars(), cfg.hidden_size, &mut stream_rng(cfg.seed, 0));
    let mut shuffle_rng = stream_rng(cfg.seed, 1);
    let mut dropout_rng = stream_rng(cfg.seed, 2);

    let mut flat = cell.to_flat();
    let mut adam = AdamState::new(flat.len());
    let adam_cfg = cfg.adam();

    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Cell)> = None;
    let keep = 1.0 - cfg.dropout_rate;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let masks = if cfg.dropout_rate > 0.0 {
                Some(draw_dropout(&mut dropout_rng, chunk.len(), cfg.hidden_size, keep))
            } else {
                None
            };
            let (grads, batch) =
                gradients(&cell, &train_set, chunk, &means, &spec, masks.as_deref())?;
            epoch_loss += batch * chunk.len() as f64;
            adam.step(&adam_cfg, &mut flat, &grads.to_flat());
            cell.set_flat(&flat);
        }
        let (f1, roc_auc) = validate(&cell, &val_set, &means)?;
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / n as f64,
            val_f1: f1,
            val_auc: roc_auc,
        });
        if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
            best = Some((f1, cell.clone()));
        }
    }

    match best {
        Some((f1, cell)) => Ok(TrainOutcome { cell, best_val_f1: Some(f1), history }),
        None => Ok(TrainOutcome { cell, best_val_f1: None, history }),
    }
}

fn draw_dropout(
    rng: &mut impl Rng,
    batch: usize,
    hidden: usize,
    keep: f64,
) -> Vec<Array1<f64>> {
    (0..batch)
        .map(|_| {
            Array1::from_shape_fn(hidden, |_| {
                if rng.random::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
        })
        .collect()
}

/// Validation F1 (threshold 0.5) and AUC, dropout disabled.
fn validate(cell: &Cell, val: &EpisodeSet, means: &Array1<f64>) -> Result<(f64, f64)> {
    let mut scores = Vec::with_capacity(val.len());
    for s in &val.series {
        scores.push(cell.forward(s, means, None)?.p);
    }
    let preds: Vec<u8> = scores.iter().map(|&p| (p >= 0.5) as u8).collect();
    Ok((f1_score(&preds, &val.labels), auc(&scores, &val.labels)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{EpisodeSet, MaskedSeries, SplitSpec};

    /// Ten series where the mean of variable 0 separates the classes.
    fn separable_set(n: usize, seed: u64) -> EpisodeSet {
        let mut rng = stream_rng(seed, 40);
        let series: Vec<MaskedSeries> = (0..n)
            .map(|i| {
                let label = i % 2;
                let level = if label == 1 { 2.0 } else { -2.0 };
                let rows: Vec<Vec<Option<f64>>> = (0..6)
                    .map(|_| {
                        vec![
                            Some(level + rng.random_range(-0.2..0.2)),
                            Some(rng.random_range(-1.0..1.0)),
                        ]
                    })
                    .collect();
                MaskedSeries::from_rows(
                    format!("s{i}"),
                    &rows,
                    (0..6).map(|t| t as f64).collect(),
                )
                .unwrap()
            })
            .collect();
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        EpisodeSet::new(series, labels, vec!["sig".into(), "noise".into()]).unwrap()
    }

    fn small_config(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_size: 6,
            batch_size: 4,
            epochs,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initial_parameters() {
        let set = separable_set(10, 1);
        let (tr, val, _) = crate::dataset::split(&set, &SplitSpec { validation_fraction: 0.3, train_fraction_of_remainder: 0.7, seed: 1 }).unwrap();
        let out = train(&small_config(0, 3), CellKind::Gru, &tr, &val, Some(ImputeKind::Mean)).unwrap();
        assert!(out.history.is_empty());
        assert!(out.best_val_f1.is_none());
        let fresh = Cell::init(CellKind::Gru, 2, 6, &mut stream_rng(3, 0));
        assert_eq!(out.cell, fresh);
    }

    #[test]
    fn same_seed_gives_identical_history() {
        let set = separable_set(12, 2);
        let (tr, val, _) = crate::dataset::split(&set, &SplitSpec { validation_fraction: 0.25, train_fraction_of_remainder: 0.7, seed: 5 }).unwrap();
        let cfg = small_config(5, 9);
        let a = train(&cfg, CellKind::Grud, &tr, &val, None).unwrap();
        let b = train(&cfg, CellKind::Grud, &tr, &val, None).unwrap();
        assert_eq!(a.history.len(), b.history.len());
        for (x, y) in a.history.iter().zip(&b.history) {
            assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
            assert_eq!(x.val_f1.to_bits(), y.val_f1.to_bits());
            assert_eq!(x.val_auc.to_bits(), y.val_auc.to_bits());
        }
        assert_eq!(a.cell, b.cell);
    }

    #[test]
    fn best_f1_equals_history_maximum() {
        let set = separable_set(14, 3);
        let (tr, val, _) = crate::dataset::split(&set, &SplitSpec { validation_fraction: 0.3, train_fraction_of_remainder: 0.6, seed: 2 }).unwrap();
        let out = train(&small_config(30, 5), CellKind::Ernn, &tr, &val, Some(ImputeKind::Zero)).unwrap();
        let max = out.history.iter().map(|h| h.val_f1).fold(f64::MIN, f64::max);
        assert_eq!(out.best_val_f1.unwrap(), max);
    }

    #[test]
    fn all_three_cells_fit_a_separable_toy_set() {
        let set = separable_set(10, 7);
        let (tr, val, _) = crate::dataset::split(
            &set,
            &SplitSpec { validation_fraction: 0.3, train_fraction_of_remainder: 0.8, seed: 3 },
        )
        .unwrap();
        for (kind, imp) in [
            (CellKind::Ernn, Some(ImputeKind::Mean)),
            (CellKind::Gru, Some(ImputeKind::Mean)),
            (CellKind::Grud, None),
        ] {
            let out = train(&small_config(200, 11), kind, &tr, &val, imp).unwrap();
            assert_eq!(out.best_val_f1.unwrap(), 1.0, "{kind} failed to fit");
        }
    }

    #[test]
    fn cell_imputation_pairing_is_enforced() {
        let set = separable_set(10, 8);
        let (tr, val, _) = crate::dataset::split(&set, &SplitSpec { validation_fraction: 0.3, train_fraction_of_remainder: 0.7, seed: 1 }).unwrap();
        let cfg = small_config(1, 1);
        assert!(matches!(
            train(&cfg, CellKind::Grud, &tr, &val, Some(ImputeKind::Zero)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            train(&cfg, CellKind::Gru, &tr, &val, None),
            Err(Error::Config(_))
        ));
    }
}
