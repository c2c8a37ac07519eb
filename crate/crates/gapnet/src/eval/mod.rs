//! Classification metrics, ROC/AUC, PCA of final states, and aggregation
//! across random restarts.

mod pca;
mod roc;

pub use pca::{pca_last_states, StateProjection};
pub use roc::{auc, roc_points, trapezoid_area, RocPoint};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::cell::Cell;
use crate::dataset::EpisodeSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Counts with class 1 as the positive class.
pub fn confusion(preds: &[u8], labels: &[u8]) -> Confusion {
    assert_eq!(preds.len(), labels.len());
    let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&p, &y) in preds.iter().zip(labels) {
        match (p, y) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 0) => c.tn += 1,
            _ => c.fn_ += 1,
        }
    }
    c
}

/// `2 TP / (2 TP + FP + FN)`, or 0 when the denominator vanishes.
pub fn f1_score(preds: &[u8], labels: &[u8]) -> f64 {
    let c = confusion(preds, labels);
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * c.tp as f64 / denom as f64
    }
}

/// Metrics of one model on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1: f64,
    pub auc: f64,
    pub confusion: Confusion,
    pub roc_points: Vec<RocPoint>,
}

/// Builds the report from scores, thresholding at `threshold` for F1.
pub fn report(scores: &[f64], labels: &[u8], threshold: f64) -> Result<EvalReport> {
    let preds: Vec<u8> = scores.iter().map(|&s| (s >= threshold) as u8).collect();
    Ok(EvalReport {
        f1: f1_score(&preds, labels),
        auc: auc(scores, labels)?,
        confusion: confusion(&preds, labels),
        roc_points: roc_points(scores, labels)?,
    })
}

/// Class-1 probabilities and final hidden states for a whole set, dropout
/// disabled.
pub fn score_set(cell: &Cell, set: &EpisodeSet) -> Result<(Vec<f64>, Array2<f64>)> {
    let means = Array1::from_vec(set.empirical_means.clone());
    let mut scores = Vec::with_capacity(set.len());
    let mut states = Array2::zeros((set.len(), cell.hidden_size()));
    for (i, s) in set.series.iter().enumerate() {
        let pred = cell.forward(s, &means, None)?;
        scores.push(pred.p);
        states.row_mut(i).assign(&pred.last_state);
    }
    Ok((scores, states))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Table-style rendering, e.g. "0.91 ± 0.02".
    pub fn display(&self) -> String {
        format!("{:.2} \u{b1} {:.2}", self.mean, self.se)
    }
}

fn mean_se(values: &[f64]) -> MeanSe {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    MeanSe { mean, se: var.sqrt() / k.sqrt() }
}

/// Mean and standard error of F1 and AUC over independent restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restarts: Vec<RestartMetrics>,
    pub f1: MeanSe,
    pub auc: MeanSe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartMetrics {
    pub f1: f64,
    pub auc: f64,
}

pub fn aggregate_restarts(reports: &[EvalReport]) -> Result<RestartSummary> {
    if reports.len() < 2 {
        return Err(Error::Validation("aggregation needs at least 2 restarts".into()));
    }
    let f1s: Vec<f64> = reports.iter().map(|r| r.f1).collect();
    let aucs: Vec<f64> = reports.iter().map(|r| r.auc).collect();
    Ok(RestartSummary {
        restarts: reports.iter().map(|r| RestartMetrics { f1: r.f1, auc: r.auc }).collect(),
        f1: mean_se(&f1s),
        auc: mean_se(&aucs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_worked_examples() {
        assert_eq!(f1_score(&[1, 0, 1], &[1, 0, 1]), 1.0);
        // TP=1, FP=1, FN=1
        assert_eq!(f1_score(&[1, 1, 0], &[1, 0, 1]), 0.5);
        // degenerate denominator
        assert_eq!(f1_score(&[0, 0], &[0, 0]), 0.0);
    }

    #[test]
    fn f1_is_order_invariant() {
        let preds = [1, 0, 1, 1, 0];
        let labels = [1, 1, 0, 1, 0];
        let a = f1_score(&preds, &labels);
        let rev_p: Vec<u8> = preds.iter().rev().copied().collect();
        let rev_l: Vec<u8> = labels.iter().rev().copied().collect();
        assert_eq!(a, f1_score(&rev_p, &rev_l));
    }

    #[test]
    fn confusion_counts_sum_to_n() {
        let c = confusion(&[1, 0, 1, 0], &[1, 1, 0, 0]);
        assert_eq!(c.tp + c.fp + c.tn + c.fn_, 4);
        assert_eq!(c, Confusion { tp: 1, fp: 1, tn: 1, fn_: 1 });
    }

    #[test]
    fn aggregate_mean_and_standard_error() {
        let mk = |f1: f64, auc: f64| EvalReport {
            f1,
            auc,
            confusion: Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 },
            roc_points: vec![],
        };
        let s = aggregate_restarts(&[mk(0.6, 0.8), mk(0.8, 0.8)]).unwrap();
        assert!((s.f1.mean - 0.7).abs() < 1e-15);
        assert!((s.f1.se - 0.1).abs() < 1e-12);
        assert_eq!(s.auc.se, 0.0);
        assert_eq!(s.f1.display(), "0.70 \u{b1} 0.10");

        let identical = aggregate_restarts(&[mk(0.5, 0.5), mk(0.5, 0.5), mk(0.5, 0.5)]).unwrap();
        assert_eq!(identical.f1.se, 0.0);

        assert!(aggregate_restarts(&[mk(0.5, 0.5)]).is_err());
    }

    #[test]
    fn report_has_expected_shape() {
        let r = report(&[0.9, 0.2, 0.7, 0.4], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(r.f1, 1.0);
        assert_eq!(r.auc, 1.0);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["f1", "auc", "confusion", "roc_points"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert!(json["confusion"].get("fn").is_some());
    }
}
