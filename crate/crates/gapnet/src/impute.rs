//! Baseline imputation strategies producing fully observed series for the
//! cells that cannot consume masks directly.
//!
//! All three leave observed entries bit-identical and fill every gap. The
//! delta matrix is carried through unchanged; consumers of imputed series
//! ignore it.

use serde::{Deserialize, Serialize};

use crate::dataset::{EpisodeSet, MaskedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ImputeKind {
    /// Replace missing entries with 0.
    Zero,
    /// Carry the most recent observation forward; leading gaps take the
    /// fallback mean.
    Locf,
    /// Replace missing entries with the per-variable observed mean.
    Mean,
}

/// An imputation strategy bound to the per-variable means of the training
/// split (used as LOCF leading-gap fallback and as the mean substitute).
#[derive(Debug, Clone)]
pub struct ImputationMethod {
    pub kind: ImputeKind,
    pub fallback_means: Vec<f64>,
}

impl ImputationMethod {
    pub fn new(kind: ImputeKind, fallback_means: Vec<f64>) -> Self {
        ImputationMethod { kind, fallback_means }
    }

    pub fn apply(&self, series: &MaskedSeries) -> MaskedSeries {
        match self.kind {
            ImputeKind::Zero => impute_zero(series),
            ImputeKind::Locf => impute_locf(series, &self.fallback_means),
            ImputeKind::Mean => impute_mean(series, &self.fallback_means),
        }
    }

    pub fn apply_set(&self, set: &EpisodeSet) -> EpisodeSet {
        let series = set.series.iter().map(|s| self.apply(s)).collect();
        EpisodeSet {
            series,
            labels: set.labels.clone(),
            variable_names: set.variable_names.clone(),
            empirical_means: set.empirical_means.clone(),
            stats: set.stats.clone(),
        }
    }
}

fn filled(series: &MaskedSeries, mut fill: impl FnMut(usize, usize) -> f64) -> MaskedSeries {
    let mut out = series.clone();
    for t in 0..series.t_len() {
        for v in 0..series.n_vars() {
            if series.mask[[t, v]] == 0 {
                out.values[[t, v]] = fill(t, v);
                out.mask[[t, v]] = 1;
            }
        }
    }
    out
}

pub fn impute_zero(series: &MaskedSeries) -> MaskedSeries {
    filled(series, |_, _| 0.0)
}

pub fn impute_locf(series: &MaskedSeries, fallback: &[f64]) -> MaskedSeries {
    let mut last: Vec<Option<f64>> = vec![None; series.n_vars()];
    let mut out = series.clone();
    for t in 0..series.t_len() {
        for v in 0..series.n_vars() {
            if series.mask[[t, v]] == 1 {
                last[v] = Some(series.values[[t, v]]);
            } else {
                out.values[[t, v]] = last[v].unwrap_or(fallback[v]);
                out.mask[[t, v]] = 1;
            }
        }
    }
    out
}

pub fn impute_mean(series: &MaskedSeries, means: &[f64]) -> MaskedSeries {
    filled(series, |_, v| means[v])
}
