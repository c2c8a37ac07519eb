//! Episode storage: multivariate time series with observation masks, time
//! stamps, inter-observation intervals, and split/standardization utilities.
//!
//! Missing entries are kept as `NaN` in memory and `null` on disk; the mask
//! is always derived from the values, never stored separately.

mod io;

pub use io::{load_episodes, save_episodes};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// One multivariate time series: `values` is T×V with `NaN` where the mask
/// is 0, `timestamps` is strictly increasing (days), and `deltas[t][v]` is
/// the time elapsed since variable `v` was last observed.
#[derive(Debug, Clone)]
pub struct MaskedSeries {
    pub id: String,
    pub values: Array2<f64>,
    pub mask: Array2<u8>,
    pub timestamps: Array1<f64>,
    pub deltas: Array2<f64>,
}

impl PartialEq for MaskedSeries {
    /// Values compare bitwise so the NaN sentinels of missing entries do
    /// not break equality.
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.mask == other.mask
            && self.timestamps == other.timestamps
            && self.deltas == other.deltas
            && self.values.dim() == other.values.dim()
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl MaskedSeries {
    /// Builds a series from optional values; the mask and delta matrix are
    /// derived. Errors if timestamps are not strictly increasing or any
    /// observed value is non-finite.
    pub fn from_rows(id: String, rows: &[Vec<Option<f64>>], timestamps: Vec<f64>) -> Result<Self> {
        let t_len = rows.len();
        if t_len == 0 {
            return Err(Error::Validation(format!("series '{id}' has no time steps")));
        }
        let n_vars = rows[0].len();
        if rows.iter().any(|r| r.len() != n_vars) {
            return Err(Error::Validation(format!(
                "series '{id}' has ragged rows (expected {n_vars} variables)"
            )));
        }
        if timestamps.len() != t_len {
            return Err(Error::Validation(format!(
                "series '{id}': {} timestamps for {} time steps",
                timestamps.len(),
                t_len
            )));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "series '{id}': timestamps must be strictly increasing"
            )));
        }
        let mut values = Array2::from_elem((t_len, n_vars), f64::NAN);
        let mut mask = Array2::zeros((t_len, n_vars));
        for (t, row) in rows.iter().enumerate() {
            for (v, entry) in row.iter().enumerate() {
                if let Some(x) = entry {
                    if !x.is_finite() {
                        return Err(Error::Validation(format!(
                            "series '{id}': non-finite value at step {t}, variable {v}"
                        )));
                    }
                    values[[t, v]] = *x;
                    mask[[t, v]] = 1;
                }
            }
        }
        let timestamps = Array1::from_vec(timestamps);
        let deltas = compute_deltas(&mask, &timestamps);
        Ok(MaskedSeries { id, values, mask, timestamps, deltas })
    }

    pub fn t_len(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn fully_observed(&self) -> bool {
        self.mask.iter().all(|&m| m == 1)
    }
}

/// Per-variable mean/std used for z-scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableStats {
    pub mean: f64,
    pub std: f64,
}

/// A labeled collection of series with identical T and V.
///
/// `empirical_means` and `stats` are computed over observed entries. After
/// [`split`], all three resulting sets carry statistics computed from the
/// training split only.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSet {
    pub series: Vec<MaskedSeries>,
    pub labels: Vec<u8>,
    pub variable_names: Vec<String>,
    pub empirical_means: Vec<f64>,
    pub stats: Vec<VariableStats>,
}

impl EpisodeSet {
    /// Assembles a set, checking shape consistency and that every variable
    /// is observed at least once somewhere in the set.
    pub fn new(
        series: Vec<MaskedSeries>,
        labels: Vec<u8>,
        variable_names: Vec<String>,
    ) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::Validation("episode set is empty".into()));
        }
        if series.len() != labels.len() {
            return Err(Error::Validation(format!(
                "{} series but {} labels",
                series.len(),
                labels.len()
            )));
        }
        let t_len = series[0].t_len();
        let n_vars = series[0].n_vars();
        if n_vars != variable_names.len() {
            return Err(Error::Validation(format!(
                "{} variables in data but {} variable names",
                n_vars,
                variable_names.len()
            )));
        }
        for s in &series {
            if s.t_len() != t_len || s.n_vars() != n_vars {
                return Err(Error::Validation(format!(
                    "series '{}' is {}x{}, expected {}x{}",
                    s.id,
                    s.t_len(),
                    s.n_vars(),
                    t_len,
                    n_vars
                )));
            }
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Validation("labels must be 0 or 1".into()));
        }
        let (empirical_means, stats) = observed_statistics(&series, &variable_names)?;
        Ok(EpisodeSet { series, labels, variable_names, empirical_means, stats })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn t_len(&self) -> usize {
        self.series[0].t_len()
    }

    pub fn n_vars(&self) -> usize {
        self.series[0].n_vars()
    }

    fn subset(&self, indices: &[usize]) -> (Vec<MaskedSeries>, Vec<u8>) {
        let series = indices.iter().map(|&i| self.series[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        (series, labels)
    }
}

/// Mean and population std of the observed entries, per variable.
fn observed_statistics(
    series: &[MaskedSeries],
    variable_names: &[String],
) -> Result<(Vec<f64>, Vec<VariableStats>)> {
    let n_vars = series[0].n_vars();
    let mut sums = vec![0.0; n_vars];
    let mut counts = vec![0usize; n_vars];
    for s in series {
        for t in 0..s.t_len() {
            for v in 0..n_vars {
                if s.mask[[t, v]] == 1 {
                    sums[v] += s.values[[t, v]];
                    counts[v] += 1;
                }
            }
        }
    }
    for (v, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::Validation(format!(
                "variable '{}' has no observed entries in the set",
                variable_names.get(v).map(String::as_str).unwrap_or("?")
            )));
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let mut sq = vec![0.0; n_vars];
    for s in series {
        for t in 0..s.t_len() {
            for v in 0..n_vars {
                if s.mask[[t, v]] == 1 {
                    let d = s.values[[t, v]] - means[v];
                    sq[v] += d * d;
                }
            }
        }
    }
    let stats = means
        .iter()
        .zip(sq.iter().zip(&counts))
        .map(|(&mean, (&ss, &c))| VariableStats { mean, std: (ss / c as f64).sqrt() })
        .collect();
    Ok((means, stats))
}

/// Time since the last observation of each variable.
///
/// `deltas[0][v] = 0`; for `t > 0` the interval to the previous step is
/// added, and extended by the previous delta when the variable was missing
/// there. Timestamps must be strictly increasing.
pub fn compute_deltas(mask: &Array2<u8>, timestamps: &Array1<f64>) -> Array2<f64> {
    let (t_len, n_vars) = mask.dim();
    let mut deltas = Array2::zeros((t_len, n_vars));
    for t in 1..t_len {
        let gap = timestamps[t] - timestamps[t - 1];
        for v in 0..n_vars {
            deltas[[t, v]] = if mask[[t - 1, v]] == 1 {
                gap
            } else {
                gap + deltas[[t - 1, v]]
            };
        }
    }
    deltas
}

/// How the dataset is partitioned into train/validation/test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of all episodes held out for validation.
    pub validation_fraction: f64,
    /// Fraction of the remainder (after validation removal) used for training.
    pub train_fraction_of_remainder: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { validation_fraction: 0.2, train_fraction_of_remainder: 0.6, seed: 0 }
    }
}

/// Shuffles deterministically and partitions into (train, validation, test).
///
/// Counts use floor rounding for validation and train; the remainder goes to
/// test. Statistics of all three outputs are recomputed from the train split
/// and copied to validation and test.
pub fn split(set: &EpisodeSet, spec: &SplitSpec) -> Result<(EpisodeSet, EpisodeSet, EpisodeSet)> {
    if !(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0) {
        return Err(Error::Config(format!(
            "validation_fraction must be in (0,1), got {}",
            spec.validation_fraction
        )));
    }
    if !(spec.train_fraction_of_remainder > 0.0 && spec.train_fraction_of_remainder < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction_of_remainder must be in (0,1), got {}",
            spec.train_fraction_of_remainder
        )));
    }
    let n = set.len();
    let n_val = (spec.validation_fraction * n as f64).floor() as usize;
    let n_train = (spec.train_fraction_of_remainder * (n - n_val) as f64).floor() as usize;
    let n_test = n - n_val - n_train;
    if n_val == 0 || n_train == 0 || n_test == 0 {
        return Err(Error::Config(format!(
            "split of {n} episodes produces an empty part (train {n_train}, val {n_val}, test {n_test})"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(spec.seed, 0));
    let val_idx = &order[..n_val];
    let train_idx = &order[n_val..n_val + n_train];
    let test_idx = &order[n_val + n_train..];

    let (train_series, train_labels) = set.subset(train_idx);
    let (means, stats) = observed_statistics(&train_series, &set.variable_names)?;

    let make = |(series, labels): (Vec<MaskedSeries>, Vec<u8>)| EpisodeSet {
        series,
        labels,
        variable_names: set.variable_names.clone(),
        empirical_means: means.clone(),
        stats: stats.clone(),
    };
    let train = make((train_series, train_labels));
    let validation = make(set.subset(val_idx));
    let test = make(set.subset(test_idx));
    Ok((train, validation, test))
}

/// Per-class loss weights `alpha_i = 1 - n_i / N`, returned as
/// `(alpha_0, alpha_1)`. Errors if only one class is present.
pub fn class_weights(labels: &[u8]) -> Result<(f64, f64)> {
    let n = labels.len();
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    let n0 = n - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::Validation(
            "class weights need both classes present".into(),
        ));
    }
    Ok((1.0 - n0 as f64 / n as f64, 1.0 - n1 as f64 / n as f64))
}

/// Z-scores observed entries with the given per-variable stats. Variables
/// with zero std pass through unchanged. Masks, timestamps, and deltas are
/// untouched; the stored empirical means are mapped through the same
/// transform so they stay tied to the split that produced them (exactly 0
/// when `stats` came from the same data).
pub fn standardize(set: &EpisodeSet, stats: &[VariableStats]) -> EpisodeSet {
    let n_vars = set.n_vars();
    assert_eq!(stats.len(), n_vars, "stats length must match variable count");
    let z = |x: f64, s: &VariableStats| if s.std > 0.0 { (x - s.mean) / s.std } else { x };

    let series = set
        .series
        .iter()
        .map(|s| {
            let mut out = s.clone();
            for t in 0..s.t_len() {
                for (v, stat) in stats.iter().enumerate() {
                    if s.mask[[t, v]] == 1 {
                        out.values[[t, v]] = z(s.values[[t, v]], stat);
                    }
                }
            }
            out
        })
        .collect();

    let empirical_means = set
        .empirical_means
        .iter()
        .zip(stats)
        .map(|(&m, s)| z(m, s))
        .collect();
    let new_stats = set
        .stats
        .iter()
        .zip(stats)
        .map(|(own, s)| VariableStats {
            mean: z(own.mean, s),
            std: if s.std > 0.0 { own.std / s.std } else { own.std },
        })
        .collect();

    EpisodeSet {
        series,
        labels: set.labels.clone(),
        variable_names: set.variable_names.clone(),
        empirical_means,
        stats: new_stats,
    }
}
