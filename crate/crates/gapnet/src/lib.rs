//! Sequence classifiers for multivariate time series with missing values.
//!
//! Three recurrent cells built from scratch with exact backpropagation
//! through time: an Elman network, a GRU, and a GRU-D-style cell whose
//! trainable decays and mask weights consume missingness directly. Around
//! them: three imputation baselines (zero, last-observation-carried-forward,
//! mean substitution), class-weighted cross-entropy training with Adam and
//! best-validation-F1 selection, F1/ROC-AUC/PCA evaluation, a deterministic
//! synthetic-data generator with informative missingness, and a CLI for
//! reproducible experiments.
//!
//! See the `examples/` directory for runnable walkthroughs of each part.

pub mod cell;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod impute;
pub mod rng;
pub mod run;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
