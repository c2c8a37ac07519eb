//! Class-weighted binary cross-entropy with L2 regularization over the
//! weight matrices (biases excluded).

use serde::{Deserialize, Serialize};

use crate::cell::Cell;

/// Predicted probabilities are clamped to `[CLAMP, 1 - CLAMP]` before the
/// logarithm.
pub const CLAMP: f64 = 1e-12;

/// How the penalty aggregates the weight entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegKind {
    /// Sum of squared weight entries (smooth everywhere).
    #[default]
    SumSquares,
    /// Euclidean norm of the concatenated weights.
    Norm,
}

#[derive(Debug, Clone, Copy)]
pub struct LossSpec {
    /// Per-class weights `(alpha_0, alpha_1)`.
    pub alpha: (f64, f64),
    pub lambda: f64,
    pub reg: RegKind,
}

impl LossSpec {
    pub fn unweighted() -> Self {
        LossSpec { alpha: (1.0, 1.0), lambda: 0.0, reg: RegKind::SumSquares }
    }

    pub fn alpha_for(&self, label: u8) -> f64 {
        if label == 1 {
            self.alpha.1
        } else {
            self.alpha.0
        }
    }
}

/// Cross-entropy of one prediction.
pub fn bce(p_hat: f64, label: u8) -> f64 {
    let p = p_hat.clamp(CLAMP, 1.0 - CLAMP);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn regularizer(cell: &Cell, reg: RegKind) -> f64 {
    match reg {
        RegKind::SumSquares => cell.weight_sq_sum(),
        RegKind::Norm => cell.weight_sq_sum().sqrt(),
    }
}

/// Weighted mean cross-entropy plus the regularization term.
pub fn loss(p_hats: &[f64], labels: &[u8], spec: &LossSpec, cell: &Cell) -> f64 {
    assert_eq!(p_hats.len(), labels.len());
    let n = p_hats.len() as f64;
    let data: f64 = p_hats
        .iter()
        .zip(labels)
        .map(|(&p, &y)| spec.alpha_for(y) * bce(p, y))
        .sum();
    data / n + spec.lambda * regularizer(cell, spec.reg)
}

/// Adds the regularizer gradient (over weight entries only) to `grads`.
pub(crate) fn add_reg_gradient(grads: &mut Cell, params: &Cell, lambda: f64, reg: RegKind) {
    if lambda == 0.0 {
        return;
    }
    let flat = params.to_flat();
    let flags = params.weight_flags();
    let scale = match reg {
        RegKind::SumSquares => 2.0 * lambda,
        RegKind::Norm => {
            let norm = params.weight_sq_sum().sqrt();
            if norm == 0.0 {
                return;
            }
            lambda / norm
        }
    };
    grads.add_masked_scaled(&flat, &flags, scale);
}
