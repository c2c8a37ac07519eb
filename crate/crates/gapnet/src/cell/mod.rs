//! Recurrent cell dynamics: Elman, GRU, and GRU-D forward passes together
//! with the exact backward passes used for training.
//!
//! All math is 64-bit. Parameter gradients reuse the parameter structs
//! themselves (a zeroed copy accumulates the gradient), so shapes match by
//! construction.

mod ernn;
mod gru;
mod grud;
mod readout;

pub use ernn::{ernn_step, ErnnParams};
pub use gru::{gru_step, GruParams};
pub use grud::{
    decay_input, decay_rates, decay_rates_diag, decay_state, grud_step, GrudParams,
    GrudRuntimeState,
};
pub use readout::{softmax2, ReadoutParams};

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::MaskedSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Ernn,
    Gru,
    Grud,
}

impl CellKind {
    /// Whether the cell consumes the mask and delta channels itself.
    pub fn handles_missing(&self) -> bool {
        matches!(self, CellKind::Grud)
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellKind::Ernn => write!(f, "ernn"),
            CellKind::Gru => write!(f, "gru"),
            CellKind::Grud => write!(f, "grud"),
        }
    }
}

/// Trainable parameters of one classifier (cell plus readout).
// variant sizes differ a lot, but the matrices are heap-backed and a Box
// would only complicate the checkpoint format
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Cell {
    Ernn(ErnnParams),
    Gru(GruParams),
    Grud(GrudParams),
}

/// Output of a full forward pass over one series.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Probability of class 1.
    pub p: f64,
    /// Softmax over the two logits.
    pub probs: [f64; 2],
    /// Final hidden state (before any dropout).
    pub last_state: Array1<f64>,
}

impl Cell {
    /// Fresh parameters: matrices uniform in ±sqrt(6/(fan_in+fan_out)),
    /// biases zero, decay weights zero. Element order is fixed, so the same
    /// rng state always yields the same parameters.
    pub fn init(kind: CellKind, n_vars: usize, hidden: usize, rng: &mut impl Rng) -> Cell {
        match kind {
            CellKind::Ernn => Cell::Ernn(ErnnParams::init(n_vars, hidden, rng)),
            CellKind::Gru => Cell::Gru(GruParams::init(n_vars, hidden, rng)),
            CellKind::Grud => Cell::Grud(GrudParams::init(n_vars, hidden, rng)),
        }
    }

    pub fn kind(&self) -> CellKind {
        match self {
            Cell::Ernn(_) => CellKind::Ernn,
            Cell::Gru(_) => CellKind::Gru,
            Cell::Grud(_) => CellKind::Grud,
        }
    }

    pub fn readout(&self) -> &ReadoutParams {
        match self {
            Cell::Ernn(p) => &p.readout,
            Cell::Gru(p) => &p.readout,
            Cell::Grud(p) => &p.gru.readout,
        }
    }

    pub(crate) fn readout_mut(&mut self) -> &mut ReadoutParams {
        match self {
            Cell::Ernn(p) => &mut p.readout,
            Cell::Gru(p) => &mut p.readout,
            Cell::Grud(p) => &mut p.gru.readout,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.readout().w_out.ncols()
    }

    pub fn n_vars(&self) -> usize {
        match self {
            Cell::Ernn(p) => p.w_in.ncols(),
            Cell::Gru(p) => p.reset_x.ncols(),
            Cell::Grud(p) => p.gru.reset_x.ncols(),
        }
    }

    /// All-zero parameters with the same shapes; used as a gradient
    /// accumulator and for Adam moments.
    pub fn zeros_like(&self) -> Cell {
        let mut out = self.clone();
        out.visit_mut(&mut |_, _, p| match p {
            ParamMut::Mat(m) => m.fill(0.0),
            ParamMut::Vec(v) => v.fill(0.0),
        });
        out
    }

    /// Runs the recurrence over the whole series and applies the readout.
    /// ERNN and GRU require fully observed input; GRU-D takes the masked
    /// series directly. `dropout`, when given, is a premultiplied keep mask
    /// (entries 0 or 1/keep) applied to the last state before the readout.
    pub fn forward(
        &self,
        series: &MaskedSeries,
        means: &Array1<f64>,
        dropout: Option<&Array1<f64>>,
    ) -> Result<Prediction> {
        let cache = self.forward_cached(series, means)?;
        let last_state = cache.last_state().clone();
        let dropped = match dropout {
            Some(mask) => &last_state * mask,
            None => last_state.clone(),
        };
        let probs = softmax2(self.readout().logits(&dropped));
        Ok(Prediction { p: probs[1], probs, last_state })
    }

    pub(crate) fn forward_cached(
        &self,
        series: &MaskedSeries,
        means: &Array1<f64>,
    ) -> Result<SeqCache> {
        match self {
            Cell::Ernn(p) => {
                require_observed(series, "ernn")?;
                Ok(SeqCache::Ernn(p.forward_seq(&series.values)?))
            }
            Cell::Gru(p) => {
                require_observed(series, "gru")?;
                Ok(SeqCache::Gru(p.forward_seq(&series.values)?))
            }
            Cell::Grud(p) => Ok(SeqCache::Grud(p.forward_seq(series, means)?)),
        }
    }

    /// Backpropagates `d_last` (gradient w.r.t. the final hidden state)
    /// through every time step, accumulating into `grads`.
    pub(crate) fn backward(
        &self,
        series: &MaskedSeries,
        means: &Array1<f64>,
        cache: &SeqCache,
        d_last: Array1<f64>,
        grads: &mut Cell,
    ) {
        match (self, cache, grads) {
            (Cell::Ernn(p), SeqCache::Ernn(c), Cell::Ernn(g)) => {
                p.backward_seq(&series.values, c, d_last, g)
            }
            (Cell::Gru(p), SeqCache::Gru(c), Cell::Gru(g)) => {
                p.backward_seq(&series.values, c, d_last, g)
            }
            (Cell::Grud(p), SeqCache::Grud(c), Cell::Grud(g)) => {
                p.backward_seq(series, means, c, d_last, g)
            }
            _ => panic!("cell, cache, and gradient kinds must agree"),
        }
    }
}

fn require_observed(series: &MaskedSeries, cell: &str) -> Result<()> {
    if series.fully_observed() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{cell} needs fully observed input; series '{}' has missing entries (impute first)",
            series.id
        )))
    }
}

/// Per-sequence forward caches, one variant per cell.
pub(crate) enum SeqCache {
    Ernn(ernn::ErnnSeq),
    Gru(gru::GruSeq),
    Grud(grud::GrudSeq),
}

impl SeqCache {
    pub(crate) fn last_state(&self) -> &Array1<f64> {
        match self {
            SeqCache::Ernn(c) => c.hs.last().unwrap(),
            SeqCache::Gru(c) => c.hs.last().unwrap(),
            SeqCache::Grud(c) => c.hs.last().unwrap(),
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter traversal: one canonical field order per cell, shared by the
// flatteners, the regularizer, and the finiteness checks.

pub(crate) enum Param<'a> {
    Mat(&'a Array2<f64>),
    Vec(&'a Array1<f64>),
}

pub(crate) enum ParamMut<'a> {
    Mat(&'a mut Array2<f64>),
    Vec(&'a mut Array1<f64>),
}

impl Cell {
    pub(crate) fn visit(&self, f: &mut dyn FnMut(&'static str, bool, Param<'_>)) {
        match self {
            Cell::Ernn(p) => p.visit(f),
            Cell::Gru(p) => p.visit(f),
            Cell::Grud(p) => p.visit(f),
        }
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&'static str, bool, ParamMut<'_>)) {
        match self {
            Cell::Ernn(p) => p.visit_mut(f),
            Cell::Gru(p) => p.visit_mut(f),
            Cell::Grud(p) => p.visit_mut(f),
        }
    }

    pub fn n_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _, p| {
            n += match p {
                Param::Mat(m) => m.len(),
                Param::Vec(v) => v.len(),
            }
        });
        n
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        self.visit(&mut |_, _, p| match p {
            Param::Mat(m) => out.extend(m.iter()),
            Param::Vec(v) => out.extend(v.iter()),
        });
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.visit_mut(&mut |_, _, p| match p {
            ParamMut::Mat(m) => {
                for x in m.iter_mut() {
                    *x = flat[offset];
                    offset += 1;
                }
            }
            ParamMut::Vec(v) => {
                for x in v.iter_mut() {
                    *x = flat[offset];
                    offset += 1;
                }
            }
        });
        assert_eq!(offset, flat.len(), "flat parameter vector has wrong length");
    }

    /// Per-entry weight/bias flags aligned with [`Cell::to_flat`].
    pub(crate) fn weight_flags(&self) -> Vec<bool> {
        let mut flags = Vec::with_capacity(self.n_params());
        self.visit(&mut |_, is_weight, p| {
            let len = match p {
                Param::Mat(m) => m.len(),
                Param::Vec(v) => v.len(),
            };
            flags.extend(std::iter::repeat_n(is_weight, len));
        });
        flags
    }

    /// `self[i] += scale * src[i]` wherever `flags[i]` holds.
    pub(crate) fn add_masked_scaled(&mut self, src: &[f64], flags: &[bool], scale: f64) {
        let mut offset = 0;
        self.visit_mut(&mut |_, _, p| {
            let mut bump = |x: &mut f64| {
                if flags[offset] {
                    *x += scale * src[offset];
                }
                offset += 1;
            };
            match p {
                ParamMut::Mat(m) => m.iter_mut().for_each(&mut bump),
                ParamMut::Vec(v) => v.iter_mut().for_each(&mut bump),
            }
        });
    }

    /// Sum of squared entries over weight matrices (biases excluded).
    pub fn weight_sq_sum(&self) -> f64 {
        let mut total = 0.0;
        self.visit(&mut |_, is_weight, p| {
            if is_weight {
                total += match p {
                    Param::Mat(m) => m.iter().map(|x| x * x).sum::<f64>(),
                    Param::Vec(v) => v.iter().map(|x| x * x).sum::<f64>(),
                };
            }
        });
        total
    }

    /// Name of the first parameter holding a non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        let mut bad = None;
        self.visit(&mut |name, _, p| {
            if bad.is_none() {
                let any = match p {
                    Param::Mat(m) => m.iter().any(|x| !x.is_finite()),
                    Param::Vec(v) => v.iter().any(|x| !x.is_finite()),
                };
                if any {
                    bad = Some(name);
                }
            }
        });
        bad
    }
}

// ---------------------------------------------------------------------------
// Small shared numerics.

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// acc += a ⊗ b
pub(crate) fn outer_add(acc: &mut Array2<f64>, a: &Array1<f64>, b: ArrayView1<'_, f64>) {
    let (rows, cols) = acc.dim();
    debug_assert_eq!(rows, a.len());
    debug_assert_eq!(cols, b.len());
    let acc = acc.as_slice_mut().expect("gradients are standard layout");
    let b = b.as_slice().expect("contiguous rhs");
    for (i, &ai) in a.iter().enumerate() {
        let row = &mut acc[i * cols..(i + 1) * cols];
        for (r, &bj) in row.iter_mut().zip(b) {
            *r += ai * bj;
        }
    }
}

pub(crate) fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            m[[i, j]] = rng.random_range(-limit..=limit);
        }
    }
    m
}

pub(crate) fn check_state(h: &Array1<f64>, step: usize) -> Result<()> {
    if h.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite hidden state at time step {step}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn flat_roundtrip_is_identity() {
        for kind in [CellKind::Ernn, CellKind::Gru, CellKind::Grud] {
            let cell = Cell::init(kind, 3, 4, &mut stream_rng(5, 0));
            let flat = cell.to_flat();
            let mut other = cell.zeros_like();
            other.set_flat(&flat);
            assert_eq!(cell, other);
            assert_eq!(flat.len(), cell.n_params());
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = Cell::init(CellKind::Grud, 5, 7, &mut stream_rng(11, 2));
        let b = Cell::init(CellKind::Grud, 5, 7, &mut stream_rng(11, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn grud_decay_weights_start_at_zero() {
        let cell = Cell::init(CellKind::Grud, 3, 4, &mut stream_rng(1, 0));
        let Cell::Grud(p) = &cell else { unreachable!() };
        assert!(p.input_decay_w.iter().all(|&x| x == 0.0));
        assert!(p.state_decay_w.iter().all(|&x| x == 0.0));
        assert!(p.input_decay_b.iter().all(|&x| x == 0.0));
        assert!(p.state_decay_b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn weight_sum_excludes_biases() {
        let mut cell = Cell::init(CellKind::Ernn, 2, 2, &mut stream_rng(0, 0));
        let before = cell.weight_sq_sum();
        if let Cell::Ernn(p) = &mut cell {
            p.b.fill(100.0);
            p.readout.b_out.fill(-3.0);
        }
        assert_eq!(before, cell.weight_sq_sum());
    }

    #[test]
    fn non_finite_parameter_is_named() {
        let mut cell = Cell::init(CellKind::Gru, 2, 3, &mut stream_rng(0, 0));
        assert_eq!(cell.first_non_finite(), None);
        if let Cell::Gru(p) = &mut cell {
            p.cand_x[[0, 1]] = f64::NAN;
        }
        assert_eq!(cell.first_non_finite(), Some("cand_x"));
    }
}
