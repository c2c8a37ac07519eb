//! GRU with trainable decay. Two decay channels are driven by the time
//! since each variable was last observed: the input channel pulls stale
//! inputs toward their empirical means, the state channel shrinks the
//! hidden state. The observation mask enters every gate pre-activation
//! through its own weight matrices, so missingness patterns themselves are
//! learnable signal.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gru::{GruParams, GruStep};
use super::{check_state, glorot, outer_add, Param, ParamMut};
use crate::dataset::MaskedSeries;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrudParams {
    /// Gate and readout weights, shared layout with the plain GRU.
    pub gru: GruParams,
    pub reset_m: Array2<f64>,  // H x V
    pub cand_m: Array2<f64>,   // H x V
    pub update_m: Array2<f64>, // H x V
    /// Diagonal of the input-decay map: each variable decays by its own
    /// observation gap only.
    pub input_decay_w: Array1<f64>, // V
    pub input_decay_b: Array1<f64>, // V
    pub state_decay_w: Array2<f64>, // H x V
    pub state_decay_b: Array1<f64>, // H
}

/// Hidden state plus the last observed value of each variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GrudRuntimeState {
    pub h: Array1<f64>,
    pub x_last: Array1<f64>,
}

impl GrudRuntimeState {
    /// Initial state: zero hidden state, last-observed values seeded with
    /// the empirical means so a missing first step is well defined.
    pub fn initial(hidden: usize, means: &Array1<f64>) -> Self {
        GrudRuntimeState { h: Array1::zeros(hidden), x_last: means.clone() }
    }
}

/// `exp(-max(0, w δ + b))`, elementwise in (0, 1].
pub fn decay_rates(w: &Array2<f64>, b: &Array1<f64>, delta: &Array1<f64>) -> Array1<f64> {
    let mut q = w.dot(delta);
    q += b;
    q.mapv_into(|z| (-z.max(0.0)).exp())
}

/// Same with a diagonal weight matrix stored as a vector.
pub fn decay_rates_diag(w: &Array1<f64>, b: &Array1<f64>, delta: &Array1<f64>) -> Array1<f64> {
    let mut out = Array1::zeros(w.len());
    for i in 0..w.len() {
        out[i] = (-(w[i] * delta[i] + b[i]).max(0.0)).exp();
    }
    out
}

/// Observed entries pass through; missing entries blend the last observation
/// with the empirical mean according to the decay rate.
pub fn decay_input(
    x: ArrayView1<'_, f64>,
    m: ArrayView1<'_, u8>,
    gamma_x: &Array1<f64>,
    x_last: &Array1<f64>,
    means: &Array1<f64>,
) -> Array1<f64> {
    let mut out = Array1::zeros(x.len());
    for v in 0..x.len() {
        out[v] = if m[v] == 1 {
            x[v]
        } else {
            gamma_x[v] * x_last[v] + (1.0 - gamma_x[v]) * means[v]
        };
    }
    out
}

/// Shrinks the previous hidden state elementwise.
pub fn decay_state(h_prev: &Array1<f64>, gamma_h: &Array1<f64>) -> Array1<f64> {
    h_prev * gamma_h
}

/// One full step on raw (possibly missing) input. `means` is the empirical
/// mean vector the input decay relaxes toward.
pub fn grud_step(
    p: &GrudParams,
    state: &GrudRuntimeState,
    x_raw: ArrayView1<'_, f64>,
    m: ArrayView1<'_, u8>,
    delta: ArrayView1<'_, f64>,
    means: &Array1<f64>,
) -> GrudRuntimeState {
    let step = p.step_full(state, x_raw, m, delta, means);
    GrudRuntimeState { h: step.h_new, x_last: step.x_last_next }
}

pub(crate) struct GrudStepCache {
    pub gamma_x: Array1<f64>,
    pub gamma_h: Array1<f64>,
    pub active_x: Vec<bool>,
    pub active_h: Vec<bool>,
    pub x_hat: Array1<f64>,
    pub h_hat: Array1<f64>,
    pub m_f: Array1<f64>,
    pub x_last: Array1<f64>,
    pub gates: GruStep,
    pub h_new: Array1<f64>,
    pub x_last_next: Array1<f64>,
}

pub(crate) struct GrudSeq {
    pub hs: Vec<Array1<f64>>,
    pub steps: Vec<GrudStepCache>,
}

impl GrudParams {
    pub(crate) fn init(n_vars: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        GrudParams {
            gru: GruParams::init(n_vars, hidden, rng),
            reset_m: glorot(hidden, n_vars, rng),
            cand_m: glorot(hidden, n_vars, rng),
            update_m: glorot(hidden, n_vars, rng),
            input_decay_w: Array1::zeros(n_vars),
            input_decay_b: Array1::zeros(n_vars),
            state_decay_w: Array2::zeros((hidden, n_vars)),
            state_decay_b: Array1::zeros(hidden),
        }
    }

    fn step_full(
        &self,
        state: &GrudRuntimeState,
        x_raw: ArrayView1<'_, f64>,
        m: ArrayView1<'_, u8>,
        delta: ArrayView1<'_, f64>,
        means: &Array1<f64>,
    ) -> GrudStepCache {
        let n_vars = x_raw.len();
        let delta_owned = delta.to_owned();

        let gamma_x = decay_rates_diag(&self.input_decay_w, &self.input_decay_b, &delta_owned);
        let active_x = (0..n_vars)
            .map(|v| self.input_decay_w[v] * delta[v] + self.input_decay_b[v] > 0.0)
            .collect();

        let mut qh = self.state_decay_w.dot(&delta_owned);
        qh += &self.state_decay_b;
        let active_h = qh.iter().map(|&z| z > 0.0).collect();
        let gamma_h = qh.mapv_into(|z| (-z.max(0.0)).exp());

        let x_hat = decay_input(x_raw, m, &gamma_x, &state.x_last, means);
        let h_hat = decay_state(&state.h, &gamma_h);

        let m_f = Array1::from_shape_fn(n_vars, |v| m[v] as f64);
        let mask_r = self.reset_m.dot(&m_f);
        let mask_c = self.cand_m.dot(&m_f);
        let mask_u = self.update_m.dot(&m_f);
        let (r, c, u, h_new) =
            self.gru.gates(&h_hat, x_hat.view(), Some((&mask_r, &mask_c, &mask_u)));

        let mut x_last_next = state.x_last.clone();
        for v in 0..n_vars {
            if m[v] == 1 {
                x_last_next[v] = x_raw[v];
            }
        }

        GrudStepCache {
            gamma_x,
            gamma_h,
            active_x,
            active_h,
            x_hat,
            h_hat,
            m_f,
            x_last: state.x_last.clone(),
            gates: GruStep { r, c, u },
            h_new,
            x_last_next,
        }
    }

    pub(crate) fn forward_seq(
        &self,
        series: &MaskedSeries,
        means: &Array1<f64>,
    ) -> Result<GrudSeq> {
        let t_len = series.t_len();
        let hidden = self.gru.reset_b.len();
        let mut state = GrudRuntimeState::initial(hidden, means);
        let mut hs = Vec::with_capacity(t_len + 1);
        let mut steps = Vec::with_capacity(t_len);
        hs.push(state.h.clone());
        for t in 0..t_len {
            let step = self.step_full(
                &state,
                series.values.row(t),
                series.mask.row(t),
                series.deltas.row(t),
                means,
            );
            check_state(&step.h_new, t + 1)?;
            state = GrudRuntimeState { h: step.h_new.clone(), x_last: step.x_last_next.clone() };
            hs.push(step.h_new.clone());
            steps.push(step);
        }
        Ok(GrudSeq { hs, steps })
    }

    pub(crate) fn backward_seq(
        &self,
        series: &MaskedSeries,
        means: &Array1<f64>,
        cache: &GrudSeq,
        d_last: Array1<f64>,
        g: &mut GrudParams,
    ) {
        let hidden = self.gru.reset_b.len();
        let n_vars = series.n_vars();
        let mut dh = d_last;
        for t in (0..series.t_len()).rev() {
            let step = &cache.steps[t];
            let delta = series.deltas.row(t);
            let mask = series.mask.row(t);

            // Gate gradients against the decayed state and decayed input.
            let (dh_hat_gates, dar, dac, dau) =
                self.gru
                    .backward_gates(&dh, &step.h_hat, step.x_hat.view(), &step.gates, &mut g.gru);

            // Mask-weight gradients share the gate pre-activation gradients.
            outer_add(&mut g.reset_m, &dar, step.m_f.view());
            outer_add(&mut g.cand_m, &dac, step.m_f.view());
            outer_add(&mut g.update_m, &dau, step.m_f.view());

            // Gradient w.r.t. the decayed input, through all three gates.
            let mut dx_hat = self.gru.reset_x.t().dot(&dar);
            dx_hat += &self.gru.cand_x.t().dot(&dac);
            dx_hat += &self.gru.update_x.t().dot(&dau);

            // Input decay: only missing coordinates depend on gamma_x, and
            // the relu contributes subgradient 0 at and below the kink.
            for v in 0..n_vars {
                if mask[v] == 0 && step.active_x[v] {
                    let dgamma = dx_hat[v] * (step.x_last[v] - means[v]);
                    let dq = -dgamma * step.gamma_x[v];
                    g.input_decay_w[v] += dq * delta[v];
                    g.input_decay_b[v] += dq;
                }
            }

            // State decay: h_hat = gamma_h ⊙ h_prev.
            let h_prev = &cache.hs[t];
            let mut dqh = Array1::zeros(hidden);
            for i in 0..hidden {
                if step.active_h[i] {
                    dqh[i] = -dh_hat_gates[i] * h_prev[i] * step.gamma_h[i];
                }
            }
            outer_add(&mut g.state_decay_w, &dqh, delta);
            g.state_decay_b += &dqh;

            // Pass to the previous step through the decay.
            let mut dh_prev = dh_hat_gates;
            for i in 0..hidden {
                dh_prev[i] *= step.gamma_h[i];
            }
            dh = dh_prev;
        }
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(&'static str, bool, Param<'_>)) {
        self.gru.visit(f);
        f("reset_m", true, Param::Mat(&self.reset_m));
        f("cand_m", true, Param::Mat(&self.cand_m));
        f("update_m", true, Param::Mat(&self.update_m));
        f("input_decay_w", true, Param::Vec(&self.input_decay_w));
        f("input_decay_b", false, Param::Vec(&self.input_decay_b));
        f("state_decay_w", true, Param::Mat(&self.state_decay_w));
        f("state_decay_b", false, Param::Vec(&self.state_decay_b));
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&'static str, bool, ParamMut<'_>)) {
        self.gru.visit_mut(f);
        f("reset_m", true, ParamMut::Mat(&mut self.reset_m));
        f("cand_m", true, ParamMut::Mat(&mut self.cand_m));
        f("update_m", true, ParamMut::Mat(&mut self.update_m));
        f("input_decay_w", true, ParamMut::Vec(&mut self.input_decay_w));
        f("input_decay_b", false, ParamMut::Vec(&mut self.input_decay_b));
        f("state_decay_w", true, ParamMut::Mat(&mut self.state_decay_w));
        f("state_decay_b", false, ParamMut::Vec(&mut self.state_decay_b));
    }
}
