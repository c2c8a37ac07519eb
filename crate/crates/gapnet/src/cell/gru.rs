//! Gated recurrent unit. Convention: the update gate weighs the new
//! candidate, `h_t = (1 - u_t) ⊙ h_{t-1} + u_t ⊙ h'_t`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_state, glorot, outer_add, sigmoid, Param, ParamMut, ReadoutParams};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub reset_h: Array2<f64>,  // H x H
    pub reset_x: Array2<f64>,  // H x V
    pub reset_b: Array1<f64>,  // H
    pub cand_h: Array2<f64>,   // H x H
    pub cand_x: Array2<f64>,   // H x V
    pub cand_b: Array1<f64>,   // H
    pub update_h: Array2<f64>, // H x H
    pub update_x: Array2<f64>, // H x V
    pub update_b: Array1<f64>, // H
    pub readout: ReadoutParams,
}

/// One GRU step on a fully observed input vector.
pub fn gru_step(p: &GruParams, h_prev: &Array1<f64>, x: &Array1<f64>) -> Array1<f64> {
    p.gates(h_prev, x.view(), None).3
}

pub(crate) struct GruStep {
    pub r: Array1<f64>,
    pub c: Array1<f64>,
    pub u: Array1<f64>,
}

pub(crate) struct GruSeq {
    pub hs: Vec<Array1<f64>>,
    pub steps: Vec<GruStep>,
}

impl GruParams {
    pub(crate) fn init(n_vars: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        GruParams {
            reset_h: glorot(hidden, hidden, rng),
            reset_x: glorot(hidden, n_vars, rng),
            reset_b: Array1::zeros(hidden),
            cand_h: glorot(hidden, hidden, rng),
            cand_x: glorot(hidden, n_vars, rng),
            cand_b: Array1::zeros(hidden),
            update_h: glorot(hidden, hidden, rng),
            update_x: glorot(hidden, n_vars, rng),
            update_b: Array1::zeros(hidden),
            readout: ReadoutParams::init(hidden, rng),
        }
    }

    /// Shared gate arithmetic. `mask_terms`, used by the decay cell, adds
    /// `(V_r m, V m, V_u m)` to the three pre-activations.
    pub(crate) fn gates(
        &self,
        h_prev: &Array1<f64>,
        x: ArrayView1<'_, f64>,
        mask_terms: Option<(&Array1<f64>, &Array1<f64>, &Array1<f64>)>,
    ) -> (Array1<f64>, Array1<f64>, Array1<f64>, Array1<f64>) {
        let mut ar = self.reset_h.dot(h_prev);
        ar += &self.reset_x.dot(&x);
        if let Some((vr, _, _)) = mask_terms {
            ar += vr;
        }
        ar += &self.reset_b;
        let r = ar.mapv_into(sigmoid);

        let hr = h_prev * &r;
        let mut ac = self.cand_h.dot(&hr);
        ac += &self.cand_x.dot(&x);
        if let Some((_, vc, _)) = mask_terms {
            ac += vc;
        }
        ac += &self.cand_b;
        let c = ac.mapv_into(f64::tanh);

        let mut au = self.update_h.dot(h_prev);
        au += &self.update_x.dot(&x);
        if let Some((_, _, vu)) = mask_terms {
            au += vu;
        }
        au += &self.update_b;
        let u = au.mapv_into(sigmoid);

        let mut h = Array1::zeros(h_prev.len());
        for i in 0..h.len() {
            h[i] = (1.0 - u[i]) * h_prev[i] + u[i] * c[i];
        }
        (r, c, u, h)
    }

    pub(crate) fn forward_seq(&self, values: &Array2<f64>) -> Result<GruSeq> {
        let t_len = values.nrows();
        let hidden = self.reset_b.len();
        let mut hs = Vec::with_capacity(t_len + 1);
        let mut steps = Vec::with_capacity(t_len);
        hs.push(Array1::zeros(hidden));
        for t in 0..t_len {
            let (r, c, u, h) = self.gates(&hs[t], values.row(t), None);
            check_state(&h, t + 1)?;
            hs.push(h);
            steps.push(GruStep { r, c, u });
        }
        Ok(GruSeq { hs, steps })
    }

    /// Gradients of the gate parameters for one step, given `dh` w.r.t. the
    /// step output. Returns `(dh_prev, dar, dac, dau)` so callers that add
    /// extra pre-activation terms can extend the chain.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward_gates(
        &self,
        dh: &Array1<f64>,
        h_prev: &Array1<f64>,
        x: ArrayView1<'_, f64>,
        step: &GruStep,
        g: &mut GruParams,
    ) -> (Array1<f64>, Array1<f64>, Array1<f64>, Array1<f64>) {
        let GruStep { r, c, u } = step;

        // update gate: h = (1-u) h_prev + u c
        let mut dau = Array1::zeros(dh.len());
        for i in 0..dh.len() {
            dau[i] = dh[i] * (c[i] - h_prev[i]) * u[i] * (1.0 - u[i]);
        }
        // candidate
        let mut dac = Array1::zeros(dh.len());
        for i in 0..dh.len() {
            dac[i] = dh[i] * u[i] * (1.0 - c[i] * c[i]);
        }

        let mut dh_prev = Array1::zeros(dh.len());
        for i in 0..dh.len() {
            dh_prev[i] = dh[i] * (1.0 - u[i]);
        }

        outer_add(&mut g.update_h, &dau, h_prev.view());
        outer_add(&mut g.update_x, &dau, x);
        g.update_b += &dau;
        dh_prev += &self.update_h.t().dot(&dau);

        let hr = h_prev * r;
        outer_add(&mut g.cand_h, &dac, hr.view());
        outer_add(&mut g.cand_x, &dac, x);
        g.cand_b += &dac;
        let dhr = self.cand_h.t().dot(&dac);
        for i in 0..dh.len() {
            dh_prev[i] += dhr[i] * r[i];
        }

        // reset gate via dhr
        let mut dar = Array1::zeros(dh.len());
        for i in 0..dh.len() {
            dar[i] = dhr[i] * h_prev[i] * r[i] * (1.0 - r[i]);
        }
        outer_add(&mut g.reset_h, &dar, h_prev.view());
        outer_add(&mut g.reset_x, &dar, x);
        g.reset_b += &dar;
        dh_prev += &self.reset_h.t().dot(&dar);

        (dh_prev, dar, dac, dau)
    }

    pub(crate) fn backward_seq(
        &self,
        values: &Array2<f64>,
        cache: &GruSeq,
        d_last: Array1<f64>,
        g: &mut GruParams,
    ) {
        let mut dh = d_last;
        for t in (0..values.nrows()).rev() {
            let (dh_prev, _, _, _) =
                self.backward_gates(&dh, &cache.hs[t], values.row(t), &cache.steps[t], g);
            dh = dh_prev;
        }
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(&'static str, bool, Param<'_>)) {
        f("reset_h", true, Param::Mat(&self.reset_h));
        f("reset_x", true, Param::Mat(&self.reset_x));
        f("reset_b", false, Param::Vec(&self.reset_b));
        f("cand_h", true, Param::Mat(&self.cand_h));
        f("cand_x", true, Param::Mat(&self.cand_x));
        f("cand_b", false, Param::Vec(&self.cand_b));
        f("update_h", true, Param::Mat(&self.update_h));
        f("update_x", true, Param::Mat(&self.update_x));
        f("update_b", false, Param::Vec(&self.update_b));
        self.readout.visit(f);
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&'static str, bool, ParamMut<'_>)) {
        f("reset_h", true, ParamMut::Mat(&mut self.reset_h));
        f("reset_x", true, ParamMut::Mat(&mut self.reset_x));
        f("reset_b", false, ParamMut::Vec(&mut self.reset_b));
        f("cand_h", true, ParamMut::Mat(&mut self.cand_h));
        f("cand_x", true, ParamMut::Mat(&mut self.cand_x));
        f("cand_b", false, ParamMut::Vec(&mut self.cand_b));
        f("update_h", true, ParamMut::Mat(&mut self.update_h));
        f("update_x", true, ParamMut::Mat(&mut self.update_x));
        f("update_b", false, ParamMut::Vec(&mut self.update_b));
        self.readout.visit_mut(f);
    }
}
