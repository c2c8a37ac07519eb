//! Elman cell: a single tanh squashing update.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_state, glorot, outer_add, Param, ParamMut, ReadoutParams};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErnnParams {
    pub w_in: Array2<f64>,  // H x V
    pub w_rec: Array2<f64>, // H x H
    pub b: Array1<f64>,     // H
    pub readout: ReadoutParams,
}

/// `h_t = tanh(w_rec h_{t-1} + w_in x_t + b)`
pub fn ernn_step(p: &ErnnParams, h_prev: &Array1<f64>, x: &Array1<f64>) -> Array1<f64> {
    let mut a = p.w_rec.dot(h_prev);
    a += &p.w_in.dot(x);
    a += &p.b;
    a.mapv_into(f64::tanh)
}

pub(crate) struct ErnnSeq {
    /// Hidden states, `hs[0]` is the zero initial state.
    pub hs: Vec<Array1<f64>>,
}

impl ErnnParams {
    pub(crate) fn init(n_vars: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        ErnnParams {
            w_in: glorot(hidden, n_vars, rng),
            w_rec: glorot(hidden, hidden, rng),
            b: Array1::zeros(hidden),
            readout: ReadoutParams::init(hidden, rng),
        }
    }

    pub(crate) fn forward_seq(&self, values: &Array2<f64>) -> Result<ErnnSeq> {
        let t_len = values.nrows();
        let hidden = self.b.len();
        let mut hs = Vec::with_capacity(t_len + 1);
        hs.push(Array1::zeros(hidden));
        for t in 0..t_len {
            let mut a = self.w_rec.dot(&hs[t]);
            a += &self.w_in.dot(&values.row(t));
            a += &self.b;
            let h = a.mapv_into(f64::tanh);
            check_state(&h, t + 1)?;
            hs.push(h);
        }
        Ok(ErnnSeq { hs })
    }

    pub(crate) fn backward_seq(
        &self,
        values: &Array2<f64>,
        cache: &ErnnSeq,
        d_last: Array1<f64>,
        g: &mut ErnnParams,
    ) {
        let t_len = values.nrows();
        let mut dh = d_last;
        for t in (0..t_len).rev() {
            let h = &cache.hs[t + 1];
            let mut da = dh;
            for (d, &hv) in da.iter_mut().zip(h) {
                *d *= 1.0 - hv * hv;
            }
            outer_add(&mut g.w_rec, &da, cache.hs[t].view());
            outer_add(&mut g.w_in, &da, values.row(t));
            g.b += &da;
            dh = self.w_rec.t().dot(&da);
        }
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(&'static str, bool, Param<'_>)) {
        f("w_in", true, Param::Mat(&self.w_in));
        f("w_rec", true, Param::Mat(&self.w_rec));
        f("b", false, Param::Vec(&self.b));
        self.readout.visit(f);
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&'static str, bool, ParamMut<'_>)) {
        f("w_in", true, ParamMut::Mat(&mut self.w_in));
        f("w_rec", true, ParamMut::Mat(&mut self.w_rec));
        f("b", false, ParamMut::Vec(&mut self.b));
        self.readout.visit_mut(f);
    }
}
