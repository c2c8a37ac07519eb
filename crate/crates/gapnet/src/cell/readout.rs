use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{glorot, outer_add, Param, ParamMut};

/// Linear map from the final hidden state to two class logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    pub w_out: Array2<f64>, // 2 x H
    pub b_out: Array1<f64>, // 2
}

impl ReadoutParams {
    pub(crate) fn init(hidden: usize, rng: &mut impl Rng) -> Self {
        ReadoutParams { w_out: glorot(2, hidden, rng), b_out: Array1::zeros(2) }
    }

    pub(crate) fn logits(&self, h: &Array1<f64>) -> [f64; 2] {
        let z = self.w_out.dot(h) + &self.b_out;
        [z[0], z[1]]
    }

    /// Accumulates readout gradients for logit gradient `dz` and returns the
    /// gradient w.r.t. the (possibly dropped-out) input state.
    pub(crate) fn backward(
        &self,
        dz: [f64; 2],
        h: &Array1<f64>,
        grads: &mut ReadoutParams,
    ) -> Array1<f64> {
        let dz_arr = Array1::from_vec(vec![dz[0], dz[1]]);
        outer_add(&mut grads.w_out, &dz_arr, h.view());
        grads.b_out[0] += dz[0];
        grads.b_out[1] += dz[1];
        self.w_out.t().dot(&dz_arr)
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(&'static str, bool, Param<'_>)) {
        f("w_out", true, Param::Mat(&self.w_out));
        f("b_out", false, Param::Vec(&self.b_out));
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&'static str, bool, ParamMut<'_>)) {
        f("w_out", true, ParamMut::Mat(&mut self.w_out));
        f("b_out", false, ParamMut::Vec(&mut self.b_out));
    }
}

/// Numerically stable two-way softmax.
pub fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}
