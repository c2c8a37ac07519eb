//! Batch gradients via backpropagation through time, and the
//! finite-difference oracle used to verify them.

use ndarray::Array1;

use super::loss::{add_reg_gradient, bce, regularizer, LossSpec};
use crate::cell::{softmax2, Cell};
use crate::dataset::EpisodeSet;
use crate::error::{Error, Result};

/// Forward pass of one sample under an optional dropout mask; returns the
/// class probabilities plus what the backward pass needs.
fn forward_sample(
    cell: &Cell,
    set: &EpisodeSet,
    index: usize,
    means: &Array1<f64>,
    dropout: Option<&Array1<f64>>,
) -> Result<([f64; 2], crate::cell::SeqCache, Array1<f64>)> {
    let cache = cell.forward_cached(&set.series[index], means)?;
    let dropped = match dropout {
        Some(mask) => cache.last_state() * mask,
        None => cache.last_state().clone(),
    };
    let probs = softmax2(cell.readout().logits(&dropped));
    Ok((probs, cache, dropped))
}

/// Loss of a batch, computed with forward passes only. This is the function
/// the finite-difference check perturbs, so it must stay independent of the
/// backward implementation.
pub fn batch_loss(
    cell: &Cell,
    set: &EpisodeSet,
    indices: &[usize],
    means: &Array1<f64>,
    spec: &LossSpec,
    dropout: Option<&[Array1<f64>]>,
) -> Result<f64> {
    let mut total = 0.0;
    for (k, &i) in indices.iter().enumerate() {
        let mask = dropout.map(|d| &d[k]);
        let (probs, _, _) = forward_sample(cell, set, i, means, mask)?;
        total += spec.alpha_for(set.labels[i]) * bce(probs[1], set.labels[i]);
    }
    Ok(total / indices.len() as f64 + spec.lambda * regularizer(cell, spec.reg))
}

/// Exact gradient of [`batch_loss`] with respect to every parameter,
/// together with the loss value. `dropout`, when given, holds one
/// premultiplied keep mask per batch element.
pub fn gradients(
    cell: &Cell,
    set: &EpisodeSet,
    indices: &[usize],
    means: &Array1<f64>,
    spec: &LossSpec,
    dropout: Option<&[Array1<f64>]>,
) -> Result<(Cell, f64)> {
    assert!(!indices.is_empty(), "gradient of an empty batch");
    if let Some(d) = dropout {
        assert_eq!(d.len(), indices.len());
    }
    let n = indices.len() as f64;
    let mut grads = cell.zeros_like();
    let mut total = 0.0;

    for (k, &i) in indices.iter().enumerate() {
        let label = set.labels[i];
        let alpha = spec.alpha_for(label);
        let mask = dropout.map(|d| &d[k]);
        let (probs, cache, dropped) = forward_sample(cell, set, i, means, mask)?;
        total += alpha * bce(probs[1], label);

        // Softmax cross-entropy: dL/dz_k = alpha (p_k - [k == y]) / n.
        let y1 = label as f64;
        let dz = [alpha * (probs[0] - (1.0 - y1)) / n, alpha * (probs[1] - y1) / n];
        let d_dropped = cell.readout().backward(dz, &dropped, grads.readout_mut());
        let d_last = match mask {
            Some(m) => d_dropped * m,
            None => d_dropped,
        };
        cell.backward(&set.series[i], means, &cache, d_last, &mut grads);
    }

    add_reg_gradient(&mut grads, cell, spec.lambda, spec.reg);
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::Numeric(format!("non-finite gradient in parameter '{name}'")));
    }
    Ok((grads, total / n + spec.lambda * regularizer(cell, spec.reg)))
}

/// Central finite differences against the analytic gradient. Returns the
/// maximum relative error over all parameters, with the denominator floored
/// at 1e-8.
pub fn finite_difference_check(
    cell: &Cell,
    set: &EpisodeSet,
    indices: &[usize],
    means: &Array1<f64>,
    spec: &LossSpec,
    dropout: Option<&[Array1<f64>]>,
    eps: f64,
) -> Result<f64> {
    assert!((1e-8..=1e-4).contains(&eps), "step size outside sensible range");
    let (analytic, _) = gradients(cell, set, indices, means, spec, dropout)?;
    let analytic = analytic.to_flat();
    let base = cell.to_flat();
    let mut probe = cell.clone();
    let mut flat = base.clone();
    let mut max_rel = 0.0f64;
    for i in 0..base.len() {
        flat[i] = base[i] + eps;
        probe.set_flat(&flat);
        let up = batch_loss(&probe, set, indices, means, spec, dropout)?;
        flat[i] = base[i] - eps;
        probe.set_flat(&flat);
        let down = batch_loss(&probe, set, indices, means, spec, dropout)?;
        flat[i] = base[i];
        let numeric = (up - down) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellKind;
    use crate::dataset::{EpisodeSet, MaskedSeries};
    use crate::rng::stream_rng;
    use rand::Rng;

    /// Random set with missing entries; V=3, T=5.
    pub(crate) fn random_set(seed: u64, full: bool) -> EpisodeSet {
        let mut rng = stream_rng(seed, 7);
        let series: Vec<MaskedSeries> = (0..4)
            .map(|i| {
                let rows: Vec<Vec<Option<f64>>> = (0..5)
                    .map(|_| {
                        (0..3)
                            .map(|_| {
                                if full || rng.random::<f64>() > 0.35 {
                                    Some(rng.random_range(-1.5..1.5))
                                } else {
                                    None
                                }
                            })
                            .collect()
                    })
                    .collect();
                // make sure each variable shows up at least once
                let rows = {
                    let mut rows = rows;
                    for v in 0..3 {
                        if rows.iter().all(|r| r[v].is_none()) {
                            rows[0][v] = Some(0.1);
                        }
                    }
                    rows
                };
                let ts: Vec<f64> = (0..5).map(|t| t as f64 * 1.5).collect();
                MaskedSeries::from_rows(format!("r{i}"), &rows, ts).unwrap()
            })
            .collect();
        EpisodeSet::new(series, vec![1, 0, 1, 0], vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    #[test]
    fn readout_bias_gradient_matches_closed_form() {
        // zero readout weights, lambda 0: d b_out[k] = mean alpha (p_k - [k==y])
        let set = random_set(1, true);
        let mut cell = Cell::init(CellKind::Ernn, 3, 4, &mut stream_rng(2, 0));
        if let Cell::Ernn(p) = &mut cell {
            p.readout.w_out.fill(0.0);
            p.readout.b_out.fill(0.0);
        }
        let means = Array1::zeros(3);
        let spec = LossSpec { alpha: (0.3, 0.7), lambda: 0.0, reg: Default::default() };
        let idx = [0usize, 1];
        let (grads, _) = gradients(&cell, &set, &idx, &means, &spec, None).unwrap();
        let Cell::Ernn(g) = &grads else { unreachable!() };
        // zero weights => p = (0.5, 0.5) for every sample
        let expect1 = (0.7 * (0.5 - 1.0) + 0.3 * (0.5 - 0.0)) / 2.0;
        let expect0 = (0.7 * (0.5 - 0.0) + 0.3 * (0.5 - 1.0)) / 2.0;
        assert!((g.readout.b_out[1] - expect1).abs() < 1e-12);
        assert!((g.readout.b_out[0] - expect0).abs() < 1e-12);
    }

    #[test]
    fn dead_relu_region_gives_zero_decay_gradient() {
        let set = random_set(3, false);
        let mut cell = Cell::init(CellKind::Grud, 3, 4, &mut stream_rng(4, 0));
        if let Cell::Grud(p) = &mut cell {
            p.input_decay_w.fill(-1.0); // deltas >= 0, so w*delta + 0 <= 0 everywhere
            p.input_decay_b.fill(0.0);
        }
        let means = Array1::from_vec(set.empirical_means.clone());
        let spec = LossSpec::unweighted();
        let (grads, _) = gradients(&cell, &set, &[0, 1, 2, 3], &means, &spec, None).unwrap();
        let Cell::Grud(g) = &grads else { unreachable!() };
        assert!(g.input_decay_w.iter().all(|&x| x == 0.0));
        assert!(g.input_decay_b.iter().all(|&x| x == 0.0));
    }

    /// Fresh decay parameters sit exactly at the relu kink, where the
    /// subgradient convention and central differences disagree by design;
    /// move them off it before differentiating numerically.
    pub(crate) fn randomize_decay(cell: &mut Cell, seed: u64) {
        if let Cell::Grud(p) = cell {
            let mut rng = stream_rng(seed, 5);
            for x in p.input_decay_w.iter_mut().chain(p.input_decay_b.iter_mut()) {
                *x = rng.random_range(0.02..0.3);
            }
            for x in p.state_decay_w.iter_mut().chain(p.state_decay_b.iter_mut()) {
                *x = rng.random_range(-0.1..0.3);
            }
        }
    }

    #[test]
    fn finite_differences_confirm_bptt_for_all_cells() {
        let spec = LossSpec { alpha: (0.4, 0.6), lambda: 1e-3, reg: Default::default() };
        for (kind, full) in [(CellKind::Ernn, true), (CellKind::Gru, true), (CellKind::Grud, false)] {
            let set = random_set(11, full);
            let mut cell = Cell::init(kind, 3, 4, &mut stream_rng(13, 0));
            randomize_decay(&mut cell, 14);
            let means = Array1::from_vec(set.empirical_means.clone());
            let err =
                finite_difference_check(&cell, &set, &[0, 1], &means, &spec, None, 1e-6).unwrap();
            assert!(err < 1e-4, "{kind}: max relative error {err}");
        }
    }

    #[test]
    fn finite_differences_hold_under_fixed_dropout() {
        let set = random_set(21, true);
        let cell = Cell::init(CellKind::Gru, 3, 4, &mut stream_rng(22, 0));
        let means = Array1::zeros(3);
        let spec = LossSpec::unweighted();
        let keep = 0.8;
        let mut rng = stream_rng(23, 0);
        let masks: Vec<Array1<f64>> = (0..2)
            .map(|_| {
                Array1::from_shape_fn(4, |_| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        let err =
            finite_difference_check(&cell, &set, &[0, 1], &means, &spec, Some(&masks), 1e-6)
                .unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn linear_readout_only_model_matches_closed_form_tightly() {
        // all recurrent weights zero: the last state is a constant zero for
        // ERNN, so only the readout bias shapes the loss.
        let set = random_set(31, true);
        let mut cell = Cell::init(CellKind::Ernn, 3, 4, &mut stream_rng(5, 0));
        let zeros = vec![0.0; cell.n_params()];
        cell.set_flat(&zeros);
        if let Cell::Ernn(p) = &mut cell {
            p.readout.b_out[1] = 0.3;
        }
        let means = Array1::zeros(3);
        let spec = LossSpec::unweighted();
        let err = finite_difference_check(&cell, &set, &[0, 1, 2], &means, &spec, None, 1e-6)
            .unwrap();
        assert!(err < 1e-9, "max relative error {err}");
    }
}
