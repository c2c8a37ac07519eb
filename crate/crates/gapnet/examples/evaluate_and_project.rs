//! Full small pipeline: train two cells, evaluate them on the held-out
//! test split, and project their final hidden states onto two principal
//! components (the separation visible in the decay cell's projection is
//! what the classifier exploits).
//!
//!     cargo run --release --example evaluate_and_project

use gapnet::cell::CellKind;
use gapnet::dataset::{split, standardize, SplitSpec};
use gapnet::eval::{pca_last_states, report, score_set};
use gapnet::impute::{ImputationMethod, ImputeKind};
use gapnet::synth::{generate, SynthConfig};
use gapnet::train::{train, TrainConfig};

fn main() -> gapnet::Result<()> {
    let set = generate(&SynthConfig { n_series: 300, seed: 21, ..Default::default() })?;
    let (train_raw, val_raw, test_raw) = split(&set, &SplitSpec { seed: 4, ..Default::default() })?;
    let stats = train_raw.stats.clone();
    let tr = standardize(&train_raw, &stats);
    let va = standardize(&val_raw, &stats);
    let te = standardize(&test_raw, &stats);
    let cfg = TrainConfig { epochs: 80, seed: 2, ..Default::default() };

    for (kind, imputation) in [(CellKind::Grud, None), (CellKind::Ernn, Some(ImputeKind::Mean))] {
        let outcome = train(&cfg, kind, &tr, &va, imputation)?;
        let te_prepared = match imputation {
            Some(m) => ImputationMethod::new(m, tr.empirical_means.clone()).apply_set(&te),
            None => te.clone(),
        };
        let (scores, states) = score_set(&outcome.cell, &te_prepared)?;
        let rep = report(&scores, &te_prepared.labels, 0.5)?;
        println!(
            "{kind}: test AUC {:.3}, F1 {:.3}, confusion tp={} fp={} tn={} fn={}",
            rep.auc, rep.f1, rep.confusion.tp, rep.confusion.fp, rep.confusion.tn, rep.confusion.fn_
        );

        let proj = pca_last_states(&states, &te_prepared.labels)?;
        println!(
            "  top-2 explained variance: {:.3} / {:.3}",
            proj.explained_variance[0], proj.explained_variance[1]
        );
        // class centroids in the projected plane
        let mut sums = [[0.0f64; 2]; 2];
        let mut counts = [0usize; 2];
        for (i, &y) in proj.labels.iter().enumerate() {
            sums[y as usize][0] += proj.coordinates[[i, 0]];
            sums[y as usize][1] += proj.coordinates[[i, 1]];
            counts[y as usize] += 1;
        }
        for (name, c) in ["controls", "cases"].iter().zip(0..2) {
            println!(
                "  {name} centroid: ({:+.3}, {:+.3})",
                sums[c][0] / counts[c] as f64,
                sums[c][1] / counts[c] as f64
            );
        }
    }
    Ok(())
}
