//! Trains a decay-cell classifier on a small synthetic set and prints the
//! learning curve.
//!
//!     cargo run --release --example train_small

use gapnet::cell::CellKind;
use gapnet::dataset::{split, standardize, SplitSpec};
use gapnet::synth::{generate, SynthConfig};
use gapnet::train::{train, TrainConfig};

fn main() -> gapnet::Result<()> {
    let set = generate(&SynthConfig { n_series: 240, seed: 3, ..Default::default() })?;
    let (train_raw, val_raw, _) = split(&set, &SplitSpec { seed: 9, ..Default::default() })?;
    let stats = train_raw.stats.clone();
    let tr = standardize(&train_raw, &stats);
    let va = standardize(&val_raw, &stats);

    let cfg = TrainConfig { epochs: 60, seed: 5, ..Default::default() };
    let outcome = train(&cfg, CellKind::Grud, &tr, &va, None)?;

    println!("epoch  train_loss  val_f1  val_auc");
    for h in outcome.history.iter().step_by(10) {
        println!("{:>5}  {:>10.4}  {:>6.3}  {:>7.3}", h.epoch, h.train_loss, h.val_f1, h.val_auc);
    }
    if let Some(last) = outcome.history.last() {
        println!("{:>5}  {:>10.4}  {:>6.3}  {:>7.3}", last.epoch, last.train_loss, last.val_f1, last.val_auc);
    }
    println!("\nbest validation F1: {:.4}", outcome.best_val_f1.unwrap());
    Ok(())
}
