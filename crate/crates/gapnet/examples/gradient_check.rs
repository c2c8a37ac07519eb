//! Verifies the analytic backpropagation of every cell against central
//! finite differences on a small random instance.
//!
//!     cargo run --release --example gradient_check

use ndarray::Array1;
use rand::Rng;

use gapnet::cell::{Cell, CellKind};
use gapnet::dataset::{EpisodeSet, MaskedSeries};
use gapnet::rng::stream_rng;
use gapnet::train::{finite_difference_check, LossSpec, RegKind};

fn small_instance(seed: u64, with_missing: bool) -> EpisodeSet {
    let mut rng = stream_rng(seed, 0);
    let series: Vec<MaskedSeries> = (0..2)
        .map(|i| {
            let mut rows: Vec<Vec<Option<f64>>> = (0..5)
                .map(|_| {
                    (0..3)
                        .map(|_| {
                            (!with_missing || rng.random::<f64>() > 0.4)
                                .then(|| rng.random_range(-1.5..1.5))
                        })
                        .collect()
                })
                .collect();
            for v in 0..3 {
                if rows.iter().all(|r| r[v].is_none()) {
                    rows[0][v] = Some(0.2);
                }
            }
            MaskedSeries::from_rows(format!("s{i}"), &rows, vec![0.0, 1.0, 2.5, 3.0, 4.5]).unwrap()
        })
        .collect();
    EpisodeSet::new(series, vec![1, 0], vec!["a".into(), "b".into(), "c".into()]).unwrap()
}

fn main() -> gapnet::Result<()> {
    let spec = LossSpec { alpha: (0.3, 0.7), lambda: 1e-3, reg: RegKind::SumSquares };
    println!("central differences (eps 1e-6) vs analytic gradients, V=3 H=4 T=5 batch=2\n");
    for (kind, with_missing) in
        [(CellKind::Ernn, false), (CellKind::Gru, false), (CellKind::Grud, true)]
    {
        let set = small_instance(11, with_missing);
        let mut cell = Cell::init(kind, 3, 4, &mut stream_rng(13, 0));
        if let Cell::Grud(p) = &mut cell {
            // fresh decay weights sit on the relu kink; move off it so the
            // numeric derivative is well defined everywhere
            let mut rng = stream_rng(17, 0);
            for x in p.input_decay_w.iter_mut().chain(p.input_decay_b.iter_mut()) {
                *x = rng.random_range(0.05..0.3);
            }
            for x in p.state_decay_w.iter_mut().chain(p.state_decay_b.iter_mut()) {
                *x = rng.random_range(-0.1..0.3);
            }
        }
        let means = Array1::from_vec(set.empirical_means.clone());
        let err = finite_difference_check(&cell, &set, &[0, 1], &means, &spec, None, 1e-6)?;
        println!("{:<5}  {} parameters, max relative error {err:.3e}", kind.to_string(), cell.n_params());
    }
    Ok(())
}
