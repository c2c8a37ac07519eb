//! Shows how the three imputation baselines fill the same gappy series.
//!
//!     cargo run --example imputation_methods

use gapnet::dataset::MaskedSeries;
use gapnet::impute::{impute_locf, impute_mean, impute_zero};

fn main() -> gapnet::Result<()> {
    // one variable observed at days 0, 3, 4; another with a leading gap
    let rows = vec![
        vec![Some(5.0), None],
        vec![None, None],
        vec![None, Some(2.5)],
        vec![Some(7.0), None],
        vec![Some(6.0), Some(3.0)],
    ];
    let series = MaskedSeries::from_rows("demo".into(), &rows, vec![0.0, 1.0, 2.0, 3.0, 4.0])?;
    let means = [6.0, 2.75]; // per-variable observed means of a training split

    println!("day   raw            zero           locf           mean");
    let zero = impute_zero(&series);
    let locf = impute_locf(&series, &means);
    let mean = impute_mean(&series, &means);
    for t in 0..series.t_len() {
        let show = |s: &MaskedSeries| {
            format!("[{:>4.1} {:>4.1}]", s.values[[t, 0]], s.values[[t, 1]])
        };
        let raw = {
            let cell = |v: usize| {
                if series.mask[[t, v]] == 1 {
                    format!("{:>4.1}", series.values[[t, v]])
                } else {
                    "   .".to_string()
                }
            };
            format!("[{} {}]", cell(0), cell(1))
        };
        println!(
            "{:>3}   {raw}    {}    {}    {}",
            series.timestamps[t],
            show(&zero),
            show(&locf),
            show(&mean)
        );
    }
    println!("\ndeltas (time since each variable was last observed):");
    for t in 0..series.t_len() {
        println!("{:>3}   [{:>4.1} {:>4.1}]", series.timestamps[t], series.deltas[[t, 0]], series.deltas[[t, 1]]);
    }
    Ok(())
}
