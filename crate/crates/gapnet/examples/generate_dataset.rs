//! Generates a synthetic dataset, prints its missingness profile, and
//! writes it as a JSON-lines file.
//!
//!     cargo run --release --example generate_dataset

use gapnet::dataset::save_episodes;
use gapnet::synth::{describe, generate, SynthConfig};

fn main() -> gapnet::Result<()> {
    let cfg = SynthConfig { n_series: 200, seed: 7, ..Default::default() };
    let set = generate(&cfg)?;
    let summary = describe(&set);

    println!(
        "{} episodes, {} time steps, {} variables",
        summary.n_series,
        set.t_len(),
        set.n_vars()
    );
    println!(
        "classes: {} controls / {} cases; observed fraction {:.3}\n",
        summary.class_counts[0], summary.class_counts[1], summary.observed_fraction
    );
    println!("{:<8} {:>14} {:>14} {:>12} {:>12}", "variable", "miss(control)", "miss(case)", "mean(ctl)", "mean(case)");
    for (v, name) in set.variable_names.iter().enumerate() {
        let [m0, m1] = summary.missing_rate_by_class[v];
        let [a0, a1] = summary.observed_mean_by_class[v];
        let marker = if cfg.signal_vars().contains(&v) { " <- signal + boosted" } else { "" };
        println!("{name:<8} {m0:>14.3} {m1:>14.3} {a0:>12.3} {a1:>12.3}{marker}");
    }

    let path = std::env::temp_dir().join("gapnet_demo.jsonl");
    save_episodes(&set, &path)?;
    println!("\nwrote {}", path.display());
    Ok(())
}
