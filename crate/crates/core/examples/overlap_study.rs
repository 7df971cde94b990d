//! A reduced overlap study: accuracy of each method as the negative class
//! moves away from the positive one. Writes trials.csv and summary.csv.
//!
//! Usage: `cargo run --release --example overlap_study -- [trials] [out_dir]`

use pconf::harness::study::{format_table, run_overlap_study};
use pconf::harness::ExperimentConfig;

fn main() -> pconf::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let mut cfg = ExperimentConfig::overlap();
    cfg.trials = trials;
    cfg.mu_minus = vec![[2.0, 2.0], [3.0, 3.0], [4.0, 4.0]];
    cfg.output = args.next().map(Into::into);

    let outcome = run_overlap_study(&cfg)?;
    print!("{}", format_table(&outcome));
    if let Some(dir) = &cfg.output {
        println!("wrote {}", dir.display());
    }
    Ok(())
}
