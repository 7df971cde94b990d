//! Pconf against the weighted baseline when confidence is estimated from
//! `m` samples per class.

use pconf::harness::study::{format_table, run_noise_study};
use pconf::harness::ExperimentConfig;

fn main() -> pconf::Result<()> {
    let cfg = ExperimentConfig {
        trials: 3,
        mu_minus: vec![[3.0, 3.0]],
        m_values: vec![1000, 100],
        ..ExperimentConfig::noise()
    };
    let outcome = run_noise_study(&cfg)?;
    print!("{}", format_table(&outcome));
    for row in outcome.summary.iter().filter(|r| r.p_vs_pconf.is_some()) {
        println!("m={:?} {}: p = {:.4} against pconf", row.m, row.method, row.p_vs_pconf.unwrap());
    }
    Ok(())
}
