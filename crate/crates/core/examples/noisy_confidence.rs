//! Confidence from a fitted logistic model instead of the exact posterior.
//! Fewer estimator samples give noisier confidence.

use pconf::data::{
    estimator_optimizer, noisy_confidence_model, sample_pconf_dataset, NoisySpec, TwoGaussianSpec,
};

fn main() -> pconf::Result<()> {
    let spec = TwoGaussianSpec::planar([3.0, 3.0], 4);
    let probe = sample_pconf_dataset(&spec.with_seed(99), 2000)?;

    println!("{:>6} {:>12} {:>8}  alpha", "m", "mean |dr|", "epochs");
    for m in [1000, 500, 100, 20] {
        let est = noisy_confidence_model(&spec, &NoisySpec::new(m, 17), &estimator_optimizer())?;
        let mut err = 0.0;
        for s in &probe {
            err += (est.confidence(&s.x)? - s.r).abs();
        }
        println!(
            "{m:>6} {:>12.5} {:>8}  {:.3?}",
            err / probe.len() as f64,
            est.report.epochs_run,
            est.model.alpha()
        );
    }
    println!("Bayes alpha {:?}", spec.bayes_alpha());
    Ok(())
}
