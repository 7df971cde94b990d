//! Trains the Pconf classifier and its three baselines on one synthetic task
//! and compares test accuracy.
//!
//! Usage: `cargo run --release --example train_pconf -- [mu] [seed]`
//! where the negative mean is `[mu, mu]` (default 3).

use pconf::data::{sample_labeled_dataset, sample_pconf_dataset, TwoGaussianSpec};
use pconf::risk::{accuracy, clamp_all, DEFAULT_CONFIDENCE_FLOOR};
use pconf::{
    minimize, ridge_regression_fit, Basis, LabeledSample, LossKind, ObjectiveKind, OptimizerConfig, Regularizer,
    RiskObjective, TrainingData,
};

fn main() -> pconf::Result<()> {
    let mut args = std::env::args().skip(1);
    let mu: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let spec = TwoGaussianSpec::planar([mu, mu], seed);
    let mut pconf = sample_pconf_dataset(&spec, 1000)?;
    clamp_all(&mut pconf, DEFAULT_CONFIDENCE_FLOOR)?;
    let labeled = sample_labeled_dataset(&spec.with_seed(seed + 1), 1000, 1000)?;
    let test = sample_labeled_dataset(&spec.with_seed(seed + 2), 1000, 1000)?;

    let basis = Basis::affine(2);
    let cfg = OptimizerConfig::default();
    let fit = |kind, data| -> pconf::Result<_> {
        let objective = RiskObjective::new(kind, LossKind::Logistic, Regularizer::none())?;
        minimize(&objective, data, &basis, &cfg)
    };

    let (pconf_model, report) = fit(ObjectiveKind::Pconf, TrainingData::Pconf(&pconf))?;
    let (weighted_model, _) = fit(ObjectiveKind::Weighted, TrainingData::Pconf(&pconf))?;
    let (supervised_model, _) = fit(ObjectiveKind::Supervised, TrainingData::Labeled(&labeled))?;
    let regression = ridge_regression_fit(&pconf, &basis, 0.0)?;

    println!("negative mean [{mu}, {mu}], Bayes alpha {:?}", spec.bayes_alpha());
    println!(
        "pconf objective {:.4} -> {:.4} in {} epochs, alpha {:?}",
        report.initial_objective,
        report.final_objective,
        report.epochs_run,
        pconf_model.alpha()
    );
    let show = |name: &str, acc: f64| println!("{name:<11} {:6.2}%", 100.0 * acc);
    show("pconf", accuracy(&test, &pconf_model)?);
    show("weighted", accuracy(&test, &weighted_model)?);
    show("regression", accuracy(&test, &regression)?);
    show("supervised", accuracy(&test, &supervised_model)?);

    let positives: Vec<&LabeledSample> = test.iter().filter(|s| s.y == 1).collect();
    println!("({} positive and {} negative test points)", positives.len(), test.len() - positives.len());
    Ok(())
}
