//! Monte Carlo check that the rescaled Pconf objective, computed from
//! positive data alone, tracks the classification risk, while the weighted
//! objective does not.

use pconf::data::{sample_labeled_dataset, sample_pconf_dataset, TwoGaussianSpec};
use pconf::risk::{pconf_risk_estimate, supervised_risk, weighted_risk};
use pconf::{LinearModel, Basis, LossKind, Regularizer};

fn main() -> pconf::Result<()> {
    let n = 200_000;
    let spec = TwoGaussianSpec::planar([2.0, 2.0], 31);
    let positives = sample_pconf_dataset(&spec, n)?;
    let labeled = sample_labeled_dataset(&spec.with_seed(32), n / 2, n / 2)?;

    let mut alpha = spec.bayes_alpha();
    alpha[2] -= 3.0;
    let model = LinearModel::new(Basis::affine(2), alpha)?;
    let loss = LossKind::Logistic;

    let estimate = pconf_risk_estimate(&positives, &model, loss, 0.5)?;
    let (truth, _) = supervised_risk(&labeled, &model, loss, &Regularizer::none())?;
    let (weighted, _) = weighted_risk(&positives, &model, loss, &Regularizer::none())?;

    println!("classification risk (labeled Monte Carlo) {truth:.5}");
    println!("pconf estimate from positives only        {estimate:.5}");
    println!("weighted objective, per sample            {:.5}", weighted / n as f64);
    Ok(())
}
