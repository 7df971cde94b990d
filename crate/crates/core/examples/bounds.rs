//! Uniform deviation and estimation error bounds, from given constants and
//! from constants measured on a trained model.

use pconf::data::{sample_pconf_dataset, TwoGaussianSpec};
use pconf::risk::{clamp_all, DEFAULT_CONFIDENCE_FLOOR};
use pconf::theory::{empirical_constants, estimation_error_bound, rademacher_linear, uniform_deviation_bound, BoundInputs};
use pconf::{minimize, Basis, LossKind, ObjectiveKind, OptimizerConfig, Regularizer, RiskObjective, TrainingData};

fn main() -> pconf::Result<()> {
    println!("{:>8} {:>14} {:>14}", "n", "deviation", "estimation");
    for n in [100, 1_000, 10_000, 100_000] {
        let (c_ell, l_ell) = LossKind::Logistic.constants(1.0)?;
        let b = BoundInputs {
            n,
            pi_plus: 0.5,
            c_r: 0.01,
            c_ell,
            l_ell,
            rademacher: rademacher_linear(1.0, 1.0, n)?,
            delta: 0.05,
        };
        println!("{n:>8} {:>14.6} {:>14.6}", uniform_deviation_bound(&b)?, estimation_error_bound(&b)?);
    }

    let spec = TwoGaussianSpec::planar([2.0, 2.0], 3);
    let mut data = sample_pconf_dataset(&spec, 1000)?;
    clamp_all(&mut data, DEFAULT_CONFIDENCE_FLOOR)?;
    let basis = Basis::affine(2);
    let objective = RiskObjective::new(ObjectiveKind::Pconf, LossKind::Logistic, Regularizer::none())?;
    let (model, _) = minimize(&objective, TrainingData::Pconf(&data), &basis, &OptimizerConfig::default())?;

    let k = empirical_constants(&basis, model.weight_norm(), &data, LossKind::Logistic, DEFAULT_CONFIDENCE_FLOOR)?;
    let b = k.bound_inputs(0.5, 0.05)?;
    println!("\nmeasured: C_w {:.3}, C_phi {:.3}, C_g {:.3}, C_r {:.4}", k.c_w, k.c_phi, k.c_g, k.c_r);
    println!("deviation bound {:.4}, estimation bound {:.4}", uniform_deviation_bound(&b)?, estimation_error_bound(&b)?);
    Ok(())
}
