//! Pconf classification with a Gaussian kernel basis, saved and reloaded
//! through the text model format.

use pconf::data::{sample_labeled_dataset, sample_pconf_dataset, TwoGaussianSpec};
use pconf::risk::accuracy;
use pconf::{minimize, Basis, LossKind, ObjectiveKind, OptimizerConfig, Regularizer, RiskObjective, StoredModel, TrainingData};

fn main() -> pconf::Result<()> {
    let spec = TwoGaussianSpec::planar([2.0, 2.0], 21);
    let data = sample_pconf_dataset(&spec, 400)?;
    let test = sample_labeled_dataset(&spec.with_seed(22), 1000, 1000)?;

    let points: Vec<&[f64]> = data.iter().map(|s| s.x.as_slice()).collect();
    let basis = Basis::gaussian_from_points(&points, 30, 0.5, 5)?;
    let objective = RiskObjective::new(ObjectiveKind::Pconf, LossKind::Logistic, Regularizer::ridge(1e-2)?)?;
    let cfg = OptimizerConfig { step_size: 1e-2, max_epochs: 3000, ..OptimizerConfig::default() };
    let (model, report) = minimize(&objective, TrainingData::Pconf(&data), &basis, &cfg)?;

    println!("{} basis functions, objective {:.4}", basis.output_dim(), report.final_objective);
    println!("test accuracy {:.2}%", 100.0 * accuracy(&test, &model)?);

    let text = StoredModel::from(model).to_text();
    let reloaded = StoredModel::from_text(&text, "memory")?;
    println!("reloaded accuracy {:.2}% ({} bytes of model text)", 100.0 * accuracy(&test, &reloaded)?, text.len());
    Ok(())
}
