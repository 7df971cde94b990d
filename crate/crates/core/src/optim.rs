//! Full-batch first-order training and the closed-form regression baseline.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{norm, Basis, LinearModel, ThresholdedModel};
use crate::risk::{PconfSample, PreparedObjective, RiskObjective, TrainingData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Adam with bias-corrected moment estimates.
    AdaptiveMoment,
    GradientDescent,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::AdaptiveMoment => "adam",
            Algorithm::GradientDescent => "gd",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adam" => Ok(Algorithm::AdaptiveMoment),
            "gd" | "gradient-descent" => Ok(Algorithm::GradientDescent),
            other => Err(Error::format("algorithm", format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub grad_tolerance: f64,
    /// Reserved for randomized initialization; the iterate starts at zero.
    pub seed: u64,
    /// Record the objective every this many epochs; 0 disables the trace.
    pub trace_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            algorithm: Algorithm::AdaptiveMoment,
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 10_000,
            grad_tolerance: 1e-8,
            seed: 0,
            trace_every: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::domain(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::domain("beta1 and beta2 must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::domain("epsilon must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::domain("max_epochs must be at least 1"));
        }
        if !(self.grad_tolerance >= 0.0) {
            return Err(Error::domain("grad_tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Weights of the best iterate seen, which is what the returned model holds.
    pub final_alpha: Vec<f64>,
    /// Number of parameter updates performed.
    pub epochs_run: usize,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    pub initial_objective: f64,
    /// `(epoch, objective)` pairs, every `trace_every` epochs.
    pub objective_trace: Vec<(usize, f64)>,
}

struct Best {
    alpha: Vec<f64>,
    value: f64,
    grad_norm: f64,
}

/// Minimizes `objective` over linear models on `basis`, starting from zero weights.
///
/// Runs at most `max_epochs` full-batch updates, stopping early once the
/// gradient norm falls to `grad_tolerance`. Returns the iterate with the
/// lowest objective seen, which need not be the last one.
pub fn minimize(
    objective: &RiskObjective,
    data: TrainingData<'_>,
    basis: &Basis,
    config: &OptimizerConfig,
) -> Result<(LinearModel, TrainReport)> {
    config.validate()?;
    let prepared = PreparedObjective::new(objective, data, basis)?;
    let dim = prepared.dim();
    let mut alpha = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut trace = Vec::new();
    let mut best: Option<Best> = None;
    let mut initial_objective = f64::NAN;
    let mut epochs_run = 0;
    let mut beta1_pow = 1.0;
    let mut beta2_pow = 1.0;

    for epoch in 0..=config.max_epochs {
        let value = prepared.evaluate(&alpha, Some(&mut grad))?;
        let grad_norm = norm(&grad);
        if !value.is_finite() || !grad_norm.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("objective {value}, gradient norm {grad_norm}"),
            });
        }
        if epoch == 0 {
            initial_objective = value;
        }
        if config.trace_every > 0 && epoch % config.trace_every == 0 {
            trace.push((epoch, value));
        }
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(Best {
                alpha: alpha.clone(),
                value,
                grad_norm,
            });
        }
        if epoch == config.max_epochs || grad_norm <= config.grad_tolerance {
            break;
        }

        match config.algorithm {
            Algorithm::AdaptiveMoment => {
                beta1_pow *= config.beta1;
                beta2_pow *= config.beta2;
                let c1 = 1.0 - beta1_pow;
                let c2 = 1.0 - beta2_pow;
                for k in 0..dim {
                    m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
                    v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
                    let m_hat = m[k] / c1;
                    let v_hat = v[k] / c2;
                    alpha[k] -= config.step_size * m_hat / (v_hat.sqrt() + config.epsilon);
                }
            }
            Algorithm::GradientDescent => {
                for k in 0..dim {
                    alpha[k] -= config.step_size * grad[k];
                }
            }
        }
        epochs_run += 1;
    }

    let best = best.expect("at least one evaluation happens");
    let report = TrainReport {
        final_alpha: best.alpha.clone(),
        epochs_run,
        final_objective: best.value,
        final_grad_norm: best.grad_norm,
        initial_objective,
        objective_trace: trace,
    };
    let model = LinearModel::new(basis.clone(), best.alpha)?;
    Ok((model, report))
}

/// Least-squares regression of the confidences on the features,
/// `argmin_α Σ_i (α·φ(x_i) − r_i)² + λ‖α‖²`, solved directly.
///
/// The returned classifier predicts `+1` when the fitted confidence exceeds 0.5.
pub fn ridge_regression_fit(samples: &[PconfSample], basis: &Basis, lambda: f64) -> Result<ThresholdedModel> {
    if samples.is_empty() {
        return Err(Error::domain("regression needs at least one sample"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be non-negative, got {lambda}")));
    }
    let p = basis.output_dim();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut phi = Vec::with_capacity(p);
    for s in samples {
        phi.clear();
        phi.extend(basis.featurize(&s.x)?);
        for i in 0..p {
            rhs[i] += phi[i] * s.r;
            for j in 0..p {
                gram[(i, j)] += phi[i] * phi[j];
            }
        }
    }
    for i in 0..p {
        gram[(i, i)] += lambda;
    }
    let singular = || {
        Error::Numerical(format!(
            "normal matrix is singular at lambda = {lambda}; use a positive lambda"
        ))
    };
    let chol = gram.cholesky().ok_or_else(singular)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
    if lo * lo <= 1e-13 * hi * hi {
        return Err(singular());
    }
    let alpha = chol.solve(&rhs);
    let model = LinearModel::new(basis.clone(), alpha.iter().copied().collect())?;
    Ok(ThresholdedModel {
        model,
        threshold: 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossKind;
    use crate::model::{Margin, PenaltyMatrix, Regularizer};
    use crate::risk::{accuracy, LabeledSample, ObjectiveKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labeled(points: &[(f64, i8)]) -> Vec<LabeledSample> {
        points.iter().map(|&(x, y)| LabeledSample::new(vec![x], y).unwrap()).collect()
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        for bad in [
            OptimizerConfig { max_epochs: 0, ..Default::default() },
            OptimizerConfig { step_size: 0.0, ..Default::default() },
            OptimizerConfig { beta1: 1.0, ..Default::default() },
            OptimizerConfig { epsilon: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn squared_loss_two_points_reaches_closed_form() {
        // Normal equations for Σ (y − w x − b)² on {(1, 1), (−1, −1)} give w = 1, b = 0.
        let data = labeled(&[(1.0, 1), (-1.0, -1)]);
        let obj = RiskObjective::new(ObjectiveKind::Supervised, LossKind::Squared, Regularizer::none()).unwrap();
        let (model, report) =
            minimize(&obj, TrainingData::Labeled(&data), &Basis::affine(1), &OptimizerConfig::default()).unwrap();
        assert!((model.alpha()[0] - 1.0).abs() < 1e-3, "{:?}", model.alpha());
        assert!(model.alpha()[1].abs() < 1e-3);
        assert!(report.final_objective <= report.initial_objective);
    }

    #[test]
    fn single_epoch_contract() {
        let data = labeled(&[(1.0, 1), (-1.0, -1)]);
        let obj = RiskObjective::new(ObjectiveKind::Supervised, LossKind::Logistic, Regularizer::none()).unwrap();
        let cfg = OptimizerConfig { max_epochs: 1, trace_every: 1, ..Default::default() };
        let (_, report) = minimize(&obj, TrainingData::Labeled(&data), &Basis::affine(1), &cfg).unwrap();
        assert_eq!(report.epochs_run, 1);
        assert_eq!(report.objective_trace.len(), 2);
        let zero = OptimizerConfig { max_epochs: 0, ..Default::default() };
        assert!(minimize(&obj, TrainingData::Labeled(&data), &Basis::affine(1), &zero).is_err());
    }

    #[test]
    fn early_stop_on_zero_gradient() {
        // At alpha = 0 every margin sits on the ramp kink, whose subgradient is zero.
        let data = labeled(&[(1.0, 1), (-1.0, -1)]);
        let obj = RiskObjective::new(ObjectiveKind::Supervised, LossKind::Ramp, Regularizer::none()).unwrap();
        let (_, report) =
            minimize(&obj, TrainingData::Labeled(&data), &Basis::affine(1), &OptimizerConfig::default()).unwrap();
        assert_eq!(report.epochs_run, 0);
        assert_eq!(report.final_grad_norm, 0.0);
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let data = labeled(&[(1e3, 1), (-1e3, -1), (2e3, -1)]);
        let obj = RiskObjective::new(ObjectiveKind::Supervised, LossKind::Squared, Regularizer::none()).unwrap();
        let cfg = OptimizerConfig {
            algorithm: Algorithm::GradientDescent,
            step_size: 10.0,
            ..Default::default()
        };
        match minimize(&obj, TrainingData::Labeled(&data), &Basis::affine(1), &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<PconfSample> = (0..200)
            .map(|_| PconfSample::new(vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)], rng.random_range(0.01..1.0)))
            .collect();
        let obj = RiskObjective::new(ObjectiveKind::Pconf, LossKind::Logistic, Regularizer::none()).unwrap();
        let cfg = OptimizerConfig { max_epochs: 500, trace_every: 50, ..Default::default() };
        let a = minimize(&obj, TrainingData::Pconf(&data), &Basis::affine(2), &cfg).unwrap();
        let b = minimize(&obj, TrainingData::Pconf(&data), &Basis::affine(2), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.1.final_objective <= a.1.initial_objective);
    }

    #[test]
    fn strictly_convex_matches_direct_solve() {
        // Squared loss with Identity penalty: minimize (1/n)Σ(y − α·φ)² + (λ/2)‖α‖².
        // Direct solve: (2/n ΦᵀΦ + λI) α = 2/n Φᵀy.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = 6;
        let n = 500;
        let data: Vec<LabeledSample> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = if x[0] + 0.5 * x[1] - 0.2 > 0.0 { 1 } else { -1 };
                LabeledSample::new(x, y).unwrap()
            })
            .collect();
        let lambda = 0.1;
        let basis = Basis::affine(d);
        let reg = Regularizer::new(lambda, PenaltyMatrix::Identity).unwrap();
        let obj = RiskObjective::new(ObjectiveKind::Supervised, LossKind::Squared, reg).unwrap();

        let p = d + 1;
        let mut a = DMatrix::<f64>::identity(p, p) * lambda;
        let mut b = DVector::<f64>::zeros(p);
        for s in &data {
            let phi = basis.featurize(&s.x).unwrap();
            for i in 0..p {
                b[i] += 2.0 / n as f64 * phi[i] * s.y as f64;
                for j in 0..p {
                    a[(i, j)] += 2.0 / n as f64 * phi[i] * phi[j];
                }
            }
        }
        let direct = a.clone().lu().solve(&b).unwrap();
        let lipschitz = a.symmetric_eigenvalues().max();
        let cfg = OptimizerConfig {
            algorithm: Algorithm::GradientDescent,
            step_size: 1.0 / lipschitz,
            grad_tolerance: 1e-7,
            ..Default::default()
        };
        let (model, report) = minimize(&obj, TrainingData::Labeled(&data), &basis, &cfg).unwrap();
        assert!(report.final_grad_norm <= 1e-6, "grad norm {}", report.final_grad_norm);
        let diff: f64 = model.alpha().iter().zip(direct.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        assert!(diff <= 1e-4 * direct.norm());
    }

    #[test]
    fn separable_supervised_reaches_full_training_accuracy() {
        let data = labeled(&[(-3.0, -1), (-2.0, -1), (-0.5, -1), (0.5, 1), (1.5, 1), (4.0, 1)]);
        let obj = RiskObjective::new(ObjectiveKind::Supervised, LossKind::Logistic, Regularizer::none()).unwrap();
        let (model, _) =
            minimize(&obj, TrainingData::Labeled(&data), &Basis::affine(1), &OptimizerConfig::default()).unwrap();
        assert_eq!(accuracy(&data, &model).unwrap(), 1.0);
    }

    #[test]
    fn ridge_examples() {
        // Two points (0, 0), (1, 1): the 2×2 normal equations [[1,1],[1,2]]·[w,b] swapped
        // to (w, b) order give w = 1, b = 0.
        let two = vec![PconfSample::new(vec![0.0], 0.0), PconfSample::new(vec![1.0], 1.0)];
        let fit = ridge_regression_fit(&two, &Basis::affine(1), 0.0).unwrap();
        assert_relative_eq!(fit.model.alpha()[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.model.alpha()[1], 0.0, epsilon = 1e-12);
        assert_eq!(fit.threshold, 0.5);
        assert_relative_eq!(fit.margin(&[1.0]).unwrap(), 0.5, epsilon = 1e-12);

        let ones: Vec<PconfSample> = [[0.0, 1.0], [2.0, -1.0], [1.0, 3.0], [-1.0, 0.5]]
            .iter()
            .map(|x| PconfSample::new(x.to_vec(), 1.0))
            .collect();
        let fit = ridge_regression_fit(&ones, &Basis::affine(2), 0.0).unwrap();
        for s in &ones {
            assert_relative_eq!(fit.model.predict_margin(&s.x).unwrap(), 1.0, epsilon = 1e-10);
        }

        let heavy = ridge_regression_fit(&ones, &Basis::affine(2), 1e12).unwrap();
        assert!(heavy.model.weight_norm() < 1e-10);
    }

    #[test]
    fn ridge_singular_without_penalty() {
        let same = vec![PconfSample::new(vec![1.0], 0.2), PconfSample::new(vec![1.0], 0.9)];
        assert!(matches!(ridge_regression_fit(&same, &Basis::affine(1), 0.0), Err(Error::Numerical(_))));
        assert!(ridge_regression_fit(&same, &Basis::affine(1), 1e-3).is_ok());
    }
}
