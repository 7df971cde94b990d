//! Synthetic two-Gaussian tasks with exact or estimated positive confidence.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded with a `u64`, and normal
//! variates from `rand_distr`'s ziggurat `StandardNormal`. Both are
//! platform-independent, so a seed fixes a dataset bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::loss::{sigmoid, LossKind};
use crate::model::{Basis, LinearModel, Regularizer};
use crate::optim::{minimize, OptimizerConfig, TrainReport};
use crate::risk::{LabeledSample, ObjectiveKind, PconfSample, RiskObjective, TrainingData};

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for a labelled stream of a base seed, e.g. `derive_seed(base, &[cell, trial, TRAIN])`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix_seed(base), |acc, &p| mix_seed(acc ^ mix_seed(p)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two classes `N(μ₊, I)` and `N(μ₋, I)` with prior `π₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGaussianSpec {
    pub mu_plus: Vec<f64>,
    pub mu_minus: Vec<f64>,
    pub pi_plus: f64,
    pub seed: u64,
}

impl TwoGaussianSpec {
    pub fn new(mu_plus: Vec<f64>, mu_minus: Vec<f64>, pi_plus: f64, seed: u64) -> Result<Self> {
        check_dim("negative mean", mu_plus.len(), mu_minus.len())?;
        if mu_plus.is_empty() {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if mu_plus.iter().chain(&mu_minus).any(|v| !v.is_finite()) {
            return Err(Error::domain("class means must be finite"));
        }
        if !(pi_plus > 0.0 && pi_plus < 1.0) {
            return Err(Error::domain(format!("class prior {pi_plus} outside (0, 1)")));
        }
        Ok(TwoGaussianSpec {
            mu_plus,
            mu_minus,
            pi_plus,
            seed,
        })
    }

    /// The setup of the synthetic experiments: `μ₊ = [0, 0]`, `π₊ = 0.5`.
    pub fn planar(mu_minus: [f64; 2], seed: u64) -> Self {
        TwoGaussianSpec {
            mu_plus: vec![0.0, 0.0],
            mu_minus: mu_minus.to_vec(),
            pi_plus: 0.5,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu_plus.len()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TwoGaussianSpec { seed, ..self.clone() }
    }

    /// `log[π₊N(x; μ₊, I)] − log[π₋N(x; μ₋, I)]`.
    pub fn log_odds(&self, x: &[f64]) -> f64 {
        let dp: f64 = x.iter().zip(&self.mu_plus).map(|(a, m)| (a - m) * (a - m)).sum();
        let dm: f64 = x.iter().zip(&self.mu_minus).map(|(a, m)| (a - m) * (a - m)).sum();
        (self.pi_plus / (1.0 - self.pi_plus)).ln() - 0.5 * (dp - dm)
    }

    /// `p(y = +1 | x)`, computed as a sigmoid of the log-odds.
    pub fn analytic_confidence(&self, x: &[f64]) -> Result<f64> {
        check_dim("pattern", self.dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("pattern must be finite"));
        }
        Ok(sigmoid(self.log_odds(x)))
    }

    /// The Bayes-optimal affine classifier `g(x) = log-odds(x)` as weights over `[x; 1]`.
    pub fn bayes_alpha(&self) -> Vec<f64> {
        let mut alpha: Vec<f64> = self
            .mu_plus
            .iter()
            .zip(&self.mu_minus)
            .map(|(p, m)| p - m)
            .collect();
        let sq = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        alpha.push((self.pi_plus / (1.0 - self.pi_plus)).ln() - 0.5 * (sq(&self.mu_plus) - sq(&self.mu_minus)));
        alpha
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, positive: bool) -> Vec<f64> {
        let mean = if positive { &self.mu_plus } else { &self.mu_minus };
        mean.iter()
            .map(|m| m + rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

/// Free-function form of [`TwoGaussianSpec::analytic_confidence`].
pub fn analytic_confidence(spec: &TwoGaussianSpec, x: &[f64]) -> Result<f64> {
    spec.analytic_confidence(x)
}

/// `n_pos` draws from the positive class paired with `confidence(x)`, seeded by `spec.seed`.
pub fn sample_pconf_with(
    spec: &TwoGaussianSpec,
    n_pos: usize,
    confidence: impl Fn(&[f64]) -> f64,
) -> Result<Vec<PconfSample>> {
    if n_pos == 0 {
        return Err(Error::domain("n_pos must be at least 1"));
    }
    let mut rng = rng_from_seed(spec.seed);
    Ok((0..n_pos)
        .map(|_| {
            let x = spec.draw(&mut rng, true);
            let r = confidence(&x);
            PconfSample::new(x, r)
        })
        .collect())
}

/// Positive draws with their exact confidence.
pub fn sample_pconf_dataset(spec: &TwoGaussianSpec, n_pos: usize) -> Result<Vec<PconfSample>> {
    sample_pconf_with(spec, n_pos, |x| sigmoid(spec.log_odds(x)))
}

/// `n_pos` positives followed by `n_neg` negatives, seeded by `spec.seed`.
pub fn sample_labeled_dataset(spec: &TwoGaussianSpec, n_pos: usize, n_neg: usize) -> Result<Vec<LabeledSample>> {
    let mut rng = rng_from_seed(spec.seed);
    let mut out = Vec::with_capacity(n_pos + n_neg);
    for _ in 0..n_pos {
        out.push(LabeledSample { x: spec.draw(&mut rng, true), y: 1 });
    }
    for _ in 0..n_neg {
        out.push(LabeledSample { x: spec.draw(&mut rng, false), y: -1 });
    }
    Ok(out)
}

/// Settings for the logistic-regression confidence estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySpec {
    /// Samples per class used to fit the estimator.
    pub m: usize,
    pub l2_coefficient: f64,
    pub seed: u64,
}

impl NoisySpec {
    pub fn new(m: usize, seed: u64) -> Self {
        NoisySpec {
            m,
            l2_coefficient: 1e-3,
            seed,
        }
    }
}

/// Confidence estimated by a regularized logistic regression, `x ↦ σ(g(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyConfidence {
    pub model: LinearModel,
    pub report: TrainReport,
}

impl NoisyConfidence {
    pub fn confidence(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.model.predict_margin(x)?))
    }
}

/// Optimizer settings that drive the estimator to gradient norm 1e-8.
///
/// The default step size stalls far from the regularized optimum within its
/// epoch budget, so the estimator uses a larger step and more epochs.
pub fn estimator_optimizer() -> OptimizerConfig {
    OptimizerConfig {
        step_size: 1e-2,
        max_epochs: 100_000,
        grad_tolerance: 1e-8,
        ..OptimizerConfig::default()
    }
}

/// Fits the confidence estimator on `m` fresh positives and `m` fresh negatives.
///
/// Pass [`estimator_optimizer`] to train to convergence.
pub fn noisy_confidence_model(
    spec: &TwoGaussianSpec,
    noisy: &NoisySpec,
    optimizer: &OptimizerConfig,
) -> Result<NoisyConfidence> {
    if noisy.m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    let data = sample_labeled_dataset(&spec.with_seed(noisy.seed), noisy.m, noisy.m)?;
    let objective = RiskObjective::new(
        ObjectiveKind::Supervised,
        LossKind::Logistic,
        Regularizer::ridge(noisy.l2_coefficient)?,
    )?;
    let (model, report) = minimize(&objective, TrainingData::Labeled(&data), &Basis::affine(spec.dim()), optimizer)?;
    if report.final_grad_norm > optimizer.grad_tolerance {
        log::warn!(
            "confidence estimator stopped at gradient norm {:.3e} after {} epochs",
            report.final_grad_norm,
            report.epochs_run
        );
    }
    Ok(NoisyConfidence { model, report })
}

/// Positive draws labelled with the estimator's confidence. Not clamped.
pub fn sample_noisy_pconf_dataset(
    spec: &TwoGaussianSpec,
    n_pos: usize,
    estimator: &NoisyConfidence,
) -> Result<Vec<PconfSample>> {
    sample_pconf_with(spec, n_pos, |x| {
        estimator.confidence(x).expect("pattern dimension fixed by spec")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec22() -> TwoGaussianSpec {
        TwoGaussianSpec::planar([2.0, 2.0], 1)
    }

    /// Direct ratio of the two Gaussian densities.
    fn density_oracle(spec: &TwoGaussianSpec, x: &[f64]) -> f64 {
        let pdf = |mu: &[f64]| {
            let sq: f64 = x.iter().zip(mu).map(|(a, m)| (a - m) * (a - m)).sum();
            (-0.5 * sq).exp() / (2.0 * std::f64::consts::PI).powf(x.len() as f64 / 2.0)
        };
        let p = spec.pi_plus * pdf(&spec.mu_plus);
        let n = (1.0 - spec.pi_plus) * pdf(&spec.mu_minus);
        p / (p + n)
    }

    #[test]
    fn confidence_examples() {
        let s = spec22();
        assert_eq!(s.analytic_confidence(&[1.0, 1.0]).unwrap(), 0.5);
        let r0 = s.analytic_confidence(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(r0, 0.98201379003790844, max_relative = 1e-14);
        assert_relative_eq!(r0, density_oracle(&s, &[0.0, 0.0]), max_relative = 1e-12);
        let far = s.analytic_confidence(&[10.0, 10.0]).unwrap();
        assert!(far > 0.0 && far < 1e-10);
        // exp(-36) from 40-digit arithmetic
        assert_relative_eq!(far, 2.3195228302435688e-16, max_relative = 1e-12);
        assert!(s.analytic_confidence(&[100.0, 100.0]).unwrap() > 0.0);
        assert!(s.analytic_confidence(&[1.0]).is_err());
    }

    #[test]
    fn pconf_sampling() {
        let s = spec22();
        let data = sample_pconf_dataset(&s, 1000).unwrap();
        assert_eq!(data.len(), 1000);
        for k in 0..2 {
            let mean = data.iter().map(|p| p.x[k]).sum::<f64>() / 1000.0;
            assert!(mean.abs() < 4.0 / 1000f64.sqrt());
        }
        assert!(data.iter().all(|p| p.r > 0.0 && p.r < 1.0));
        assert_eq!(data, sample_pconf_dataset(&s, 1000).unwrap());
        assert_ne!(data, sample_pconf_dataset(&s.with_seed(2), 1000).unwrap());
        assert!(sample_pconf_dataset(&s, 0).is_err());
    }

    #[test]
    fn labeled_sampling() {
        let s = spec22();
        let only_neg = sample_labeled_dataset(&s, 0, 5).unwrap();
        assert_eq!(only_neg.len(), 5);
        assert!(only_neg.iter().all(|l| l.y == -1));
        let mixed = sample_labeled_dataset(&s, 7, 3).unwrap();
        assert_eq!(mixed.iter().filter(|l| l.y == 1).count(), 7);
        assert_eq!(mixed.iter().filter(|l| l.y == -1).count(), 3);
    }

    #[test]
    fn derived_seeds_do_not_collide() {
        let mut seen = std::collections::HashSet::new();
        for cell in 0..6 {
            for trial in 0..10 {
                for stream in 0..4 {
                    assert!(seen.insert(derive_seed(42, &[cell, trial, stream])));
                }
            }
        }
    }

    #[test]
    fn bayes_alpha_reproduces_log_odds() {
        let s = TwoGaussianSpec::new(vec![0.5, -1.0], vec![2.0, 3.0], 0.3, 0).unwrap();
        let m = LinearModel::new(Basis::affine(2), s.bayes_alpha()).unwrap();
        for x in [[0.0, 0.0], [1.0, -2.0], [3.5, 0.25]] {
            assert_relative_eq!(m.predict_margin(&x).unwrap(), s.log_odds(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(TwoGaussianSpec::new(vec![0.0], vec![0.0, 1.0], 0.5, 0).is_err());
        assert!(TwoGaussianSpec::new(vec![0.0], vec![1.0], 1.0, 0).is_err());
    }

    fn grid() -> Vec<[f64; 2]> {
        let mut g = Vec::new();
        for i in 0..11 {
            for j in 0..11 {
                g.push([-2.0 + 0.5 * i as f64, -2.0 + 0.5 * j as f64]);
            }
        }
        g
    }

    fn mean_abs_error(spec: &TwoGaussianSpec, est: &NoisyConfidence) -> f64 {
        let g = grid();
        g.iter()
            .map(|x| (est.confidence(x).unwrap() - spec.analytic_confidence(x).unwrap()).abs())
            .sum::<f64>()
            / g.len() as f64
    }

    #[test]
    fn large_m_recovers_analytic_confidence() {
        let s = spec22();
        let est = noisy_confidence_model(&s, &NoisySpec::new(20_000, 77), &estimator_optimizer()).unwrap();
        assert!(mean_abs_error(&s, &est) < 0.05, "{}", mean_abs_error(&s, &est));
        for x in grid() {
            let r = est.confidence(&x).unwrap();
            assert!(r > 0.0 && r < 1.0);
        }
    }

    #[test]
    fn fewer_samples_give_noisier_confidence() {
        let s = spec22();
        let avg = |m: usize| {
            (0..10)
                .map(|k| {
                    let est = noisy_confidence_model(&s, &NoisySpec::new(m, 1000 + k), &estimator_optimizer()).unwrap();
                    mean_abs_error(&s, &est)
                })
                .sum::<f64>()
                / 10.0
        };
        let (small, large) = (avg(100), avg(1000));
        assert!(small > large, "m=100: {small}, m=1000: {large}");
    }

    proptest! {
        #[test]
        fn swapping_means_complements_confidence(x0 in -8.0f64..8.0, x1 in -8.0f64..8.0, a in -4.0f64..4.0, b in -4.0f64..4.0) {
            let s = TwoGaussianSpec::new(vec![0.0, 0.0], vec![a, b], 0.5, 0).unwrap();
            let t = TwoGaussianSpec::new(vec![a, b], vec![0.0, 0.0], 0.5, 0).unwrap();
            let x = [x0, x1];
            let sum = s.analytic_confidence(&x).unwrap() + t.analytic_confidence(&x).unwrap();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn half_on_bisecting_hyperplane(t in -10.0f64..10.0, a in 0.5f64..4.0) {
            // Points [a/2 + t, a/2 − t] are equidistant from 0 and [a, a].
            let s = TwoGaussianSpec::planar([a, a], 0);
            let x = [a / 2.0 + t, a / 2.0 - t];
            prop_assert!((s.analytic_confidence(&x).unwrap() - 0.5).abs() <= 1e-12);
        }
    }
}
