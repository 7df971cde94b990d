//! Repeated-trial comparison studies on the two-Gaussian task.
//!
//! Each trial draws fresh training and test sets from its own derived seeds,
//! trains every requested method on the same data, and records test
//! accuracy together with the bound diagnostics of the trained model.
//! Trials run in parallel but results are always ordered by
//! (mean index, m index, method, trial).

use std::path::Path;

use rayon::prelude::*;

use crate::data::{
    derive_seed, estimator_optimizer, mix_seed, noisy_confidence_model, sample_labeled_dataset, sample_noisy_pconf_dataset, sample_pconf_dataset,
    NoisySpec, TwoGaussianSpec,
};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Method, Study};
use crate::harness::fmt9;
use crate::harness::stats::{mean, sample_std, welch_t_test};
use crate::loss::LossKind;
use crate::model::{Basis, Margin, Regularizer, ThresholdedModel};
use crate::optim::{minimize, ridge_regression_fit};
use crate::risk::{
    accuracy, clamp_all, is_degenerate, pconf_validation_score, weighted_validation_score, LabeledSample,
    ObjectiveKind, PconfSample, RiskObjective, TrainingData,
};
use crate::theory::{empirical_constants, estimation_error_bound, uniform_deviation_bound};

/// Stream tags for [`derive_seed`].
const STREAM_TRAIN_POS: u64 = 1;
const STREAM_TRAIN_NEG: u64 = 2;
const STREAM_TEST: u64 = 3;
const STREAM_NOISY: u64 = 4;

/// The independent sub-seeds used by one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub train_pos: u64,
    pub train_neg: u64,
    pub test: u64,
    pub noisy: u64,
}

impl TrialSeeds {
    /// Seeds for negative mean `mu`, estimator size `m` (0 when unused), and `trial`.
    ///
    /// Seeds follow the mean's value rather than its position in the grid, so
    /// a one-cell run reproduces that cell of a full study. Training and test
    /// data do not depend on `m`, so every noise level of a noise-study row
    /// sees the same patterns.
    pub fn derive(base: u64, mu: [f64; 2], m: usize, trial: usize) -> Self {
        let mu = mix_seed(mu[0].to_bits()) ^ mu[1].to_bits();
        let (m, trial) = (m as u64, trial as u64);
        TrialSeeds {
            train_pos: derive_seed(base, &[mu, trial, STREAM_TRAIN_POS]),
            train_neg: derive_seed(base, &[mu, trial, STREAM_TRAIN_NEG]),
            test: derive_seed(base, &[mu, trial, STREAM_TEST]),
            noisy: derive_seed(base, &[mu, trial, STREAM_NOISY, m]),
        }
    }
}

/// Bound diagnostics for a trained model, measured on its Pconf training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundDiagnostics {
    pub c_w: f64,
    pub c_phi: f64,
    pub c_r: f64,
    pub uniform_deviation: f64,
    pub estimation_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub method: Method,
    pub mu_minus: [f64; 2],
    pub m: Option<usize>,
    pub trial: usize,
    /// Seed of the training positives; identifies the trial's data.
    pub seed: u64,
    pub accuracy: f64,
    pub train_objective: f64,
    pub validation_score: f64,
    pub epochs: usize,
    pub grad_norm: f64,
    pub degenerate: bool,
    pub bounds: Option<BoundDiagnostics>,
    /// Set when training failed; the numeric fields are then NaN.
    pub error: Option<String>,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub mu_minus: [f64; 2],
    pub m: Option<usize>,
    pub method: Method,
    pub completed: usize,
    pub failed: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    /// Welch test against Pconf; `None` for Pconf itself, the supervised
    /// baseline, or too few completed trials.
    pub p_vs_pconf: Option<f64>,
    /// Best method of its cell, or not significantly worse than the best at 5%.
    pub best_or_equivalent: bool,
    /// At least half of the cell's trials failed.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub trials: Vec<TrialResult>,
    pub summary: Vec<SummaryRow>,
}

impl StudyOutcome {
    pub fn cell(&self, mu_minus: [f64; 2], m: Option<usize>, method: Method) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.mu_minus == mu_minus && r.m == m && r.method == method)
    }
}

struct TrialData {
    pconf: Vec<PconfSample>,
    labeled_train: Vec<LabeledSample>,
    test: Vec<LabeledSample>,
}

struct Fitted {
    model: Box<dyn Margin + Send>,
    alpha_norm: f64,
    objective: f64,
    epochs: usize,
    grad_norm: f64,
}

fn train_method(method: Method, data: &TrialData, cfg: &ExperimentConfig, basis: &Basis) -> Result<Fitted> {
    let reg = Regularizer::ridge(cfg.lambda)?;
    let run = |kind: ObjectiveKind, train: TrainingData<'_>| -> Result<Fitted> {
        let objective = RiskObjective::new(kind, cfg.loss, reg.clone())?;
        let (model, report) = minimize(&objective, train, basis, &cfg.optimizer)?;
        Ok(Fitted {
            alpha_norm: model.weight_norm(),
            model: Box::new(model),
            objective: report.final_objective,
            epochs: report.epochs_run,
            grad_norm: report.final_grad_norm,
        })
    };
    match method {
        Method::Pconf => run(ObjectiveKind::Pconf, TrainingData::Pconf(&data.pconf)),
        Method::Weighted => run(ObjectiveKind::Weighted, TrainingData::Pconf(&data.pconf)),
        Method::Supervised => run(ObjectiveKind::Supervised, TrainingData::Labeled(&data.labeled_train)),
        Method::Regression => {
            let fit = ridge_regression_fit(&data.pconf, basis, cfg.lambda)?;
            let objective = regression_objective(&fit, &data.pconf, cfg.lambda)?;
            Ok(Fitted {
                alpha_norm: fit.model.weight_norm(),
                model: Box::new(fit),
                objective,
                epochs: 0,
                grad_norm: 0.0,
            })
        }
    }
}

/// `Σ (α·φ(x_i) − r_i)² + λ‖α‖²` at the fitted weights.
fn regression_objective(fit: &ThresholdedModel, data: &[PconfSample], lambda: f64) -> Result<f64> {
    let mut sse = 0.0;
    for s in data {
        let e = fit.model.predict_margin(&s.x)? - s.r;
        sse += e * e;
    }
    let w = fit.model.weight_norm();
    Ok(sse + lambda * w * w)
}

fn diagnostics(basis: &Basis, alpha_norm: f64, data: &[PconfSample], cfg: &ExperimentConfig) -> Option<BoundDiagnostics> {
    if alpha_norm <= 0.0 || !alpha_norm.is_finite() {
        return None;
    }
    let loss = if cfg.loss.is_trainable() { cfg.loss } else { LossKind::Logistic };
    let k = empirical_constants(basis, alpha_norm, data, loss, cfg.floor).ok()?;
    let inputs = k.bound_inputs(0.5, cfg.delta).ok()?;
    Some(BoundDiagnostics {
        c_w: k.c_w,
        c_phi: k.c_phi,
        c_r: k.c_r,
        uniform_deviation: uniform_deviation_bound(&inputs).ok()?,
        estimation_error: estimation_error_bound(&inputs).ok()?,
    })
}

fn failed_result(method: Method, mu: [f64; 2], m: Option<usize>, trial: usize, seed: u64, err: &Error) -> TrialResult {
    TrialResult {
        method,
        mu_minus: mu,
        m,
        trial,
        seed,
        accuracy: f64::NAN,
        train_objective: f64::NAN,
        validation_score: f64::NAN,
        epochs: 0,
        grad_norm: f64::NAN,
        degenerate: false,
        bounds: None,
        error: Some(err.to_string()),
    }
}

fn build_data(cfg: &ExperimentConfig, spec: &TwoGaussianSpec, seeds: &TrialSeeds, m: Option<usize>) -> Result<TrialData> {
    let train_spec = spec.with_seed(seeds.train_pos);
    let mut pconf = match m {
        None => sample_pconf_dataset(&train_spec, cfg.n_pos)?,
        Some(m) => {
            let noisy = NoisySpec {
                m,
                l2_coefficient: cfg.noisy_l2,
                seed: seeds.noisy,
            };
            let estimator = noisy_confidence_model(spec, &noisy, &estimator_optimizer())?;
            sample_noisy_pconf_dataset(&train_spec, cfg.n_pos, &estimator)?
        }
    };
    clamp_all(&mut pconf, cfg.floor)?;
    let mut labeled_train: Vec<LabeledSample> = pconf
        .iter()
        .map(|p| LabeledSample { x: p.x.clone(), y: 1 })
        .collect();
    labeled_train.extend(sample_labeled_dataset(&spec.with_seed(seeds.train_neg), 0, cfg.n_neg)?);
    let test = sample_labeled_dataset(&spec.with_seed(seeds.test), cfg.test_pos, cfg.test_neg)?;
    Ok(TrialData {
        pconf,
        labeled_train,
        test,
    })
}

fn run_trial(cfg: &ExperimentConfig, mu_idx: usize, m_idx: Option<usize>, trial: usize) -> Vec<TrialResult> {
    let mu = cfg.mu_minus[mu_idx];
    let m = m_idx.map(|i| cfg.m_values[i]);
    let seeds = TrialSeeds::derive(cfg.seed, mu, m.unwrap_or(0), trial);
    let spec = TwoGaussianSpec::planar(mu, seeds.train_pos);
    let basis = Basis::affine(2);

    let data = match build_data(cfg, &spec, &seeds, m) {
        Ok(d) => d,
        Err(e) => {
            log::warn!("trial {trial} at mu={mu:?} m={m:?}: data generation failed: {e}");
            return cfg
                .methods
                .iter()
                .map(|&method| failed_result(method, mu, m, trial, seeds.train_pos, &e))
                .collect();
        }
    };
    let degenerate = is_degenerate(&data.pconf);

    cfg.methods
        .iter()
        .map(|&method| {
            let outcome = train_method(method, &data, cfg, &basis).and_then(|fit| {
                let acc = accuracy(&data.test, fit.model.as_ref())?;
                let validation = match method {
                    Method::Weighted => weighted_validation_score(&data.pconf, fit.model.as_ref())?,
                    _ => pconf_validation_score(&data.pconf, fit.model.as_ref())?,
                };
                Ok((fit, acc, validation))
            });
            match outcome {
                Ok((fit, acc, validation)) => TrialResult {
                    method,
                    mu_minus: mu,
                    m,
                    trial,
                    seed: seeds.train_pos,
                    accuracy: acc,
                    train_objective: fit.objective,
                    validation_score: validation,
                    epochs: fit.epochs,
                    grad_norm: fit.grad_norm,
                    degenerate,
                    bounds: diagnostics(&basis, fit.alpha_norm, &data.pconf, cfg),
                    error: None,
                },
                Err(e) => {
                    log::warn!("trial {trial} {method} at mu={mu:?} m={m:?} failed: {e}");
                    failed_result(method, mu, m, trial, seeds.train_pos, &e)
                }
            }
        })
        .collect()
}

fn run_study(cfg: &ExperimentConfig, with_noise: bool) -> Result<StudyOutcome> {
    cfg.validate()?;
    let m_slots: Vec<Option<usize>> = if with_noise {
        (0..cfg.m_values.len()).map(Some).collect()
    } else {
        vec![None]
    };
    let tasks: Vec<(usize, Option<usize>, usize)> = (0..cfg.mu_minus.len())
        .flat_map(|mu| m_slots.iter().flat_map(move |&m| (0..cfg.trials).map(move |t| (mu, m, t))))
        .collect();
    let per_task: Vec<Vec<TrialResult>> = tasks
        .par_iter()
        .map(|&(mu, m, t)| run_trial(cfg, mu, m, t))
        .collect();

    // Reorder from (cell, trial, method) to (cell, method, trial).
    let cells = per_task.len() / cfg.trials;
    let mut trials = Vec::with_capacity(per_task.len() * cfg.methods.len());
    for cell in 0..cells {
        for k in 0..cfg.methods.len() {
            for t in 0..cfg.trials {
                trials.push(per_task[cell * cfg.trials + t][k].clone());
            }
        }
    }
    let summary = summarize(&trials, cfg)?;
    let outcome = StudyOutcome { trials, summary };
    if let Some(dir) = &cfg.output {
        write_outcome(dir, &outcome)?;
    }
    Ok(outcome)
}

/// Overlap study: exact confidence, every configured mean and method.
pub fn run_overlap_study(cfg: &ExperimentConfig) -> Result<StudyOutcome> {
    if cfg.study != Study::Overlap {
        return Err(Error::domain("run_overlap_study needs an overlap config"));
    }
    run_study(cfg, false)
}

/// Noise study: confidence from a logistic regression fitted on `m` samples per class.
pub fn run_noise_study(cfg: &ExperimentConfig) -> Result<StudyOutcome> {
    if cfg.study != Study::Noise {
        return Err(Error::domain("run_noise_study needs a noise config"));
    }
    run_study(cfg, true)
}

/// Per-cell mean and standard deviation, Welch tests against Pconf, and the
/// best-or-equivalent marking among methods that see only Pconf data.
pub fn summarize(trials: &[TrialResult], cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    let mut cell_keys: Vec<([f64; 2], Option<usize>)> = Vec::new();
    for t in trials {
        if !cell_keys.iter().any(|k| k.0 == t.mu_minus && k.1 == t.m) {
            cell_keys.push((t.mu_minus, t.m));
        }
    }
    for (mu, m) in cell_keys {
        let accs = |method: Method| -> Vec<f64> {
            trials
                .iter()
                .filter(|t| t.mu_minus == mu && t.m == m && t.method == method && !t.failed())
                .map(|t| t.accuracy)
                .collect()
        };
        let pconf_accs = accs(Method::Pconf);
        let comparable: Vec<(Method, Vec<f64>)> = cfg
            .methods
            .iter()
            .filter(|me| me.uses_only_pconf_data())
            .map(|&me| (me, accs(me)))
            .filter(|(_, a)| !a.is_empty())
            .collect();
        let best = comparable
            .iter()
            .max_by(|a, b| mean(&a.1).total_cmp(&mean(&b.1)))
            .map(|(me, a)| (*me, a.clone()));

        for &method in &cfg.methods {
            let a = accs(method);
            let total = trials
                .iter()
                .filter(|t| t.mu_minus == mu && t.m == m && t.method == method)
                .count();
            let failed = total - a.len();
            let p_vs_pconf = if method != Method::Pconf && method.uses_only_pconf_data() && a.len() >= 2 && pconf_accs.len() >= 2 {
                Some(welch_t_test(&a, &pconf_accs)?.p_value)
            } else {
                None
            };
            let best_or_equivalent = match &best {
                Some((bm, ba)) if method.uses_only_pconf_data() && !a.is_empty() => {
                    *bm == method || (a.len() >= 2 && ba.len() >= 2 && !welch_t_test(&a, ba)?.significant)
                }
                _ => false,
            };
            rows.push(SummaryRow {
                mu_minus: mu,
                m,
                method,
                completed: a.len(),
                failed,
                mean_accuracy: if a.is_empty() { f64::NAN } else { mean(&a) },
                std_accuracy: if a.is_empty() { f64::NAN } else { sample_std(&a) },
                p_vs_pconf,
                best_or_equivalent,
                flagged: 2 * failed >= total && total > 0,
            });
        }
    }
    Ok(rows)
}

pub const TRIALS_HEADER: &str = "mu_minus_1,mu_minus_2,m,method,trial,seed,accuracy,train_objective,validation_score,epochs,grad_norm,degenerate,c_w,c_phi,c_r,uniform_deviation_bound,estimation_error_bound,failed,error";

pub const SUMMARY_HEADER: &str =
    "mu_minus_1,mu_minus_2,m,method,completed,failed,mean_accuracy,std_accuracy,p_value_vs_pconf,best_or_equivalent,flagged";

fn opt_m(m: Option<usize>) -> String {
    m.map(|v| v.to_string()).unwrap_or_default()
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n', '\r', '"'], " ")
}

pub fn trials_csv(trials: &[TrialResult]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for t in trials {
        let b = t.bounds;
        let bf = |f: fn(&BoundDiagnostics) -> f64| b.as_ref().map(|d| fmt9(f(d))).unwrap_or_default();
        let fields = [
            fmt9(t.mu_minus[0]),
            fmt9(t.mu_minus[1]),
            opt_m(t.m),
            t.method.to_string(),
            t.trial.to_string(),
            t.seed.to_string(),
            fmt9(t.accuracy),
            fmt9(t.train_objective),
            fmt9(t.validation_score),
            t.epochs.to_string(),
            fmt9(t.grad_norm),
            t.degenerate.to_string(),
            bf(|d| d.c_w),
            bf(|d| d.c_phi),
            bf(|d| d.c_r),
            bf(|d| d.uniform_deviation),
            bf(|d| d.estimation_error),
            t.failed().to_string(),
            t.error.as_deref().map(sanitize).unwrap_or_default(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            fmt9(r.mu_minus[0]),
            fmt9(r.mu_minus[1]),
            opt_m(r.m),
            r.method.to_string(),
            r.completed.to_string(),
            r.failed.to_string(),
            fmt9(r.mean_accuracy),
            fmt9(r.std_accuracy),
            r.p_vs_pconf.map(fmt9).unwrap_or_default(),
            r.best_or_equivalent.to_string(),
            r.flagged.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Writes `trials.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn write_outcome(dir: &Path, outcome: &StudyOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let trials = dir.join(TRIALS_FILE);
    std::fs::write(&trials, trials_csv(&outcome.trials)).map_err(|e| Error::io(&trials, e))?;
    let summary = dir.join(SUMMARY_FILE);
    std::fs::write(&summary, summary_csv(&outcome.summary)).map_err(|e| Error::io(&summary, e))
}

/// Human-readable table of mean ± std accuracy in percent; `*` marks best-or-equivalent.
pub fn format_table(outcome: &StudyOutcome) -> String {
    let mut methods: Vec<Method> = Vec::new();
    for r in &outcome.summary {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut out = format!("{:<14}{:>6}", "mu_minus", "m");
    for me in &methods {
        out.push_str(&format!("{:>20}", me.name()));
    }
    out.push('\n');
    let mut seen: Vec<([f64; 2], Option<usize>)> = Vec::new();
    for r in &outcome.summary {
        if seen.contains(&(r.mu_minus, r.m)) {
            continue;
        }
        seen.push((r.mu_minus, r.m));
        out.push_str(&format!(
            "{:<14}{:>6}",
            format!("[{}, {}]", r.mu_minus[0], r.mu_minus[1]),
            opt_m(r.m)
        ));
        for &me in &methods {
            let cell = outcome.cell(r.mu_minus, r.m, me).expect("every method summarized per cell");
            let mark = if cell.best_or_equivalent { "*" } else { " " };
            let flag = if cell.flagged { "!" } else { "" };
            out.push_str(&format!(
                "{:>20}",
                format!("{:.2}±{:.2}{mark}{flag}", 100.0 * cell.mean_accuracy, 100.0 * cell.std_accuracy)
            ));
        }
        out.push('\n');
    }
    out
}
