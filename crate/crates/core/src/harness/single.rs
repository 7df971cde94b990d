//! One-off operations behind the command-line front end: generating a
//! dataset, training one method on a file, evaluating a stored model, and
//! evaluating the bounds for given constants.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::data::{
    derive_seed, estimator_optimizer, noisy_confidence_model, rng_from_seed, sample_labeled_dataset, sample_noisy_pconf_dataset,
    sample_pconf_dataset, NoisySpec, TwoGaussianSpec,
};
use crate::dataset::{read_labeled_csv, read_pconf_csv, write_labeled_csv, write_pconf_csv};
use crate::error::{Error, Result};
use crate::harness::config::{parse_list, KeyValues, Method};
use crate::harness::fmt9;
use crate::loss::LossKind;
use crate::model::{Basis, Margin, Regularizer, StoredModel};
use crate::optim::{minimize, ridge_regression_fit, OptimizerConfig, TrainReport};
use crate::risk::{
    accuracy, is_degenerate, pconf_validation_score, weighted_validation_score, LabeledSample, ObjectiveKind,
    PconfSample, RiskObjective, TrainingData, DEFAULT_CONFIDENCE_FLOOR,
};
use crate::theory::{
    empirical_constants, estimation_error_bound, rademacher_linear, uniform_deviation_bound, BoundInputs,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Pconf,
    Labeled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfidenceSource {
    Analytic,
    /// Logistic-regression estimate from `m` samples per class.
    Noisy { m: usize, l2: f64, seed: u64 },
}

/// What `generate` should emit.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSpec {
    pub kind: DatasetKind,
    pub gaussian: TwoGaussianSpec,
    pub n_pos: usize,
    pub n_neg: usize,
    pub confidence: ConfidenceSource,
}

impl GenerateSpec {
    /// Reads keys `kind`, `mu-plus`, `mu-minus`, `pi-plus`, `seed`, `n-pos`,
    /// `n-neg`, `confidence` (`analytic` or `noisy`), `m`, `l2`, `noisy-seed`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        const KNOWN: [&str; 11] = [
            "kind", "mu-plus", "mu-minus", "pi-plus", "seed", "n-pos", "n-neg", "confidence", "m", "l2", "noisy-seed",
        ];
        if let Some((k, _)) = kv.iter().find(|(k, _)| !KNOWN.contains(k)) {
            return Err(Error::format("generate spec", format!("unknown key '{k}'")));
        }
        let kind = match kv.get("kind").unwrap_or("pconf") {
            "pconf" => DatasetKind::Pconf,
            "labeled" => DatasetKind::Labeled,
            other => return Err(Error::format("generate spec", format!("unknown kind '{other}'"))),
        };
        let mu_plus: Vec<f64> = parse_list("mu-plus", kv.get("mu-plus").unwrap_or("0,0"))?;
        let mu_minus: Vec<f64> = match kv.get("mu-minus") {
            Some(v) => parse_list("mu-minus", v)?,
            None => return Err(Error::format("generate spec", "missing key 'mu-minus'")),
        };
        let seed: u64 = kv.parse_or("seed", 0)?;
        let gaussian = TwoGaussianSpec::new(mu_plus, mu_minus, kv.parse_or("pi-plus", 0.5)?, seed)?;
        let confidence = match kv.get("confidence").unwrap_or("analytic") {
            "analytic" => ConfidenceSource::Analytic,
            "noisy" => ConfidenceSource::Noisy {
                m: kv.parse("m")?,
                l2: kv.parse_or("l2", 1e-3)?,
                seed: kv.parse_or("noisy-seed", derive_seed(seed, &[u64::from(b'n')]))?,
            },
            other => return Err(Error::format("generate spec", format!("unknown confidence '{other}'"))),
        };
        Ok(GenerateSpec {
            kind,
            gaussian,
            n_pos: kv.parse_or("n-pos", 1000)?,
            n_neg: kv.parse_or("n-neg", if kind == DatasetKind::Labeled { 1000 } else { 0 })?,
            confidence,
        })
    }
}

/// Generates the dataset described by `spec` and writes it as CSV. Returns the row count.
pub fn generate(spec: &GenerateSpec, out: &Path) -> Result<usize> {
    match spec.kind {
        DatasetKind::Labeled => {
            let data = sample_labeled_dataset(&spec.gaussian, spec.n_pos, spec.n_neg)?;
            write_labeled_csv(out, &data)?;
            Ok(data.len())
        }
        DatasetKind::Pconf => {
            let data = match &spec.confidence {
                ConfidenceSource::Analytic => sample_pconf_dataset(&spec.gaussian, spec.n_pos)?,
                ConfidenceSource::Noisy { m, l2, seed } => {
                    let noisy = NoisySpec { m: *m, l2_coefficient: *l2, seed: *seed };
                    let est = noisy_confidence_model(&spec.gaussian, &noisy, &estimator_optimizer())?;
                    sample_noisy_pconf_dataset(&spec.gaussian, spec.n_pos, &est)?
                }
            };
            write_pconf_csv(out, &data)?;
            Ok(data.len())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleConfig {
    pub method: Method,
    pub train: PathBuf,
    pub loss: LossKind,
    pub lambda: f64,
    /// Candidate penalties; when non-empty, `lambda` is chosen from them by validation score.
    pub lambda_grid: Vec<f64>,
    /// Fraction of the training file held out for penalty selection.
    pub validation_fraction: f64,
    pub floor: f64,
    pub optimizer: OptimizerConfig,
    pub model_out: Option<PathBuf>,
}

impl SingleConfig {
    pub fn new(method: Method, train: impl Into<PathBuf>) -> Self {
        SingleConfig {
            method,
            train: train.into(),
            loss: LossKind::Logistic,
            lambda: 0.0,
            lambda_grid: Vec::new(),
            validation_fraction: 0.2,
            floor: DEFAULT_CONFIDENCE_FLOOR,
            optimizer: OptimizerConfig::default(),
            model_out: None,
        }
    }

    /// Applies `train` keys from a config file (flag names without dashes).
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        for (key, value) in kv.iter() {
            match key {
                "method" => self.method = kv.parse(key)?,
                "train" => self.train = PathBuf::from(value),
                "loss" => self.loss = kv.parse(key)?,
                "lambda" => self.lambda = kv.parse(key)?,
                "lambda-grid" => self.lambda_grid = parse_list(key, value)?,
                "validation-fraction" => self.validation_fraction = kv.parse(key)?,
                "floor" => self.floor = kv.parse(key)?,
                "epochs" => self.optimizer.max_epochs = kv.parse(key)?,
                "lr" => self.optimizer.step_size = kv.parse(key)?,
                "seed" => self.optimizer.seed = kv.parse(key)?,
                "algorithm" => self.optimizer.algorithm = kv.parse(key)?,
                "model-out" => self.model_out = Some(PathBuf::from(value)),
                other => return Err(Error::format("config", format!("unknown key '{other}' for train"))),
            }
        }
        Ok(())
    }
}

/// Outcome of [`train_single`]; also written next to the model as `<model>.result`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleResult {
    pub method: Method,
    pub loss: LossKind,
    pub lambda: f64,
    pub floor: f64,
    pub seed: u64,
    pub n_train: usize,
    pub train_objective: f64,
    /// Zero-one surrogate on the training file (error rate for the supervised method).
    pub validation_score: f64,
    /// Accuracy on the training file when it is labeled.
    pub train_accuracy: Option<f64>,
    pub epochs: usize,
    pub degenerate: bool,
    pub uniform_deviation_bound: Option<f64>,
    pub estimation_error_bound: Option<f64>,
    /// `(lambda, validation score)` for each grid candidate.
    pub selection: Vec<(f64, f64)>,
}

impl SingleResult {
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map(fmt9).unwrap_or_default();
        writeln!(s, "method={}", self.method).unwrap();
        writeln!(s, "loss={}", self.loss).unwrap();
        writeln!(s, "lambda={}", fmt9(self.lambda)).unwrap();
        writeln!(s, "floor={}", fmt9(self.floor)).unwrap();
        writeln!(s, "seed={}", self.seed).unwrap();
        writeln!(s, "n_train={}", self.n_train).unwrap();
        writeln!(s, "train_objective={}", fmt9(self.train_objective)).unwrap();
        writeln!(s, "validation_score={}", fmt9(self.validation_score)).unwrap();
        writeln!(s, "train_accuracy={}", opt(self.train_accuracy)).unwrap();
        writeln!(s, "epochs={}", self.epochs).unwrap();
        writeln!(s, "degenerate={}", self.degenerate).unwrap();
        writeln!(s, "uniform_deviation_bound={}", opt(self.uniform_deviation_bound)).unwrap();
        writeln!(s, "estimation_error_bound={}", opt(self.estimation_error_bound)).unwrap();
        for (lambda, score) in &self.selection {
            writeln!(s, "selection={},{}", fmt9(*lambda), fmt9(*score)).unwrap();
        }
        s
    }
}

enum TrainSet {
    Pconf(Vec<PconfSample>),
    Labeled(Vec<LabeledSample>),
}

struct Trained {
    model: StoredModel,
    objective: f64,
    report: Option<TrainReport>,
}

fn fit(method: Method, data: &TrainSet, cfg: &SingleConfig, lambda: f64, basis: &Basis) -> Result<Trained> {
    let reg = Regularizer::ridge(lambda)?;
    let run = |kind: ObjectiveKind, train: TrainingData<'_>| -> Result<Trained> {
        let objective = RiskObjective::new(kind, cfg.loss, reg.clone())?;
        let (model, report) = minimize(&objective, train, basis, &cfg.optimizer)?;
        Ok(Trained {
            model: model.into(),
            objective: report.final_objective,
            report: Some(report),
        })
    };
    match (method, data) {
        (Method::Pconf, TrainSet::Pconf(d)) => run(ObjectiveKind::Pconf, TrainingData::Pconf(d)),
        (Method::Weighted, TrainSet::Pconf(d)) => run(ObjectiveKind::Weighted, TrainingData::Pconf(d)),
        (Method::Supervised, TrainSet::Labeled(d)) => run(ObjectiveKind::Supervised, TrainingData::Labeled(d)),
        (Method::Regression, TrainSet::Pconf(d)) => {
            let f = ridge_regression_fit(d, basis, lambda)?;
            let mut sse = 0.0;
            for s in d.iter() {
                let e = f.model.predict_margin(&s.x)? - s.r;
                sse += e * e;
            }
            let w = f.model.weight_norm();
            Ok(Trained {
                objective: sse + lambda * w * w,
                model: f.into(),
                report: None,
            })
        }
        _ => unreachable!("training file kind follows the method"),
    }
}

fn score(method: Method, data: &TrainSet, model: &StoredModel) -> Result<f64> {
    match data {
        TrainSet::Pconf(d) if method == Method::Weighted => weighted_validation_score(d, model),
        TrainSet::Pconf(d) => pconf_validation_score(d, model),
        TrainSet::Labeled(d) => Ok(1.0 - accuracy(d, model)?),
    }
}

fn split(data: &TrainSet, fraction: f64, seed: u64) -> Result<(TrainSet, TrainSet)> {
    fn cut<T: Clone>(v: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
        let n_val = ((v.len() as f64) * fraction).round() as usize;
        if n_val == 0 || n_val >= v.len() {
            return Err(Error::domain(format!(
                "validation fraction {fraction} leaves an empty split of {} samples",
                v.len()
            )));
        }
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.shuffle(&mut rng_from_seed(seed));
        let val = idx[..n_val].iter().map(|&i| v[i].clone()).collect();
        let train = idx[n_val..].iter().map(|&i| v[i].clone()).collect();
        Ok((train, val))
    }
    Ok(match data {
        TrainSet::Pconf(d) => {
            let (t, v) = cut(d, fraction, seed)?;
            (TrainSet::Pconf(t), TrainSet::Pconf(v))
        }
        TrainSet::Labeled(d) => {
            let (t, v) = cut(d, fraction, seed)?;
            (TrainSet::Labeled(t), TrainSet::Labeled(v))
        }
    })
}

/// Trains one method on a CSV file, optionally selecting the penalty on a
/// held-out split, and writes the model and its result record.
pub fn train_single(cfg: &SingleConfig) -> Result<(StoredModel, SingleResult)> {
    cfg.optimizer.validate()?;
    let data = match cfg.method {
        Method::Supervised => TrainSet::Labeled(read_labeled_csv(&cfg.train)?),
        _ => TrainSet::Pconf(read_pconf_csv(&cfg.train, cfg.floor)?),
    };
    let (dim, n_train) = match &data {
        TrainSet::Pconf(d) => (d[0].x.len(), d.len()),
        TrainSet::Labeled(d) => (d[0].x.len(), d.len()),
    };
    let basis = Basis::affine(dim);

    let mut selection = Vec::new();
    let lambda = if cfg.lambda_grid.is_empty() {
        cfg.lambda
    } else {
        let (train, val) = split(&data, cfg.validation_fraction, cfg.optimizer.seed)?;
        let mut best: Option<(f64, f64)> = None;
        for &candidate in &cfg.lambda_grid {
            let t = fit(cfg.method, &train, cfg, candidate, &basis)?;
            let s = score(cfg.method, &val, &t.model)?;
            selection.push((candidate, s));
            if best.is_none_or(|(_, bs)| s < bs) {
                best = Some((candidate, s));
            }
        }
        best.expect("grid is non-empty").0
    };

    let trained = fit(cfg.method, &data, cfg, lambda, &basis)?;
    let validation_score = score(cfg.method, &data, &trained.model)?;
    let linear = match &trained.model {
        StoredModel::Linear(m) => m,
        StoredModel::Thresholded(t) => &t.model,
    };
    let bounds = match &data {
        TrainSet::Pconf(d) if linear.weight_norm() > 0.0 => {
            let k = empirical_constants(&basis, linear.weight_norm(), d, cfg.loss, cfg.floor)?;
            let inputs = k.bound_inputs(0.5, 0.05)?;
            Some((uniform_deviation_bound(&inputs)?, estimation_error_bound(&inputs)?))
        }
        _ => None,
    };
    let result = SingleResult {
        method: cfg.method,
        loss: cfg.loss,
        lambda,
        floor: cfg.floor,
        seed: cfg.optimizer.seed,
        n_train,
        train_objective: trained.objective,
        validation_score,
        train_accuracy: match &data {
            TrainSet::Labeled(d) => Some(accuracy(d, &trained.model)?),
            TrainSet::Pconf(_) => None,
        },
        epochs: trained.report.as_ref().map_or(0, |r| r.epochs_run),
        degenerate: matches!(&data, TrainSet::Pconf(d) if is_degenerate(d)),
        uniform_deviation_bound: bounds.map(|b| b.0),
        estimation_error_bound: bounds.map(|b| b.1),
        selection,
    };
    if result.degenerate {
        log::warn!("every confidence in {} is 1; the data carry no negative information", cfg.train.display());
    }
    if let Some(path) = &cfg.model_out {
        trained.model.save(path)?;
        let record = result_path(path);
        std::fs::write(&record, result.to_record()).map_err(|e| Error::io(&record, e))?;
    }
    Ok((trained.model, result))
}

/// `<model>.result`.
pub fn result_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".result");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub margin_mean: f64,
    pub margin_min: f64,
    pub margin_max: f64,
    pub positive_predictions: usize,
}

impl EvalReport {
    pub fn to_record(&self) -> String {
        format!(
            "n={}\naccuracy={}\nmargin_mean={}\nmargin_min={}\nmargin_max={}\npositive_predictions={}\n",
            self.n,
            fmt9(self.accuracy),
            fmt9(self.margin_mean),
            fmt9(self.margin_min),
            fmt9(self.margin_max),
            self.positive_predictions
        )
    }
}

pub fn evaluate(model: &impl Margin, test: &[LabeledSample]) -> Result<EvalReport> {
    let acc = accuracy(test, model)?;
    let margins = test.iter().map(|s| model.margin(&s.x)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        n: test.len(),
        accuracy: acc,
        margin_mean: margins.iter().sum::<f64>() / margins.len() as f64,
        margin_min: margins.iter().copied().fold(f64::INFINITY, f64::min),
        margin_max: margins.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        positive_predictions: margins.iter().filter(|&&g| g > 0.0).count(),
    })
}

/// Loads a stored model and a labeled CSV and evaluates.
pub fn evaluate_files(model: &Path, test: &Path) -> Result<EvalReport> {
    let model = StoredModel::load(model)?;
    let test = read_labeled_csv(test)?;
    evaluate(&model, &test)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub c_g: f64,
    pub c_ell: f64,
    pub l_ell: f64,
    pub rademacher: f64,
    pub uniform_deviation: f64,
    pub estimation_error: f64,
}

impl BoundReport {
    pub fn to_record(&self) -> String {
        format!(
            "c_g={}\nc_ell={}\nl_ell={}\nrademacher={}\nuniform_deviation_bound={}\nestimation_error_bound={}\n",
            fmt9(self.c_g),
            fmt9(self.c_ell),
            fmt9(self.l_ell),
            fmt9(self.rademacher),
            fmt9(self.uniform_deviation),
            fmt9(self.estimation_error)
        )
    }
}

/// Bounds for a norm-constrained linear class: `C_g = C_w·C_φ`, `R_n ≤ C_w·C_φ/√n`.
pub fn bound_report(n: usize, pi_plus: f64, c_r: f64, loss: LossKind, c_w: f64, c_phi: f64, delta: f64) -> Result<BoundReport> {
    let rademacher = rademacher_linear(c_w, c_phi, n)?;
    let c_g = c_w * c_phi;
    let (c_ell, l_ell) = loss.constants(c_g)?;
    let inputs = BoundInputs { n, pi_plus, c_r, c_ell, l_ell, rademacher, delta };
    Ok(BoundReport {
        c_g,
        c_ell,
        l_ell,
        rademacher,
        uniform_deviation: uniform_deviation_bound(&inputs)?,
        estimation_error: estimation_error_bound(&inputs)?,
    })
}
