//! Empirical risks over positive-confidence and labeled data.
//!
//! Every training objective here has the shape
//!
//! ```text
//! scale · Σ_i [ a_i ℓ(g(x_i)) + b_i ℓ(−g(x_i)) ]  +  (λ/2) αᵀRα
//! ```
//!
//! | objective  | a_i      | b_i           | scale |
//! |------------|----------|---------------|-------|
//! | Pconf      | 1        | (1 − r_i)/r_i | 1     |
//! | Weighted   | r_i      | 1 − r_i       | 1     |
//! | Supervised | [y_i=+1] | [y_i=−1]      | 1/n   |
//!
//! Only the Pconf form is an unbiased estimate (up to the constant π₊) of
//! the classification risk when the patterns come from the positive class.
//! Terms are summed in sample order so results do not depend on threading.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::loss::LossKind;
use crate::model::{dot, Basis, LinearModel, Margin, Regularizer};

/// Default lower bound applied to confidences on load.
pub const DEFAULT_CONFIDENCE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct PconfSample {
    pub x: Vec<f64>,
    /// `p(y = +1 | x)`.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    /// `+1` or `−1`.
    pub y: i8,
}

impl PconfSample {
    pub fn new(x: Vec<f64>, r: f64) -> Self {
        PconfSample { x, r }
    }
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, y: i8) -> Result<Self> {
        if y != 1 && y != -1 {
            return Err(Error::domain(format!("label must be +1 or -1, got {y}")));
        }
        Ok(LabeledSample { x, y })
    }
}

/// `max(r_raw, floor)`.
pub fn clamp_confidence(r_raw: f64, floor: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r_raw) {
        return Err(Error::domain(format!("confidence {r_raw} outside [0, 1]")));
    }
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::domain(format!("confidence floor {floor} outside (0, 1)")));
    }
    Ok(r_raw.max(floor))
}

/// Clamps every confidence in place.
pub fn clamp_all(samples: &mut [PconfSample], floor: f64) -> Result<()> {
    for s in samples {
        s.r = clamp_confidence(s.r, floor)?;
    }
    Ok(())
}

/// True when every confidence is exactly 1, so the data carry no negative information.
pub fn is_degenerate(samples: &[PconfSample]) -> bool {
    samples.iter().all(|s| s.r == 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Pconf,
    Weighted,
    Supervised,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Pconf => "pconf",
            ObjectiveKind::Weighted => "weighted",
            ObjectiveKind::Supervised => "supervised",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pconf" => Ok(ObjectiveKind::Pconf),
            "weighted" => Ok(ObjectiveKind::Weighted),
            "supervised" => Ok(ObjectiveKind::Supervised),
            other => Err(Error::format("objective", format!("unknown objective '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskObjective {
    pub kind: ObjectiveKind,
    pub loss: LossKind,
    pub reg: Regularizer,
}

impl RiskObjective {
    pub fn new(kind: ObjectiveKind, loss: LossKind, reg: Regularizer) -> Result<Self> {
        if !loss.is_trainable() {
            return Err(Error::Unsupported(
                "the zero-one loss cannot be used as a training objective".into(),
            ));
        }
        Ok(RiskObjective { kind, loss, reg })
    }
}

/// Training data matching an [`ObjectiveKind`].
#[derive(Debug, Clone, Copy)]
pub enum TrainingData<'a> {
    Pconf(&'a [PconfSample]),
    Labeled(&'a [LabeledSample]),
}

impl<'a> TrainingData<'a> {
    pub fn len(&self) -> usize {
        match self {
            TrainingData::Pconf(s) => s.len(),
            TrainingData::Labeled(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn pattern(&self, i: usize) -> &'a [f64] {
        match self {
            TrainingData::Pconf(s) => &s[i].x,
            TrainingData::Labeled(s) => &s[i].x,
        }
    }
}

fn check_pconf_confidence(r: f64, i: usize) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::domain(format!(
            "sample {i} has confidence {r}; Pconf risk needs r in (0, 1], apply clamp_confidence first"
        )));
    }
    Ok(())
}

fn check_weight_confidence(r: f64, i: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("sample {i} has confidence {r} outside [0, 1]")));
    }
    Ok(())
}

/// Per-sample loss weights `(a_i, b_i)` and the overall scale.
fn term_weights(kind: ObjectiveKind, data: TrainingData<'_>) -> Result<(Vec<(f64, f64)>, f64)> {
    if data.is_empty() {
        return Err(Error::domain("empirical risk needs at least one sample"));
    }
    match (kind, data) {
        (ObjectiveKind::Pconf, TrainingData::Pconf(s)) => {
            let w = s
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    check_pconf_confidence(p.r, i)?;
                    Ok((1.0, (1.0 - p.r) / p.r))
                })
                .collect::<Result<_>>()?;
            Ok((w, 1.0))
        }
        (ObjectiveKind::Weighted, TrainingData::Pconf(s)) => {
            let w = s
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    check_weight_confidence(p.r, i)?;
                    Ok((p.r, 1.0 - p.r))
                })
                .collect::<Result<_>>()?;
            Ok((w, 1.0))
        }
        (ObjectiveKind::Supervised, TrainingData::Labeled(s)) => {
            let w = s
                .iter()
                .map(|l| if l.y > 0 { (1.0, 0.0) } else { (0.0, 1.0) })
                .collect();
            Ok((w, 1.0 / s.len() as f64))
        }
        (kind, _) => Err(Error::Unsupported(format!(
            "objective '{kind}' does not accept this kind of training data"
        ))),
    }
}

/// An objective bound to its data with features precomputed, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PreparedObjective {
    basis: Basis,
    loss: LossKind,
    reg: Regularizer,
    features: Vec<f64>,
    width: usize,
    weights: Vec<(f64, f64)>,
    scale: f64,
}

impl PreparedObjective {
    pub fn new(objective: &RiskObjective, data: TrainingData<'_>, basis: &Basis) -> Result<Self> {
        if !objective.loss.is_trainable() {
            return Err(Error::Unsupported(
                "the zero-one loss cannot be used as a training objective".into(),
            ));
        }
        let (weights, scale) = term_weights(objective.kind, data)?;
        let width = basis.output_dim();
        let mut features = Vec::with_capacity(width * data.len());
        for i in 0..data.len() {
            let x = data.pattern(i);
            check_dim("pattern", basis.input_dim(), x.len())?;
            basis.featurize_into(x, &mut features);
        }
        Ok(PreparedObjective {
            basis: basis.clone(),
            loss: objective.loss,
            reg: objective.reg.clone(),
            features,
            width,
            weights,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Objective value; gradient written into `grad` when given.
    pub fn evaluate(&self, alpha: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
        check_dim("weight vector", self.width, alpha.len())?;
        let loss = self.loss;
        let mut value = 0.0;
        match grad {
            Some(grad) => {
                check_dim("gradient buffer", self.width, grad.len())?;
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (phi, &(a, b)) in self.features.chunks_exact(self.width).zip(&self.weights) {
                    let z = dot(alpha, phi);
                    let mut term = 0.0;
                    let mut dz = 0.0;
                    if a != 0.0 {
                        term += a * loss.eval(z);
                        dz += a * loss.deriv(z);
                    }
                    if b != 0.0 {
                        term += b * loss.eval(-z);
                        dz -= b * loss.deriv(-z);
                    }
                    value += term;
                    if dz != 0.0 {
                        let c = self.scale * dz;
                        grad.iter_mut().zip(phi).for_each(|(g, p)| *g += c * p);
                    }
                }
                value *= self.scale;
                value += self.reg.accumulate(&self.basis, alpha, grad)?;
            }
            None => {
                for (phi, &(a, b)) in self.features.chunks_exact(self.width).zip(&self.weights) {
                    let z = dot(alpha, phi);
                    let mut term = 0.0;
                    if a != 0.0 {
                        term += a * loss.eval(z);
                    }
                    if b != 0.0 {
                        term += b * loss.eval(-z);
                    }
                    value += term;
                }
                value *= self.scale;
                let mut scratch = vec![0.0; self.width];
                value += self.reg.accumulate(&self.basis, alpha, &mut scratch)?;
            }
        }
        Ok(value)
    }
}

fn risk_with_grad(
    kind: ObjectiveKind,
    data: TrainingData<'_>,
    model: &LinearModel,
    loss: LossKind,
    reg: &Regularizer,
) -> Result<(f64, Vec<f64>)> {
    let objective = RiskObjective::new(kind, loss, reg.clone())?;
    let prepared = PreparedObjective::new(&objective, data, model.basis())?;
    let mut grad = vec![0.0; prepared.dim()];
    let value = prepared.evaluate(model.alpha(), Some(&mut grad))?;
    Ok((value, grad))
}

/// `Σ_i [ℓ(g(x_i)) + (1−r_i)/r_i · ℓ(−g(x_i))] + (λ/2) αᵀRα` and its gradient in α.
pub fn pconf_risk(
    samples: &[PconfSample],
    model: &LinearModel,
    loss: LossKind,
    reg: &Regularizer,
) -> Result<(f64, Vec<f64>)> {
    risk_with_grad(ObjectiveKind::Pconf, TrainingData::Pconf(samples), model, loss, reg)
}

/// Unregularized Pconf objective divided by `n`.
pub fn pconf_risk_mean(samples: &[PconfSample], model: &LinearModel, loss: LossKind) -> Result<f64> {
    let (v, _) = pconf_risk(samples, model, loss, &Regularizer::none())?;
    Ok(v / samples.len() as f64)
}

/// `π₊ ×` the mean Pconf objective: an unbiased estimate of the classification risk.
pub fn pconf_risk_estimate(
    samples: &[PconfSample],
    model: &LinearModel,
    loss: LossKind,
    pi_plus: f64,
) -> Result<f64> {
    if !(pi_plus > 0.0 && pi_plus < 1.0) {
        return Err(Error::domain(format!("class prior {pi_plus} outside (0, 1)")));
    }
    Ok(pi_plus * pconf_risk_mean(samples, model, loss)?)
}

/// `Σ_i [r_i ℓ(g(x_i)) + (1−r_i) ℓ(−g(x_i))] + (λ/2) αᵀRα` and its gradient.
pub fn weighted_risk(
    samples: &[PconfSample],
    model: &LinearModel,
    loss: LossKind,
    reg: &Regularizer,
) -> Result<(f64, Vec<f64>)> {
    risk_with_grad(ObjectiveKind::Weighted, TrainingData::Pconf(samples), model, loss, reg)
}

/// `(1/n) Σ_i ℓ(y_i g(x_i)) + (λ/2) αᵀRα` and its gradient.
pub fn supervised_risk(
    samples: &[LabeledSample],
    model: &LinearModel,
    loss: LossKind,
    reg: &Regularizer,
) -> Result<(f64, Vec<f64>)> {
    risk_with_grad(ObjectiveKind::Supervised, TrainingData::Labeled(samples), model, loss, reg)
}

fn zero_one(z: f64) -> f64 {
    LossKind::ZeroOne.eval(z)
}

/// Zero-one version of the Pconf objective, averaged over samples. Needs no negative data.
pub fn pconf_validation_score(samples: &[PconfSample], model: &(impl Margin + ?Sized)) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("validation score needs at least one sample"));
    }
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        check_pconf_confidence(s.r, i)?;
        let g = model.margin(&s.x)?;
        total += zero_one(g) + (1.0 - s.r) / s.r * zero_one(-g);
    }
    Ok(total / samples.len() as f64)
}

/// Zero-one version of the weighted objective, averaged over samples.
pub fn weighted_validation_score(samples: &[PconfSample], model: &(impl Margin + ?Sized)) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("validation score needs at least one sample"));
    }
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        check_weight_confidence(s.r, i)?;
        let g = model.margin(&s.x)?;
        total += s.r * zero_one(g) + (1.0 - s.r) * zero_one(-g);
    }
    Ok(total / samples.len() as f64)
}

/// Fraction of samples whose predicted label matches.
pub fn accuracy(samples: &[LabeledSample], model: &(impl Margin + ?Sized)) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("accuracy needs at least one sample"));
    }
    let mut correct = 0usize;
    for s in samples {
        if model.predict_label(&s.x)? == s.y {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}
