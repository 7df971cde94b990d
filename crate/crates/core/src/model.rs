//! Linear-in-parameter models `g(x) = α·φ(x)`.
//!
//! A [`Basis`] fixes the feature map `φ`; a [`LinearModel`] pairs it with a
//! weight vector. [`ThresholdedModel`] shifts the decision threshold away
//! from zero, which is how the regression baseline turns a confidence
//! predictor into a classifier.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    /// `φ(x) = [x; 1]`, so `g(x) = w·x + b` with the bias stored last.
    AffineInput { dim: usize },
    /// `φ_j(x) = exp(−γ‖x − c_j‖²)`.
    GaussianKernel { centers: Vec<Vec<f64>>, gamma: f64 },
}

impl Basis {
    pub fn affine(dim: usize) -> Self {
        Basis::AffineInput { dim }
    }

    pub fn gaussian(centers: Vec<Vec<f64>>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain(format!("kernel bandwidth must be positive, got {gamma}")));
        }
        let first = centers
            .first()
            .ok_or_else(|| Error::domain("Gaussian basis needs at least one center"))?;
        let dim = first.len();
        for c in &centers {
            check_dim("kernel center", dim, c.len())?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain("kernel centers must be finite"));
            }
        }
        Ok(Basis::GaussianKernel { centers, gamma })
    }

    /// Gaussian basis whose centers are a seeded random subsample of `points`.
    pub fn gaussian_from_points(points: &[&[f64]], count: usize, gamma: f64, seed: u64) -> Result<Self> {
        if count == 0 || count > points.len() {
            return Err(Error::domain(format!(
                "cannot pick {count} centers from {} points",
                points.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, points.len(), count).into_vec();
        picked.sort_unstable();
        Basis::gaussian(picked.into_iter().map(|i| points[i].to_vec()).collect(), gamma)
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Basis::AffineInput { dim } => *dim,
            Basis::GaussianKernel { centers, .. } => centers[0].len(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Basis::AffineInput { dim } => dim + 1,
            Basis::GaussianKernel { centers, .. } => centers.len(),
        }
    }

    /// Index of the unpenalized constant feature, if the basis has one.
    pub fn bias_index(&self) -> Option<usize> {
        match self {
            Basis::AffineInput { dim } => Some(*dim),
            Basis::GaussianKernel { .. } => None,
        }
    }

    pub fn featurize(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("pattern", self.input_dim(), x.len())?;
        let mut out = Vec::with_capacity(self.output_dim());
        self.featurize_into(x, &mut out);
        Ok(out)
    }

    /// Appends `φ(x)` to `out`. No dimension check.
    pub(crate) fn featurize_into(&self, x: &[f64], out: &mut Vec<f64>) {
        match self {
            Basis::AffineInput { .. } => {
                out.extend_from_slice(x);
                out.push(1.0);
            }
            Basis::GaussianKernel { centers, gamma } => {
                out.extend(centers.iter().map(|c| {
                    let sq: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    (-gamma * sq).exp()
                }));
            }
        }
    }

    /// `max_i ‖φ(x_i)‖` over the given patterns.
    pub fn feature_norm_sup<'a>(&self, xs: impl IntoIterator<Item = &'a [f64]>) -> Result<f64> {
        let mut sup = 0.0f64;
        for x in xs {
            let phi = self.featurize(x)?;
            sup = sup.max(norm(&phi));
        }
        Ok(sup)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Anything that produces a real-valued margin for a pattern.
pub trait Margin {
    fn input_dim(&self) -> usize;

    fn margin(&self, x: &[f64]) -> Result<f64>;

    /// `+1` when the margin is strictly positive, `−1` otherwise.
    fn predict_label(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.margin(x)? > 0.0 { 1 } else { -1 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    basis: Basis,
    alpha: Vec<f64>,
}

impl LinearModel {
    pub fn new(basis: Basis, alpha: Vec<f64>) -> Result<Self> {
        check_dim("weight vector", basis.output_dim(), alpha.len())?;
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numerical("model weights must be finite".into()));
        }
        Ok(LinearModel { basis, alpha })
    }

    pub fn zeros(basis: Basis) -> Self {
        let alpha = vec![0.0; basis.output_dim()];
        LinearModel { basis, alpha }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `C_w = ‖α‖`.
    pub fn weight_norm(&self) -> f64 {
        norm(&self.alpha)
    }

    pub fn predict_margin(&self, x: &[f64]) -> Result<f64> {
        let phi = self.basis.featurize(x)?;
        Ok(dot(&self.alpha, &phi))
    }
}

impl Margin for LinearModel {
    fn input_dim(&self) -> usize {
        self.basis.input_dim()
    }

    fn margin(&self, x: &[f64]) -> Result<f64> {
        self.predict_margin(x)
    }
}

/// A linear model classified against a nonzero threshold: margin is `α·φ(x) − t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdedModel {
    pub model: LinearModel,
    pub threshold: f64,
}

impl Margin for ThresholdedModel {
    fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    fn margin(&self, x: &[f64]) -> Result<f64> {
        Ok(self.model.predict_margin(x)? - self.threshold)
    }
}

/// Penalty matrix `R` in `(λ/2) αᵀRα`.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyMatrix {
    Identity,
    /// Identity with a zero on the basis' bias coordinate.
    IdentityExceptBias,
    Explicit(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    lambda: f64,
    matrix: PenaltyMatrix,
}

const PSD_TOLERANCE: f64 = 1e-10;

impl Regularizer {
    pub fn new(lambda: f64, matrix: PenaltyMatrix) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be non-negative, got {lambda}")));
        }
        if let PenaltyMatrix::Explicit(m) = &matrix {
            validate_psd(m)?;
        }
        Ok(Regularizer { lambda, matrix })
    }

    pub fn none() -> Self {
        Regularizer {
            lambda: 0.0,
            matrix: PenaltyMatrix::IdentityExceptBias,
        }
    }

    /// `λ` on every coordinate except the bias.
    pub fn ridge(lambda: f64) -> Result<Self> {
        Regularizer::new(lambda, PenaltyMatrix::IdentityExceptBias)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn matrix(&self) -> &PenaltyMatrix {
        &self.matrix
    }

    /// `(λ/2) αᵀRα` and its gradient `λRα`.
    pub fn value_and_grad(&self, basis: &Basis, alpha: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim("weight vector", basis.output_dim(), alpha.len())?;
        let mut grad = vec![0.0; alpha.len()];
        let value = self.accumulate(basis, alpha, &mut grad)?;
        Ok((value, grad))
    }

    /// Adds `λRα` into `grad` and returns the penalty value.
    pub(crate) fn accumulate(&self, basis: &Basis, alpha: &[f64], grad: &mut [f64]) -> Result<f64> {
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        let ra: Vec<f64> = match &self.matrix {
            PenaltyMatrix::Identity => alpha.to_vec(),
            PenaltyMatrix::IdentityExceptBias => {
                let mut v = alpha.to_vec();
                if let Some(b) = basis.bias_index() {
                    v[b] = 0.0;
                }
                v
            }
            PenaltyMatrix::Explicit(m) => {
                check_dim("penalty matrix", alpha.len(), m.nrows())?;
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * alpha[j]).sum())
                    .collect()
            }
        };
        for (g, r) in grad.iter_mut().zip(&ra) {
            *g += self.lambda * r;
        }
        Ok(0.5 * self.lambda * dot(alpha, &ra))
    }
}

fn validate_psd(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::domain("penalty matrix must be square"));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > PSD_TOLERANCE * (1.0 + m[(i, j)].abs()) {
                return Err(Error::domain("penalty matrix must be symmetric"));
            }
        }
    }
    let shifted = m + DMatrix::<f64>::identity(n, n) * PSD_TOLERANCE;
    if shifted.cholesky().is_none() {
        return Err(Error::domain("penalty matrix is not positive semi-definite"));
    }
    Ok(())
}

/// Free-function form of [`Regularizer::value_and_grad`].
pub fn regularization_value_and_grad(
    reg: &Regularizer,
    basis: &Basis,
    alpha: &[f64],
) -> Result<(f64, Vec<f64>)> {
    reg.value_and_grad(basis, alpha)
}

/// A model as written to and read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredModel {
    Linear(LinearModel),
    Thresholded(ThresholdedModel),
}

impl Margin for StoredModel {
    fn input_dim(&self) -> usize {
        match self {
            StoredModel::Linear(m) => m.input_dim(),
            StoredModel::Thresholded(m) => m.input_dim(),
        }
    }

    fn margin(&self, x: &[f64]) -> Result<f64> {
        match self {
            StoredModel::Linear(m) => m.margin(x),
            StoredModel::Thresholded(m) => m.margin(x),
        }
    }
}

const MODEL_MAGIC: &str = "pconf-model 1";

fn fmt_exact(v: f64) -> String {
    // 17 significant digits round-trip every finite double.
    format!("{v:.16e}")
}

impl StoredModel {
    fn parts(&self) -> (&LinearModel, f64) {
        match self {
            StoredModel::Linear(m) => (m, 0.0),
            StoredModel::Thresholded(t) => (&t.model, t.threshold),
        }
    }

    pub fn to_text(&self) -> String {
        let (model, threshold) = self.parts();
        let mut s = String::new();
        writeln!(s, "{MODEL_MAGIC}").unwrap();
        match &model.basis {
            Basis::AffineInput { dim } => {
                writeln!(s, "basis affine").unwrap();
                writeln!(s, "input_dim {dim}").unwrap();
            }
            Basis::GaussianKernel { centers, gamma } => {
                writeln!(s, "basis gaussian").unwrap();
                writeln!(s, "input_dim {}", centers[0].len()).unwrap();
                writeln!(s, "gamma {}", fmt_exact(*gamma)).unwrap();
                for c in centers {
                    let vals: Vec<String> = c.iter().map(|v| fmt_exact(*v)).collect();
                    writeln!(s, "center {}", vals.join(" ")).unwrap();
                }
            }
        }
        if let StoredModel::Thresholded(_) = self {
            writeln!(s, "threshold {}", fmt_exact(threshold)).unwrap();
        }
        let vals: Vec<String> = model.alpha.iter().map(|v| fmt_exact(*v)).collect();
        writeln!(s, "alpha {}", vals.join(" ")).unwrap();
        s
    }

    pub fn from_text(text: &str, source_name: &str) -> Result<Self> {
        let bad = |detail: String| Error::format(source_name, detail);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        if lines.next() != Some(MODEL_MAGIC) {
            return Err(bad(format!("missing '{MODEL_MAGIC}' header")));
        }
        let parse_f = |tok: &str| -> Result<f64> {
            tok.parse::<f64>()
                .map_err(|_| bad(format!("invalid number '{tok}'")))
        };
        let mut kind = None;
        let mut input_dim = None;
        let mut gamma = None;
        let mut centers = Vec::new();
        let mut threshold = None;
        let mut alpha = None;
        for line in lines {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let toks = rest.split_whitespace();
            match key {
                "basis" => kind = Some(rest.trim().to_string()),
                "input_dim" => {
                    input_dim = Some(
                        rest.trim()
                            .parse::<usize>()
                            .map_err(|_| bad(format!("invalid input_dim '{rest}'")))?,
                    )
                }
                "gamma" => gamma = Some(parse_f(rest.trim())?),
                "center" => centers.push(toks.map(parse_f).collect::<Result<Vec<_>>>()?),
                "threshold" => threshold = Some(parse_f(rest.trim())?),
                "alpha" => alpha = Some(toks.map(parse_f).collect::<Result<Vec<_>>>()?),
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        let input_dim = input_dim.ok_or_else(|| bad("missing input_dim".into()))?;
        let basis = match kind.as_deref() {
            Some("affine") => Basis::affine(input_dim),
            Some("gaussian") => {
                let gamma = gamma.ok_or_else(|| bad("missing gamma".into()))?;
                let basis = Basis::gaussian(centers, gamma)?;
                check_dim("kernel center", input_dim, basis.input_dim())?;
                basis
            }
            Some(other) => return Err(bad(format!("unknown basis '{other}'"))),
            None => return Err(bad("missing basis".into())),
        };
        let alpha = alpha.ok_or_else(|| bad("missing alpha".into()))?;
        let model = LinearModel::new(basis, alpha)?;
        Ok(match threshold {
            Some(threshold) => StoredModel::Thresholded(ThresholdedModel { model, threshold }),
            None => StoredModel::Linear(model),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        StoredModel::from_text(&text, &path.display().to_string())
    }
}

impl From<LinearModel> for StoredModel {
    fn from(m: LinearModel) -> Self {
        StoredModel::Linear(m)
    }
}

impl From<ThresholdedModel> for StoredModel {
    fn from(m: ThresholdedModel) -> Self {
        StoredModel::Thresholded(m)
    }
}
