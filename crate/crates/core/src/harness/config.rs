//! Experiment configuration and the flat `key = value` config-file format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::optim::OptimizerConfig;
use crate::risk::DEFAULT_CONFIDENCE_FLOOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Pconf,
    Weighted,
    Regression,
    Supervised,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pconf, Method::Weighted, Method::Regression, Method::Supervised];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pconf => "pconf",
            Method::Weighted => "weighted",
            Method::Regression => "regression",
            Method::Supervised => "supervised",
        }
    }

    /// Methods that learn from Pconf data only, and so are compared by t-test.
    pub fn uses_only_pconf_data(self) -> bool {
        self != Method::Supervised
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pconf" => Ok(Method::Pconf),
            "weighted" => Ok(Method::Weighted),
            "regression" => Ok(Method::Regression),
            "supervised" => Ok(Method::Supervised),
            other => Err(Error::format("method", format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Overlap,
    Noise,
    Single,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Overlap => "overlap",
            Study::Noise => "noise",
            Study::Single => "single",
        }
    }
}

/// Negative-class means of the synthetic grid: `[2, 2]` to `[4.5, 4.5]` in steps of 0.5.
pub fn default_mu_grid() -> Vec<[f64; 2]> {
    (0..6).map(|k| {
        let v = 2.0 + 0.5 * k as f64;
        [v, v]
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub study: Study,
    pub mu_minus: Vec<[f64; 2]>,
    /// Per-class sample counts for the confidence estimator (noise study only).
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    pub loss: LossKind,
    pub lambda: f64,
    pub floor: f64,
    /// Confidence level of the bound diagnostics.
    pub delta: f64,
    pub noisy_l2: f64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn overlap() -> Self {
        ExperimentConfig {
            study: Study::Overlap,
            mu_minus: default_mu_grid(),
            m_values: Vec::new(),
            trials: 10,
            n_pos: 1000,
            n_neg: 1000,
            test_pos: 1000,
            test_neg: 1000,
            methods: Method::ALL.to_vec(),
            seed: 0,
            optimizer: OptimizerConfig::default(),
            loss: LossKind::Logistic,
            lambda: 0.0,
            floor: DEFAULT_CONFIDENCE_FLOOR,
            delta: 0.05,
            noisy_l2: 1e-3,
            output: None,
        }
    }

    pub fn noise() -> Self {
        ExperimentConfig {
            study: Study::Noise,
            m_values: vec![1000, 500, 100],
            methods: vec![Method::Pconf, Method::Weighted],
            ..ExperimentConfig::overlap()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::domain("at least one method is required"));
        }
        if self.mu_minus.is_empty() {
            return Err(Error::domain("at least one negative mean is required"));
        }
        if self.study == Study::Noise && (self.m_values.is_empty() || self.m_values.contains(&0)) {
            return Err(Error::domain("noise study needs positive m values"));
        }
        if self.n_pos == 0 || self.test_pos + self.test_neg == 0 {
            return Err(Error::domain("training and test sets must be non-empty"));
        }
        if self.methods.contains(&Method::Supervised) && self.n_neg == 0 {
            return Err(Error::domain("the supervised baseline needs negative training samples"));
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return Err(Error::domain("confidence floor must lie in (0, 1)"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::domain("lambda must be non-negative"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain("delta must lie in (0, 1)"));
        }
        self.optimizer.validate()
    }

    /// Applies recognized keys from a parsed config file; unknown keys are errors.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        for (key, value) in kv.iter() {
            match key {
                "trials" => self.trials = kv.parse(key)?,
                "seed" => self.seed = kv.parse(key)?,
                "out" => self.output = Some(PathBuf::from(value)),
                "n-pos" => self.n_pos = kv.parse(key)?,
                "n-neg" => self.n_neg = kv.parse(key)?,
                "test-pos" => self.test_pos = kv.parse(key)?,
                "test-neg" => self.test_neg = kv.parse(key)?,
                "epochs" => self.optimizer.max_epochs = kv.parse(key)?,
                "lr" => self.optimizer.step_size = kv.parse(key)?,
                "lambda" => self.lambda = kv.parse(key)?,
                "floor" => self.floor = kv.parse(key)?,
                "delta" => self.delta = kv.parse(key)?,
                "loss" => self.loss = kv.parse(key)?,
                "methods" => self.methods = parse_list(key, value)?,
                "m" => self.m_values = parse_list(key, value)?,
                "mu-minus" => self.mu_minus = parse_means(value)?,
                other => {
                    return Err(Error::format("config", format!("unknown key '{other}' for a study")));
                }
            }
        }
        Ok(())
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::format("config", format!("invalid entry '{s}' for '{key}'")))
        })
        .collect()
}

/// Parses `"2,2; 3,3"` into a list of planar means.
pub fn parse_means(value: &str) -> Result<Vec<[f64; 2]>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let v: Vec<f64> = parse_list("mu-minus", pair)?;
            match v.as_slice() {
                [a, b] => Ok([*a, *b]),
                _ => Err(Error::format("config", format!("mean '{pair}' must have two coordinates"))),
            }
        })
        .collect()
}

/// Ordered `key = value` pairs from a flat config file.
///
/// Blank lines and lines starting with `#` are skipped. Keys use the
/// command-line flag spelling without the leading dashes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    source: String,
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse_str(text: &str, source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(source, format!("line {}: expected key=value", i + 1)))?;
            let key = k.trim().replace('_', "-");
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::format(source, format!("line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(KeyValues {
            source: source.to_string(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KeyValues::parse_str(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::format(&self.source, format!("missing key '{key}'")))?;
        raw.parse::<T>()
            .map_err(|_| Error::format(&self.source, format!("invalid value '{raw}' for '{key}'")))
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            Some(_) => self.parse(key),
            None => Ok(default),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        let g = default_mu_grid();
        assert_eq!(g.first(), Some(&[2.0, 2.0]));
        assert_eq!(g.last(), Some(&[4.5, 4.5]));
        assert_eq!(g.len(), 6);
    }

    #[test]
    fn key_values_apply() {
        let kv = KeyValues::parse_str(
            "# study\ntrials = 3\nseed=9\nmethods = pconf, weighted\nmu_minus = 2,2; 3.5,3.5\nepochs=50\n",
            "cfg",
        )
        .unwrap();
        let mut cfg = ExperimentConfig::overlap();
        cfg.apply(&kv).unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.methods, vec![Method::Pconf, Method::Weighted]);
        assert_eq!(cfg.mu_minus, vec![[2.0, 2.0], [3.5, 3.5]]);
        assert_eq!(cfg.optimizer.max_epochs, 50);
        cfg.validate().unwrap();
    }

    #[test]
    fn key_value_errors() {
        assert!(KeyValues::parse_str("trials 3", "c").is_err());
        assert!(KeyValues::parse_str("a=1\na=2", "c").is_err());
        let kv = KeyValues::parse_str("bogus=1", "c").unwrap();
        assert!(ExperimentConfig::overlap().apply(&kv).is_err());
        let kv = KeyValues::parse_str("trials=many", "c").unwrap();
        assert!(matches!(ExperimentConfig::overlap().apply(&kv), Err(Error::Format { .. })));
        assert!(parse_means("1,2,3").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::noise();
        cfg.validate().unwrap();
        cfg.m_values.clear();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { trials: 0, ..ExperimentConfig::overlap() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { methods: vec![], ..ExperimentConfig::overlap() };
        assert!(cfg.validate().is_err());
    }
}
