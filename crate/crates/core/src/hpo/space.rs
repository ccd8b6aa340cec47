//! Mixed configuration spaces and their numeric encoding.
//!
//! Every numeric parameter is encoded as its normalized position in `[0, 1]`
//! (in log space for `log_float`); categorical parameters are encoded as the
//! index of the chosen value.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    LogFloat { lower: f64, upper: f64 },
    LinearFloat { lower: f64, upper: f64 },
    SteppedFloat { lower: f64, upper: f64, step: f64 },
    Integer { lower: i64, upper: i64 },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Choice(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(i) => Some(i as f64),
            ParamValue::Float(f) => Some(f),
            ParamValue::Choice(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            ParamValue::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Choice(s) => Some(s),
            _ => None,
        }
    }
}

/// Parameter name → value.
pub type Config = BTreeMap<String, ParamValue>;

const STEP_EPS: f64 = 1e-9;

/// Decimal places needed to print multiples of `step` exactly.
fn step_decimals(step: f64) -> i32 {
    let mut d = 0;
    while d < 12 && ((step * 10f64.powi(d)).round() - step * 10f64.powi(d)).abs() > 1e-9 {
        d += 1;
    }
    d
}

fn snap_to_step(value: f64, lower: f64, upper: f64, step: f64) -> f64 {
    let max_k = ((upper - lower) / step + STEP_EPS).floor();
    let k = ((value - lower) / step).round().clamp(0.0, max_k);
    let scale = 10f64.powi(step_decimals(step));
    ((lower + k * step) * scale).round() / scale
}

impl ParamSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::ConfigSpace(format!("{}: {msg}", self.name)));
        match &self.kind {
            ParamKind::LogFloat { lower, upper } => {
                if !(lower < upper) {
                    return bad("lower must be below upper");
                }
                if *lower <= 0.0 {
                    return bad("log-scaled bounds must be positive");
                }
            }
            ParamKind::LinearFloat { lower, upper } => {
                if !(lower < upper) {
                    return bad("lower must be below upper");
                }
            }
            ParamKind::SteppedFloat { lower, upper, step } => {
                if !(lower < upper) {
                    return bad("lower must be below upper");
                }
                if !(*step > 0.0 && *step <= upper - lower) {
                    return bad("step must be positive and fit within the bounds");
                }
            }
            ParamKind::Integer { lower, upper } => {
                if lower >= upper {
                    return bad("lower must be below upper");
                }
            }
            ParamKind::Categorical { choices } => {
                if choices.is_empty() {
                    return bad("no choices");
                }
                if choices.iter().collect::<HashSet<_>>().len() != choices.len() {
                    return bad("duplicate choices");
                }
            }
        }
        Ok(())
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ParamKind::Categorical { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match &self.kind {
            ParamKind::LogFloat { lower, upper } => {
                let (lo, hi) = (lower.ln(), upper.ln());
                ParamValue::Float(rng.random_range(lo..=hi).exp().clamp(*lower, *upper))
            }
            ParamKind::LinearFloat { lower, upper } => {
                ParamValue::Float(rng.random_range(*lower..=*upper))
            }
            ParamKind::SteppedFloat { lower, upper, step } => {
                let n = ((upper - lower) / step + STEP_EPS).floor() as i64;
                let k = rng.random_range(0..=n);
                ParamValue::Float(snap_to_step(lower + k as f64 * step, *lower, *upper, *step))
            }
            ParamKind::Integer { lower, upper } => ParamValue::Int(rng.random_range(*lower..=*upper)),
            ParamKind::Categorical { choices } => {
                ParamValue::Choice(choices[rng.random_range(0..choices.len())].clone())
            }
        }
    }

    pub fn encode(&self, value: &ParamValue) -> Result<f64> {
        let out_of_space = || {
            Error::Config(format!("{}: value {value:?} is outside the space", self.name))
        };
        match (&self.kind, value) {
            (ParamKind::LogFloat { lower, upper }, v) => {
                let x = v.as_f64().ok_or_else(out_of_space)?;
                if !(x >= *lower && x <= *upper) {
                    return Err(out_of_space());
                }
                Ok((x.ln() - lower.ln()) / (upper.ln() - lower.ln()))
            }
            (ParamKind::LinearFloat { lower, upper }, v) => {
                let x = v.as_f64().ok_or_else(out_of_space)?;
                if !(x >= *lower && x <= *upper) {
                    return Err(out_of_space());
                }
                Ok((x - lower) / (upper - lower))
            }
            (ParamKind::SteppedFloat { lower, upper, step }, v) => {
                let x = v.as_f64().ok_or_else(out_of_space)?;
                let k = (x - lower) / step;
                if !(x >= lower - STEP_EPS && x <= upper + STEP_EPS) || (k - k.round()).abs() > 1e-6 {
                    return Err(out_of_space());
                }
                Ok(((x - lower) / (upper - lower)).clamp(0.0, 1.0))
            }
            (ParamKind::Integer { lower, upper }, ParamValue::Int(i)) => {
                if i < lower || i > upper {
                    return Err(out_of_space());
                }
                Ok((i - lower) as f64 / (upper - lower) as f64)
            }
            (ParamKind::Categorical { choices }, ParamValue::Choice(s)) => choices
                .iter()
                .position(|c| c == s)
                .map(|i| i as f64)
                .ok_or_else(out_of_space),
            _ => Err(out_of_space()),
        }
    }

    /// Maps an encoded coordinate back into the space, clamping and snapping
    /// to the nearest legal value.
    pub fn decode(&self, x: f64) -> ParamValue {
        match &self.kind {
            ParamKind::LogFloat { lower, upper } => {
                let t = x.clamp(0.0, 1.0);
                let v = (lower.ln() + t * (upper.ln() - lower.ln())).exp();
                ParamValue::Float(v.clamp(*lower, *upper))
            }
            ParamKind::LinearFloat { lower, upper } => {
                let t = x.clamp(0.0, 1.0);
                ParamValue::Float((lower + t * (upper - lower)).clamp(*lower, *upper))
            }
            ParamKind::SteppedFloat { lower, upper, step } => {
                let t = x.clamp(0.0, 1.0);
                ParamValue::Float(snap_to_step(lower + t * (upper - lower), *lower, *upper, *step))
            }
            ParamKind::Integer { lower, upper } => {
                let t = x.clamp(0.0, 1.0);
                let v = (*lower as f64 + t * (upper - lower) as f64).round() as i64;
                ParamValue::Int(v.clamp(*lower, *upper))
            }
            ParamKind::Categorical { choices } => {
                let i = (x.round().max(0.0) as usize).min(choices.len() - 1);
                ParamValue::Choice(choices[i].clone())
            }
        }
    }
}

/// Ordered list of parameters with unique names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigSpace {
    pub params: Vec<ParamSpec>,
}

impl ConfigSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        let space = ConfigSpace { params };
        space.validate()?;
        Ok(space)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let space: ConfigSpace =
            serde_json::from_str(json).map_err(|e| Error::ConfigSpace(e.to_string()))?;
        space.validate()?;
        Ok(space)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&body)
    }

    /// Bundled two-parameter space for the TF-IDF + SVM baseline.
    pub fn svm_baseline() -> Self {
        Self::from_json(include_str!("../../data/svm_space.json")).expect("bundled space is valid")
    }

    /// Bundled transformer fine-tuning space (reference data; no trainer uses it).
    pub fn transformer_reference() -> Self {
        Self::from_json(include_str!("../../data/bert_space.json")).expect("bundled space is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for p in &self.params {
            p.validate()?;
            if !names.insert(p.name.as_str()) {
                return Err(Error::ConfigSpace(format!("duplicate parameter {}", p.name)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn categorical_mask(&self) -> Vec<bool> {
        self.params.iter().map(ParamSpec::is_categorical).collect()
    }

    /// Checks that `config` assigns exactly the space's parameters legal values.
    pub fn check(&self, config: &Config) -> Result<()> {
        self.encode(config).map(|_| ())
    }

    pub fn encode(&self, config: &Config) -> Result<Vec<f64>> {
        if config.len() != self.params.len() {
            return Err(Error::Config(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                config.len()
            )));
        }
        self.params
            .iter()
            .map(|p| {
                let v = config
                    .get(&p.name)
                    .ok_or_else(|| Error::Config(format!("missing parameter {}", p.name)))?;
                p.encode(v)
            })
            .collect()
    }

    pub fn decode(&self, encoded: &[f64]) -> Config {
        self.params
            .iter()
            .zip(encoded)
            .map(|(p, &x)| (p.name.clone(), p.decode(x)))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Config {
        self.params
            .iter()
            .map(|p| (p.name.clone(), p.sample(rng)))
            .collect()
    }
}

/// Draws one configuration: log-uniform, uniform, grid-uniform, integer-uniform
/// or choice-uniform per parameter kind.
pub fn sample_config<R: Rng + ?Sized>(space: &ConfigSpace, rng: &mut R) -> Config {
    space.sample(rng)
}

pub fn encode_config(space: &ConfigSpace, config: &Config) -> Result<Vec<f64>> {
    space.encode(config)
}
