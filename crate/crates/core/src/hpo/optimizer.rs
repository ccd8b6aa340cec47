//! Sequential model-based optimization: random initial design, then
//! log-EI maximization over a random-forest surrogate.

use std::fmt::Display;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize};

use super::acquisition::log_ei;
use super::forest::{ForestConfig, ForestSurrogate};
use super::space::{Config, ConfigSpace};
use crate::error::{Error, Result};

/// One evaluated configuration. Failed evaluations carry `objective = −∞`,
/// written as `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub config: Config,
    #[serde(deserialize_with = "objective_or_failed")]
    pub objective: f64,
}

fn objective_or_failed<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

impl Trial {
    pub fn failed(&self) -> bool {
        !self.objective.is_finite()
    }
}

/// Knobs of the suggestion step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoSettings {
    /// Trials sampled at random before the surrogate takes over.
    pub n_initial: usize,
    pub n_random_candidates: usize,
    pub n_perturbations: usize,
    /// Std of the Gaussian perturbation in encoded space.
    pub perturbation_sigma: f64,
    /// Probability that a perturbation resamples a categorical dimension.
    pub categorical_resample: f64,
    pub forest: ForestConfig,
}

impl Default for BoSettings {
    fn default() -> Self {
        BoSettings {
            n_initial: 10,
            n_random_candidates: 1000,
            n_perturbations: 100,
            perturbation_sigma: 0.1,
            categorical_resample: 0.1,
            forest: ForestConfig::default(),
        }
    }
}

/// Fits the surrogate on the history. Failed trials are imputed with the
/// worst finite objective so the model learns to avoid them.
pub fn fit_surrogate(
    space: &ConfigSpace,
    history: &[Trial],
    forest: &ForestConfig,
    seed: u64,
) -> Result<ForestSurrogate> {
    if history.len() < 2 {
        return Err(Error::Surrogate(format!(
            "need at least 2 trials, got {}",
            history.len()
        )));
    }
    let worst = history
        .iter()
        .filter(|t| !t.failed())
        .map(|t| t.objective)
        .fold(f64::INFINITY, f64::min);
    if !worst.is_finite() {
        return Err(Error::Surrogate("every trial failed".into()));
    }
    let xs = history
        .iter()
        .map(|t| space.encode(&t.config))
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<f64> = history
        .iter()
        .map(|t| if t.failed() { worst } else { t.objective })
        .collect();
    ForestSurrogate::fit(&xs, &ys, &space.categorical_mask(), forest, seed)
}

pub fn surrogate_predict(
    surrogate: &ForestSurrogate,
    space: &ConfigSpace,
    config: &Config,
) -> Result<(f64, f64)> {
    Ok(surrogate.predict(&space.encode(config)?))
}

fn incumbent(history: &[Trial]) -> Option<&Trial> {
    history
        .iter()
        .filter(|t| !t.failed())
        .fold(None, |best: Option<&Trial>, t| match best {
            Some(b) if b.objective >= t.objective => Some(b),
            _ => Some(t),
        })
}

/// Next configuration to evaluate, with the default settings.
pub fn suggest<R: Rng + ?Sized>(space: &ConfigSpace, history: &[Trial], rng: &mut R) -> Config {
    suggest_with(space, history, rng, &BoSettings::default())
}

/// Random while fewer than `n_initial` trials exist (or fewer than two
/// succeeded); afterwards the argmax of log-EI over random candidates and
/// perturbations of the incumbent, ties going to the earliest candidate.
pub fn suggest_with<R: Rng + ?Sized>(
    space: &ConfigSpace,
    history: &[Trial],
    rng: &mut R,
    settings: &BoSettings,
) -> Config {
    let finite = history.iter().filter(|t| !t.failed()).count();
    if history.len() < settings.n_initial || finite < 2 {
        return space.sample(rng);
    }
    let surrogate = match fit_surrogate(space, history, &settings.forest, rng.random()) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("surrogate fit failed ({e}); sampling at random");
            return space.sample(rng);
        }
    };
    let best = incumbent(history).expect("at least two finite trials");
    let best_x = space.encode(&best.config).expect("history configs are valid");
    let mask = space.categorical_mask();
    let noise = Normal::new(0.0, settings.perturbation_sigma).expect("sigma is finite");

    let mut candidates: Vec<Config> =
        Vec::with_capacity(settings.n_random_candidates + settings.n_perturbations);
    for _ in 0..settings.n_random_candidates {
        candidates.push(space.sample(rng));
    }
    for _ in 0..settings.n_perturbations {
        let x: Vec<f64> = best_x
            .iter()
            .zip(&space.params)
            .zip(&mask)
            .map(|((&v, spec), &categorical)| {
                if categorical {
                    if rng.random::<f64>() < settings.categorical_resample {
                        spec.encode(&spec.sample(rng)).expect("sampled value is valid")
                    } else {
                        v
                    }
                } else {
                    (v + noise.sample(rng)).clamp(0.0, 1.0)
                }
            })
            .collect();
        candidates.push(space.decode(&x));
    }

    let mut best_idx = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let (mean, std) = surrogate.predict(&space.encode(c).expect("candidate is valid"));
        let v = log_ei(mean, std, best.objective).expect("std is floored above zero");
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
    }
    candidates.swap_remove(best_idx)
}

/// A seeded optimization run. The suggest → evaluate → record loop is
/// sequential; every trial is also appended to the trial log when one is set.
pub struct Optimizer<'a> {
    space: &'a ConfigSpace,
    seed: u64,
    settings: BoSettings,
    queued: Vec<Config>,
    log_path: Option<PathBuf>,
}

impl<'a> Optimizer<'a> {
    pub fn new(space: &'a ConfigSpace, seed: u64) -> Self {
        Optimizer {
            space,
            seed,
            settings: BoSettings::default(),
            queued: Vec::new(),
            log_path: None,
        }
    }

    pub fn settings(mut self, settings: BoSettings) -> Self {
        self.settings = settings;
        self
    }

    /// Evaluates `config` before any suggested configuration.
    pub fn enqueue(mut self, config: Config) -> Self {
        self.queued.push(config);
        self
    }

    pub fn trial_log(mut self, path: impl Into<PathBuf>) -> Self {
        self.log_path = Some(path.into());
        self
    }

    /// Runs `n_trials` trials and returns the best trial and the full history.
    /// An objective error or NaN is recorded as a failed trial.
    pub fn run<F, E>(self, n_trials: usize, mut objective: F) -> Result<(Trial, Vec<Trial>)>
    where
        F: FnMut(&Config) -> Result<f64, E>,
        E: Display,
    {
        self.drive(n_trials, &mut objective, true)
    }

    fn drive<F, E>(self, n_trials: usize, objective: &mut F, guided: bool) -> Result<(Trial, Vec<Trial>)>
    where
        F: FnMut(&Config) -> Result<f64, E>,
        E: Display,
    {
        if n_trials == 0 {
            return Err(Error::Tuning("n_trials must be at least 1".into()));
        }
        for c in &self.queued {
            self.space.check(c)?;
        }
        let mut log = match &self.log_path {
            Some(p) => Some(TrialLog::append(p)?),
            None => None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut queued = self.queued.into_iter();
        let mut history: Vec<Trial> = Vec::with_capacity(n_trials);
        for index in 0..n_trials {
            let config = match queued.next() {
                Some(c) => c,
                None if guided => suggest_with(self.space, &history, &mut rng, &self.settings),
                None => self.space.sample(&mut rng),
            };
            let objective = match objective(&config) {
                Ok(v) if !v.is_nan() => v,
                Ok(_) => {
                    log::warn!("trial {index}: objective returned NaN");
                    f64::NEG_INFINITY
                }
                Err(e) => {
                    log::warn!("trial {index}: objective failed: {e}");
                    f64::NEG_INFINITY
                }
            };
            let trial = Trial {
                index,
                seed: self.seed,
                config,
                objective,
            };
            log::debug!("trial {index}: {:?} -> {objective}", trial.config);
            if let Some(log) = log.as_mut() {
                log.write(&trial)?;
            }
            history.push(trial);
        }
        let best = best_trial(&history).clone();
        Ok((best, history))
    }
}

/// Highest objective; the earliest trial wins ties (and all-failed runs).
pub fn best_trial(history: &[Trial]) -> &Trial {
    incumbent(history).unwrap_or(&history[0])
}

/// Bayesian optimization with default settings.
pub fn optimize<F, E>(
    objective: F,
    space: &ConfigSpace,
    n_trials: usize,
    seed: u64,
) -> Result<(Trial, Vec<Trial>)>
where
    F: FnMut(&Config) -> Result<f64, E>,
    E: Display,
{
    Optimizer::new(space, seed).run(n_trials, objective)
}

/// Baseline: every configuration sampled uniformly from the space.
pub fn random_search<F, E>(
    mut objective: F,
    space: &ConfigSpace,
    n_trials: usize,
    seed: u64,
) -> Result<(Trial, Vec<Trial>)>
where
    F: FnMut(&Config) -> Result<f64, E>,
    E: Display,
{
    Optimizer::new(space, seed).drive(n_trials, &mut objective, false)
}

/// Append-only JSON Lines log of trials.
pub struct TrialLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TrialLog {
    pub fn append(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(TrialLog {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, trial: &Trial) -> Result<()> {
        let line = serde_json::to_string(trial).expect("trial serializes");
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_trial_log(path: impl AsRef<Path>) -> Result<Vec<Trial>> {
    crate::io::read_jsonl(path)
}
