use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub const DEFAULT_TTL_SECS: u64 = 30 * 60;
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 10 * 1024 * 1024;

/// Which classifier labels uploads (and backend passages without a score matrix).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierMode {
    Keyword,
    Svm,
    /// Union of the keyword and SVM labels.
    KeywordSvm,
}

/// Service settings, usually read from a TOML file:
///
/// ```toml
/// bind = "127.0.0.1:8080"
/// storage_root = "/var/tmp/sustext-sessions"
/// session_ttl_secs = 1800
///
/// [backend]
/// corpus_dir = "corpus"          # passages.jsonl (+ documents.jsonl for links)
/// score_matrix = "scores.csv"    # optional; thresholded instead of the classifier
/// threshold = 0.33
///
/// [classifier]
/// mode = "keyword_svm"
/// model_dir = "models/seed1"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    pub storage_root: PathBuf,
    #[serde(default = "default_ttl")]
    pub session_ttl_secs: u64,
    #[serde(default = "default_max_upload")]
    pub max_upload_bytes: usize,
    /// Label schema and keyword lexicon; the bundled ones when absent.
    #[serde(default)]
    pub schema: Option<PathBuf>,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub corpus_dir: Option<PathBuf>,
    pub score_matrix: Option<PathBuf>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Defaults to `keyword_svm` with a model, `keyword` without.
    pub mode: Option<ClassifierMode>,
    pub model_dir: Option<PathBuf>,
}

fn default_bind() -> SocketAddr {
    "127.0.0.1:8080".parse().expect("valid address")
}

fn default_ttl() -> u64 {
    DEFAULT_TTL_SECS
}

fn default_max_upload() -> usize {
    DEFAULT_MAX_UPLOAD_BYTES
}

/// Sigmoid threshold for backend score matrices when none is configured.
pub const DEFAULT_THRESHOLD: f64 = 0.33;

impl ServiceConfig {
    pub fn new(storage_root: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            bind: default_bind(),
            storage_root: storage_root.into(),
            session_ttl_secs: DEFAULT_TTL_SECS,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            schema: None,
            lexicon: None,
            backend: BackendConfig::default(),
            classifier: ClassifierConfig::default(),
        }
    }

    /// Parses TOML; relative paths are resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path)?;
        let err = |message: String| ServiceError::Config {
            path: path.display().to_string(),
            message,
        };
        let mut config: ServiceConfig = toml::from_str(&body).map_err(|e| err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.storage_root);
        for p in [
            config.schema.as_mut(),
            config.lexicon.as_mut(),
            config.backend.corpus_dir.as_mut(),
            config.backend.score_matrix.as_mut(),
            config.classifier.model_dir.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        config.validate().map_err(err)?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.session_ttl_secs == 0 {
            return Err("session_ttl_secs must be positive".into());
        }
        if self.max_upload_bytes == 0 {
            return Err("max_upload_bytes must be positive".into());
        }
        if let Some(t) = self.backend.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(format!("threshold {t} outside [0, 1]"));
            }
        }
        if self.backend.score_matrix.is_some() && self.backend.corpus_dir.is_none() {
            return Err("backend.score_matrix needs backend.corpus_dir".into());
        }
        match (self.classifier.mode, &self.classifier.model_dir) {
            (Some(ClassifierMode::Svm | ClassifierMode::KeywordSvm), None) => {
                Err("classifier.mode needs classifier.model_dir".into())
            }
            _ => Ok(()),
        }
    }

    pub fn ttl(&self) -> Duration {
        Duration::from_secs(self.session_ttl_secs)
    }

    pub fn mode(&self) -> ClassifierMode {
        self.classifier.mode.unwrap_or(if self.classifier.model_dir.is_some() {
            ClassifierMode::KeywordSvm
        } else {
            ClassifierMode::Keyword
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_with_defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("service.toml");
        std::fs::write(
            &path,
            "storage_root = \"sessions\"\n[backend]\ncorpus_dir = \"corpus\"\n",
        )
        .unwrap();
        let c = ServiceConfig::load(&path).unwrap();
        assert_eq!(c.storage_root, dir.path().join("sessions"));
        assert_eq!(c.backend.corpus_dir, Some(dir.path().join("corpus")));
        assert_eq!(c.session_ttl_secs, 1800);
        assert_eq!(c.max_upload_bytes, 10 * 1024 * 1024);
        assert_eq!(c.mode(), ClassifierMode::Keyword);
    }

    #[test]
    fn rejects_bad_settings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("service.toml");
        for body in [
            "storage_root = \"s\"\nsession_ttl_secs = 0\n",
            "storage_root = \"s\"\n[classifier]\nmode = \"svm\"\n",
            "storage_root = \"s\"\n[backend]\nthreshold = 1.5\n",
            "storage_root = \"s\"\nunknown = 1\n",
        ] {
            std::fs::write(&path, body).unwrap();
            assert!(ServiceConfig::load(&path).is_err(), "{body}");
        }
    }
}
