//! Session-based HTTP service: uploads are segmented, filtered and
//! classified, merged with a pre-classified backend corpus, and served as a
//! filterable, searchable result set.

mod analysis;
mod config;
mod error;
mod routes;
mod session;

use std::sync::Arc;
use std::time::Duration;

use sustext_core::schema::{KeywordLexicon, LabelSchema};

pub use analysis::{
    distribution, match_spans, query_results, AnalysisResult, Classifier, Origin, PagePassage,
    ResultPage, ResultPassage, SearchQuery, DEFAULT_PAGE_SIZE, MAX_PAGE_SIZE, NO_RESULTS,
};
pub use config::{
    BackendConfig, ClassifierConfig, ClassifierMode, ServiceConfig, DEFAULT_MAX_UPLOAD_BYTES,
    DEFAULT_THRESHOLD, DEFAULT_TTL_SECS,
};
pub use error::{ApiError, ServiceError};
pub use routes::router;
pub use session::{Session, SessionRegistry, Status, UploadRecord};

struct Shared {
    config: ServiceConfig,
    schema: LabelSchema,
    lexicon: KeywordLexicon,
    classifier: Classifier,
    backend: Vec<ResultPassage>,
    sessions: SessionRegistry,
}

/// Immutable service resources plus the session registry; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    /// Loads schema, lexicon, model and backend corpus, and classifies the
    /// backend passages. Any invalid input fails startup.
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate().map_err(|message| ServiceError::Config {
            path: "<config>".into(),
            message,
        })?;
        let schema = match &config.schema {
            Some(p) => LabelSchema::load(p)?,
            None => LabelSchema::builtin(),
        };
        let lexicon = match &config.lexicon {
            Some(p) => KeywordLexicon::load(p, &schema)?,
            None => KeywordLexicon::builtin(),
        };
        let svm = config
            .classifier
            .model_dir
            .as_deref()
            .map(analysis::load_model)
            .transpose()?;
        if let Some(m) = &svm {
            if m.svm.n_classes() != schema.len() {
                return Err(ServiceError::Config {
                    path: "<config>".into(),
                    message: format!(
                        "model has {} classes but the schema has {}",
                        m.svm.n_classes(),
                        schema.len()
                    ),
                });
            }
        }
        let classifier = Classifier::new(config.mode(), &lexicon, svm);
        let backend = analysis::load_backend(&config, &schema, &classifier)?;
        std::fs::create_dir_all(&config.storage_root)?;
        log::info!(
            "{} backend passages classified ({:?} classifier)",
            backend.len(),
            classifier.mode()
        );
        let sessions = SessionRegistry::new(config.storage_root.clone(), config.ttl());
        Ok(AppState(Arc::new(Shared {
            config,
            schema,
            lexicon,
            classifier,
            backend,
            sessions,
        })))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.0.schema
    }

    pub fn lexicon(&self) -> &KeywordLexicon {
        &self.0.lexicon
    }

    pub fn classifier(&self) -> &Classifier {
        &self.0.classifier
    }

    /// Backend passages with at least one class.
    pub fn backend(&self) -> &[ResultPassage] {
        &self.0.backend
    }

    pub fn sessions(&self) -> &SessionRegistry {
        &self.0.sessions
    }

    /// Periodically removes idle sessions.
    pub fn spawn_reaper(&self) -> tokio::task::JoinHandle<()> {
        let state = self.clone();
        let period = (self.config().ttl() / 4).clamp(Duration::from_millis(100), Duration::from_secs(60));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                state.sessions().reap_expired().await;
            }
        })
    }
}

/// Serves on an already bound listener until `shutdown` resolves, then
/// deletes every remaining session.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let reaper = state.spawn_reaper();
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    reaper.abort();
    state.sessions().clear().await;
    Ok(())
}

/// Binds `config.bind` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(state.config().bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
