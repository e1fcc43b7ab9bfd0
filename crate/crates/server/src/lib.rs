//! HTTP service over a loaded event log: pair listings, density profiles,
//! episodes with features, and per-session labelling and classification.
//!
//! All routes live under `/api`; see [`api::router`]. Errors are returned as
//! `{"error": {"code", "message"}}` with a stable `code`.

pub mod api;
pub mod error;
pub mod session;
pub mod state;

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::http::HeaderValue;
use axum::Router;
use commdyn_core::{InputFormat, ParseOptions};
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::{ServeDir, ServeFile};

pub use api::router;
pub use error::{ApiError, ServerError};
pub use session::{Session, SessionStore};
pub use state::{AppState, Corpus};

pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    pub corpus: PathBuf,
    /// Overrides detection from the file extension.
    pub format: Option<InputFormat>,
    /// Sessions are kept in memory only when unset.
    pub session_dir: Option<PathBuf>,
    /// Built UI bundle, served at `/`.
    pub ui_dir: Option<PathBuf>,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl ServerConfig {
    pub fn new(corpus: impl Into<PathBuf>) -> Self {
        ServerConfig {
            host: DEFAULT_HOST.into(),
            port: DEFAULT_PORT,
            corpus: corpus.into(),
            format: None,
            session_dir: None,
            ui_dir: None,
            cors_origin: None,
        }
    }

    /// Reads `COMMDYN_CORPUS` (required), `COMMDYN_HOST`, `COMMDYN_PORT`,
    /// `COMMDYN_SESSION_DIR`, `COMMDYN_UI_DIR` and `COMMDYN_CORS_ORIGIN`.
    pub fn from_env() -> Result<Self, ServerError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let corpus = var("COMMDYN_CORPUS")
            .ok_or_else(|| ServerError::Config("COMMDYN_CORPUS is not set".into()))?;
        let mut cfg = ServerConfig::new(corpus);
        if let Some(h) = var("COMMDYN_HOST") {
            cfg.host = h;
        }
        if let Some(p) = var("COMMDYN_PORT") {
            cfg.port = p.parse().map_err(|_| {
                ServerError::Config(format!("COMMDYN_PORT must be a port number, got `{p}`"))
            })?;
        }
        cfg.session_dir = var("COMMDYN_SESSION_DIR").map(PathBuf::from);
        cfg.ui_dir = var("COMMDYN_UI_DIR").map(PathBuf::from);
        cfg.cors_origin = var("COMMDYN_CORS_ORIGIN");
        Ok(cfg)
    }

    pub fn addr(&self) -> String {
        format!("{}:{}", self.host, self.port)
    }
}

/// Loads the corpus and session store named in `config`.
pub fn load_state(config: &ServerConfig) -> Result<AppState, ServerError> {
    let options = ParseOptions {
        format: config
            .format
            .unwrap_or_else(|| InputFormat::from_path(&config.corpus)),
        strict: false,
    };
    let corpus = Corpus::load(&config.corpus, options)?;
    tracing::info!(
        corpus = %config.corpus.display(),
        events = corpus.log.len(),
        entities = corpus.report.entities,
        skipped = corpus.report.skipped,
        "corpus loaded"
    );
    let sessions = match &config.session_dir {
        Some(dir) => SessionStore::open(dir)?,
        None => SessionStore::in_memory(),
    };
    Ok(AppState::new(corpus, sessions))
}

/// API router plus CORS and, when configured, the static UI bundle.
pub fn app(state: AppState, config: &ServerConfig) -> Result<Router, ServerError> {
    let cors = match &config.cors_origin {
        Some(origin) => CorsLayer::new()
            .allow_origin(
                origin
                    .parse::<HeaderValue>()
                    .map_err(|_| ServerError::Config(format!("invalid CORS origin `{origin}`")))?,
            )
            .allow_methods(Any)
            .allow_headers(Any),
        None => CorsLayer::permissive(),
    };
    let mut app = router(state);
    if let Some(dir) = &config.ui_dir {
        let index = ServeFile::new(dir.join("index.html"));
        app = app.fallback_service(ServeDir::new(dir).fallback(index));
    }
    Ok(app.layer(cors))
}

/// Runs until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServerError> {
    let cfg = config.clone();
    let state = tokio::task::spawn_blocking(move || load_state(&cfg))
        .await
        .map_err(|e| ServerError::Config(format!("corpus loader panicked: {e}")))??;
    let app = app(state, &config)?;
    let listener = tokio::net::TcpListener::bind(config.addr()).await?;
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Log output for binaries; honours `RUST_LOG`.
pub fn init_tracing() {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
}
