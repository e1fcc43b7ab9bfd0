//! Analyst sessions: labels, trained models and view state, persisted as one
//! JSON document per session.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use commdyn_core::{ForestConfig, ForestModel, Label};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::error::{ApiError, ApiResult, ServerError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    #[default]
    Horizontal,
    Vertical,
}

/// A labelled, possibly non-consecutive set of time ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineThread {
    pub label: String,
    pub ranges: Vec<[f64; 2]>,
    #[serde(default)]
    pub layout: Layout,
}

impl TimelineThread {
    pub fn validate(&self) -> ApiResult<()> {
        let mut ranges = self.ranges.clone();
        if let Some(r) = ranges
            .iter()
            .find(|r| r[0] >= r[1] || !r[0].is_finite() || !r[1].is_finite())
        {
            return Err(ApiError::bad_request(
                "invalid_range",
                format!(
                    "thread `{}`: range [{}, {}] is empty or not finite",
                    self.label, r[0], r[1]
                ),
            ));
        }
        ranges.sort_by(|a, b| a[0].total_cmp(&b[0]));
        if let Some(w) = ranges.windows(2).find(|w| w[1][0] < w[0][1]) {
            return Err(ApiError::bad_request(
                "overlapping_ranges",
                format!(
                    "thread `{}`: ranges [{}, {}] and [{}, {}] overlap",
                    self.label, w[0][0], w[0][1], w[1][0], w[1][1]
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewState {
    pub zoom: String,
    #[serde(default)]
    pub threads: Vec<TimelineThread>,
}

impl Default for ViewState {
    fn default() -> Self {
        ViewState {
            zoom: "medium".into(),
            threads: Vec::new(),
        }
    }
}

/// The latest successfully trained model of a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSlot {
    /// Starts at 1 and increments on every successful training.
    pub version: u64,
    pub n_examples: usize,
    /// Labelled refs that did not resolve to a known episode at training time.
    pub stale_refs: Vec<String>,
    pub model: ForestModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingState {
    Idle,
    Training,
    Ready,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStatus {
    pub state: TrainingState,
    /// Version of the model currently served, 0 if none.
    pub version: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Training requests issued and the last one installed; a slower, older
    /// run never replaces a newer model.
    #[serde(skip)]
    pub(crate) requested: u64,
    #[serde(skip)]
    pub(crate) installed: u64,
}

impl TrainingStatus {
    fn idle(version: u64) -> Self {
        TrainingStatus {
            state: if version > 0 {
                TrainingState::Ready
            } else {
                TrainingState::Idle
            },
            version,
            error_code: None,
            error: None,
            requested: 0,
            installed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub corpus_ref: String,
    /// Episode ref → label; shared by every class trained in this session.
    pub labels: BTreeMap<String, Label>,
    pub models: BTreeMap<String, ModelSlot>,
    #[serde(default)]
    pub view_state: ViewState,
    #[serde(default)]
    pub forest: ForestConfig,
    #[serde(skip)]
    pub training: BTreeMap<String, TrainingStatus>,
}

impl Session {
    pub fn new(id: String, corpus_ref: String) -> Self {
        Session {
            id,
            corpus_ref,
            labels: BTreeMap::new(),
            models: BTreeMap::new(),
            view_state: ViewState::default(),
            forest: ForestConfig::default(),
            training: BTreeMap::new(),
        }
    }

    pub fn status(&self, class: &str) -> Option<TrainingStatus> {
        match (self.training.get(class), self.models.get(class)) {
            (Some(s), _) => Some(s.clone()),
            (None, Some(slot)) => Some(TrainingStatus::idle(slot.version)),
            (None, None) => None,
        }
    }

    pub(crate) fn status_mut(&mut self, class: &str) -> &mut TrainingStatus {
        let version = self.models.get(class).map_or(0, |m| m.version);
        self.training
            .entry(class.to_string())
            .or_insert_with(|| TrainingStatus::idle(version))
    }
}

pub type SessionHandle = Arc<Mutex<Session>>;

/// In-memory sessions mirrored to `dir` when one is configured.
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore {
            dir: None,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    /// Opens `dir`, creating it if needed, and loads every `*.json` session.
    pub fn open(dir: &Path) -> Result<Self, ServerError> {
        let err = |source| ServerError::Sessions {
            path: dir.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(err)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(dir).map_err(err)? {
            let path = entry.map_err(err)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(err)?;
            let session: Session = serde_json::from_str(&text).map_err(|e| {
                err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}: {e}", path.display()),
                ))
            })?;
            if !valid_id(&session.id) {
                tracing::warn!(path = %path.display(), "skipping session with invalid id");
                continue;
            }
            sessions.insert(session.id.clone(), Arc::new(Mutex::new(session)));
        }
        tracing::info!(count = sessions.len(), dir = %dir.display(), "sessions loaded");
        Ok(SessionStore {
            dir: Some(dir.to_path_buf()),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn create(&self, corpus_ref: &str) -> ApiResult<Session> {
        let id = format!("{:032x}", rand::random::<u128>());
        let session = Session::new(id.clone(), corpus_ref.to_string());
        self.persist(&session)?;
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn get(&self, id: &str) -> ApiResult<SessionHandle> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    /// Writes the session atomically (temp file + rename).
    pub fn persist(&self, session: &Session) -> ApiResult<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let write = || -> io::Result<()> {
            let path = dir.join(format!("{}.json", session.id));
            let tmp = dir.join(format!(".{}.json.tmp", session.id));
            fs::write(&tmp, serde_json::to_vec_pretty(session)?)?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| ApiError::internal(format!("cannot save session {}: {e}", session.id)))
    }
}
