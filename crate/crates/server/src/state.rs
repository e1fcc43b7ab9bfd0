use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use commdyn_core::{
    analyze_pair, read_events, AnalysisParams, EntityId, Episode, EventLog, FeatureVector, Pair,
    PairAnalysis, ParseOptions, ParseReport,
};
use serde::Serialize;

use crate::error::{ApiError, ApiResult, ServerError};
use crate::session::SessionStore;

/// Number of pair analyses kept in memory.
pub const ANALYSIS_CACHE_SIZE: usize = 64;

/// A loaded, immutable event log.
pub struct Corpus {
    pub name: String,
    pub log: EventLog,
    pub report: ParseReport,
}

impl Corpus {
    pub fn load(path: &Path, options: ParseOptions) -> Result<Self, ServerError> {
        let (log, report) = read_events(path, options).map_err(|source| ServerError::Corpus {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(Corpus { name, log, report })
    }
}

/// An episode seen by some client, kept so labels can be resolved to
/// feature vectors at training time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub pair: Pair,
    pub start: f64,
    pub end: f64,
    pub features: FeatureVector,
}

impl CatalogEntry {
    pub fn to_episode(&self, id: &str) -> Episode {
        let mut e = Episode::new(Some(self.pair.clone()), self.start, self.end);
        e.id = id.to_string();
        e.features = Some(self.features);
        e
    }
}

/// Small LRU of pair analyses keyed by pair and parameters.
struct AnalysisCache {
    capacity: usize,
    entries: VecDeque<(String, Arc<PairAnalysis>)>,
}

impl AnalysisCache {
    fn get(&mut self, key: &str) -> Option<Arc<PairAnalysis>> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        let entry = self.entries.remove(pos)?;
        let value = entry.1.clone();
        self.entries.push_back(entry);
        Some(value)
    }

    fn put(&mut self, key: String, value: Arc<PairAnalysis>) {
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            self.entries.remove(pos);
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((key, value));
    }
}

struct Inner {
    corpus: Corpus,
    sessions: SessionStore,
    catalog: RwLock<BTreeMap<String, CatalogEntry>>,
    cache: Mutex<AnalysisCache>,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(corpus: Corpus, sessions: SessionStore) -> Self {
        AppState {
            inner: Arc::new(Inner {
                corpus,
                sessions,
                catalog: RwLock::new(BTreeMap::new()),
                cache: Mutex::new(AnalysisCache {
                    capacity: ANALYSIS_CACHE_SIZE,
                    entries: VecDeque::new(),
                }),
            }),
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.inner.corpus
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.inner.sessions
    }

    pub fn catalog_entry(&self, episode_ref: &str) -> Option<CatalogEntry> {
        self.inner
            .catalog
            .read()
            .expect("catalog poisoned")
            .get(episode_ref)
            .cloned()
    }

    /// Every catalogued episode, ordered by pair and start time.
    pub fn catalog_episodes(&self) -> Vec<Episode> {
        let catalog = self.inner.catalog.read().expect("catalog poisoned");
        let mut out: Vec<Episode> = catalog.iter().map(|(id, e)| e.to_episode(id)).collect();
        out.sort_by(|x, y| {
            x.pair
                .cmp(&y.pair)
                .then(x.start.total_cmp(&y.start))
                .then(x.id.cmp(&y.id))
        });
        out
    }

    pub fn cached_analyses(&self) -> usize {
        self.inner
            .cache
            .lock()
            .expect("cache poisoned")
            .entries
            .len()
    }

    /// Checks that `a` and `b` exchanged at least one message.
    pub fn resolve_pair(&self, a: &str, b: &str) -> ApiResult<Pair> {
        if a == b {
            return Err(ApiError::bad_request(
                "invalid_pair",
                format!("an entity cannot be paired with itself ({a})"),
            ));
        }
        let (ea, eb) = (EntityId::from(a), EntityId::from(b));
        if self.corpus().log.pair_counts(&ea, &eb).total() == 0 {
            return Err(ApiError::unknown_pair(a, b));
        }
        Ok(Pair { a: ea, b: eb })
    }

    /// Profile, episodes and features of `pair`, computed off the async
    /// runtime and cached. Episodes with features are added to the catalog.
    pub async fn analyze(
        &self,
        pair: Pair,
        params: AnalysisParams,
    ) -> ApiResult<Arc<PairAnalysis>> {
        let key = format!(
            "{}\0{}\0{}",
            pair.a,
            pair.b,
            serde_json::to_string(&params).map_err(|e| ApiError::internal(e.to_string()))?
        );
        if let Some(hit) = self.inner.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(hit);
        }
        let state = self.clone();
        let analysis =
            tokio::task::spawn_blocking(move || analyze_pair(&state.corpus().log, &pair, &params))
                .await
                .map_err(|e| ApiError::internal(format!("analysis task failed: {e}")))??;
        let analysis = Arc::new(analysis);
        {
            let mut catalog = self.inner.catalog.write().expect("catalog poisoned");
            for ep in &analysis.episodes {
                if let (Some(pair), Some(features)) = (&ep.pair, ep.features) {
                    catalog.insert(
                        ep.id.clone(),
                        CatalogEntry {
                            pair: pair.clone(),
                            start: ep.start,
                            end: ep.end,
                            features,
                        },
                    );
                }
            }
        }
        self.inner
            .cache
            .lock()
            .expect("cache poisoned")
            .put(key, analysis.clone());
        Ok(analysis)
    }
}
