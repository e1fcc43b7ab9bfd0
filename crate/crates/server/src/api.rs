//! REST handlers.

use std::str::FromStr;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use commdyn_core::{
    combine, filter_confident, rank_by_uncertainty, score_episodes, train, AnalysisParams,
    CombineMode, DensityProfile, DetectionParams, Episode, EpsilonMode, ForestConfig, ForestModel,
    Grid, KdeParams, Label, LabeledExample, Pair, ScoredEpisode, Threshold, ZoomLevel,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ApiError, ApiResult};
use crate::session::{ModelSlot, Session, TrainingState, TrainingStatus, ViewState};
use crate::state::AppState;

/// Every query parameter understood by the API; each endpoint reads the
/// ones it needs and ignores the rest.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ApiQuery {
    pub min: Option<usize>,
    pub limit: Option<usize>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub h: Option<f64>,
    pub grid_n: Option<usize>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub zoom: Option<String>,
    pub epsilon: Option<f64>,
    pub epsilon_mode: Option<String>,
    pub min_duration: Option<f64>,
    pub merge_gap: Option<f64>,
    pub min_confidence: Option<f64>,
    pub polarity: Option<String>,
    /// `a,b`: score this pair's episodes instead of the catalog.
    pub pair: Option<String>,
}

impl ApiQuery {
    pub fn analysis_params(&self) -> ApiResult<AnalysisParams> {
        let zoom = match &self.zoom {
            Some(name) => ZoomLevel::by_name(name)?,
            None => ZoomLevel::default(),
        };
        let mode = match &self.epsilon_mode {
            Some(m) => EpsilonMode::from_str(m)?,
            None => EpsilonMode::Relative,
        };
        let epsilon = match (self.epsilon, &self.epsilon_mode) {
            (Some(v), _) => Threshold { mode, value: v },
            (None, Some(_)) => Threshold {
                mode,
                value: Threshold::default().value,
            },
            (None, None) => zoom.epsilon,
        };
        let detection = DetectionParams {
            epsilon,
            min_duration: self.min_duration.unwrap_or(0.0),
            merge_gap: self.merge_gap.unwrap_or(0.0),
        };
        Ok(AnalysisParams {
            mu: self.mu,
            sigma: self.sigma,
            h: self.h,
            grid_n: self.grid_n,
            from: self.from,
            to: self.to,
            zoom,
            detection,
        })
    }

    fn polarity(&self) -> ApiResult<Label> {
        Ok(match &self.polarity {
            Some(p) => Label::from_str(p)?,
            None => Label::Positive,
        })
    }

    fn min_confidence(&self) -> f64 {
        self.min_confidence.unwrap_or(0.0)
    }
}

fn query(q: Result<Query<ApiQuery>, QueryRejection>) -> ApiResult<ApiQuery> {
    q.map(|Query(q)| q)
        .map_err(|e| ApiError::bad_request("bad_query", e.body_text()))
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    b.map(|Json(b)| b)
        .map_err(|e| ApiError::new(e.status(), "bad_body", e.body_text()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/pairs", get(list_pairs))
        .route("/api/pairs/{a}/{b}/profile", get(profile))
        .route("/api/pairs/{a}/{b}/episodes", get(episodes))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/labels", put(put_label))
        .route("/api/sessions/{id}/view", put(put_view))
        .route("/api/sessions/{id}/models/combined", post(combined))
        .route("/api/sessions/{id}/models/{class}", get(get_model))
        .route("/api/sessions/{id}/models/{class}/train", post(train_model))
        .route(
            "/api/sessions/{id}/models/{class}/status",
            get(training_status),
        )
        .route(
            "/api/sessions/{id}/models/{class}/predictions",
            get(predictions),
        )
        .route(
            "/api/sessions/{id}/models/{class}/uncertain",
            get(uncertain),
        )
        .with_state(state)
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let c = state.corpus();
    let r = &c.report;
    Json(json!({
        "status": "ok",
        "corpus": {
            "name": c.name,
            "events": c.log.len(),
            "entities": r.entities,
            "distinct_pairs": r.distinct_pairs,
            "distinct_directed_edges": r.distinct_directed_edges,
            "first_timestamp": r.first_timestamp,
            "last_timestamp": r.last_timestamp,
            "span_days": r.span_days,
            "skipped": r.skipped,
        },
        "sessions": state.sessions().len(),
    }))
}

#[derive(Debug, Serialize)]
struct PairRow {
    a: String,
    b: String,
    count_ab: usize,
    count_ba: usize,
    total: usize,
}

async fn list_pairs(
    State(state): State<AppState>,
    q: Result<Query<ApiQuery>, QueryRejection>,
) -> ApiResult<Json<Vec<PairRow>>> {
    let q = query(q)?;
    let rows = state
        .corpus()
        .log
        .list_pairs(q.min.unwrap_or(1))
        .into_iter()
        .take(q.limit.unwrap_or(usize::MAX))
        .map(|p| PairRow {
            total: p.total(),
            a: p.pair.a.to_string(),
            b: p.pair.b.to_string(),
            count_ab: p.count_ab,
            count_ba: p.count_ba,
        })
        .collect();
    Ok(Json(rows))
}

async fn profile(
    State(state): State<AppState>,
    Path((a, b)): Path<(String, String)>,
    q: Result<Query<ApiQuery>, QueryRejection>,
) -> ApiResult<Json<DensityProfile>> {
    let params = query(q)?.analysis_params()?;
    let pair = state.resolve_pair(&a, &b)?;
    let analysis = state.analyze(pair, params).await?;
    Ok(Json(analysis.profile.clone()))
}

#[derive(Debug, Serialize)]
struct EpisodesBody<'a> {
    pair: &'a Pair,
    kde: KdeParams,
    grid: Grid,
    detection: DetectionParams,
    /// Threshold after resolving a relative epsilon against the peak.
    epsilon_absolute: f64,
    episodes: &'a [Episode],
    /// Events outside every episode.
    residual: usize,
}

async fn episodes(
    State(state): State<AppState>,
    Path((a, b)): Path<(String, String)>,
    q: Result<Query<ApiQuery>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let params = query(q)?.analysis_params()?;
    let pair = state.resolve_pair(&a, &b)?;
    let analysis = state.analyze(pair, params.clone()).await?;
    let out = EpisodesBody {
        pair: &analysis.sequence.pair,
        kde: analysis.profile.params,
        grid: analysis.profile.grid,
        detection: params.detection,
        epsilon_absolute: params.detection.epsilon.resolve(&analysis.profile),
        episodes: &analysis.episodes,
        residual: analysis.residual.len(),
    };
    Ok(Json(
        serde_json::to_value(out).map_err(|e| ApiError::internal(e.to_string()))?,
    ))
}

#[derive(Debug, Serialize)]
struct LabelView {
    episode_ref: String,
    label: Label,
    /// The ref does not match any episode under the parameters seen so far.
    stale: bool,
}

#[derive(Debug, Serialize)]
struct ModelView {
    version: u64,
    n_examples: usize,
    stale_refs: Vec<String>,
    config: ForestConfig,
}

fn session_view(state: &AppState, s: &Session) -> Value {
    let labels: Vec<LabelView> = s
        .labels
        .iter()
        .map(|(r, l)| LabelView {
            episode_ref: r.clone(),
            label: *l,
            stale: state.catalog_entry(r).is_none(),
        })
        .collect();
    let models: std::collections::BTreeMap<&str, ModelView> = s
        .models
        .iter()
        .map(|(c, m)| {
            (
                c.as_str(),
                ModelView {
                    version: m.version,
                    n_examples: m.n_examples,
                    stale_refs: m.stale_refs.clone(),
                    config: m.model.config,
                },
            )
        })
        .collect();
    let training: std::collections::BTreeMap<&str, TrainingStatus> = s
        .models
        .keys()
        .chain(s.training.keys())
        .filter_map(|c| s.status(c).map(|st| (c.as_str(), st)))
        .collect();
    json!({
        "id": s.id,
        "corpus_ref": s.corpus_ref,
        "labels": labels,
        "models": models,
        "training": training,
        "view_state": s.view_state,
        "forest": s.forest,
    })
}

async fn create_session(State(state): State<AppState>) -> ApiResult<(StatusCode, Json<Value>)> {
    let s = state.sessions().create(&state.corpus().name)?;
    Ok((StatusCode::CREATED, Json(session_view(&state, &s))))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let handle = state.sessions().get(&id)?;
    let s = handle.lock().await;
    Ok(Json(session_view(&state, &s)))
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    episode_ref: String,
    /// `null` removes the label.
    label: Option<String>,
}

async fn put_label(
    State(state): State<AppState>,
    Path(id): Path<String>,
    b: Result<Json<LabelBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let b = body(b)?;
    let label = b.label.as_deref().map(Label::from_str).transpose()?;
    let handle = state.sessions().get(&id)?;
    let mut s = handle.lock().await;
    let changed = match label {
        Some(l) => s.labels.insert(b.episode_ref.clone(), l) != Some(l),
        None => s.labels.remove(&b.episode_ref).is_some(),
    };
    if changed {
        state.sessions().persist(&s)?;
    }
    Ok(Json(json!({
        "episode_ref": b.episode_ref,
        "label": label,
        "stale": state.catalog_entry(&b.episode_ref).is_none(),
        "labels": s.labels.len(),
    })))
}

async fn put_view(
    State(state): State<AppState>,
    Path(id): Path<String>,
    b: Result<Json<ViewState>, JsonRejection>,
) -> ApiResult<Json<ViewState>> {
    let view = body(b)?;
    ZoomLevel::by_name(&view.zoom)?;
    for t in &view.threads {
        t.validate()?;
    }
    let handle = state.sessions().get(&id)?;
    let mut s = handle.lock().await;
    if s.view_state != view {
        s.view_state = view.clone();
        state.sessions().persist(&s)?;
    }
    Ok(Json(view))
}

/// Optional overrides of the session's forest settings.
#[derive(Debug, Default, Deserialize)]
struct TrainBody {
    seed: Option<u64>,
    n_trees: Option<usize>,
    max_depth: Option<usize>,
    min_leaf: Option<usize>,
    features_per_split: Option<usize>,
}

async fn train_model(
    State(state): State<AppState>,
    Path((id, class)): Path<(String, String)>,
    b: Option<Json<TrainBody>>,
) -> ApiResult<Json<Value>> {
    let overrides = b.map(|Json(b)| b).unwrap_or_default();
    let handle = state.sessions().get(&id)?;

    let (examples, stale, config, ticket) = {
        let mut s = handle.lock().await;
        let mut config = s.forest;
        if let Some(v) = overrides.seed {
            config.rng_seed = v;
        }
        config.n_trees = overrides.n_trees.unwrap_or(config.n_trees);
        config.max_depth = overrides.max_depth.unwrap_or(config.max_depth);
        config.min_leaf = overrides.min_leaf.unwrap_or(config.min_leaf);
        config.features_per_split = overrides
            .features_per_split
            .unwrap_or(config.features_per_split);
        config.validate()?;

        let mut examples = Vec::new();
        let mut stale = Vec::new();
        for (r, &label) in &s.labels {
            match state.catalog_entry(r) {
                Some(e) => examples.push(LabeledExample {
                    episode_ref: r.clone(),
                    features: e.features,
                    label,
                }),
                None => stale.push(r.clone()),
            }
        }
        let status = s.status_mut(&class);
        status.requested += 1;
        status.state = TrainingState::Training;
        status.error = None;
        status.error_code = None;
        (examples, stale, config, status.requested)
    };

    let name = class.clone();
    let n_examples = examples.len();
    let result = tokio::task::spawn_blocking(move || train(&name, &examples, &config))
        .await
        .map_err(|e| ApiError::internal(format!("training task failed: {e}")))?;

    let mut s = handle.lock().await;
    match result {
        Ok(model) => {
            if ticket > s.status_mut(&class).installed {
                let version = s.models.get(&class).map_or(0, |m| m.version) + 1;
                s.models.insert(
                    class.clone(),
                    ModelSlot {
                        version,
                        n_examples,
                        stale_refs: stale.clone(),
                        model,
                    },
                );
                let status = s.status_mut(&class);
                status.installed = ticket;
                status.version = version;
                if status.requested == ticket {
                    status.state = TrainingState::Ready;
                }
                state.sessions().persist(&s)?;
            }
            let slot = &s.models[&class];
            Ok(Json(json!({
                "class": class,
                "version": slot.version,
                "n_examples": slot.n_examples,
                "stale_refs": slot.stale_refs,
                "config": slot.model.config,
            })))
        }
        Err(e) => {
            let err = ApiError::from(e);
            let status = s.status_mut(&class);
            if status.requested == ticket {
                status.state = TrainingState::Failed;
                status.error_code = Some(err.code.to_string());
                status.error = Some(err.message.clone());
            }
            Err(err)
        }
    }
}

async fn training_status(
    State(state): State<AppState>,
    Path((id, class)): Path<(String, String)>,
) -> ApiResult<Json<TrainingStatus>> {
    let handle = state.sessions().get(&id)?;
    let s = handle.lock().await;
    s.status(&class)
        .map(Json)
        .ok_or_else(|| ApiError::unknown_class(&class))
}

async fn get_model(
    State(state): State<AppState>,
    Path((id, class)): Path<(String, String)>,
) -> ApiResult<Json<ForestModel>> {
    let handle = state.sessions().get(&id)?;
    let s = handle.lock().await;
    s.models
        .get(&class)
        .map(|m| Json(m.model.clone()))
        .ok_or_else(|| ApiError::unknown_class(&class))
}

/// Episodes to score: one pair's (analysed with the query parameters) or
/// the whole catalog.
async fn candidates(state: &AppState, q: &ApiQuery) -> ApiResult<Vec<Episode>> {
    match &q.pair {
        Some(p) => {
            let pair = Pair::from_str(p)?;
            let pair = state.resolve_pair(pair.a.as_str(), pair.b.as_str())?;
            let analysis = state.analyze(pair, q.analysis_params()?).await?;
            Ok(analysis
                .episodes
                .iter()
                .filter(|e| e.features.is_some())
                .cloned()
                .collect())
        }
        None => Ok(state.catalog_episodes()),
    }
}

#[derive(Debug, Serialize)]
struct PredictionsBody {
    class: String,
    version: u64,
    min_confidence: f64,
    polarity: Label,
    predictions: Vec<ScoredEpisode>,
}

async fn model_of(state: &AppState, id: &str, class: &str) -> ApiResult<(ForestModel, u64)> {
    let handle = state.sessions().get(id)?;
    let s = handle.lock().await;
    s.models
        .get(class)
        .map(|m| (m.model.clone(), m.version))
        .ok_or_else(|| ApiError::unknown_class(class))
}

async fn predictions(
    State(state): State<AppState>,
    Path((id, class)): Path<(String, String)>,
    q: Result<Query<ApiQuery>, QueryRejection>,
) -> ApiResult<Json<PredictionsBody>> {
    let q = query(q)?;
    let (model, version) = model_of(&state, &id, &class).await?;
    let polarity = q.polarity()?;
    let episodes = candidates(&state, &q).await?;
    let scored = score_episodes(&model, &episodes)?;
    Ok(Json(PredictionsBody {
        class,
        version,
        min_confidence: q.min_confidence(),
        polarity,
        predictions: filter_confident(&scored, q.min_confidence(), polarity)?,
    }))
}

async fn uncertain(
    State(state): State<AppState>,
    Path((id, class)): Path<(String, String)>,
    q: Result<Query<ApiQuery>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let q = query(q)?;
    let (model, version) = model_of(&state, &id, &class).await?;
    let episodes = candidates(&state, &q).await?;
    let mut ranked = rank_by_uncertainty(score_episodes(&model, &episodes)?);
    ranked.truncate(q.limit.unwrap_or(10));
    Ok(Json(
        json!({ "class": class, "version": version, "episodes": ranked }),
    ))
}

#[derive(Debug, Deserialize)]
struct CombineBody {
    members: Vec<String>,
    mode: String,
}

async fn combined(
    State(state): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<ApiQuery>, QueryRejection>,
    b: Result<Json<CombineBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let q = query(q)?;
    let b = body(b)?;
    let mode = CombineMode::from_str(&b.mode)?;
    let mut models = Vec::with_capacity(b.members.len());
    let mut versions = Vec::with_capacity(b.members.len());
    for class in &b.members {
        let (m, v) = model_of(&state, &id, class).await?;
        models.push(m);
        versions.push(v);
    }
    let model = combine(models, mode)?;
    let polarity = q.polarity()?;
    let episodes = candidates(&state, &q).await?;
    let scored = score_episodes(&model, &episodes)?;
    Ok(Json(json!({
        "members": b.members,
        "versions": versions,
        "mode": mode,
        "min_confidence": q.min_confidence(),
        "polarity": polarity,
        "predictions": filter_confident(&scored, q.min_confidence(), polarity)?,
    })))
}
