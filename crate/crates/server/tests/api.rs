use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use commdyn_core::{
    analyze_pair, filter_confident, parse_events, rank_by_uncertainty, score_episodes,
    AnalysisParams, DetectionParams, Label, Pair, ParseOptions, Threshold,
};
use commdyn_server::{app, router, AppState, Corpus, ServerConfig, SessionStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

/// Pair 1,2: two bursts of three messages at 0 and 100.
/// Pair 1,3: six bursts of growing size, 1000 s apart.
fn corpus_text() -> String {
    let mut s = String::from(
        "# sender receiver timestamp\n1 2 0\n1 2 1\n1 2 2\n2 1 100\n1 2 101\n2 1 102\n",
    );
    for k in 0..6 {
        for j in 0..=k {
            let (from, to) = if j % 2 == 0 { (1, 3) } else { (3, 1) };
            s.push_str(&format!("{from} {to} {}\n", 1000 * (k + 1) + j));
        }
    }
    s.push_str("4 4 5\n");
    s
}

fn corpus() -> Corpus {
    let (log, report) = parse_events(corpus_text().as_bytes(), ParseOptions::default()).unwrap();
    Corpus {
        name: "fixture".into(),
        log,
        report,
    }
}

fn state() -> AppState {
    AppState::new(corpus(), SessionStore::in_memory())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, bytes)
}

async fn call_json(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, v)
}

const BURSTS: &str = "/api/pairs/1/3/episodes?sigma=1&h=1&grid_n=8000";

fn burst_params() -> AnalysisParams {
    AnalysisParams {
        sigma: Some(1.0),
        h: Some(1.0),
        grid_n: Some(8000),
        detection: DetectionParams {
            epsilon: Threshold::relative(0.05),
            ..Default::default()
        },
        ..Default::default()
    }
}

async fn new_session(app: &Router) -> String {
    let (status, v) = call_json(app, "POST", "/api/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    v["id"].as_str().unwrap().to_string()
}

/// Loads the six-burst episodes and returns their refs in time order.
async fn burst_refs(app: &Router) -> Vec<String> {
    let (status, v) = call_json(app, "GET", BURSTS, None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v["episodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["id"].as_str().unwrap().to_string())
        .collect()
}

async fn label(app: &Router, id: &str, r: &str, l: &str) -> Value {
    let (status, v) = call_json(
        app,
        "PUT",
        &format!("/api/sessions/{id}/labels"),
        Some(json!({"episode_ref": r, "label": l})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v
}

#[tokio::test]
async fn health_reports_corpus() {
    let app = router(state());
    let (status, v) = call_json(&app, "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["corpus"]["events"], 28);
    assert_eq!(v["corpus"]["entities"], 4);
}

#[tokio::test]
async fn pairs_follow_list_pairs() {
    let app = router(state());
    let (status, v) = call_json(&app, "GET", "/api/pairs?min=10", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        v,
        json!([{"a": "1", "b": "3", "count_ab": 12, "count_ba": 9, "total": 21}])
    );
    let (_, all) = call_json(&app, "GET", "/api/pairs", None).await;
    assert_eq!(all.as_array().unwrap().len(), 2);
    let (status, v) = call_json(&app, "GET", "/api/pairs?min=abc", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "bad_query");
}

#[tokio::test]
async fn profile_and_pair_errors() {
    let app = router(state());
    let (status, v) = call_json(
        &app,
        "GET",
        "/api/pairs/1/2/profile?sigma=1&h=1&grid_n=500",
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["f_in"].as_array().unwrap().len(), 500);
    assert_eq!(v["n_out"], 4);
    assert_eq!(v["n_in"], 2);

    let (status, v) = call_json(&app, "GET", "/api/pairs/1/99/profile", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_pair");
    let (status, v) = call_json(&app, "GET", "/api/pairs/2/3/episodes", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_pair");
    let (status, v) = call_json(&app, "GET", "/api/pairs/1/1/profile", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_pair");
    let (status, v) = call_json(&app, "GET", "/api/pairs/1/2/profile?sigma=-1", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_parameter");
    let (status, v) = call_json(&app, "GET", "/api/pairs/1/2/profile?zoom=huge", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_parameter");
}

#[tokio::test]
async fn two_burst_episodes_with_features() {
    let app = router(state());
    let (status, v) = call_json(
        &app,
        "GET",
        "/api/pairs/1/2/episodes?sigma=1&h=1&epsilon=0.05&epsilon_mode=relative",
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let eps = v["episodes"].as_array().unwrap();
    assert_eq!(eps.len(), 2);
    assert!(eps[0]["start"].as_f64().unwrap() < 0.0 && eps[0]["end"].as_f64().unwrap() > 2.0);
    assert!(eps[1]["start"].as_f64().unwrap() < 100.0 && eps[1]["end"].as_f64().unwrap() > 102.0);
    assert_eq!(eps[1]["features"]["count_in"], 2.0);
    assert_eq!(eps[1]["features"]["turn_count"], 2.0);
    assert_eq!(v["residual"], 0);

    // same episodes as the library
    let (log, _) = parse_events(corpus_text().as_bytes(), ParseOptions::default()).unwrap();
    let lib = analyze_pair(
        &log,
        &Pair::new("1", "2"),
        &AnalysisParams {
            sigma: Some(1.0),
            h: Some(1.0),
            ..Default::default()
        },
    )
    .unwrap();
    let ids: Vec<&str> = eps.iter().map(|e| e["id"].as_str().unwrap()).collect();
    let lib_ids: Vec<&str> = lib.episodes.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, lib_ids);
}

#[tokio::test]
async fn reads_are_byte_identical() {
    let app = router(state());
    for uri in [
        "/api/pairs/1/3/profile?sigma=1&h=2",
        BURSTS,
        "/api/pairs?min=1",
        "/api/health",
    ] {
        let (s1, a) = call(&app, "GET", uri, None).await;
        let (s2, b) = call(&app, "GET", uri, None).await;
        assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
        assert_eq!(a, b, "{uri}");
    }
    // cache is transparent: a fresh server gives the same body
    let (_, fresh) = call(&router(state()), "GET", BURSTS, None).await;
    let (_, warm) = call(&app, "GET", BURSTS, None).await;
    assert_eq!(fresh, warm);
}

#[tokio::test]
async fn sessions_labels_and_training() {
    let st = state();
    let app = router(st.clone());
    let id = new_session(&app).await;
    let (_, s) = call_json(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(s["labels"], json!([]));

    let (status, v) = call_json(&app, "GET", "/api/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_session");

    let refs = burst_refs(&app).await;
    assert_eq!(refs.len(), 6);

    // only positives
    label(&app, &id, &refs[5], "positive").await;
    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/api/sessions/{id}/models/big/train"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "needs_both_classes");
    let (_, st_body) = call_json(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/big/status"),
        None,
    )
    .await;
    assert_eq!(st_body["state"], "failed");
    assert_eq!(st_body["error_code"], "needs_both_classes");

    // 1 pos + 1 neg
    label(&app, &id, &refs[0], "negative").await;
    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/api/sessions/{id}/models/big/train"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["version"], 1);
    assert_eq!(v["n_examples"], 2);
    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/api/sessions/{id}/models/big/train"),
        Some(json!({"seed": 7})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["version"], 2);
    assert_eq!(v["config"]["rng_seed"], 7);
    let (_, st_body) = call_json(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/big/status"),
        None,
    )
    .await;
    assert_eq!(st_body, json!({"state": "ready", "version": 2}));

    let (status, v) = call_json(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/other/predictions"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_class");
    let (status, _) = call_json(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/other/status"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn labelling_is_idempotent_and_reports_stale_refs() {
    let app = router(state());
    let id = new_session(&app).await;
    let refs = burst_refs(&app).await;
    let first = label(&app, &id, &refs[2], "positive").await;
    let (_, before) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    let second = label(&app, &id, &refs[2], "positive").await;
    let (_, after) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(first, second);
    assert_eq!(before, after);
    assert_eq!(first["stale"], false);

    let v = label(&app, &id, "0123456789abcdef0123456789abcdef", "negative").await;
    assert_eq!(v["stale"], true);
    label(&app, &id, &refs[0], "negative").await;
    let (_, s) = call_json(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    let stale: Vec<&Value> = s["labels"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|l| l["stale"] == true)
        .collect();
    assert_eq!(stale.len(), 1);

    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/api/sessions/{id}/models/c/train"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["n_examples"], 2);
    assert_eq!(v["stale_refs"], json!(["0123456789abcdef0123456789abcdef"]));

    // null removes
    let (status, v) = call_json(
        &app,
        "PUT",
        &format!("/api/sessions/{id}/labels"),
        Some(json!({"episode_ref": refs[2], "label": null})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["labels"], 2);
    let (status, v) = call_json(
        &app,
        "PUT",
        &format!("/api/sessions/{id}/labels"),
        Some(json!({"episode_ref": refs[2], "label": "maybe"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_parameter");
}

#[tokio::test]
async fn predictions_match_library_filtering() {
    let app = router(state());
    let id = new_session(&app).await;
    let refs = burst_refs(&app).await;
    label(&app, &id, &refs[0], "negative").await;
    label(&app, &id, &refs[1], "negative").await;
    label(&app, &id, &refs[4], "positive").await;
    label(&app, &id, &refs[5], "positive").await;
    let (status, _) = call_json(
        &app,
        "POST",
        &format!("/api/sessions/{id}/models/big/train"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (_, model) = call_json(&app, "GET", &format!("/api/sessions/{id}/models/big"), None).await;
    let model: commdyn_core::ForestModel = serde_json::from_value(model).unwrap();

    let (log, _) = parse_events(corpus_text().as_bytes(), ParseOptions::default()).unwrap();
    let lib = analyze_pair(&log, &Pair::new("1", "3"), &burst_params()).unwrap();
    let scored = score_episodes(&model, &lib.episodes).unwrap();

    for (min, polarity, lab) in [
        (0.9, "positive", Label::Positive),
        (0.0, "positive", Label::Positive),
        (0.8, "negative", Label::Negative),
    ] {
        let (status, v) = call_json(
            &app,
            "GET",
            &format!("/api/sessions/{id}/models/big/predictions?min_confidence={min}&polarity={polarity}"),
            None,
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        let expected = filter_confident(&scored, min, lab).unwrap();
        assert_eq!(
            v["predictions"],
            serde_json::to_value(&expected).unwrap(),
            "{min} {polarity}"
        );
        assert_eq!(v["version"], 1);
    }

    // pair-scoped scoring uses the same episodes
    let uri = format!(
        "/api/sessions/{id}/models/big/predictions?pair=1,3&sigma=1&h=1&grid_n=8000&min_confidence=0.5"
    );
    let (_, v) = call_json(&app, "GET", &uri, None).await;
    assert_eq!(
        v["predictions"],
        serde_json::to_value(filter_confident(&scored, 0.5, Label::Positive).unwrap()).unwrap()
    );

    let (_, v) = call_json(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/big/uncertain?limit=3"),
        None,
    )
    .await;
    let mut expected = rank_by_uncertainty(scored.clone());
    expected.truncate(3);
    assert_eq!(v["episodes"], serde_json::to_value(&expected).unwrap());

    let (status, v) = call_json(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/big/predictions?min_confidence=2"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_parameter");
}

#[tokio::test]
async fn combined_models() {
    let app = router(state());
    let id = new_session(&app).await;
    let refs = burst_refs(&app).await;
    label(&app, &id, &refs[0], "negative").await;
    label(&app, &id, &refs[5], "positive").await;
    call_json(
        &app,
        "POST",
        &format!("/api/sessions/{id}/models/a/train"),
        None,
    )
    .await;
    label(&app, &id, &refs[3], "positive").await;
    call_json(
        &app,
        "POST",
        &format!("/api/sessions/{id}/models/b/train"),
        Some(json!({"seed": 3})),
    )
    .await;

    let uri = format!("/api/sessions/{id}/models/combined");
    let (status, and) = call_json(
        &app,
        "POST",
        &uri,
        Some(json!({"members": ["a", "b"], "mode": "and"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{and}");
    let (_, or) = call_json(
        &app,
        "POST",
        &uri,
        Some(json!({"members": ["a", "b"], "mode": "or"})),
    )
    .await;
    let (_, a) = call_json(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/a/predictions"),
        None,
    )
    .await;
    let (_, b) = call_json(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/b/predictions"),
        None,
    )
    .await;
    let n = |v: &Value, k: &str| v[k].as_array().unwrap().len();
    assert!(n(&and, "predictions") <= n(&a, "predictions").min(n(&b, "predictions")));
    assert!(n(&or, "predictions") >= n(&a, "predictions").max(n(&b, "predictions")));
    assert_eq!(and["versions"], json!([1, 1]));

    let (status, v) = call_json(
        &app,
        "POST",
        &uri,
        Some(json!({"members": ["a", "zzz"], "mode": "or"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_class");
    let (status, v) = call_json(
        &app,
        "POST",
        &uri,
        Some(json!({"members": [], "mode": "or"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "empty_combination");
    let (status, v) = call_json(
        &app,
        "POST",
        &uri,
        Some(json!({"members": ["a"], "mode": "xor"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_parameter");
}

#[tokio::test]
async fn view_state_is_validated_and_kept() {
    let app = router(state());
    let id = new_session(&app).await;
    let uri = format!("/api/sessions/{id}/view");
    let view = json!({"zoom": "fine", "threads": [
        {"label": "2003", "ranges": [[0, 10], [20, 30]], "layout": "vertical"},
        {"label": "2004", "ranges": [[40, 50]]}
    ]});
    let (status, _) = call_json(&app, "PUT", &uri, Some(view)).await;
    assert_eq!(status, StatusCode::OK);
    let (_, s) = call_json(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(s["view_state"]["zoom"], "fine");
    assert_eq!(s["view_state"]["threads"][0]["label"], "2003");
    assert_eq!(s["view_state"]["threads"][1]["layout"], "horizontal");

    let (status, v) = call_json(
        &app,
        "PUT",
        &uri,
        Some(json!({"zoom": "fine", "threads": [{"label": "x", "ranges": [[0, 10], [5, 15]]}]})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "overlapping_ranges");
    let (status, _) = call_json(&app, "PUT", &uri, Some(json!({"zoom": "galactic"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, v) = call_json(&app, "PUT", &uri, Some(json!({"threads": 3}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "bad_body");
}

#[tokio::test]
async fn sessions_persist_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(
        corpus(),
        SessionStore::open(dir.path()).unwrap(),
    ));
    let id = new_session(&app).await;
    let refs = burst_refs(&app).await;
    label(&app, &id, &refs[0], "negative").await;
    label(&app, &id, &refs[5], "positive").await;
    let (_, trained) = call_json(
        &app,
        "POST",
        &format!("/api/sessions/{id}/models/k/train"),
        None,
    )
    .await;
    let (_, p1) = call(
        &app,
        "GET",
        &format!("/api/sessions/{id}/models/k/predictions"),
        None,
    )
    .await;

    let restarted = router(AppState::new(
        corpus(),
        SessionStore::open(dir.path()).unwrap(),
    ));
    // refs resolve again once the same parameters are requested
    let (_, s) = call_json(&restarted, "GET", &format!("/api/sessions/{id}"), None).await;
    assert!(s["labels"]
        .as_array()
        .unwrap()
        .iter()
        .all(|l| l["stale"] == true));
    assert_eq!(burst_refs(&restarted).await, refs);
    let (_, s) = call_json(&restarted, "GET", &format!("/api/sessions/{id}"), None).await;
    assert!(s["labels"]
        .as_array()
        .unwrap()
        .iter()
        .all(|l| l["stale"] == false));
    assert_eq!(s["models"]["k"]["version"], trained["version"]);
    let (_, p2) = call(
        &restarted,
        "GET",
        &format!("/api/sessions/{id}/models/k/predictions"),
        None,
    )
    .await;
    assert_eq!(p1, p2);

    // other detection parameters produce other refs
    let (_, v) = call_json(
        &restarted,
        "GET",
        "/api/pairs/1/3/episodes?sigma=1&h=1.5&grid_n=8000",
        None,
    )
    .await;
    let other: Vec<&str> = v["episodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["id"].as_str().unwrap())
        .collect();
    assert!(other.iter().all(|r| !refs.iter().any(|x| x == r)));
}

#[tokio::test]
async fn concurrent_label_writes_are_all_kept() {
    let app = router(state());
    let id = new_session(&app).await;
    let mut tasks = Vec::new();
    for i in 0..32 {
        let app = app.clone();
        let id = id.clone();
        tasks.push(tokio::spawn(async move {
            let l = if i % 2 == 0 { "positive" } else { "negative" };
            label(&app, &id, &format!("ref{i:02}"), l).await;
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    let (_, s) = call_json(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(s["labels"].as_array().unwrap().len(), 32);
}

#[tokio::test]
async fn static_ui_and_cors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>ui</html>").unwrap();
    let mut cfg = ServerConfig::new("unused");
    cfg.ui_dir = Some(dir.path().to_path_buf());
    let app = app(state(), &cfg).unwrap();
    let (status, body) = call(&app, "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>ui</html>");
    let (status, body) = call(&app, "GET", "/threads/3", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>ui</html>");

    let req = Request::builder()
        .uri("/api/health")
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");

    cfg.cors_origin = Some("http://localhost:5173".into());
    let app = commdyn_server::app(state(), &cfg).unwrap();
    let req = Request::builder()
        .uri("/api/health")
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(
        resp.headers()["access-control-allow-origin"],
        "http://localhost:5173"
    );
}

#[test]
fn unreadable_corpus_names_path() {
    let cfg = ServerConfig::new("/nonexistent/corpus.txt");
    let err = commdyn_server::load_state(&cfg).err().unwrap();
    assert!(err.to_string().contains("/nonexistent/corpus.txt"), "{err}");
}
