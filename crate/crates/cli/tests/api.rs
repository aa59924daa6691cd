//! Contract tests against a live server on an ephemeral port.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

use slipforge::service::{router, AppState, Candidate, CandidateList, ErrorBody, FragmentDetail, FragmentSummary, Health};
use slipforge_core::datastore::{model_fingerprint, Ledger, MatchRecord, Verdict};
use slipforge_core::matcher::{train, EmbeddingModel, TrainConfig};
use slipforge_core::physics::{generate_dataset, PhysicsParams};

struct Server {
    base: String,
    client: Client,
    _dir: tempfile::TempDir,
    ledger_path: std::path::PathBuf,
}

impl Server {
    async fn start(params: PhysicsParams, pairs: usize, interference: usize, model: EmbeddingModel, static_dir: Option<&Path>) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let ledger_path = dir.path().join("ledger.jsonl");
        let dataset = generate_dataset(&params, pairs, interference, 11).unwrap();
        let state = AppState::new(dataset, model, Ledger::open(&ledger_path).unwrap()).unwrap();
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
        let addr = listener.local_addr().unwrap();
        let app = router(Arc::new(state), static_dir.map(Path::to_path_buf));
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        Self { base: format!("http://{addr}"), client: Client::new(), _dir: dir, ledger_path }
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = r.status();
        (status, r.json().await.unwrap())
    }

    async fn post(&self, path: &str, body: &str) -> (StatusCode, Value) {
        let r = self
            .client
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body.to_owned())
            .send()
            .await
            .unwrap();
        let status = r.status();
        (status, r.json().await.unwrap())
    }
}

fn small() -> PhysicsParams {
    PhysicsParams::default()
}

fn error_code(v: &Value) -> String {
    serde_json::from_value::<ErrorBody>(v.clone()).unwrap().error
}

fn assert_ranked(list: &[Candidate]) {
    for (i, w) in list.windows(2).enumerate() {
        assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].candidate_id < w[1].candidate_id), "at {i}");
        assert!(w[0].confidence >= w[1].confidence);
    }
    assert!(list.iter().enumerate().all(|(i, c)| c.rank == i + 1 && (0.0..=1.0).contains(&c.confidence)));
}

#[tokio::test]
async fn health_and_fragment_browsing() {
    let model = EmbeddingModel::with_default_shape(0);
    let id = model_fingerprint(&model).unwrap();
    let s = Server::start(small(), 10, 4, model, None).await;

    let (status, body) = s.get("/api/health").await;
    assert_eq!(status, StatusCode::OK);
    let health: Health = serde_json::from_value(body).unwrap();
    assert_eq!((health.fragments, health.pairs), (24, 10));
    assert_eq!(health.model, id);
    assert_eq!(health.dataset, "synthetic-10p-4i-s11");

    let (status, body) = s.get("/api/fragments?group=upper").await;
    assert_eq!(status, StatusCode::OK);
    let uppers: Vec<FragmentSummary> = serde_json::from_value(body).unwrap();
    assert_eq!(uppers.len(), 12);
    assert!(uppers.windows(2).all(|w| w[0].id < w[1].id));
    let (_, all) = s.get("/api/fragments").await;
    assert_eq!(all.as_array().unwrap().len(), 24);

    let (status, body) = s.get("/api/fragments/P00003-L").await;
    assert_eq!(status, StatusCode::OK);
    let detail: FragmentDetail = serde_json::from_value(body).unwrap();
    assert_eq!(detail.edge.len(), 64);

    let (status, body) = s.get("/api/fragments/NOPE").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "not_found");
    let (status, body) = s.get("/api/fragments?group=middle").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "invalid_input");
    let (status, _) = s.get("/api/nothing-here").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn exact_complement_ranks_first_with_full_confidence() {
    let uncorroded = PhysicsParams { corrosion_steps: 0, ..small() };
    let s = Server::start(uncorroded, 10, 0, EmbeddingModel::with_default_shape(0), None).await;
    for method in ["dtw", "wisepanda"] {
        let (status, body) = s.get(&format!("/api/fragments/P00004-U/candidates?k=10&method={method}")).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let list: CandidateList = serde_json::from_value(body).unwrap();
        assert_eq!(list.candidates.len(), 10);
        assert_eq!(list.candidates[0].candidate_id, "P00004-L", "{method}");
        assert_eq!(list.candidates[0].confidence, 1.0);
        assert_ranked(&list.candidates);
    }
}

#[tokio::test]
async fn candidate_request_validation() {
    let s = Server::start(small(), 5, 0, EmbeddingModel::with_default_shape(0), None).await;
    for q in ["k=0", "k=-3", "k=ten", "method=sift"] {
        let (status, body) = s.get(&format!("/api/fragments/P00000-U/candidates?{q}")).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{q}");
        assert_eq!(error_code(&body), "invalid_input");
    }
    let (status, _) = s.get("/api/fragments/ZZZ/candidates").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    // k beyond the pool returns the whole pool
    let (_, body) = s.get("/api/fragments/P00000-U/candidates?k=500&method=cosine").await;
    let list: CandidateList = serde_json::from_value(body).unwrap();
    assert_eq!((list.candidates.len(), list.pool_size, list.k), (5, 5, 500));
    assert!(list.candidates.iter().all(|c| c.candidate_id.ends_with("-L")));
}

#[tokio::test]
async fn trained_model_on_extended_pool_returns_exactly_k() {
    let params = small();
    let train_set = generate_dataset(&params, 300, 0, 99).unwrap();
    let model = train(&EmbeddingModel::with_default_shape(0), &train_set, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
    let s = Server::start(params, 118, 1114, model, None).await;
    let (_, health) = s.get("/api/health").await;
    assert_eq!(health["fragments"], 1350);
    for target in ["P00000-U", "P00117-L", "X00000-U"] {
        let (status, body) = s.get(&format!("/api/fragments/{target}/candidates?k=50&method=wisepanda")).await;
        assert_eq!(status, StatusCode::OK);
        let list: CandidateList = serde_json::from_value(body).unwrap();
        assert_eq!(list.candidates.len(), 50);
        assert_eq!(list.pool_size, 675);
        assert_ranked(&list.candidates);
    }
    // same request, same answer
    let (_, a) = s.get("/api/fragments/P00010-U/candidates?k=50").await;
    let (_, b) = s.get("/api/fragments/P00010-U/candidates?k=50").await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn verdicts_are_recorded_and_listed() {
    let s = Server::start(small(), 10, 0, EmbeddingModel::with_default_shape(0), None).await;
    let body = json!({"target_id": "P00001-U", "candidate_id": "P00001-L", "verdict": "confirmed", "note": "ink lines continue",
                      "method": "wisepanda", "rank_shown": 1, "confidence_shown": 0.93});
    let (status, rec) = s.post("/api/matches", &body.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{rec}");
    let rec: MatchRecord = serde_json::from_value(rec).unwrap();
    assert_eq!((rec.record_id, rec.verdict), (1, Verdict::Confirmed));
    assert_eq!(rec.note, "ink lines continue");

    let reject = json!({"target_id": "P00002-L", "candidate_id": "P00001-U", "verdict": "rejected", "note": ""});
    let (status, _) = s.post("/api/matches", &reject.to_string()).await;
    assert_eq!(status, StatusCode::OK);

    let (_, listed) = s.get("/api/matches?target_id=P00001-U").await;
    let listed: Vec<MatchRecord> = serde_json::from_value(listed).unwrap();
    assert_eq!(listed, vec![rec]);
    let (_, all) = s.get("/api/matches").await;
    assert_eq!(all.as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn failed_posts_leave_the_ledger_untouched() {
    let s = Server::start(small(), 10, 0, EmbeddingModel::with_default_shape(0), None).await;
    let ok = json!({"target_id": "P00001-U", "candidate_id": "P00001-L", "verdict": "confirmed"});
    s.post("/api/matches", &ok.to_string()).await;
    let before = std::fs::read(&s.ledger_path).unwrap();

    let cases = [
        (json!({"target_id": "P00001-U", "candidate_id": "GHOST", "verdict": "confirmed"}).to_string(), StatusCode::NOT_FOUND, "not_found"),
        (json!({"target_id": "P00001-U", "candidate_id": "P00002-U", "verdict": "confirmed"}).to_string(), StatusCode::CONFLICT, "group_protocol"),
        (json!({"target_id": "P00001-U", "candidate_id": "P00001-L", "verdict": "maybe"}).to_string(), StatusCode::BAD_REQUEST, "invalid_input"),
        (json!({"target_id": "P00001-U", "candidate_id": "P00001-L", "verdict": "confirmed", "confidence_shown": 3.0}).to_string(), StatusCode::BAD_REQUEST, "invalid_input"),
        ("{not json".to_owned(), StatusCode::BAD_REQUEST, "invalid_input"),
    ];
    for (body, status, code) in cases {
        let (got, err) = s.post("/api/matches", &body).await;
        assert_eq!((got, error_code(&err).as_str()), (status, code), "{body}");
    }
    assert_eq!(std::fs::read(&s.ledger_path).unwrap(), before);
}

#[tokio::test]
async fn concurrent_posts_get_distinct_ids() {
    let s = Arc::new(Server::start(small(), 10, 0, EmbeddingModel::with_default_shape(0), None).await);
    let tasks: Vec<_> = (0..40)
        .map(|i| {
            let s = Arc::clone(&s);
            tokio::spawn(async move {
                let body = json!({"target_id": format!("P{:05}-U", i % 10), "candidate_id": "P00000-L", "verdict": "rejected"});
                let (status, rec) = s.post("/api/matches", &body.to_string()).await;
                assert_eq!(status, StatusCode::OK);
                rec["record_id"].as_u64().unwrap()
            })
        })
        .collect();
    let mut ids = Vec::new();
    for t in tasks {
        ids.push(t.await.unwrap());
    }
    ids.sort_unstable();
    assert_eq!(ids, (1..=40).collect::<Vec<_>>());
}

#[tokio::test]
async fn static_files_are_served_beside_the_api() {
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>review</html>").unwrap();
    let s = Server::start(small(), 3, 0, EmbeddingModel::with_default_shape(0), Some(ui.path())).await;
    let page = s.client.get(format!("{}/", s.base)).send().await.unwrap();
    assert_eq!(page.status(), StatusCode::OK);
    assert_eq!(page.text().await.unwrap(), "<html>review</html>");
    let (status, _) = s.get("/api/health").await;
    assert_eq!(status, StatusCode::OK);
}
