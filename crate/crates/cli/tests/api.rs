use kgqa::affinity::EmbeddingStore;
use kgqa::pipeline::{Engine, PipelineConfig};
use kgqa::sparql::EndpointConfig;
use kgqa_cli::{router, AppState, RequestLog};
use kgqa_fixture::{dbpedia_slice, FixtureOptions, FixtureServer, BENCHMARK, EMBEDDINGS};
use serde_json::{json, Value};
use std::sync::Arc;

const Q_E: &str = "Name the sea into which Danish Straits flows and has Kaliningrad as one of the city on the shore";

struct Harness {
    base: String,
    fixture: FixtureServer,
    http: reqwest::Client,
}

async fn start(log: Option<RequestLog>) -> Harness {
    let fixture = FixtureServer::spawn(dbpedia_slice(), FixtureOptions::default()).await.unwrap();
    let config = PipelineConfig { endpoint: EndpointConfig::new(fixture.url()), ..PipelineConfig::default() };
    let engine = Engine::with_store(config, EmbeddingStore::parse(EMBEDDINGS).unwrap()).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let app = router(Arc::new(AppState { engine, log }));
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    Harness { base, fixture, http: reqwest::Client::new() }
}

impl Harness {
    async fn post(&self, route: &str, body: Value) -> (u16, Value) {
        let reply = self.http.post(format!("{}{route}", self.base)).json(&body).send().await.unwrap();
        (reply.status().as_u16(), reply.json().await.unwrap())
    }

    async fn get(&self, route: &str) -> Value {
        self.http.get(format!("{}{route}", self.base)).send().await.unwrap().json().await.unwrap()
    }
}

#[tokio::test]
async fn answer_route_returns_the_full_result() {
    let h = start(None).await;
    let (status, body) = h.post("/api/answer", json!({ "question": Q_E })).await;
    assert_eq!(status, 200);
    assert_eq!(body["answers"]["answers"][0]["term"]["value"], "http://dbpedia.org/resource/Baltic_Sea");
    assert_eq!(body["pgp"]["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(body["plans"][0]["rank"], 1);
    assert!(body["plans"][0]["bgp"]["score"].is_number());
    for phase in ["understanding", "linking", "execution", "total"] {
        assert!(body["timings"][phase].is_number());
    }

    let (_, again) = h.post("/api/answer", json!({ "question": Q_E })).await;
    assert_eq!(again["answers"], body["answers"]);
}

#[tokio::test]
async fn request_overrides_win() {
    let h = start(None).await;
    let (status, body) = h.post("/api/answer", json!({ "question": Q_E, "overrides": { "max_queries": 2 } })).await;
    assert_eq!(status, 200);
    assert_eq!(body["plans"].as_array().unwrap().len(), 2);

    let (status, body) =
        h.post("/api/answer", json!({ "question": Q_E, "endpoint_url": "http://127.0.0.1:9/sparql" })).await;
    assert_eq!(status, 502);
    assert_eq!(body["error"]["phase"], "linking");

    let (status, _) = h.post("/api/answer", json!({ "question": Q_E, "overrides": { "embeddings": "/etc/passwd" } })).await;
    assert_eq!(status, 400);
    assert_eq!(h.get("/api/config").await["top_k"], 40);
}

#[tokio::test]
async fn execute_route_runs_edited_plans() {
    let h = start(None).await;
    let (_, answered) = h.post("/api/answer", json!({ "question": Q_E })).await;
    let plan = answered["plans"][0]["sparql"].as_str().unwrap().to_string();

    let (status, body) = h.post("/api/execute", json!({ "query": plan })).await;
    assert_eq!(status, 200);
    assert_eq!(body["results"]["bindings"]["rows"][0]["unknown1"]["value"], "http://dbpedia.org/resource/Baltic_Sea");

    let (_, body) = h.post("/api/execute", json!({ "query": plan.replace("outflow", "inflow") })).await;
    assert_eq!(body["results"]["bindings"]["rows"].as_array().unwrap().len(), 0);

    let (status, body) = h.post("/api/execute", json!({ "query": "SELECT WHERE {" })).await;
    assert_eq!(status, 400);
    assert!(body["error"]["message"].as_str().unwrap().contains("SPARQL compiler"));
}

#[tokio::test]
async fn benchmark_upload() {
    let h = start(None).await;
    let form = reqwest::multipart::Form::new().text("file", BENCHMARK);
    let reply = h.http.post(format!("{}/api/benchmark", h.base)).multipart(form).send().await.unwrap();
    assert_eq!(reply.status().as_u16(), 200);
    let body: Value = reply.json().await.unwrap();
    assert!((body["macro"]["f1"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert!(body["mean_timings"]["total"].is_number());

    let form = reqwest::multipart::Form::new().text("file", "[\n{\"question\": }]");
    let reply = h.http.post(format!("{}/api/benchmark", h.base)).multipart(form).send().await.unwrap();
    assert_eq!(reply.status().as_u16(), 400);
    let body: Value = reply.json().await.unwrap();
    assert_eq!(body["error"]["kind"], "malformed_benchmark");
    assert!(body["error"]["message"].as_str().unwrap().contains("line 2"));
}

#[tokio::test]
async fn health_and_request_log() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("requests.jsonl");
    let h = start(Some(RequestLog::create(&path).unwrap())).await;
    let health = h.get("/api/health").await;
    assert_eq!(health["status"], "ok");
    assert_eq!(health["endpoint"], h.fixture.url());

    h.post("/api/answer", json!({ "question": Q_E })).await;
    h.post("/api/answer", json!({ "question": "" })).await;
    let lines: Vec<Value> =
        std::fs::read_to_string(&path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!((lines[0]["route"].as_str(), lines[0]["status"].as_u64()), (Some("answer"), Some(200)));
    assert_eq!(lines[1]["status"], 422);
}
