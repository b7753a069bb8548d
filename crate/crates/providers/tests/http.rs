use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use base64::Engine as _;
use serde_json::{json, Value};
use soundstage_core::templates::{TemplateId, Variables};
use soundstage_providers::http::{HttpConfig, HttpEmbedder, HttpLlm, HttpMusic, HttpTransport};
use soundstage_providers::mock::MockMusic;
use soundstage_providers::{
    Capability, EmbeddingProvider, LlmProvider, LlmRequest, MusicProvider, MusicRequest, ProviderCapabilities,
    ProviderError,
};

#[derive(Clone, Default)]
struct Hits(Arc<AtomicUsize>);

async fn flaky(State(h): State<Hits>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = h.0.fetch_add(1, Ordering::SeqCst);
    if headers.get("authorization").and_then(|v| v.to_str().ok()) != Some("Bearer k") {
        return (StatusCode::UNAUTHORIZED, Json(json!({ "message": "bad key" })));
    }
    if n < 2 {
        return (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "message": "busy" })));
    }
    (StatusCode::OK, Json(json!({ "text": format!("echo:{}", body["template_id"].as_str().unwrap()) })))
}

async fn limited(State(h): State<Hits>) -> (StatusCode, Json<Value>) {
    h.0.fetch_add(1, Ordering::SeqCst);
    (StatusCode::TOO_MANY_REQUESTS, Json(json!({ "message": "slow down" })))
}

async fn policy(State(h): State<Hits>) -> (StatusCode, Json<Value>) {
    h.0.fetch_add(1, Ordering::SeqCst);
    (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "code": "content_policy", "message": "blocked" })))
}

async fn hang(State(h): State<Hits>) -> Json<Value> {
    h.0.fetch_add(1, Ordering::SeqCst);
    tokio::time::sleep(Duration::from_secs(30)).await;
    Json(json!({}))
}

async fn music(Json(body): Json<Value>) -> Json<Value> {
    let req = MusicRequest::text(body["prompt"].as_str().unwrap(), body["duration_s"].as_f64().unwrap());
    let wav = MockMusic::new(1).render(&req).unwrap();
    Json(json!({ "audio_b64": base64::engine::general_purpose::STANDARD.encode(wav) }))
}

async fn embed(Json(_): Json<Value>) -> Json<Value> {
    let mut v = vec![0.0f32; 512];
    v[0] = 3.0;
    v[1] = 4.0;
    Json(json!({ "embedding": v }))
}

async fn serve(hits: Hits) -> String {
    let app = Router::new()
        .route("/flaky/v1/complete", post(flaky))
        .route("/limited/v1/complete", post(limited))
        .route("/policy/v1/complete", post(policy))
        .route("/hang/v1/complete", post(hang))
        .route("/ok/v1/music", post(music))
        .route("/ok/v1/embed/text", post(embed))
        .with_state(hits);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

fn config(base: &str, path: &str, key_env: &str) -> HttpConfig {
    let mut c = HttpConfig::new("test", format!("{base}/{path}"));
    c.api_key_env = key_env.into();
    c.backoff = Duration::from_millis(5);
    c.timeout = Duration::from_secs(5);
    c.capabilities = ProviderCapabilities::ALL;
    c
}

fn request() -> LlmRequest {
    LlmRequest {
        template_id: TemplateId::SceneKeywords,
        prompt: "p".into(),
        variables: Variables::new(),
        attachments: vec![],
        feedback: None,
    }
}

fn set_key(name: &str, value: &str) {
    std::env::set_var(name, value);
}

#[tokio::test]
async fn retries_transient_failures() {
    let hits = Hits::default();
    let base = serve(hits.clone()).await;
    set_key("SOUNDSTAGE_T1_API_KEY", "k");
    let t = Arc::new(HttpTransport::new(config(&base, "flaky", "SOUNDSTAGE_T1_API_KEY")).unwrap());
    let out = HttpLlm(t.clone()).complete(&request()).await.unwrap();
    assert_eq!(out, "echo:scene_keywords");
    assert_eq!(hits.0.load(Ordering::SeqCst), 3);
    assert_eq!(t.retries(), 2);
}

#[tokio::test]
async fn bad_key_is_auth_error_without_retry() {
    let hits = Hits::default();
    let base = serve(hits.clone()).await;
    set_key("SOUNDSTAGE_T2_API_KEY", "wrong");
    let t = Arc::new(HttpTransport::new(config(&base, "flaky", "SOUNDSTAGE_T2_API_KEY")).unwrap());
    let err = HttpLlm(t).complete(&request()).await.unwrap_err();
    assert!(matches!(err, ProviderError::Auth(_)), "{err:?}");
    assert_eq!(hits.0.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn missing_key_fails_before_network() {
    let hits = Hits::default();
    let base = serve(hits.clone()).await;
    let t = Arc::new(HttpTransport::new(config(&base, "flaky", "SOUNDSTAGE_UNSET_T3_API_KEY")).unwrap());
    let err = HttpLlm(t).complete(&request()).await.unwrap_err();
    assert!(matches!(err, ProviderError::Auth(ref m) if m.contains("SOUNDSTAGE_UNSET_T3_API_KEY")));
    assert_eq!(hits.0.load(Ordering::SeqCst), 0);
}

#[tokio::test]
async fn exhausted_rate_limit_is_quota() {
    let hits = Hits::default();
    let base = serve(hits.clone()).await;
    set_key("SOUNDSTAGE_T4_API_KEY", "k");
    let t = Arc::new(HttpTransport::new(config(&base, "limited", "SOUNDSTAGE_T4_API_KEY")).unwrap());
    let err = HttpLlm(t).complete(&request()).await.unwrap_err();
    assert!(matches!(err, ProviderError::Quota(_)), "{err:?}");
    assert_eq!(hits.0.load(Ordering::SeqCst), 4);
}

#[tokio::test]
async fn content_policy_is_not_retried() {
    let hits = Hits::default();
    let base = serve(hits.clone()).await;
    set_key("SOUNDSTAGE_T5_API_KEY", "k");
    let t = Arc::new(HttpTransport::new(config(&base, "policy", "SOUNDSTAGE_T5_API_KEY")).unwrap());
    let err = HttpLlm(t).complete(&request()).await.unwrap_err();
    assert_eq!(err, ProviderError::ContentPolicy("blocked".into()));
    assert_eq!(hits.0.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn overall_deadline_and_cancellation() {
    let hits = Hits::default();
    let base = serve(hits.clone()).await;
    set_key("SOUNDSTAGE_T6_API_KEY", "k");
    let mut c = config(&base, "hang", "SOUNDSTAGE_T6_API_KEY");
    c.timeout = Duration::from_millis(200);
    let llm = HttpLlm(Arc::new(HttpTransport::new(c).unwrap()));
    let start = Instant::now();
    let err = llm.complete(&request()).await.unwrap_err();
    assert_eq!(err, ProviderError::Timeout(Duration::from_millis(200)));
    assert!(start.elapsed() < Duration::from_secs(2));

    let start = Instant::now();
    let task = tokio::spawn(async move { llm.complete(&request()).await });
    tokio::time::sleep(Duration::from_millis(20)).await;
    task.abort();
    assert!(task.await.unwrap_err().is_cancelled());
    assert!(start.elapsed() < Duration::from_millis(100));
}

#[tokio::test]
async fn music_and_embeddings_decode() {
    let base = serve(Hits::default()).await;
    set_key("SOUNDSTAGE_T7_API_KEY", "k");
    let t = Arc::new(HttpTransport::new(config(&base, "ok", "SOUNDSTAGE_T7_API_KEY")).unwrap());
    let wav = HttpMusic(t.clone()).generate(&MusicRequest::text("lofi", 1.0)).await.unwrap();
    assert_eq!(&wav[..4], b"RIFF");
    let e = HttpEmbedder(t.clone()).embed_text("x").await.unwrap();
    assert_eq!(e.dim(), 512);

    let mut c = config(&base, "ok", "SOUNDSTAGE_T7_API_KEY");
    c.capabilities = ProviderCapabilities::NONE;
    let gated = HttpEmbedder(Arc::new(HttpTransport::new(c).unwrap()));
    assert_eq!(
        gated.embed_audio(&wav).await.unwrap_err(),
        ProviderError::Unsupported(Capability::AudioEmbedding)
    );
}
