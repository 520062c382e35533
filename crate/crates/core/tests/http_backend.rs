//! Completion-API adapter against a local stub server: canned completions,
//! transport retry schedules, auth preconditions, and the byte-stable
//! request body.

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use rei_core::engine::http::{build_request_body, complete_prompt, ApiConfig};
use rei_core::engine::{BackendError, GenerationConfig};
use rei_core::prompt::COMPLETION_STOP;
use serde_json::json;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

#[derive(Clone)]
struct StubState {
    hits: Arc<AtomicUsize>,
    /// Status codes to emit before the final 200.
    failures: Arc<Vec<u16>>,
    completion: String,
}

async fn stub_completions(State(state): State<StubState>) -> (StatusCode, Json<serde_json::Value>) {
    let hit = state.hits.fetch_add(1, Ordering::SeqCst);
    if let Some(&status) = state.failures.get(hit) {
        return (
            StatusCode::from_u16(status).unwrap(),
            Json(json!({"error": "scripted failure"})),
        );
    }
    (
        StatusCode::OK,
        Json(json!({"choices": [{"text": state.completion}]})),
    )
}

async fn spawn_stub(failures: Vec<u16>, completion: &str) -> (String, Arc<AtomicUsize>) {
    let hits = Arc::new(AtomicUsize::new(0));
    let state = StubState {
        hits: Arc::clone(&hits),
        failures: Arc::new(failures),
        completion: completion.to_string(),
    };
    let app = Router::new()
        .route("/v1/completions", post(stub_completions))
        .with_state(state);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    (format!("http://{addr}"), hits)
}

fn api_for(base_url: &str, token_env: &str) -> ApiConfig {
    ApiConfig {
        base_url: base_url.to_string(),
        auth_token_env: token_env.to_string(),
        transport_retries: 2,
        ..ApiConfig::default()
    }
}

fn stop() -> Vec<String> {
    vec![COMPLETION_STOP.to_string()]
}

#[tokio::test]
async fn echoes_the_canned_completion() {
    let (base, hits) = spawn_stub(vec![], " a canned completion\"}").await;
    std::env::set_var("REI_TEST_TOKEN_ECHO", "secret");
    let api = api_for(&base, "REI_TEST_TOKEN_ECHO");
    let text = complete_prompt("prompt", &GenerationConfig::api(), &api, &stop(), None)
        .await
        .unwrap();
    assert_eq!(text, " a canned completion\"}");
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn retries_through_server_faults() {
    let (base, hits) = spawn_stub(vec![500, 500], "ok").await;
    std::env::set_var("REI_TEST_TOKEN_RETRY", "secret");
    let api = api_for(&base, "REI_TEST_TOKEN_RETRY");
    let text = complete_prompt("prompt", &GenerationConfig::api(), &api, &stop(), None)
        .await
        .unwrap();
    assert_eq!(text, "ok");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn gives_up_when_retries_run_out() {
    let (base, hits) = spawn_stub(vec![500, 500, 500, 500], "never").await;
    std::env::set_var("REI_TEST_TOKEN_EXHAUST", "secret");
    let api = api_for(&base, "REI_TEST_TOKEN_EXHAUST");
    let err = complete_prompt("prompt", &GenerationConfig::api(), &api, &stop(), None)
        .await
        .unwrap_err();
    assert_eq!(err, BackendError::Http { status: 500 });
    // Initial request plus two retries.
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let (base, hits) = spawn_stub(vec![400], "never").await;
    std::env::set_var("REI_TEST_TOKEN_CLIENT", "secret");
    let api = api_for(&base, "REI_TEST_TOKEN_CLIENT");
    let err = complete_prompt("prompt", &GenerationConfig::api(), &api, &stop(), None)
        .await
        .unwrap_err();
    assert_eq!(err, BackendError::Http { status: 400 });
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn missing_token_fails_before_any_request() {
    let (base, hits) = spawn_stub(vec![], "unused").await;
    let api = api_for(&base, "REI_TEST_TOKEN_DEFINITELY_UNSET");
    let err = complete_prompt("prompt", &GenerationConfig::api(), &api, &stop(), None)
        .await
        .unwrap_err();
    assert_eq!(
        err,
        BackendError::AuthMissing {
            var: "REI_TEST_TOKEN_DEFINITELY_UNSET".to_string()
        }
    );
    assert_eq!(hits.load(Ordering::SeqCst), 0);
}

#[test]
fn request_body_matches_the_golden_fixture() {
    let body = build_request_body(
        "PROMPT",
        &GenerationConfig::api(),
        &ApiConfig::default(),
        &stop(),
        Some(10),
    );
    let golden = include_str!("golden/completion_request.json");
    assert_eq!(body, golden.trim_end());
    // Identical inputs give identical bytes.
    let again = build_request_body(
        "PROMPT",
        &GenerationConfig::api(),
        &ApiConfig::default(),
        &stop(),
        Some(10),
    );
    assert_eq!(body, again);
}

#[test]
fn max_tokens_follows_the_length_constraint() {
    let api = ApiConfig::default();
    let with_length = build_request_body("p", &GenerationConfig::api(), &api, &stop(), Some(7));
    assert!(with_length.contains("\"max_tokens\":21"));
    let without = build_request_body("p", &GenerationConfig::api(), &api, &stop(), None);
    assert!(without.contains("\"max_tokens\":256"));
}
