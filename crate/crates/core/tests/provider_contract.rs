//! Wire contract for provider endpoints, checked against recorded fixtures,
//! the in-process mock and the mock served over HTTP.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use resrec::providers::mock::MockBackend;
use resrec::providers::wire::*;
use resrec::providers::{ProviderClient, ProviderConfig};
use resrec::Error;
use serde_json::Value;

const FIXTURE_DIM: usize = 16;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/providers")
}

fn requests() -> Vec<(Endpoint, Value)> {
    vec![
        (Endpoint::Embed, serde_json::json!({"texts": ["graph neural networks", "", "Graph graph NODE"]})),
        (
            Endpoint::Summarize,
            serde_json::json!({"contexts": [
                "We compare against GCN on citation graphs.",
                "GCN is a strong baseline for node classification.",
                "Results on citation graphs favour GCN."
            ]}),
        ),
        (
            Endpoint::Rerank,
            serde_json::json!({"prompt": "Rank these.\n\n## Candidates\nCANDIDATES: b3, b1, b2\n\n### [1] b3\n"}),
        ),
        (
            Endpoint::Verify,
            serde_json::json!({
                "entity": "GCN",
                "description": "graph convolutional network",
                "surface_form": "GCN",
                "sentence": "We compare against GCN on Cora."
            }),
        ),
    ]
}

fn name(endpoint: Endpoint) -> &'static str {
    endpoint.path().trim_start_matches('/')
}

/// Checks a response body against the schema and grammar of its endpoint.
fn check_contract(endpoint: Endpoint, request: &Value, body: &str) {
    match endpoint {
        Endpoint::Embed => {
            let resp: EmbedResponse = serde_json::from_str(body).expect("embed schema");
            assert_eq!(resp.vectors.len(), request["texts"].as_array().unwrap().len());
            for v in &resp.vectors {
                assert_eq!(v.len(), resp.dim);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9, "norm {norm}");
            }
        }
        Endpoint::Summarize => {
            let resp: SummarizeResponse = serde_json::from_str(body).expect("summarize schema");
            assert!(!resp.summary.is_empty());
        }
        Endpoint::Rerank => {
            let resp: RerankResponse = serde_json::from_str(body).expect("rerank schema");
            let mut ranked = parse_ranking_line(&resp.ranking).expect("ranking grammar");
            ranked.sort();
            assert_eq!(ranked, ["b1", "b2", "b3"]);
        }
        Endpoint::Verify => {
            let _: VerifyResponse = serde_json::from_str(body).expect("verify schema");
        }
    }
}

#[test]
fn mock_matches_recorded_fixtures() {
    let mock = MockBackend::new(FIXTURE_DIM);
    let bless = std::env::var_os("RESREC_BLESS").is_some();
    for (endpoint, request) in requests() {
        let (status, body) = mock.handle(endpoint, &request.to_string());
        assert_eq!(status, 200);
        check_contract(endpoint, &request, &body);
        let path = fixture_dir().join(format!("{}.json", name(endpoint)));
        let recorded = serde_json::json!({"request": request, "response": serde_json::from_str::<Value>(&body).unwrap()});
        if bless {
            std::fs::create_dir_all(fixture_dir()).unwrap();
            std::fs::write(&path, serde_json::to_string_pretty(&recorded).unwrap() + "\n").unwrap();
        }
        let golden: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(golden, recorded, "{}", path.display());
    }
}

#[test]
fn malformed_bodies_get_structured_400() {
    let mock = MockBackend::default();
    for endpoint in Endpoint::ALL {
        let (status, body) = mock.handle(endpoint, "{\"nope\": 1}");
        assert_eq!(status, 400);
        let err: ErrorBody = serde_json::from_str(&body).unwrap();
        assert_eq!(err.code, "bad_request");
    }
}

type Handler = dyn Fn(Endpoint, &str, Option<String>) -> (u16, String) + Send + Sync;

struct Server {
    server: Arc<tiny_http::Server>,
    thread: Option<JoinHandle<()>>,
    base: String,
}

impl Server {
    fn start(handler: Box<Handler>) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let base = format!("http://{}", server.server_addr().to_ip().unwrap());
        let s = Arc::clone(&server);
        let thread = std::thread::spawn(move || {
            for mut req in s.incoming_requests() {
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                let auth = req
                    .headers()
                    .iter()
                    .find(|h| h.field.equiv("Authorization"))
                    .map(|h| h.value.as_str().to_string());
                let (status, out) = match Endpoint::from_path(req.url()) {
                    Some(e) => handler(e, &body, auth),
                    None => (404, String::new()),
                };
                let _ = req.respond(tiny_http::Response::from_string(out).with_status_code(status));
            }
        });
        Server { server, thread: Some(thread), base }
    }

    fn client(&self, retries: u32, token: Option<&str>) -> ProviderClient {
        let config = ProviderConfig {
            endpoint_base: self.base.clone(),
            retries,
            auth_token: token.map(String::from),
            timeout_secs: 5.0,
            ..ProviderConfig::default()
        };
        ProviderClient::from_config(&config).unwrap()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[test]
fn mock_over_http_is_a_drop_in() {
    let mock = MockBackend::new(FIXTURE_DIM);
    let server = Server::start(Box::new(move |e, body, _| mock.handle(e, body)));
    let http = server.client(0, None);
    let local = ProviderClient::from_config(&ProviderConfig { mock_dim: FIXTURE_DIM, ..ProviderConfig::default() }).unwrap();

    let texts: Vec<String> = vec!["graph neural networks".into(), "Graph graph NODE".into()];
    let a = http.embed(&texts).unwrap();
    assert_eq!(a, local.embed(&texts).unwrap());
    assert_eq!(a, http.embed(&texts).unwrap(), "embeddings are deterministic");

    let contexts = vec!["GCN works on citation graphs.".to_string(), "GCN is a baseline.".to_string()];
    assert_eq!(http.summarize(&contexts).unwrap(), local.summarize(&contexts).unwrap());

    let prompt = "## Candidates\nCANDIDATES: b2, b1\n";
    let r = http.rerank_call(prompt).unwrap();
    assert_eq!(r, local.rerank_call(prompt).unwrap());
    assert_eq!(parse_ranking_line(&r.ranking).unwrap(), ["b2", "b1"]);

    let req = VerifyRequest {
        entity: "GCN".into(),
        description: "graph convolutional network".into(),
        surface_form: "GCN".into(),
        sentence: "We compare against GCN.".into(),
    };
    assert!(http.verify(&req).unwrap());
}

#[test]
fn bearer_token_is_sent() {
    let seen = Arc::new(Mutex::new(None));
    let sink = Arc::clone(&seen);
    let mock = MockBackend::new(4);
    let server = Server::start(Box::new(move |e, body, auth| {
        *sink.lock().unwrap() = auth;
        mock.handle(e, body)
    }));
    server.client(0, Some("s3cret")).embed(&["x".to_string()]).unwrap();
    assert_eq!(seen.lock().unwrap().as_deref(), Some("Bearer s3cret"));
}

#[test]
fn server_errors_retry_and_client_errors_do_not() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&calls);
    let mock = MockBackend::new(4);
    let server = Server::start(Box::new(move |e, body, _| {
        if counter.fetch_add(1, Ordering::SeqCst) < 2 {
            (503, r#"{"code":"busy","message":"try later"}"#.into())
        } else {
            mock.handle(e, body)
        }
    }));
    assert!(server.client(2, None).embed(&["x".to_string()]).is_ok());
    assert_eq!(calls.load(Ordering::SeqCst), 3);

    let bad = Server::start(Box::new(|_, _, _| (400, r#"{"code":"bad_request","message":"no"}"#.into())));
    let err = bad.client(5, None).embed(&["x".to_string()]).unwrap_err();
    assert!(err.is_provider());
    assert!(err.to_string().contains("bad_request"), "{err}");

    let broken = Server::start(Box::new(|_, _, _| (200, "{\"dim\": 2}".into())));
    assert!(matches!(broken.client(0, None).embed(&["x".to_string()]), Err(Error::Provider(_))));
}

#[test]
fn vector_count_mismatch_is_a_provider_error() {
    let server = Server::start(Box::new(|_, _, _| (200, r#"{"dim": 2, "vectors": [[1.0, 0.0]]}"#.into())));
    let err = server.client(0, None).embed(&["a".to_string(), "b".to_string()]).unwrap_err();
    assert!(err.is_provider() && err.to_string().contains("2 texts"), "{err}");
}
