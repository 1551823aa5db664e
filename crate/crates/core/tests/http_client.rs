//! Wire-protocol tests of the remote clients against an in-process HTTP server.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use chainruler::backends::{
    Backend, BackendError, DecodingPolicy, Embedder, GenerationRequest, HttpBackend, HttpConfig, HttpEmbedder,
};
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &Value) -> (u16, Value) + Send + Sync;

struct Fixture {
    url: String,
    hits: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<(String, Value)>>>,
}

impl Fixture {
    fn start(handler: impl Fn(&str, &Value) -> (u16, Value) + Send + Sync + 'static) -> Self {
        let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
        let url = format!("http://{}", server.server_addr().to_ip().unwrap());
        let handler: Arc<Handler> = Arc::new(handler);
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let (h, b) = (hits.clone(), bodies.clone());
        thread::spawn(move || {
            for mut req in server.incoming_requests() {
                let (handler, hits, bodies) = (handler.clone(), h.clone(), b.clone());
                thread::spawn(move || {
                    hits.fetch_add(1, Ordering::SeqCst);
                    let mut raw = String::new();
                    req.as_reader().read_to_string(&mut raw).unwrap();
                    let body: Value = serde_json::from_str(&raw).unwrap_or(Value::Null);
                    let path = req.url().to_owned();
                    bodies.lock().unwrap().push((path.clone(), body.clone()));
                    let (status, reply) = handler(&path, &body);
                    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                    let resp = tiny_http::Response::from_string(reply.to_string()).with_status_code(status).with_header(header);
                    let _ = req.respond(resp);
                });
            }
        });
        Fixture { url, hits, bodies }
    }

    fn config(&self) -> HttpConfig {
        HttpConfig { backoff_ms: 1, ..HttpConfig::new(&self.url) }
    }
}

#[test]
fn generate_returns_canned_text_and_sends_every_field() {
    let fx = Fixture::start(|path, _| {
        assert_eq!(path, "/generate");
        (200, json!({"text": " Jill is guilty. Therefore, Jill is guilty."}))
    });
    let backend = HttpBackend::new(fx.config());
    let nucleus = GenerationRequest::new("Here is what we know: x", DecodingPolicy::nucleus(0.5, 200, 17)).unwrap();
    assert_eq!(backend.generate(&nucleus).unwrap(), " Jill is guilty. Therefore, Jill is guilty.");
    let beam = GenerationRequest::new("p", DecodingPolicy::beam(5, 60, 3)).unwrap();
    backend.generate(&beam).unwrap();

    let bodies = fx.bodies.lock().unwrap();
    let n = &bodies[0].1;
    assert_eq!(n["prompt"], "Here is what we know: x");
    assert_eq!(n["mode"], "nucleus");
    assert_eq!(n["top_p"], 0.5);
    assert_eq!(n["max_new_tokens"], 200);
    assert_eq!(n["seed"], 17);
    assert!(n["beam_width"].is_u64());
    let b = &bodies[1].1;
    assert_eq!(b["mode"], "beam");
    assert_eq!(b["beam_width"], 5);
    assert!(b["top_p"].is_number());
    let mut keys: Vec<&String> = b.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["beam_width", "max_new_tokens", "mode", "prompt", "seed", "top_p"]);
}

#[test]
fn score_returns_remote_logprob() {
    let fx = Fixture::start(|path, body| {
        assert_eq!(path, "/score");
        assert_eq!(body, &json!({"prompt": "ctx ", "continuation": "Jill is guilty."}));
        (200, json!({"logprob": -4.2}))
    });
    let backend = HttpBackend::new(fx.config());
    assert_eq!(backend.score_continuation("ctx ", "Jill is guilty.").unwrap(), -4.2);
}

#[test]
fn embed_checks_shape() {
    let fx = Fixture::start(|path, body| {
        assert_eq!(path, "/embed");
        let n = body["texts"].as_array().unwrap().len();
        if n == 3 {
            return (200, json!({"vectors": [[1.0, 0.0], [0.0, 1.0]], "dim": 2}));
        }
        let vectors: Vec<Value> = (0..n).map(|i| json!([i as f64, 1.0, 0.0])).collect();
        (200, json!({"vectors": vectors, "dim": 3}))
    });
    let emb = HttpEmbedder::new(fx.config());
    let v = emb.embed(&["a".into(), "b".into()]).unwrap();
    assert_eq!(v.len(), 2);
    assert_eq!(v[1].values, vec![1.0, 1.0, 0.0]);
    assert_eq!(v[1].dimension, 3);
    let err = emb.embed(&["a".into(), "b".into(), "c".into()]).unwrap_err();
    assert!(matches!(err, BackendError::Malformed { .. }), "{err}");
}

#[test]
fn server_errors_are_retried_then_surfaced() {
    let fx = Fixture::start(|_, _| (500, json!({"error": "model exploded"})));
    let backend = HttpBackend::new(HttpConfig { retries: 2, ..fx.config() });
    match backend.score_continuation("a", "b").unwrap_err() {
        BackendError::Status { status, attempts, message, .. } => {
            assert_eq!(status, 500);
            assert_eq!(attempts, 3);
            assert_eq!(message, "model exploded");
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(fx.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let fx = Fixture::start(|_, _| (400, json!({"error": "empty prompt"})));
    let backend = HttpBackend::new(HttpConfig { retries: 5, ..fx.config() });
    let err = backend.score_continuation("a", "b").unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 400, attempts: 1, .. }), "{err}");
    assert_eq!(fx.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn transient_failure_recovers() {
    let calls = AtomicUsize::new(0);
    let fx = Fixture::start(move |_, _| {
        if calls.fetch_add(1, Ordering::SeqCst) == 0 {
            (503, json!({"error": "loading"}))
        } else {
            (200, json!({"logprob": -1.5}))
        }
    });
    let backend = HttpBackend::new(fx.config());
    assert_eq!(backend.score_continuation("a", "b").unwrap(), -1.5);
    assert_eq!(fx.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn malformed_replies_are_errors() {
    let fx = Fixture::start(|_, _| (200, json!({"txt": "oops"})));
    let backend = HttpBackend::new(fx.config());
    let req = GenerationRequest::new("p", DecodingPolicy::nucleus(0.5, 10, 0)).unwrap();
    assert!(matches!(backend.generate(&req).unwrap_err(), BackendError::Malformed { .. }));
}

#[test]
fn unreachable_endpoint_reports_attempts() {
    let backend = HttpBackend::new(HttpConfig { retries: 1, backoff_ms: 1, ..HttpConfig::new("http://127.0.0.1:9") });
    let err = backend.score_continuation("a", "b").unwrap_err();
    assert!(matches!(err, BackendError::Transport { attempts: 2, .. }), "{err}");
}

#[test]
fn in_flight_requests_are_bounded() {
    let current = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let (c, p) = (current.clone(), peak.clone());
    let fx = Fixture::start(move |_, body| {
        let now = c.fetch_add(1, Ordering::SeqCst) + 1;
        p.fetch_max(now, Ordering::SeqCst);
        thread::sleep(Duration::from_millis(60));
        c.fetch_sub(1, Ordering::SeqCst);
        (200, json!({"logprob": -(body["prompt"].as_str().unwrap().len() as f64)}))
    });
    let backend = Arc::new(HttpBackend::new(HttpConfig { max_in_flight: 3, ..fx.config() }));
    let handles: Vec<_> = (0..12)
        .map(|i| {
            let backend = backend.clone();
            thread::spawn(move || {
                let prompt = "x".repeat(i + 1);
                assert_eq!(backend.score_continuation(&prompt, "c").unwrap(), -((i + 1) as f64));
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let peak = peak.load(Ordering::SeqCst);
    assert!(peak <= 3, "peak {peak} exceeds limit");
    assert!(peak >= 2, "requests were never concurrent");
}
