//! JSON-over-HTTP clients for a remote model service.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, BackendError, DecodingMode, Embedder, EmbeddingVector, GenerationRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub url: String,
    /// Extra attempts after the first failure.
    pub retries: u32,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    pub backoff_ms: u64,
}

impl HttpConfig {
    pub fn new(url: impl Into<String>) -> Self {
        HttpConfig { url: url.into(), retries: 2, max_in_flight: 4, timeout_secs: 120, backoff_ms: 200 }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate poisoned");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate poisoned") += 1;
        self.0.cv.notify_one();
    }
}

struct Client {
    config: HttpConfig,
    agent: ureq::Agent,
    gate: Gate,
}

impl Client {
    fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(config.timeout_secs)).build();
        let gate = Gate::new(config.max_in_flight);
        Client { config, agent, gate }
    }

    fn post<T: DeserializeOwned>(&self, endpoint: &str, body: serde_json::Value) -> Result<T, BackendError> {
        let url = format!("{}/{}", self.config.url.trim_end_matches('/'), endpoint);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let result = {
                let _permit = self.gate.acquire();
                self.agent.post(&url).send_json(&body)
            };
            let err = match result {
                Ok(resp) => {
                    return resp.into_json::<T>().map_err(|e| BackendError::Malformed { endpoint: url, message: e.to_string() })
                }
                Err(ureq::Error::Status(status, resp)) => {
                    let message = resp
                        .into_json::<serde_json::Value>()
                        .ok()
                        .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_owned))
                        .unwrap_or_else(|| "no error message".into());
                    let retryable = status >= 500 || status == 429;
                    let err = BackendError::Status { endpoint: url.clone(), status, attempts, message };
                    if !retryable {
                        return Err(err);
                    }
                    err
                }
                Err(ureq::Error::Transport(t)) => {
                    BackendError::Transport { endpoint: url.clone(), attempts, message: t.to_string() }
                }
            };
            if attempts > self.config.retries {
                return Err(err);
            }
            log::warn!("{err}; retrying");
            std::thread::sleep(Duration::from_millis(self.config.backoff_ms * u64::from(attempts)));
        }
    }
}

#[derive(Deserialize)]
struct GenerateReply {
    text: String,
}

#[derive(Deserialize)]
struct ScoreReply {
    logprob: f64,
}

#[derive(Deserialize)]
struct EmbedReply {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

pub struct HttpBackend {
    client: Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        HttpBackend { client: Client::new(config) }
    }
}

impl Backend for HttpBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<String, BackendError> {
        let (mode, top_p, beam_width) = match req.policy.mode {
            DecodingMode::Nucleus { top_p } => ("nucleus", top_p, 1),
            DecodingMode::Beam { beam_width } => ("beam", 1.0, beam_width),
        };
        let body = json!({
            "prompt": req.prompt,
            "mode": mode,
            "top_p": top_p,
            "beam_width": beam_width,
            "max_new_tokens": req.policy.max_new_tokens,
            "seed": req.policy.seed,
        });
        Ok(self.client.post::<GenerateReply>("generate", body)?.text)
    }

    fn score_continuation(&self, prompt: &str, continuation: &str) -> Result<f64, BackendError> {
        let reply: ScoreReply = self.client.post("score", json!({"prompt": prompt, "continuation": continuation}))?;
        if !reply.logprob.is_finite() {
            return Err(BackendError::Malformed { endpoint: "score".into(), message: "non-finite logprob".into() });
        }
        Ok(reply.logprob)
    }
}

pub struct HttpEmbedder {
    client: Client,
}

impl HttpEmbedder {
    pub fn new(config: HttpConfig) -> Self {
        HttpEmbedder { client: Client::new(config) }
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        let reply: EmbedReply = self.client.post("embed", json!({ "texts": texts }))?;
        let bad = |message: String| BackendError::Malformed { endpoint: "embed".into(), message };
        if reply.vectors.len() != texts.len() {
            return Err(bad(format!("{} vectors for {} texts", reply.vectors.len(), texts.len())));
        }
        reply
            .vectors
            .into_iter()
            .map(|v| {
                if v.len() != reply.dim {
                    Err(bad(format!("vector of length {} with dim {}", v.len(), reply.dim)))
                } else if v.iter().any(|x| !x.is_finite()) {
                    Err(bad("non-finite component".into()))
                } else {
                    Ok(EmbeddingVector::new(v))
                }
            })
            .collect()
    }
}
