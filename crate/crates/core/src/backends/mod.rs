//! Text generation, continuation scoring and embedding providers.

mod embed;
mod http;
mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{cosine, EmbeddingVector, FallbackEmbedder, FALLBACK_DIM};
pub use http::{HttpBackend, HttpConfig, HttpEmbedder};
pub use mock::{mock_heuristic_choice, mock_score, MockBackend, MOCK_SCORE_OFFSET};

pub const DEFAULT_TOP_P: f64 = 0.5;
pub const DEFAULT_BEAM_WIDTH: usize = 5;
/// Token budget for one sentence-sized continuation.
pub const PIECEMEAL_MAX_NEW_TOKENS: usize = 60;
/// Token budget for open-ended completions.
pub const OPEN_MAX_NEW_TOKENS: usize = 200;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{endpoint}: transport failure after {attempts} attempt(s): {message}")]
    Transport { endpoint: String, attempts: u32, message: String },
    #[error("{endpoint}: HTTP {status} after {attempts} attempt(s): {message}")]
    Status { endpoint: String, status: u16, attempts: u32, message: String },
    #[error("{endpoint}: malformed reply: {message}")]
    Malformed { endpoint: String, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DecodingMode {
    Nucleus { top_p: f64 },
    Beam { beam_width: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingPolicy {
    #[serde(flatten)]
    pub mode: DecodingMode,
    pub max_new_tokens: usize,
    pub seed: u64,
}

impl DecodingPolicy {
    pub fn nucleus(top_p: f64, max_new_tokens: usize, seed: u64) -> Self {
        DecodingPolicy { mode: DecodingMode::Nucleus { top_p }, max_new_tokens, seed }
    }

    pub fn beam(beam_width: usize, max_new_tokens: usize, seed: u64) -> Self {
        DecodingPolicy { mode: DecodingMode::Beam { beam_width }, max_new_tokens, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        DecodingPolicy { seed, ..self }
    }

    pub fn with_max_new_tokens(self, max_new_tokens: usize) -> Self {
        DecodingPolicy { max_new_tokens, ..self }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        match self.mode {
            DecodingMode::Nucleus { top_p } if !(top_p > 0.0 && top_p <= 1.0) => {
                Err(BackendError::InvalidRequest(format!("top_p {top_p} outside (0, 1]")))
            }
            DecodingMode::Beam { beam_width: 0 } => Err(BackendError::InvalidRequest("beam_width must be positive".into())),
            _ if self.max_new_tokens == 0 => Err(BackendError::InvalidRequest("max_new_tokens must be positive".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub policy: DecodingPolicy,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, policy: DecodingPolicy) -> Result<Self, BackendError> {
        let prompt = prompt.into();
        if prompt.trim().is_empty() {
            return Err(BackendError::InvalidRequest("empty prompt".into()));
        }
        policy.validate()?;
        Ok(GenerationRequest { prompt, policy })
    }
}

/// A language model: continuation sampling plus conditional log-probabilities.
pub trait Backend: Send + Sync {
    fn generate(&self, req: &GenerationRequest) -> Result<String, BackendError>;

    /// Total log-probability of `continuation` given `prompt`.
    fn score_continuation(&self, prompt: &str, continuation: &str) -> Result<f64, BackendError>;
}

pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError>;

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        let mut v = self.embed(&[text.to_owned()])?;
        v.pop().ok_or_else(|| BackendError::Malformed { endpoint: "embed".into(), message: "no vector returned".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_wire_shape() {
        let p = DecodingPolicy::nucleus(0.5, 200, 3);
        let v = serde_json::to_value(p).unwrap();
        assert_eq!(v, serde_json::json!({"mode": "nucleus", "top_p": 0.5, "max_new_tokens": 200, "seed": 3}));
        let b: DecodingPolicy =
            serde_json::from_str(r#"{"mode":"beam","beam_width":5,"max_new_tokens":60,"seed":1}"#).unwrap();
        assert_eq!(b, DecodingPolicy::beam(5, 60, 1));
    }

    #[test]
    fn request_validation() {
        let p = DecodingPolicy::nucleus(DEFAULT_TOP_P, 10, 0);
        assert!(GenerationRequest::new("  ", p).is_err());
        assert!(GenerationRequest::new("x", DecodingPolicy::nucleus(0.0, 10, 0)).is_err());
        assert!(GenerationRequest::new("x", DecodingPolicy::beam(0, 10, 0)).is_err());
        assert!(GenerationRequest::new("x", p.with_max_new_tokens(0)).is_err());
        assert!(GenerationRequest::new("x", p).is_ok());
    }
}
