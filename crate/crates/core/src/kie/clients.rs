//! Language-model, multimodal and embedding client interfaces, with
//! deterministic mocks for tests and HTTP-backed adapters for remote
//! endpoints.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Marker the model is instructed to output for absent values.
pub const NOT_FOUND_MARKER: &str = "unknown";

/// Prompt-to-completion client.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

/// (image, question)-to-answer client.
pub trait MllmClient: Send + Sync {
    fn answer(&self, image: &RgbImage, question: &str) -> Result<String>;
}

/// Text embedding client.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f32>>;
}

/// Remote client endpoint configuration, mirroring the chat/retriever
/// config shape: module name, model, base URL, API flavor and key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub module_name: String,
    pub model_name: String,
    pub base_url: String,
    pub api_type: String,
    #[serde(default)]
    pub api_key: String,
}

// ---------------------------------------------------------------------------
// Deterministic mocks
// ---------------------------------------------------------------------------

/// Mock LLM: answers each key listed in the prompt's question section from a
/// fixed table; unknown keys get the not-found marker.
pub struct MockLlm {
    answers: BTreeMap<String, String>,
}

impl MockLlm {
    pub fn with_answers(answers: BTreeMap<String, String>) -> Self {
        Self { answers }
    }
}

impl LlmClient for MockLlm {
    fn complete(&self, prompt: &str) -> Result<String> {
        let mut out = String::new();
        for line in prompt.lines() {
            if let Some(key) = line.strip_prefix("- ") {
                let value = self
                    .answers
                    .get(key.trim())
                    .cloned()
                    .unwrap_or_else(|| NOT_FOUND_MARKER.to_string());
                out.push_str(&format!("{}: {}\n", key.trim(), value));
            }
        }
        Ok(out)
    }
}

/// Mock LLM returning a fixed completion regardless of the prompt.
pub struct ScriptedLlm {
    pub completion: String,
}

impl LlmClient for ScriptedLlm {
    fn complete(&self, _prompt: &str) -> Result<String> {
        Ok(self.completion.clone())
    }
}

/// Mock LLM that always fails.
pub struct FailingLlm;

impl LlmClient for FailingLlm {
    fn complete(&self, _prompt: &str) -> Result<String> {
        Err(Error::ClientFailure {
            path: "text".into(),
            message: "mock llm configured to fail".into(),
        })
    }
}

/// Mock MLLM answering by the key quoted inside the question.
pub struct MockMllm {
    answers: BTreeMap<String, String>,
}

impl MockMllm {
    pub fn with_answers(answers: BTreeMap<String, String>) -> Self {
        Self { answers }
    }
}

impl MllmClient for MockMllm {
    fn answer(&self, _image: &RgbImage, question: &str) -> Result<String> {
        let key = question.split('"').nth(1).unwrap_or_default();
        Ok(self
            .answers
            .get(key)
            .cloned()
            .unwrap_or_else(|| NOT_FOUND_MARKER.to_string()))
    }
}

/// Mock MLLM that always fails.
pub struct FailingMllm;

impl MllmClient for FailingMllm {
    fn answer(&self, _image: &RgbImage, _question: &str) -> Result<String> {
        Err(Error::ClientFailure {
            path: "image".into(),
            message: "mock mllm configured to fail".into(),
        })
    }
}

/// Deterministic embedder: either a fixed text-to-vector table or a hash of
/// the text expanded to a fixed dimension.
pub struct MockEmbedder {
    vectors: BTreeMap<String, Vec<f32>>,
    hash_dimension: Option<usize>,
}

impl MockEmbedder {
    /// Hash-based embeddings of dimension 16; identical text embeds
    /// identically.
    pub fn hashing() -> Self {
        Self {
            vectors: BTreeMap::new(),
            hash_dimension: Some(16),
        }
    }

    /// Fixed table; texts outside the table are an error.
    pub fn with_vectors(vectors: BTreeMap<String, Vec<f32>>) -> Self {
        Self {
            vectors,
            hash_dimension: None,
        }
    }
}

impl Embedder for MockEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        if let Some(v) = self.vectors.get(text) {
            return Ok(v.clone());
        }
        let Some(dim) = self.hash_dimension else {
            return Err(Error::EmbedderFailure(format!(
                "mock embedder has no vector for '{text}'"
            )));
        };
        let digest = Sha256::digest(text.as_bytes());
        Ok((0..dim)
            .map(|i| {
                let raw = u16::from_le_bytes([digest[2 * i], digest[2 * i + 1]]);
                raw as f32 / u16::MAX as f32 * 2.0 - 1.0
            })
            .collect())
    }
}

// ---------------------------------------------------------------------------
// HTTP adapters
// ---------------------------------------------------------------------------

fn http_client(timeout_secs: u64) -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(timeout_secs))
        .build()
        .map_err(|e| Error::ClientFailure {
            path: "http".into(),
            message: e.to_string(),
        })
}

/// OpenAI-style chat-completions client.
pub struct HttpLlmClient {
    config: ClientConfig,
    client: reqwest::blocking::Client,
}

impl HttpLlmClient {
    pub fn new(config: ClientConfig, timeout_secs: u64) -> Result<Self> {
        if config.api_key.is_empty() {
            return Err(Error::ClientFailure {
                path: "text".into(),
                message: "remote llm client requires an api key".into(),
            });
        }
        Ok(Self {
            config,
            client: http_client(timeout_secs)?,
        })
    }
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
        });
        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::ClientFailure {
                path: "text".into(),
                message: e.to_string(),
            })?;
        let value: serde_json::Value = response.json().map_err(|e| Error::ClientFailure {
            path: "text".into(),
            message: e.to_string(),
        })?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| Error::ClientFailure {
                path: "text".into(),
                message: "completion response missing choices[0].message.content".into(),
            })
    }
}

/// OpenAI-style embeddings client.
pub struct HttpEmbedder {
    config: ClientConfig,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(config: ClientConfig, timeout_secs: u64) -> Result<Self> {
        if config.api_key.is_empty() {
            return Err(Error::EmbedderFailure(
                "remote embedder requires an api key".into(),
            ));
        }
        Ok(Self {
            config,
            client: http_client(timeout_secs)?,
        })
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        let url = format!("{}/embeddings", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model_name,
            "input": [text],
        });
        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::EmbedderFailure(e.to_string()))?;
        let value: serde_json::Value = response
            .json()
            .map_err(|e| Error::EmbedderFailure(e.to_string()))?;
        value["data"][0]["embedding"]
            .as_array()
            .map(|arr| arr.iter().filter_map(|v| v.as_f64().map(|f| f as f32)).collect())
            .ok_or_else(|| Error::EmbedderFailure("embedding response missing data[0].embedding".into()))
    }
}

/// Chat-completions client with an inline base64 image part.
pub struct HttpMllmClient {
    config: ClientConfig,
    client: reqwest::blocking::Client,
}

impl HttpMllmClient {
    pub fn new(config: ClientConfig, timeout_secs: u64) -> Result<Self> {
        if config.api_key.is_empty() {
            return Err(Error::ClientFailure {
                path: "image".into(),
                message: "remote mllm client requires an api key".into(),
            });
        }
        Ok(Self {
            config,
            client: http_client(timeout_secs)?,
        })
    }
}

impl MllmClient for HttpMllmClient {
    fn answer(&self, image: &RgbImage, question: &str) -> Result<String> {
        let mut png = Vec::new();
        image
            .write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
            .map_err(|e| Error::ClientFailure {
                path: "image".into(),
                message: e.to_string(),
            })?;
        use base64::Engine as _;
        let encoded = base64::engine::general_purpose::STANDARD.encode(&png);
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model_name,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "text", "text": question},
                    {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{encoded}")}}
                ],
            }],
        });
        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::ClientFailure {
                path: "image".into(),
                message: e.to_string(),
            })?;
        let value: serde_json::Value = response.json().map_err(|e| Error::ClientFailure {
            path: "image".into(),
            message: e.to_string(),
        })?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| Error::ClientFailure {
                path: "image".into(),
                message: "mllm response missing choices[0].message.content".into(),
            })
    }
}

/// Bundle of clients used by the extraction workflow.
pub struct KieClients {
    pub llm: Arc<dyn LlmClient>,
    pub mllm: Option<Arc<dyn MllmClient>>,
    pub embedder: Arc<dyn Embedder>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_llm_answers_prompt_keys() {
        let llm = MockLlm::with_answers([("number".to_string(), "42".to_string())].into());
        let prompt = "Context:\n[1] the number is 42\n\nQuestions:\n- number\n- missing\n";
        let completion = llm.complete(prompt).unwrap();
        assert_eq!(completion, "number: 42\nmissing: unknown\n");
    }

    #[test]
    fn mock_embedder_is_deterministic() {
        let e = MockEmbedder::hashing();
        assert_eq!(e.embed("abc").unwrap(), e.embed("abc").unwrap());
        assert_ne!(e.embed("abc").unwrap(), e.embed("abd").unwrap());
        assert_eq!(e.embed("abc").unwrap().len(), 16);
    }

    #[test]
    fn mock_mllm_reads_quoted_key() {
        let mllm = MockMllm::with_answers([("total".to_string(), "7".to_string())].into());
        let img = RgbImage::new(1, 1);
        assert_eq!(
            mllm.answer(&img, "Extract the value of \"total\" from this image.").unwrap(),
            "7"
        );
        assert_eq!(
            mllm.answer(&img, "Extract the value of \"other\".").unwrap(),
            NOT_FOUND_MARKER
        );
    }

    #[test]
    fn http_llm_requires_api_key() {
        let cfg = ClientConfig {
            module_name: "chat_bot".into(),
            model_name: "m".into(),
            base_url: "http://127.0.0.1:1".into(),
            api_type: "openai".into(),
            api_key: String::new(),
        };
        assert!(HttpLlmClient::new(cfg, 1).is_err());
    }

    #[test]
    fn http_llm_maps_connection_errors() {
        let cfg = ClientConfig {
            module_name: "chat_bot".into(),
            model_name: "m".into(),
            base_url: "http://127.0.0.1:1".into(),
            api_type: "openai".into(),
            api_key: "k".into(),
        };
        let client = HttpLlmClient::new(cfg, 1).unwrap();
        assert!(matches!(
            client.complete("hello"),
            Err(Error::ClientFailure { .. })
        ));
    }
}
