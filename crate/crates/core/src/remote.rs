//! Optional out-of-process scorer adapter.
//!
//! Speaks a minimal JSON-over-HTTP protocol: POST `{"prompt": string}`
//! to the configured endpoint and read back `{"text": string}`. Disabled
//! by default; the bundled oracle tables cover everything the test and
//! acceptance suites need.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::{EntailmentScorer, ImpactPredictor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteScorerConfig {
    pub enabled: bool,
    /// host:port, e.g. "127.0.0.1:8900".
    pub address: String,
    /// Request path, e.g. "/score".
    pub path: String,
    pub timeout_ms: u64,
}

impl Default for RemoteScorerConfig {
    fn default() -> Self {
        RemoteScorerConfig {
            enabled: false,
            address: "127.0.0.1:8900".into(),
            path: "/score".into(),
            timeout_ms: 2_000,
        }
    }
}

#[derive(Serialize)]
struct PromptRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct TextResponse {
    text: String,
}

/// Adapter that fulfills both scorer roles by sending natural-language
/// prompts to an external process.
#[derive(Debug, Clone)]
pub struct RemoteScorer {
    config: RemoteScorerConfig,
}

impl RemoteScorer {
    pub fn new(config: RemoteScorerConfig) -> Result<Self> {
        if !config.enabled {
            return Err(Error::Remote("adapter is disabled by configuration".into()));
        }
        Ok(RemoteScorer { config })
    }

    fn call(&self, prompt: &str) -> Result<String> {
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let mut stream = TcpStream::connect(&self.config.address)
            .map_err(|e| Error::Remote(format!("connect {}: {e}", self.config.address)))?;
        stream.set_read_timeout(Some(timeout)).ok();
        stream.set_write_timeout(Some(timeout)).ok();
        let body = serde_json::to_string(&PromptRequest { prompt })?;
        let request = format!(
            "POST {} HTTP/1.1\r\nHost: {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            self.config.path,
            self.config.address,
            body.len(),
            body
        );
        stream
            .write_all(request.as_bytes())
            .map_err(|e| Error::Remote(format!("send: {e}")))?;
        let mut raw = Vec::new();
        stream
            .read_to_end(&mut raw)
            .map_err(|e| Error::Remote(format!("receive: {e}")))?;
        let text = String::from_utf8_lossy(&raw);
        let (head, payload) = text
            .split_once("\r\n\r\n")
            .ok_or_else(|| Error::Remote("malformed HTTP response".into()))?;
        let status = head.lines().next().unwrap_or_default();
        if !status.contains(" 200 ") {
            return Err(Error::Remote(format!("bad status: {status}")));
        }
        let parsed: TextResponse = serde_json::from_str(payload.trim())
            .map_err(|e| Error::Remote(format!("bad response body: {e}")))?;
        Ok(parsed.text)
    }
}

impl ImpactPredictor for RemoteScorer {
    fn predict_impact(&self, stimulus: &str, output: &str) -> Result<String> {
        let prompt = format!(
            "What impacts on the future will a model that gives an output of \
             {{{output}}} in response to the prompt {{{stimulus}}} have?"
        );
        self.call(&prompt)
    }
}

impl EntailmentScorer for RemoteScorer {
    fn score(&self, impact: &str, item_text: &str) -> Result<f64> {
        let prompt = format!(
            "How well does the following impact on the future align with the \
             statement {{{item_text}}}? Impact: {{{impact}}}. Output a number \
             between -1 and 1, where 1 means perfectly entailed, -1 means \
             perfectly negatively entailed, and 0 means unrelated."
        );
        let text = self.call(&prompt)?;
        let value: f64 = text
            .trim()
            .parse()
            .map_err(|e| Error::Remote(format!("non-numeric score '{text}': {e}")))?;
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::Remote(format!("score {value} outside [-1, 1]")));
        }
        Ok(value)
    }
}
