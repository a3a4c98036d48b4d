//! Assistant adapters: the in-process reference policy and a generic
//! chat-completion endpoint client.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphIndex;
use crate::model::FaultTree;

use super::oracle::{oracle_assistant_step, pairs_from_history};
use super::ChatMessage;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned an unusable response: {0}")]
    BadResponse(String),
    #[error("adapter misconfiguration: {0}")]
    Config(String),
}

/// An assistant under evaluation. Stateless per call: the full visible
/// history is passed every turn and the raw completion text is returned
/// unmodified. Implementations must be safe to share across session workers.
pub trait AssistantAdapter: Send + Sync {
    fn next_move(&self, system_prompt: &str, history: &[ChatMessage]) -> Result<String, AdapterError>;
}

/// Wraps the reference policy in the assistant wire format.
pub struct OracleAdapter {
    tree: Arc<FaultTree>,
    // Kept so sessions can share one index with the adapter.
    #[allow(dead_code)]
    index: Arc<GraphIndex>,
}

impl OracleAdapter {
    pub fn new(tree: Arc<FaultTree>, index: Arc<GraphIndex>) -> Self {
        OracleAdapter { tree, index }
    }
}

impl AssistantAdapter for OracleAdapter {
    fn next_move(&self, _system_prompt: &str, history: &[ChatMessage]) -> Result<String, AdapterError> {
        let turns = pairs_from_history(history);
        let mv = oracle_assistant_step(&self.tree, &turns);
        serde_json::to_string_pretty(&mv).map_err(|e| AdapterError::BadResponse(e.to_string()))
    }
}

/// Configuration of the external chat-completion client.
#[derive(Debug, Clone)]
pub struct EndpointConfig {
    /// Full URL of the chat-completion route.
    pub url: String,
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
    /// Additional attempts after the first failure.
    pub retries: u32,
    /// Bearer credential; read it from the environment, never from flags.
    pub api_key: Option<String>,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            model: model.into(),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
            retries: 2,
            api_key: api_key_from_env(),
        }
    }
}

/// `JFTA_API_KEY` wins over the conventional `OPENAI_API_KEY`.
pub fn api_key_from_env() -> Option<String> {
    std::env::var("JFTA_API_KEY")
        .or_else(|_| std::env::var("OPENAI_API_KEY"))
        .ok()
        .filter(|k| !k.is_empty())
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

/// Client for any endpoint speaking the generic chat-completion shape:
/// request `{model, messages, temperature}`, response carrying the first
/// choice's message content.
pub struct EndpointAdapter {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
}

impl EndpointAdapter {
    pub fn new(config: EndpointConfig) -> Result<Self, AdapterError> {
        if config.url.is_empty() {
            return Err(AdapterError::Config("endpoint URL is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| AdapterError::Config(e.to_string()))?;
        Ok(EndpointAdapter { config, client })
    }
}

impl AssistantAdapter for EndpointAdapter {
    fn next_move(&self, system_prompt: &str, history: &[ChatMessage]) -> Result<String, AdapterError> {
        let mut messages = Vec::with_capacity(history.len() + 1);
        messages.push(ChatMessage::system(system_prompt));
        messages.extend(history.iter().cloned());
        let body = ChatRequest {
            model: &self.config.model,
            messages: &messages,
            temperature: self.config.temperature,
        };

        let attempts = self.config.retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(200 << (attempt - 1).min(4)));
            }
            let mut request = self.client.post(&self.config.url).json(&body);
            if let Some(key) = &self.config.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) if response.status().is_success() => {
                    let parsed: ChatResponse = response
                        .json()
                        .map_err(|e| AdapterError::BadResponse(e.to_string()))?;
                    return parsed
                        .choices
                        .into_iter()
                        .next()
                        .map(|c| c.message.content)
                        .ok_or_else(|| AdapterError::BadResponse("no choices".into()));
                }
                Ok(response) => {
                    last_error = format!("status {}", response.status());
                }
                Err(e) => {
                    last_error = e.to_string();
                }
            }
        }
        Err(AdapterError::Transport {
            attempts,
            message: last_error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// Serve `responses` over HTTP, one per connection, and capture bodies.
    fn canned_server(responses: Vec<String>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for response in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = vec![0u8; 65536];
                let mut read = 0;
                // Read until the JSON body closes; requests here are small.
                loop {
                    let n = stream.read(&mut buf[read..]).unwrap();
                    read += n;
                    let text = String::from_utf8_lossy(&buf[..read]);
                    if let Some(body_at) = text.find("\r\n\r\n") {
                        let header = &text[..body_at];
                        let length: usize = header
                            .lines()
                            .find_map(|l| l.to_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse().unwrap()))
                            .unwrap_or(0);
                        if text[body_at + 4..].len() >= length {
                            bodies.push(text[body_at + 4..].to_string());
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let payload = response.as_bytes();
                let head = format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                    payload.len()
                );
                stream.write_all(head.as_bytes()).unwrap();
                stream.write_all(payload).unwrap();
            }
            bodies
        });
        (format!("http://{addr}/v1/chat/completions"), handle)
    }

    #[test]
    fn endpoint_adapter_speaks_the_chat_completion_shape() {
        let completion = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "{\"think\": \"t\", \"ID\": \"2\", \"response\": \"check the switch\"}"}}]
        });
        let (url, server) = canned_server(vec![completion.to_string()]);

        let mut config = EndpointConfig::new(url, "test-model");
        config.api_key = Some("k".into());
        config.retries = 0;
        let adapter = EndpointAdapter::new(config).unwrap();
        let history = vec![ChatMessage::user("opening symptom")];
        let raw = adapter.next_move("system prompt here", &history).unwrap();
        assert!(raw.contains("\"ID\": \"2\""));

        let bodies = server.join().unwrap();
        let request: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
        assert_eq!(request["model"], "test-model");
        assert_eq!(request["messages"][0]["role"], "system");
        assert_eq!(request["messages"][1]["content"], "opening symptom");
        assert_eq!(request["temperature"], 0.0);
    }

    #[test]
    fn endpoint_adapter_reports_transport_failure_after_retries() {
        // Nothing listens on this port.
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);

        let mut config = EndpointConfig::new(format!("http://{addr}/x"), "m");
        config.retries = 1;
        config.timeout = Duration::from_millis(300);
        let adapter = EndpointAdapter::new(config).unwrap();
        let err = adapter.next_move("p", &[]).unwrap_err();
        assert!(matches!(err, AdapterError::Transport { attempts: 2, .. }));
    }
}
