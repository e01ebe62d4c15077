//! Model backends: the offline heuristic, scripted fixtures and a remote
//! chat-completions endpoint.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use nonanswer_core::elicitor::{BackendError, CueProfile, HeuristicBackend, ModelBackend, PromptRequest};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Backend as BackendConfig, BackendKind, ModelConfig};
use crate::error::{CliError, Result};
use crate::io;

/// A backend usable from several worker threads. `rep` selects a
/// repetition for stability runs.
pub trait Completer: Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, request: &PromptRequest, rep: Option<u32>) -> Result<String, BackendError>;
}

impl Completer for HeuristicBackend {
    fn model_id(&self) -> &str {
        ModelBackend::model_id(self)
    }

    fn complete(&self, request: &PromptRequest, _rep: Option<u32>) -> Result<String, BackendError> {
        self.send(request)
    }
}

/// One line of a scripted fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptLine {
    pub conver_id: String,
    pub completion: String,
    /// Repetition this completion answers; absent for the baseline run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep: Option<u32>,
}

/// Replays stored completions keyed by conversation id. A repetition
/// without its own line falls back to the baseline completion.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    model_id: String,
    replies: HashMap<(String, Option<u32>), String>,
}

impl ScriptedBackend {
    pub fn new(model_id: &str, lines: Vec<ScriptLine>) -> ScriptedBackend {
        ScriptedBackend {
            model_id: model_id.to_string(),
            replies: lines.into_iter().map(|l| ((l.conver_id, l.rep), l.completion)).collect(),
        }
    }

    pub fn load(model_id: &str, path: &Path) -> Result<ScriptedBackend> {
        Ok(ScriptedBackend::new(model_id, io::read_jsonl(path)?))
    }
}

impl Completer for ScriptedBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, request: &PromptRequest, rep: Option<u32>) -> Result<String, BackendError> {
        let id = &request.conver_id;
        rep.and_then(|r| self.replies.get(&(id.clone(), Some(r))))
            .or_else(|| self.replies.get(&(id.clone(), None)))
            .cloned()
            .ok_or_else(|| BackendError::Fatal(format!("no scripted completion for {id}")))
    }
}

/// Chat-completions client: one POST per request, API key from the
/// environment.
#[derive(Debug)]
pub struct RemoteBackend {
    model_id: String,
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(model_id: &str, endpoint: &str, api_key: Option<String>, timeout: Duration) -> RemoteBackend {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend {
            model_id: model_id.to_string(),
            endpoint: endpoint.to_string(),
            api_key,
            agent,
        }
    }

    pub fn body(&self, request: &PromptRequest) -> Value {
        let p = &request.params;
        json!({
            "model": self.model_id,
            "messages": [
                {"role": "system", "content": request.system_message},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": p.temperature,
            "frequency_penalty": p.frequency_penalty,
            "presence_penalty": p.presence_penalty,
            "max_tokens": p.max_tokens,
        })
    }
}

/// Completion text from an OpenAI-style or Ollama-style response.
pub fn completion_text(body: &Value) -> Option<&str> {
    body.pointer("/choices/0/message/content")
        .or_else(|| body.pointer("/message/content"))
        .or_else(|| body.pointer("/choices/0/text"))
        .and_then(Value::as_str)
}

impl ModelBackend for RemoteBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn send(&self, request: &PromptRequest) -> Result<String, BackendError> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(self.body(request)).map_err(|e| BackendError::Transient {
            status: None,
            message: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| BackendError::Transient {
            status: Some(status),
            message: e.to_string(),
        })?;
        match status {
            200..=299 => {
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| BackendError::Fatal(format!("response is not JSON: {e}")))?;
                completion_text(&v)
                    .map(str::to_string)
                    .ok_or_else(|| BackendError::Fatal("response carries no completion".into()))
            }
            408 | 429 | 500..=599 => Err(BackendError::Transient {
                status: Some(status),
                message: text.chars().take(200).collect(),
            }),
            _ => Err(BackendError::Fatal(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()))),
        }
    }
}

impl Completer for RemoteBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, request: &PromptRequest, _rep: Option<u32>) -> Result<String, BackendError> {
        self.send(request)
    }
}

/// Builds the backend described by one model section.
pub fn build(model: &ModelConfig, backend: &BackendConfig) -> Result<Box<dyn Completer>> {
    Ok(match model.kind {
        BackendKind::Heuristic => Box::new(HeuristicBackend::new(&model.model_id, CueProfile::Full)),
        BackendKind::Conservative => Box::new(HeuristicBackend::new(&model.model_id, CueProfile::Conservative)),
        BackendKind::Scripted => {
            if model.script.as_os_str().is_empty() {
                return Err(CliError::Usage(format!("model `{}` is scripted but has no script file", model.model_id)));
            }
            Box::new(ScriptedBackend::load(&model.model_id, &model.script)?)
        }
        BackendKind::Remote => {
            if model.endpoint.is_empty() {
                return Err(CliError::Usage(format!("model `{}` is remote but has no endpoint", model.model_id)));
            }
            let key = std::env::var(&model.api_key_env).ok().filter(|k| !k.is_empty());
            if key.is_none() {
                log::warn!("{} is not set; sending requests without an API key", model.api_key_env);
            }
            Box::new(RemoteBackend::new(
                &model.model_id,
                &model.endpoint,
                key,
                Duration::from_secs(backend.timeout_secs),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(id: &str) -> PromptRequest {
        PromptRequest {
            conver_id: id.into(),
            system_message: "s".into(),
            user_prompt: "u".into(),
            params: Default::default(),
        }
    }

    #[test]
    fn scripted_falls_back_to_baseline() {
        let b = ScriptedBackend::new(
            "m",
            vec![
                ScriptLine { conver_id: "T-1".into(), completion: "base".into(), rep: None },
                ScriptLine { conver_id: "T-1".into(), completion: "r2".into(), rep: Some(2) },
            ],
        );
        assert_eq!(b.complete(&request("T-1"), None).unwrap(), "base");
        assert_eq!(b.complete(&request("T-1"), Some(2)).unwrap(), "r2");
        assert_eq!(b.complete(&request("T-1"), Some(5)).unwrap(), "base");
        assert!(matches!(b.complete(&request("T-9"), None), Err(BackendError::Fatal(_))));
    }

    #[test]
    fn response_shapes() {
        let openai = json!({"choices": [{"message": {"content": "{\"NOR\": 0}"}}]});
        let ollama = json!({"message": {"content": "x"}});
        assert_eq!(completion_text(&openai), Some("{\"NOR\": 0}"));
        assert_eq!(completion_text(&ollama), Some("x"));
        assert_eq!(completion_text(&json!({})), None);
    }

    #[test]
    fn request_body_carries_fixed_parameters() {
        let b = RemoteBackend::new("gpt", "http://localhost:1", None, Duration::from_secs(1));
        let body = b.body(&request("T-1"));
        assert_eq!(body["max_tokens"], 5000);
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"][0]["role"], "system");
    }
}
