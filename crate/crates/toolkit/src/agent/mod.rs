//! Agent runtime: completion backends (remote HTTP or deterministic mock),
//! structured-answer parsing, and order-preserving concurrent batch runs.

mod mock;
mod parse;
mod remote;

pub use mock::{
    mock_complete_questionnaire, mock_complete_scenarios, AdjectiveMap, MockBackend,
    MockCrosswalk, MockTask,
};
pub use parse::parse_answers;
pub use remote::{RemoteBackend, RemoteConfig, API_BASE_ENV, API_KEY_ENV};

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::manifest::sha256_bytes;
use crate::transcript::{TranscriptRecord, TranscriptStore};

/// One agent's assignment: the full prompt plus model settings.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub agent_id: String,
    pub prompt: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: usize,
}

impl AgentSpec {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.prompt.is_empty() {
            return Err(AgentError::EmptyPrompt { agent_id: self.agent_id.clone() });
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(AgentError::InvalidTemperature { value: self.temperature });
        }
        Ok(())
    }
}

/// Expected answer keys and value range for one task.
#[derive(Debug, Clone)]
pub struct AnswerSchema {
    pub keys: Vec<String>,
    pub min: i64,
    pub max: i64,
}

/// Validated answers, the raw model text, and how many completion calls it
/// took to get them.
#[derive(Debug, Clone)]
pub struct ParsedAnswers {
    pub answers: BTreeMap<String, i64>,
    pub raw_text: String,
    pub attempts: usize,
}

/// Raw completion text plus the number of calls (including HTTP retries)
/// spent producing it.
#[derive(Debug, Clone)]
pub struct Completion {
    pub text: String,
    pub calls: usize,
}

pub trait CompletionBackend: Sync {
    fn complete(&self, spec: &AgentSpec) -> Result<Completion, AgentError>;
    fn name(&self) -> &'static str;
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum AgentError {
    #[error("no JSON object found in model output (starts: {preview:?})")]
    NoJsonObject { preview: String },
    #[error("answer for '{key}' is missing")]
    MissingKey { key: String },
    #[error("unexpected answer key '{key}'")]
    UnexpectedKey { key: String },
    #[error("answer for '{key}' is not an integer: {value}")]
    NotAnInteger { key: String, value: String },
    #[error("answer {value} for '{key}' outside [{min},{max}]")]
    ValueOutOfRange { key: String, value: i64, min: i64, max: i64 },
    #[error("agent '{agent_id}' has an empty prompt")]
    EmptyPrompt { agent_id: String },
    #[error("temperature {value} is not a finite non-negative number")]
    InvalidTemperature { value: f64 },
    #[error("remote backend needs {API_KEY_ENV} set")]
    MissingCredentials,
    #[error("http error: {message}")]
    Http { message: String },
    #[error("gave up after {attempts} attempts: {last_error}")]
    RetriesExhausted { attempts: usize, last_error: String },
    #[error("malformed API response: missing {what}")]
    MalformedResponse { what: String },
    #[error("mock backend has no profile for agent '{agent_id}'")]
    UnknownAgent { agent_id: String },
    #[error("crosswalk is missing an entry for '{key}'")]
    IncompleteCrosswalk { key: String },
    #[error("profile is invalid: {message}")]
    InvalidProfile { message: String },
    #[error("every agent in the batch failed; first error: {first}")]
    AllAgentsFailed { first: String },
    #[error("transcript write failed: {message}")]
    Transcript { message: String },
}

/// Runs one agent to a parsed answer: complete, log, parse, and re-ask once
/// on a parse failure when retries remain.
fn run_agent(
    spec: &AgentSpec,
    backend: &dyn CompletionBackend,
    schema: &AnswerSchema,
    transcripts: Option<&TranscriptStore>,
) -> Result<ParsedAnswers, AgentError> {
    spec.validate()?;
    let prompt_sha256 = sha256_bytes(spec.prompt.as_bytes());
    let re_asks = if spec.max_retries > 0 { 1 } else { 0 };
    let mut attempts = 0;
    let mut last_err = None;
    for ask in 0..=re_asks {
        let completion = backend.complete(spec)?;
        attempts += completion.calls;
        if let Some(store) = transcripts {
            store
                .append(&TranscriptRecord {
                    agent_id: spec.agent_id.clone(),
                    timestamp: chrono::Utc::now().to_rfc3339(),
                    prompt_sha256: prompt_sha256.clone(),
                    raw_response: completion.text.clone(),
                    attempts,
                })
                .map_err(|e| AgentError::Transcript { message: e.to_string() })?;
        }
        match parse_answers(&completion.text, schema) {
            Ok(mut parsed) => {
                parsed.attempts = attempts;
                return Ok(parsed);
            }
            Err(e) => {
                if ask < re_asks {
                    log::warn!("agent {}: {e}; re-asking", spec.agent_id);
                }
                last_err = Some(e);
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Runs a batch under a concurrency bound. Results come back in input order;
/// per-agent failures are recorded and the batch continues. The whole batch
/// errors only if every agent failed.
pub fn run_batch(
    specs: &[AgentSpec],
    backend: &dyn CompletionBackend,
    schema: &AnswerSchema,
    concurrency: usize,
    transcripts: Option<&TranscriptStore>,
) -> Result<Vec<Result<ParsedAnswers, AgentError>>, AgentError> {
    if specs.is_empty() {
        return Ok(Vec::new());
    }
    let workers = concurrency.clamp(1, specs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<ParsedAnswers, AgentError>>>> =
        Mutex::new((0..specs.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= specs.len() {
                    break;
                }
                let outcome = run_agent(&specs[index], backend, schema, transcripts);
                results.lock().expect("results poisoned")[index] = Some(outcome);
            });
        }
    });

    let results: Vec<Result<ParsedAnswers, AgentError>> = results
        .into_inner()
        .expect("results poisoned")
        .into_iter()
        .map(|slot| slot.expect("every index visited"))
        .collect();

    if let Some(first_failure) = results.iter().find_map(|r| r.as_ref().err()) {
        if results.iter().all(|r| r.is_err()) {
            return Err(AgentError::AllAgentsFailed { first: first_failure.to_string() });
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct EchoBackend;

    impl CompletionBackend for EchoBackend {
        fn complete(&self, spec: &AgentSpec) -> Result<Completion, AgentError> {
            if spec.agent_id == "poisoned" {
                return Err(AgentError::Http { message: "boom".into() });
            }
            Ok(Completion { text: spec.prompt.clone(), calls: 1 })
        }
        fn name(&self) -> &'static str {
            "echo"
        }
    }

    fn schema() -> AnswerSchema {
        AnswerSchema { keys: vec!["X".into()], min: 1, max: 9 }
    }

    fn spec(id: &str, value: i64) -> AgentSpec {
        AgentSpec {
            agent_id: id.into(),
            prompt: format!("{{\"X\": {value}}}"),
            model_name: "test".into(),
            temperature: 1.0,
            max_retries: 1,
        }
    }

    #[test]
    fn batch_preserves_input_order_and_isolates_failures() {
        let mut specs: Vec<AgentSpec> = (0..10).map(|i| spec(&format!("a{i}"), i % 9 + 1)).collect();
        specs[4] = spec("poisoned", 5);
        let results = run_batch(&specs, &EchoBackend, &schema(), 3, None).unwrap();
        assert_eq!(results.len(), 10);
        assert!(results[4].is_err());
        for (i, r) in results.iter().enumerate() {
            if i != 4 {
                assert_eq!(r.as_ref().unwrap().answers["X"], (i % 9 + 1) as i64);
            }
        }
    }

    #[test]
    fn batch_fails_only_when_every_agent_fails() {
        let specs: Vec<AgentSpec> = (0..3).map(|_| spec("poisoned", 1)).collect();
        assert!(matches!(
            run_batch(&specs, &EchoBackend, &schema(), 2, None),
            Err(AgentError::AllAgentsFailed { .. })
        ));
    }

    #[test]
    fn concurrency_level_does_not_change_results() {
        let specs: Vec<AgentSpec> = (0..20).map(|i| spec(&format!("a{i}"), i % 9 + 1)).collect();
        let one = run_batch(&specs, &EchoBackend, &schema(), 1, None).unwrap();
        let eight = run_batch(&specs, &EchoBackend, &schema(), 8, None).unwrap();
        let values = |rs: &[Result<ParsedAnswers, AgentError>]| -> Vec<i64> {
            rs.iter().map(|r| r.as_ref().unwrap().answers["X"]).collect()
        };
        assert_eq!(values(&one), values(&eight));
    }

    #[test]
    fn empty_prompt_is_rejected() {
        let mut s = spec("a", 1);
        s.prompt.clear();
        assert!(matches!(
            run_batch(&[s], &EchoBackend, &schema(), 1, None),
            Err(AgentError::AllAgentsFailed { .. })
        ));
    }
}
