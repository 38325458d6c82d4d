//! Language-model mutation: prompt assembly from template files,
//! SEARCH/REPLACE diff application and chat-completion transports.

mod diff;
mod prompt;
mod transport;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qd::{Genome, Individual, Mutator, MutatorError};

pub use diff::{apply_search_replace_diff, parse_blocks, DiffError};
pub use prompt::{
    assemble_generation_prompt, assemble_repair_prompt, fill, PromptBundle, PromptError, Templates,
};
pub use transport::{
    ChatMessage, ChatRequest, HttpTransport, StubTransport, Transport, TransportError,
};

pub const REDACTED: &str = "[REDACTED]";

/// One chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPool {
    pub endpoints: Vec<Endpoint>,
}

impl ModelPool {
    pub fn new(endpoints: Vec<Endpoint>) -> Self {
        Self { endpoints }
    }

    /// Index of a uniformly drawn endpoint.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.endpoints.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub generation: Vec<Endpoint>,
    pub repair: Vec<Endpoint>,
    /// Extra attempts after a retriable transport failure.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Directory with the prompt template files; built-in texts if absent.
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
}

fn default_retries() -> u32 {
    2
}

/// Where API keys come from.
pub trait CredentialSource {
    fn get(&self, name: &str) -> Option<String>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct EnvCredentials;

impl CredentialSource for EnvCredentials {
    fn get(&self, name: &str) -> Option<String> {
        std::env::var(name).ok().filter(|v| !v.is_empty())
    }
}

impl CredentialSource for HashMap<String, String> {
    fn get(&self, name: &str) -> Option<String> {
        HashMap::get(self, name).cloned()
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("{0} pool is empty")]
    EmptyPool(&'static str),
    #[error("credential variable {0} is not set")]
    MissingCredential(String),
    #[error("invalid timeout {0} for {1}")]
    BadTimeout(f64, String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

struct Member {
    endpoint: Endpoint,
    key: Option<String>,
}

/// Mutator backed by chat-completion endpoints.
pub struct LlmMutator {
    generation: Vec<Member>,
    repair: Vec<Member>,
    templates: Templates,
    transport: Arc<dyn Transport>,
    max_retries: u32,
    secrets: Vec<String>,
}

impl std::fmt::Debug for LlmMutator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmMutator")
            .field("generation", &self.generation.len())
            .field("repair", &self.repair.len())
            .field("max_retries", &self.max_retries)
            .finish_non_exhaustive()
    }
}

/// Replaces every occurrence of each secret with a fixed marker.
pub fn redact(text: &str, secrets: &[String]) -> String {
    let mut out = text.to_string();
    for s in secrets.iter().filter(|s| !s.is_empty()) {
        out = out.replace(s.as_str(), REDACTED);
    }
    out
}

impl LlmMutator {
    /// Resolves every credential up front, so a missing key fails here
    /// rather than mid-run.
    pub fn new(
        config: &LlmConfig,
        transport: Arc<dyn Transport>,
        credentials: &dyn CredentialSource,
    ) -> Result<Self, LlmError> {
        let templates = match &config.templates_dir {
            Some(dir) => Templates::load(dir)?,
            None => Templates::builtin(),
        };
        let mut secrets = Vec::new();
        let mut resolve =
            |pool: &[Endpoint], role: &'static str| -> Result<Vec<Member>, LlmError> {
                if pool.is_empty() {
                    return Err(LlmError::EmptyPool(role));
                }
                pool.iter()
                    .map(|e| {
                        if !(e.timeout_s.is_finite() && e.timeout_s > 0.0) {
                            return Err(LlmError::BadTimeout(e.timeout_s, e.model.clone()));
                        }
                        let key = match &e.credential_env {
                            None => None,
                            Some(var) => {
                                let k = credentials
                                    .get(var)
                                    .ok_or_else(|| LlmError::MissingCredential(var.clone()))?;
                                secrets.push(k.clone());
                                Some(k)
                            }
                        };
                        Ok(Member {
                            endpoint: e.clone(),
                            key,
                        })
                    })
                    .collect()
            };
        let generation = resolve(&config.generation, "generation")?;
        let repair = resolve(&config.repair, "repair")?;
        Ok(Self {
            generation,
            repair,
            templates,
            transport,
            max_retries: config.max_retries,
            secrets,
        })
    }

    fn fail(&self, msg: impl AsRef<str>) -> MutatorError {
        MutatorError(redact(msg.as_ref(), &self.secrets))
    }

    fn call(
        &self,
        repair: bool,
        bundle: &PromptBundle,
        rng: &mut ChaCha8Rng,
    ) -> Result<String, MutatorError> {
        let pool = if repair {
            &self.repair
        } else {
            &self.generation
        };
        let m = &pool[rng.random_range(0..pool.len())];
        let req = ChatRequest {
            base_url: m.endpoint.base_url.clone(),
            model: m.endpoint.model.clone(),
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: bundle.system.clone(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: bundle.user.clone(),
                },
            ],
            timeout: Duration::from_secs_f64(m.endpoint.timeout_s),
        };
        let mut attempt = 0;
        loop {
            match self.transport.complete(&req, m.key.as_deref()) {
                Ok(text) => return Ok(text),
                Err(e) if e.retriable() && attempt < self.max_retries => attempt += 1,
                Err(e) => {
                    return Err(self.fail(format!(
                        "{} ({}) failed after {} attempt(s): {e}",
                        m.endpoint.model,
                        m.endpoint.base_url,
                        attempt + 1
                    )))
                }
            }
        }
    }

    fn apply(&self, source: &str, response: &str) -> Result<Genome, MutatorError> {
        match apply_search_replace_diff(source, response) {
            Ok(s) => Ok(Genome::Source(s)),
            Err(DiffError::NoBlocks) => {
                Err(self.fail(format!("no SEARCH/REPLACE block in response:\n{response}")))
            }
            Err(e) => Err(self.fail(e.to_string())),
        }
    }
}

impl Mutator for LlmMutator {
    fn propose(
        &mut self,
        parent: &Individual,
        inspirations: &[Individual],
        rng: &mut ChaCha8Rng,
    ) -> Result<Genome, MutatorError> {
        let bundle = assemble_generation_prompt(&self.templates, parent, inspirations)
            .map_err(|e| self.fail(e.to_string()))?;
        let response = self.call(false, &bundle, rng)?;
        self.apply(&parent.genome.to_source(), &response)
    }

    fn repair(
        &mut self,
        broken: &Genome,
        diagnostic: &str,
        rng: &mut ChaCha8Rng,
    ) -> Result<Genome, MutatorError> {
        let source = broken.to_source();
        let diag = redact(diagnostic, &self.secrets);
        let bundle = assemble_repair_prompt(&self.templates, &source, &diag)
            .map_err(|e| self.fail(e.to_string()))?;
        let response = self.call(true, &bundle, rng)?;
        self.apply(&source, &response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn endpoint(i: usize, cred: Option<&str>) -> Endpoint {
        Endpoint {
            base_url: format!("http://model-{i}.invalid/v1"),
            model: format!("model-{i}"),
            credential_env: cred.map(str::to_string),
            timeout_s: 30.0,
        }
    }

    fn config(n: usize) -> LlmConfig {
        LlmConfig {
            generation: (0..n).map(|i| endpoint(i, Some("KEY"))).collect(),
            repair: vec![endpoint(9, Some("KEY"))],
            max_retries: 2,
            templates_dir: None,
        }
    }

    fn creds() -> HashMap<String, String> {
        HashMap::from([("KEY".to_string(), "sk-secret-123".to_string())])
    }

    fn parent() -> Individual {
        Individual {
            id: 0,
            genome: Genome::Source("h = ff\n".into()),
            score: 0.5,
            features: [1.0, 100.0],
            parent: None,
            island: 0,
            born: 0,
            repairs: 0,
        }
    }

    const DIFF: &str = "Use goal count too.\n<<<<<<< SEARCH\nh = ff\n=======\nh = ff + goalcount\n>>>>>>> REPLACE\n";

    #[test]
    fn valid_diff_changes_child() {
        let stub = Arc::new(StubTransport::always(DIFF));
        let mut m = LlmMutator::new(&config(1), stub.clone(), &creds()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = m.propose(&parent(), &[], &mut rng).unwrap();
        assert_eq!(g, Genome::Source("h = ff + goalcount\n".into()));
        assert_ne!(g, parent().genome);
        let calls = stub.calls();
        assert_eq!(calls[0].0.messages[0].role, "system");
        assert_eq!(calls[0].0.messages[1].role, "user");
        assert_eq!(calls[0].1.as_deref(), Some("sk-secret-123"));
        assert_eq!(calls[0].0.timeout, Duration::from_secs(30));
    }

    #[test]
    fn prose_only_is_failure_with_raw_text() {
        let stub = Arc::new(StubTransport::always("I think the program is fine."));
        let mut m = LlmMutator::new(&config(1), stub, &creds()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = m.propose(&parent(), &[], &mut rng).unwrap_err();
        assert!(e.0.contains("I think the program is fine."));
    }

    #[test]
    fn missing_credential_fails_fast() {
        let stub = Arc::new(StubTransport::always(DIFF));
        let err = LlmMutator::new(&config(1), stub.clone(), &HashMap::new()).unwrap_err();
        assert!(matches!(err, LlmError::MissingCredential(v) if v == "KEY"));
        assert!(stub.calls().is_empty());
        let mut empty = config(1);
        empty.repair.clear();
        assert!(matches!(
            LlmMutator::new(&empty, stub, &creds()),
            Err(LlmError::EmptyPool("repair"))
        ));
    }

    #[test]
    fn retries_then_fails() {
        let stub = Arc::new(StubTransport::new(vec![
            Err(TransportError::Timeout),
            Err(TransportError::Status(502)),
            Err(TransportError::Timeout),
            Ok(DIFF.to_string()),
        ]));
        let mut m = LlmMutator::new(&config(1), stub.clone(), &creds()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = m.propose(&parent(), &[], &mut rng).unwrap_err();
        assert!(e.0.contains("3 attempt"), "{}", e.0);
        assert_eq!(stub.calls().len(), 3);
        // next call gets the queued diff
        assert!(m.propose(&parent(), &[], &mut rng).is_ok());
        let stub = Arc::new(StubTransport::new(vec![Err(TransportError::Status(401))]));
        let mut m = LlmMutator::new(&config(1), stub.clone(), &creds()).unwrap();
        assert!(m.propose(&parent(), &[], &mut rng).is_err());
        assert_eq!(stub.calls().len(), 1);
    }

    #[test]
    fn repair_uses_failing_source_and_diagnostic() {
        let resp = "<<<<<<< SEARCH\nh = ff +\n=======\nh = ff + 1\n>>>>>>> REPLACE";
        let stub = Arc::new(StubTransport::always(resp));
        let mut m = LlmMutator::new(&config(2), stub.clone(), &creds()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = m
            .repair(
                &Genome::Source("h = ff +".into()),
                "unexpected end",
                &mut rng,
            )
            .unwrap();
        assert_eq!(g, Genome::Source("h = ff + 1".into()));
        let (req, _) = &stub.calls()[0];
        assert_eq!(req.model, "model-9");
        assert!(req.messages[1].content.contains("unexpected end"));
        assert!(req.messages[1].content.contains("h = ff +"));
    }

    #[test]
    fn credentials_redacted() {
        let secret = "sk-secret-123";
        assert_eq!(
            redact(&format!("key={secret}!"), &[secret.into()]),
            "key=[REDACTED]!"
        );
        // a diagnostic that leaked the key never reaches the prompt
        let stub = Arc::new(StubTransport::always(format!("echo {secret}")));
        let mut m = LlmMutator::new(&config(1), stub.clone(), &creds()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = m
            .repair(
                &Genome::Source("h = ff +".into()),
                &format!("auth {secret}"),
                &mut rng,
            )
            .unwrap_err();
        assert!(!e.0.contains(secret));
        assert!(e.0.contains(REDACTED));
        for (req, _) in stub.calls() {
            for msg in &req.messages {
                assert!(!msg.content.contains(secret));
            }
        }
        assert!(!format!("{m:?}").contains(secret));
    }

    #[test]
    fn pool_sampling_uniform() {
        let stub = Arc::new(StubTransport::always("no blocks"));
        let mut m = LlmMutator::new(&config(3), stub.clone(), &creds()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 9000;
        for _ in 0..n {
            let _ = m.propose(&parent(), &[], &mut rng);
        }
        let mut counts = [0usize; 3];
        for (req, _) in stub.calls() {
            counts[req
                .model
                .strip_prefix("model-")
                .unwrap()
                .parse::<usize>()
                .unwrap()] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 5.0 * sigma, "{counts:?}");
        }
    }
}
