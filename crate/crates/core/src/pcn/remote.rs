//! HTTP client for a remote language model that scores candidates by
//! per-candidate log-probability.
//!
//! Wire protocol (JSON over HTTP):
//!
//! * `POST /v1/score`  `{"context", "candidates"}` → `{"logprobs": [...]}` in candidate order
//! * `POST /v1/sample` `{"context", "candidates", "temperature", "seed"}` → `{"completion"}`
//!
//! `NORMLAB_PCN_ENDPOINT` overrides the configured endpoint; the bearer token
//! is read from the configured environment variable (`NORMLAB_PCN_TOKEN` by
//! default). The client is never mutated after construction.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_candidates, CompletionDistribution, Pcn};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::symbols::{normalize, SymbolSeq};

pub const ENDPOINT_ENV: &str = "NORMLAB_PCN_ENDPOINT";
pub const TOKEN_ENV: &str = "NORMLAB_PCN_TOKEN";

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout: Duration,
    pub max_retries: u32,
    /// Name of the environment variable holding the auth token.
    pub token_env: String,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            max_retries: 2,
            token_env: TOKEN_ENV.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    context: String,
    candidates: &'a [String],
}

#[derive(Deserialize)]
struct ScoreResponse {
    logprobs: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct SampleRequest<'a> {
    context: String,
    candidates: &'a [String],
    temperature: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct SampleResponse {
    completion: String,
}

#[derive(Deserialize)]
struct RejectBody {
    rejected: Option<usize>,
}

pub struct RemotePcn {
    config: RemoteConfig,
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemotePcn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemotePcn")
            .field("endpoint", &self.endpoint)
            .field("timeout", &self.config.timeout)
            .field("max_retries", &self.config.max_retries)
            .finish_non_exhaustive()
    }
}

enum Attempt<T> {
    Done(T),
    Retry(String),
}

impl RemotePcn {
    /// Resolve endpoint and token from the environment and build the client.
    pub fn new(config: RemoteConfig) -> Self {
        let endpoint = std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|e| !e.is_empty())
            .unwrap_or_else(|| config.endpoint.clone());
        let token = std::env::var(&config.token_env)
            .ok()
            .filter(|t| !t.is_empty());
        Self::with_parts(config, endpoint, token)
    }

    /// Build without consulting the environment.
    pub fn with_parts(config: RemoteConfig, endpoint: String, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            config,
            token,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn post<B: Serialize, T>(
        &self,
        route: &str,
        body: &B,
        mut on_ok: impl FnMut(u16, &mut ureq::Body) -> Result<Attempt<T>>,
    ) -> Result<T> {
        let url = format!("{}{}", self.endpoint, route);
        let mut last = String::from("no attempt made");
        for _ in 0..=self.config.max_retries {
            let mut req = self.agent.post(&url);
            if let Some(t) = &self.token {
                req = req.header("Authorization", &format!("Bearer {t}"));
            }
            match req.send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    match on_ok(status, resp.body_mut())? {
                        Attempt::Done(v) => return Ok(v),
                        Attempt::Retry(why) => last = why,
                    }
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(Error::RemoteUnavailable(format!(
            "{url} after {} attempts: {last}",
            self.config.max_retries + 1
        )))
    }

    /// Raw per-candidate log-probabilities.
    pub fn logprobs(&self, context: &SymbolSeq, candidates: &[SymbolSeq]) -> Result<Vec<f64>> {
        check_candidates(candidates)?;
        let texts: Vec<String> = candidates.iter().map(SymbolSeq::render).collect();
        let req = ScoreRequest {
            context: context.render(),
            candidates: &texts,
        };
        let reject = |idx: Option<usize>| Error::CandidateRejected {
            candidate: idx
                .and_then(|i| texts.get(i).cloned())
                .unwrap_or_else(|| "<unspecified>".into()),
        };
        self.post("/v1/score", &req, |status, body| match status {
            200..=299 => {
                let parsed: ScoreResponse = body
                    .read_json()
                    .map_err(|e| Error::RemoteProtocol(e.to_string()))?;
                if parsed.logprobs.len() != texts.len() {
                    return Err(Error::RemoteProtocol(format!(
                        "{} logprobs for {} candidates",
                        parsed.logprobs.len(),
                        texts.len()
                    )));
                }
                let mut out = Vec::with_capacity(texts.len());
                for (i, lp) in parsed.logprobs.into_iter().enumerate() {
                    match lp {
                        Some(v) if !v.is_nan() && v != f64::INFINITY => out.push(v),
                        _ => return Err(reject(Some(i))),
                    }
                }
                Ok(Attempt::Done(out))
            }
            422 => {
                let idx = body.read_json::<RejectBody>().ok().and_then(|b| b.rejected);
                Err(reject(idx))
            }
            408 | 429 | 500..=599 => Ok(Attempt::Retry(format!("HTTP {status}"))),
            _ => Err(Error::RemoteProtocol(format!("HTTP {status}"))),
        })
    }
}

impl<S: Scalar> Pcn<S> for RemotePcn {
    fn score(
        &self,
        context: &SymbolSeq,
        candidates: &[SymbolSeq],
    ) -> Result<CompletionDistribution<S>> {
        let lps = self.logprobs(context, candidates)?;
        let scores: Vec<S> = lps.iter().map(|&l| S::lit(l)).collect();
        CompletionDistribution::from_scores(candidates.to_vec(), &scores, S::one())
    }

    fn generate(&self, context: &SymbolSeq, temperature: f64, seed: u64) -> Result<SymbolSeq> {
        let req = SampleRequest {
            context: context.render(),
            candidates: &[],
            temperature,
            seed,
        };
        self.post("/v1/sample", &req, |status, body| match status {
            200..=299 => {
                let parsed: SampleResponse = body
                    .read_json()
                    .map_err(|e| Error::RemoteProtocol(e.to_string()))?;
                Ok(Attempt::Done(normalize(&parsed.completion)))
            }
            408 | 429 | 500..=599 => Ok(Attempt::Retry(format!("HTTP {status}"))),
            _ => Err(Error::RemoteProtocol(format!("HTTP {status}"))),
        })
    }
}
