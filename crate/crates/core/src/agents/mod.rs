//! Agent abstraction: answerers that produce an answer string plus a
//! confidence signal, behind three backends (scripted fixtures, seeded
//! simulation, remote HTTP endpoint).
//!
//! Backends expose one uniform operation, `complete`, which maps a rendered
//! prompt (plus enough structured context for fixtures and simulation) to a
//! completion text and optional per-token probabilities. Everything above
//! that — prompt rendering, answer/confidence parsing — is shared, so the
//! debate engine cannot tell backends apart.

pub mod http;
pub mod prompts;
pub mod roster;
pub mod scripted;
pub mod simulated;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

/// One question put to agents. `true_answer` is fixture-only metadata used
/// by simulated agents and batch scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub options: Option<Vec<String>>,
    #[serde(default)]
    pub image_ref: Option<String>,
    #[serde(default)]
    pub true_answer: Option<String>,
}

impl Query {
    pub fn validate(&self) -> Result<()> {
        if self.question.trim().is_empty() {
            return Err(CalibError::InvalidParam(format!("query '{}' has an empty question", self.id)));
        }
        if let Some(options) = &self.options {
            let mut seen = std::collections::BTreeSet::new();
            for o in options {
                if !seen.insert(o) {
                    return Err(CalibError::InvalidParam(format!(
                        "query '{}' has duplicate option '{o}'",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Raw agent output for a stage-1 answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub raw_text: String,
    pub parsed_answer: String,
    pub token_probs: Option<Vec<f64>>,
    /// Geometric mean of `token_probs` when present, otherwise the
    /// verbalized value (floored at 0.01 to stay in (0,1]).
    pub sequence_confidence: f64,
    pub verbalized_confidence: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Scripted,
    Simulated,
    Http,
}

/// Prompting strategy. `Generalist` is reserved for stage-2 deliberators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[serde(rename = "cot")]
    CoT,
    SelfAsk,
    SearchStyle,
    GenRead,
    Generalist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub backend: Backend,
    pub strategy: Strategy,
    #[serde(default)]
    pub backend_params: BTreeMap<String, String>,
    #[serde(default)]
    pub seed: u64,
}

/// What a completion is for. Fixture and simulation backends key their
/// behavior off this; the HTTP backend only needs the rendered prompt.
#[derive(Debug, Clone, PartialEq)]
pub enum CallKind {
    StanceAnswer,
    Argue {
        stance: String,
    },
    Rate {
        stance: Option<String>,
        argument: String,
    },
    Refine {
        stance: String,
        mean_confidence: f64,
        n_for: usize,
        n_against: usize,
        opposing_stance: Option<String>,
    },
    Premises {
        argument: String,
    },
    FactCheck {
        premises: String,
    },
}

impl CallKind {
    pub fn label(&self) -> &'static str {
        match self {
            CallKind::StanceAnswer => "answer",
            CallKind::Argue { .. } => "argument",
            CallKind::Rate { .. } => "rating",
            CallKind::Refine { .. } => "refinement",
            CallKind::Premises { .. } => "premises",
            CallKind::FactCheck { .. } => "factcheck",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub query: &'a Query,
    pub kind: CallKind,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub token_probs: Option<Vec<f64>>,
}

/// A single answering backend. A `&mut self` receiver keeps per-instance
/// RNG state exclusive; the orchestrator serializes calls per agent and may
/// only parallelize across distinct instances.
pub trait Agent {
    fn spec(&self) -> &AgentSpec;

    fn name(&self) -> &str {
        &self.spec().name
    }

    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion>;
}

/// Geometric mean of next-token probabilities: `exp(mean ln p_t)`.
pub fn sequence_confidence(token_probs: &[f64]) -> Result<f64> {
    if token_probs.is_empty() {
        return Err(CalibError::EmptyInput("token probabilities"));
    }
    for &p in token_probs {
        if !(p > 0.0 && p <= 1.0) {
            return Err(CalibError::InvalidParam(format!(
                "token probability {p} outside (0, 1]"
            )));
        }
    }
    let mean_log = token_probs.iter().map(|p| p.ln()).sum::<f64>() / token_probs.len() as f64;
    Ok(mean_log.exp().min(1.0))
}

/// Stage-1 answering: render the strategy prompt, complete, parse.
///
/// The parsed answer falls back to the first non-empty completion line when
/// no `Answer:` marker is present.
pub fn respond(agent: &mut dyn Agent, query: &Query) -> Result<AgentResponse> {
    query.validate()?;
    let prompt = prompts::render_stance_prompt(agent.spec().strategy, query);
    let completion = agent.complete(&CompletionRequest {
        query,
        kind: CallKind::StanceAnswer,
        prompt,
    })?;
    response_from_completion(agent.name(), completion)
}

pub(crate) fn response_from_completion(
    agent_name: &str,
    completion: Completion,
) -> Result<AgentResponse> {
    let parsed = prompts::parse_answer_and_confidence(&completion.text);
    let parsed_answer = parsed
        .answer
        .or_else(|| {
            completion
                .text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty())
                .map(String::from)
        })
        .unwrap_or_default();
    if parsed_answer.is_empty() {
        return Err(CalibError::InvalidParam(format!(
            "agent '{agent_name}' produced an empty answer"
        )));
    }
    let sequence = match &completion.token_probs {
        Some(tp) => sequence_confidence(tp)?,
        None => match parsed.confidence {
            Some(c) => c.max(0.01),
            None => {
                return Err(CalibError::InvalidParam(format!(
                    "agent '{agent_name}' returned neither token probabilities nor a verbalized confidence"
                )))
            }
        },
    };
    Ok(AgentResponse {
        raw_text: completion.text,
        parsed_answer,
        token_probs: completion.token_probs,
        sequence_confidence: sequence,
        verbalized_confidence: parsed.confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_confidence_examples() {
        assert_eq!(sequence_confidence(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((sequence_confidence(&[0.7]).unwrap() - 0.7).abs() < 1e-15);
        assert!((sequence_confidence(&[0.9, 0.4]).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn sequence_confidence_rejects_out_of_range() {
        assert!(sequence_confidence(&[]).is_err());
        assert!(sequence_confidence(&[0.5, 0.0]).is_err());
        assert!(sequence_confidence(&[0.5, 1.2]).is_err());
        assert!(sequence_confidence(&[-0.1]).is_err());
    }

    #[test]
    fn sequence_confidence_permutation_invariant_and_bounded() {
        let probs = [0.3, 0.9, 0.55, 0.71];
        let a = sequence_confidence(&probs).unwrap();
        let mut rev = probs;
        rev.reverse();
        let b = sequence_confidence(&rev).unwrap();
        assert!((a - b).abs() < 1e-15);
        let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = probs.iter().copied().fold(0.0f64, f64::max);
        assert!(a >= min && a <= max);
    }

    #[test]
    fn query_validation() {
        let q = Query {
            id: "q1".into(),
            question: " ".into(),
            options: None,
            image_ref: None,
            true_answer: None,
        };
        assert!(q.validate().is_err());
        let q = Query {
            id: "q1".into(),
            question: "what?".into(),
            options: Some(vec!["a".into(), "a".into()]),
            image_ref: None,
            true_answer: None,
        };
        assert!(q.validate().is_err());
    }
}
