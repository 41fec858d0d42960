//! Scripted agent backend: completions served from JSONL fixtures.
//!
//! The base schema is `{"query_id", "agent", "answer", "token_probs"?,
//! "confidence"?}` for stage-1 answers. An optional `"kind"` field extends
//! the same file to the other debate calls:
//!
//! - `"argument"`: `{"stance", "text"}` keyed by (query, agent, stance)
//! - `"rating"`: `{"logical", "clarity", "concise", "notes"?, "stance"?}`
//! - `"refinement"`: `{"text", "token_probs"?}` (raw completion to parse)
//! - `"premises"` / `"factcheck"`: `{"text"}`
//!
//! A missing fixture is a hard error so fixture gaps surface immediately.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{CalibError, Result};

use super::{Agent, AgentSpec, CallKind, Completion, CompletionRequest};

#[derive(Debug, Clone, Deserialize)]
struct FixtureLine {
    query_id: String,
    agent: String,
    #[serde(default = "default_kind")]
    kind: String,
    #[serde(default)]
    answer: Option<String>,
    #[serde(default)]
    token_probs: Option<Vec<f64>>,
    #[serde(default)]
    confidence: Option<f64>,
    #[serde(default)]
    stance: Option<String>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    logical: Option<i64>,
    #[serde(default)]
    clarity: Option<i64>,
    #[serde(default)]
    concise: Option<i64>,
    #[serde(default)]
    notes: Option<String>,
}

fn default_kind() -> String {
    "answer".to_string()
}

#[derive(Debug, Clone)]
struct Fixture {
    text: String,
    token_probs: Option<Vec<f64>>,
}

type Key = (String, String, String, Option<String>);

/// Parsed fixture file, shared by every scripted agent reading it.
#[derive(Debug, Default)]
pub struct ScriptedStore {
    fixtures: HashMap<Key, Fixture>,
}

impl ScriptedStore {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn from_lines(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut store = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fx: FixtureLine =
                serde_json::from_str(&line).map_err(|e| CalibError::MalformedLine {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            store.insert(fx, i + 1)?;
        }
        Ok(store)
    }

    fn insert(&mut self, fx: FixtureLine, line: usize) -> Result<()> {
        let bad = |message: String| CalibError::MalformedLine { line, message };
        let (text, token_probs, stance_key) = match fx.kind.as_str() {
            "answer" => {
                let answer = fx
                    .answer
                    .ok_or_else(|| bad("answer fixture needs an \"answer\" field".into()))?;
                if fx.token_probs.is_none() && fx.confidence.is_none() {
                    return Err(bad(
                        "answer fixture needs token_probs or confidence".into(),
                    ));
                }
                if let Some(c) = fx.confidence {
                    if !(0.0..=1.0).contains(&c) {
                        return Err(bad(format!("confidence {c} outside [0,1]")));
                    }
                }
                let mut text = format!("Answer: {answer}");
                if let Some(c) = fx.confidence {
                    text.push_str(&format!("  Confidence: {c}"));
                }
                (text, fx.token_probs, None)
            }
            "argument" => {
                let stance = fx
                    .stance
                    .ok_or_else(|| bad("argument fixture needs a \"stance\" field".into()))?;
                let text = fx
                    .text
                    .ok_or_else(|| bad("argument fixture needs a \"text\" field".into()))?;
                (text, None, Some(stance))
            }
            "rating" => {
                let (Some(l), Some(c), Some(n)) = (fx.logical, fx.clarity, fx.concise) else {
                    return Err(bad(
                        "rating fixture needs logical, clarity and concise".into(),
                    ));
                };
                let notes = fx.notes.unwrap_or_default();
                let text = format!("Logical: {l}  Clarity: {c}  Concise: {n}  Notes: {notes}");
                (text, None, fx.stance)
            }
            "refinement" | "premises" | "factcheck" => {
                let text = fx
                    .text
                    .ok_or_else(|| bad(format!("{} fixture needs a \"text\" field", fx.kind)))?;
                (text, fx.token_probs, None)
            }
            other => return Err(bad(format!("unknown fixture kind '{other}'"))),
        };
        self.fixtures
            .insert((fx.query_id, fx.agent, fx.kind, stance_key), Fixture { text, token_probs });
        Ok(())
    }

    fn lookup(&self, key: &Key) -> Option<&Fixture> {
        self.fixtures.get(key)
    }
}

pub struct ScriptedAgent {
    spec: AgentSpec,
    store: Arc<ScriptedStore>,
}

impl ScriptedAgent {
    pub fn new(spec: AgentSpec, store: Arc<ScriptedStore>) -> Self {
        Self { spec, store }
    }
}

impl Agent for ScriptedAgent {
    fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion> {
        let kind = request.kind.label().to_string();
        let stance_key = match &request.kind {
            CallKind::Argue { stance } => Some(stance.clone()),
            CallKind::Rate { stance, .. } => stance.clone(),
            _ => None,
        };
        let base = (request.query.id.clone(), self.spec.name.clone(), kind.clone(), stance_key);
        let fixture = self.store.lookup(&base).or_else(|| {
            // Ratings may be scripted per stance or once per (query, agent).
            if matches!(request.kind, CallKind::Rate { .. }) && base.3.is_some() {
                self.store.lookup(&(base.0.clone(), base.1.clone(), base.2.clone(), None))
            } else {
                None
            }
        });
        match fixture {
            Some(f) => Ok(Completion { text: f.text.clone(), token_probs: f.token_probs.clone() }),
            None => Err(CalibError::FixtureGap {
                query_id: request.query.id.clone(),
                agent: self.spec.name.clone(),
                kind,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{respond, Backend, Query, Strategy};

    fn spec(name: &str) -> AgentSpec {
        AgentSpec {
            name: name.into(),
            backend: Backend::Scripted,
            strategy: Strategy::CoT,
            backend_params: Default::default(),
            seed: 0,
        }
    }

    fn query(id: &str) -> Query {
        Query {
            id: id.into(),
            question: "Identify the type of fish in the picture".into(),
            options: None,
            image_ref: None,
            true_answer: Some("cardinalfish".into()),
        }
    }

    #[test]
    fn answer_fixture_round_trips() {
        let store = Arc::new(
            ScriptedStore::from_lines(
                r#"{"query_id":"q1","agent":"cot","answer":"cardinalfish","confidence":0.85}"#,
            )
            .unwrap(),
        );
        let mut agent = ScriptedAgent::new(spec("cot"), store);
        let response = respond(&mut agent, &query("q1")).unwrap();
        assert_eq!(response.parsed_answer, "cardinalfish");
        assert_eq!(response.verbalized_confidence, Some(0.85));
        assert_eq!(response.sequence_confidence, 0.85);
    }

    #[test]
    fn token_prob_fixture_yields_geometric_mean() {
        let store = Arc::new(
            ScriptedStore::from_lines(
                r#"{"query_id":"q1","agent":"cot","answer":"yes","token_probs":[0.9,0.4]}"#,
            )
            .unwrap(),
        );
        let mut agent = ScriptedAgent::new(spec("cot"), store);
        let response = respond(&mut agent, &query("q1")).unwrap();
        assert!((response.sequence_confidence - 0.6).abs() < 1e-12);
        assert_eq!(response.verbalized_confidence, None);
    }

    #[test]
    fn missing_fixture_is_a_gap_error() {
        let store = Arc::new(ScriptedStore::from_lines("").unwrap());
        let mut agent = ScriptedAgent::new(spec("cot"), store);
        match respond(&mut agent, &query("q9")) {
            Err(CalibError::FixtureGap { query_id, agent, kind }) => {
                assert_eq!(query_id, "q9");
                assert_eq!(agent, "cot");
                assert_eq!(kind, "answer");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_fixture_reports_line() {
        let err = ScriptedStore::from_lines(
            "{\"query_id\":\"q1\",\"agent\":\"a\",\"answer\":\"x\",\"confidence\":0.5}\n{bad}",
        )
        .unwrap_err();
        match err {
            CalibError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
