//! Simulated agent backend: seeded stochastic answerers whose calibration
//! quality is dialed through a profile.
//!
//! A simulated agent answers the query's true answer with probability
//! `accuracy`, otherwise a uniformly chosen wrong option, and draws its
//! verbalized confidence from a truncated normal matching the outcome.
//! Setting both confidence means equal to the accuracy produces a
//! well-calibrated agent; pushing them up produces an overconfident one.
//!
//! For stage-2 refinement two behaviors exist: `stubborn` keeps the
//! assigned stance and its stage-1 mean confidence; `consensus` (default)
//! re-derives a posterior for the assigned stance from the vote counts it
//! was shown, treating each of the N specialists as an independent voter
//! with per-vote accuracy equal to the stance's mean confidence, and
//! defects to the opposing stance when that posterior drops below one half.

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};
use crate::rng::SplitRng;

use super::{Agent, AgentSpec, CallKind, Completion, CompletionRequest, Query};

/// Mean/spread of a truncated normal confidence draw, clamped to [0.01, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfParams {
    pub mean: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineRule {
    Stubborn,
    Consensus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    pub accuracy: f64,
    pub confidence_when_correct: ConfParams,
    pub confidence_when_wrong: ConfParams,
    pub refine_rule: RefineRule,
}

impl SimProfile {
    /// Well-calibrated at the given accuracy: both confidence means equal
    /// the accuracy.
    pub fn calibrated(accuracy: f64, spread: f64) -> Self {
        Self {
            accuracy,
            confidence_when_correct: ConfParams { mean: accuracy, spread },
            confidence_when_wrong: ConfParams { mean: accuracy, spread },
            refine_rule: RefineRule::Consensus,
        }
    }

    /// Fixed high confidence regardless of correctness.
    pub fn overconfident(accuracy: f64, confidence: f64, spread: f64) -> Self {
        Self {
            accuracy,
            confidence_when_correct: ConfParams { mean: confidence, spread },
            confidence_when_wrong: ConfParams { mean: confidence, spread },
            refine_rule: RefineRule::Consensus,
        }
    }

    /// Read a profile from backend params: `accuracy`, `correct_mean`,
    /// `correct_spread`, `wrong_mean`, `wrong_spread`, `refine_rule`.
    pub fn from_params(params: &std::collections::BTreeMap<String, String>) -> Result<Self> {
        let get = |key: &str, default: f64| -> Result<f64> {
            match params.get(key) {
                Some(v) => v.parse::<f64>().map_err(|_| {
                    CalibError::InvalidParam(format!("backend param '{key}' is not a number: {v}"))
                }),
                None => Ok(default),
            }
        };
        let accuracy = get("accuracy", 0.8)?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(CalibError::InvalidParam(format!("accuracy {accuracy} outside [0,1]")));
        }
        let refine_rule = match params.get("refine_rule").map(String::as_str) {
            None | Some("consensus") => RefineRule::Consensus,
            Some("stubborn") => RefineRule::Stubborn,
            Some(other) => {
                return Err(CalibError::InvalidParam(format!("unknown refine_rule '{other}'")))
            }
        };
        Ok(Self {
            accuracy,
            confidence_when_correct: ConfParams {
                mean: get("correct_mean", accuracy)?,
                spread: get("correct_spread", 0.05)?,
            },
            confidence_when_wrong: ConfParams {
                mean: get("wrong_mean", accuracy)?,
                spread: get("wrong_spread", 0.05)?,
            },
            refine_rule,
        })
    }
}

pub struct SimulatedAgent {
    spec: AgentSpec,
    profile: SimProfile,
    rng: SplitRng,
}

impl SimulatedAgent {
    pub fn new(spec: AgentSpec, profile: SimProfile) -> Self {
        let rng = SplitRng::new(spec.seed);
        Self { spec, profile, rng }
    }

    pub fn from_spec(spec: AgentSpec) -> Result<Self> {
        let profile = SimProfile::from_params(&spec.backend_params)?;
        Ok(Self::new(spec, profile))
    }

    fn draw_confidence(&mut self, params: ConfParams) -> f64 {
        (params.mean + params.spread * self.rng.next_normal()).clamp(0.01, 1.0)
    }

    fn answer_stance(&mut self, query: &Query) -> Result<Completion> {
        let truth = query.true_answer.as_ref().ok_or_else(|| {
            CalibError::InvalidParam(format!(
                "simulated agent '{}' needs query '{}' to carry a true_answer",
                self.spec.name, query.id
            ))
        })?;
        let correct = self.rng.next_f64() < self.profile.accuracy;
        let answer = if correct {
            truth.clone()
        } else {
            let options = query.options.as_deref().unwrap_or_default();
            let wrong: Vec<&String> = options.iter().filter(|o| *o != truth).collect();
            if wrong.is_empty() {
                return Err(CalibError::InvalidParam(format!(
                    "simulated agent '{}' needs wrong options for query '{}'",
                    self.spec.name, query.id
                )));
            }
            wrong[self.rng.gen_range(wrong.len())].clone()
        };
        let conf = self.draw_confidence(if correct {
            self.profile.confidence_when_correct
        } else {
            self.profile.confidence_when_wrong
        });
        Ok(Completion { text: format!("Answer: {answer}  Confidence: {conf}"), token_probs: None })
    }

    fn refine(
        &mut self,
        query: &Query,
        stance: &str,
        mean_confidence: f64,
        n_for: usize,
        n_against: usize,
        opposing: Option<&str>,
    ) -> Completion {
        let (answer, conf) = match self.profile.refine_rule {
            RefineRule::Stubborn => (stance.to_string(), mean_confidence),
            RefineRule::Consensus => {
                let options = query.options.as_ref().map(|o| o.len()).unwrap_or(4).max(2);
                let q = stance_posterior(mean_confidence, n_for, n_against, options);
                match opposing {
                    Some(opp) if q < 0.5 => (opp.to_string(), (1.0 - q).clamp(0.01, 1.0)),
                    _ => (stance.to_string(), q.clamp(0.01, 1.0)),
                }
            }
        };
        Completion { text: format!("Answer: {answer}  Confidence: {conf}"), token_probs: None }
    }
}

/// Posterior that the stance is correct given `n_for` of `n_for + n_against`
/// independent votes landed on it. Per-vote hit rate is the stance's mean
/// confidence; a miss scatters uniformly over the remaining options; the
/// prior is uniform over options.
fn stance_posterior(mean_confidence: f64, n_for: usize, n_against: usize, options: usize) -> f64 {
    let a = mean_confidence.clamp(0.2, 0.99);
    let b = ((1.0 - a) / (options - 1) as f64).max(1e-6);
    let prior = 1.0 / options as f64;
    let like_correct = a.powi(n_for as i32) * (1.0 - a).powi(n_against as i32);
    let like_wrong = b.powi(n_for as i32) * (1.0 - b).powi(n_against as i32);
    let num = prior * like_correct;
    num / (num + (1.0 - prior) * like_wrong)
}

impl Agent for SimulatedAgent {
    fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion> {
        match &request.kind {
            CallKind::StanceAnswer => self.answer_stance(request.query),
            CallKind::Argue { stance } => Ok(Completion {
                text: format!(
                    "{} finds '{stance}' best supported by the visible evidence and consistent with the question's framing.",
                    self.spec.name
                ),
                token_probs: None,
            }),
            CallKind::Rate { .. } => {
                let l = 1 + self.rng.gen_range(5);
                let c = 1 + self.rng.gen_range(5);
                let n = 1 + self.rng.gen_range(5);
                Ok(Completion {
                    text: format!("Logical: {l}  Clarity: {c}  Concise: {n}  Notes: auto review"),
                    token_probs: None,
                })
            }
            CallKind::Refine { stance, mean_confidence, n_for, n_against, opposing_stance } => {
                Ok(self.refine(
                    request.query,
                    stance,
                    *mean_confidence,
                    *n_for,
                    *n_against,
                    opposing_stance.as_deref(),
                ))
            }
            CallKind::Premises { argument } => Ok(Completion {
                text: format!("The argument assumes: {argument}"),
                token_probs: None,
            }),
            CallKind::FactCheck { .. } => Ok(Completion {
                text: "Factual: 3  Notes: premises look plausible but unverified".into(),
                token_probs: None,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{respond, Backend, Strategy};
    use crate::metrics::ece;
    use crate::records::PredictionRecord;

    fn spec(name: &str, seed: u64) -> AgentSpec {
        AgentSpec {
            name: name.into(),
            backend: Backend::Simulated,
            strategy: Strategy::CoT,
            backend_params: Default::default(),
            seed,
        }
    }

    fn query(id: usize) -> Query {
        Query {
            id: format!("q{id}"),
            question: "pick the right option".into(),
            options: Some(vec!["a".into(), "b".into(), "c".into(), "d".into()]),
            image_ref: None,
            true_answer: Some("a".into()),
        }
    }

    #[test]
    fn perfect_accuracy_always_answers_truth() {
        let mut agent = SimulatedAgent::new(spec("sim", 1), SimProfile::calibrated(1.0, 0.05));
        for i in 0..50 {
            let r = respond(&mut agent, &query(i)).unwrap();
            assert_eq!(r.parsed_answer, "a");
        }
    }

    #[test]
    fn empirical_accuracy_tracks_profile() {
        let mut agent = SimulatedAgent::new(spec("sim", 2), SimProfile::calibrated(0.7, 0.05));
        let n = 10_000usize;
        let mut hits = 0usize;
        for i in 0..n {
            let r = respond(&mut agent, &query(i)).unwrap();
            if r.parsed_answer == "a" {
                hits += 1;
            }
        }
        let acc = hits as f64 / n as f64;
        assert!((acc - 0.7).abs() < 0.02, "accuracy {acc}");
    }

    #[test]
    fn identical_seed_and_stream_reproduce_responses() {
        let mut a = SimulatedAgent::new(spec("sim", 3), SimProfile::calibrated(0.6, 0.1));
        let mut b = SimulatedAgent::new(spec("sim", 3), SimProfile::calibrated(0.6, 0.1));
        for i in 0..100 {
            let q = query(i);
            assert_eq!(respond(&mut a, &q).unwrap(), respond(&mut b, &q).unwrap());
        }
    }

    #[test]
    fn calibrated_profile_has_near_zero_ece() {
        let mut agent = SimulatedAgent::new(spec("sim", 4), SimProfile::calibrated(0.8, 0.05));
        let records: Vec<PredictionRecord> = (0..5000)
            .map(|i| {
                let q = query(i);
                let r = respond(&mut agent, &q).unwrap();
                PredictionRecord::new(q.id, r.parsed_answer, "a", r.sequence_confidence).unwrap()
            })
            .collect();
        let e = ece(&records, 10).unwrap();
        assert!(e < 0.05, "ece {e}");
    }

    #[test]
    fn missing_truth_or_options_is_an_error() {
        let mut agent = SimulatedAgent::new(spec("sim", 5), SimProfile::calibrated(0.0, 0.05));
        let q = Query {
            id: "q".into(),
            question: "?".into(),
            options: None,
            image_ref: None,
            true_answer: Some("a".into()),
        };
        // accuracy 0 forces a wrong draw, which needs options.
        assert!(respond(&mut agent, &q).is_err());
    }

    #[test]
    fn posterior_is_monotone_in_support() {
        let p1 = stance_posterior(0.8, 1, 3, 4);
        let p2 = stance_posterior(0.8, 2, 2, 4);
        let p3 = stance_posterior(0.8, 3, 1, 4);
        let p4 = stance_posterior(0.8, 4, 0, 4);
        assert!(p1 < p2 && p2 < p3 && p3 < p4);
        assert!(p4 > 0.99);
    }

    #[test]
    fn profile_params_parse_and_validate() {
        let mut params = std::collections::BTreeMap::new();
        params.insert("accuracy".to_string(), "0.5".to_string());
        params.insert("correct_mean".to_string(), "0.95".to_string());
        params.insert("wrong_mean".to_string(), "0.95".to_string());
        params.insert("refine_rule".to_string(), "stubborn".to_string());
        let p = SimProfile::from_params(&params).unwrap();
        assert_eq!(p.refine_rule, RefineRule::Stubborn);
        assert_eq!(p.confidence_when_wrong.mean, 0.95);

        params.insert("accuracy".to_string(), "1.5".to_string());
        assert!(SimProfile::from_params(&params).is_err());
    }
}
