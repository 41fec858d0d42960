//! Two-stage multi-agent debate protocol.
//!
//! Stage 1: specialist agents answer independently; semantically equivalent
//! answers are merged into stances, each carrying its supporter set, a
//! frequency and a mean confidence. Stage 2: generalist deliberators are
//! assigned stances proportionally to those frequencies, exchange rated
//! for/against arguments in pairs, refine their answer and confidence, and
//! the refined outputs are aggregated by majority vote with the winners'
//! mean confidence as the final confidence.
//!
//! Everything is driven by one root seed through a splittable RNG with one
//! child stream per (stage, agent index), so results are reproducible no
//! matter how the work is scheduled.

pub mod engine;
pub mod judge;

use serde::{Deserialize, Serialize};

use crate::error::CalibError;

pub use engine::{
    aggregate, assign_stances, build_debate_pair, cluster_stances, generate_arguments,
    rate_argument, refine, run_debate, AgentVerifier, DebateEngine, FactVerifier, StubVerifier,
};
pub use judge::{NormalizingJudge, SemanticJudge};

/// A semantically unique answer with its stage-1 support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceSummary {
    /// Canonical form: the first member's parsed answer.
    pub answer: String,
    /// Indices of the specialists that produced this stance.
    pub member_ids: Vec<usize>,
    pub frequency: usize,
    pub mean_confidence: f64,
}

/// 1-5 ratings plus free-form notes attached to an argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub logical: u8,
    pub factual: u8,
    pub clarity: u8,
    pub concise: u8,
    pub notes: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    For,
    Against,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    pub stance: String,
    /// Role in the pair it is presented in; an argument written for one
    /// stance opposes every other stance by construction.
    pub side: Side,
    pub text: String,
    /// Filled once the argument has been rated.
    pub feedback: Option<Feedback>,
}

/// The two-sided bundle a generalist deliberates over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebatePair {
    pub supporting: Argument,
    /// Absent only in the single-stance degenerate case.
    pub opposing: Option<Argument>,
    /// Stage-1 heads agreeing with the assigned stance.
    pub n_for: usize,
    /// Stage-1 heads disagreeing.
    pub n_against: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedOutput {
    pub agent_id: usize,
    pub answer: String,
    pub confidence: f64,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceSource {
    /// Use the verbalized `Confidence:` value, falling back to the
    /// sequence probability.
    VerbalizedFirst,
    /// Use only the sequence probability.
    SequenceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DebateConfig {
    pub num_generalists: usize,
    pub rounds: usize,
    pub seed: u64,
    pub confidence_source: ConfidenceSource,
}

impl Default for DebateConfig {
    fn default() -> Self {
        Self {
            num_generalists: 4,
            rounds: 1,
            seed: 0,
            confidence_source: ConfidenceSource::VerbalizedFirst,
        }
    }
}

/// Ordered event log: every agent call, sample draw and fallback appears
/// exactly once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TranscriptEvent {
    SpecialistResponded {
        index: usize,
        agent: String,
        answer: String,
        confidence: f64,
    },
    StancesClustered {
        stances: Vec<StanceSummary>,
    },
    StageTwoSkipped {
        reason: String,
    },
    StanceAssigned {
        round: usize,
        generalist_index: usize,
        stance: String,
    },
    ArgumentGenerated {
        round: usize,
        generalist_index: usize,
        agent: String,
        stance: String,
        text: String,
    },
    ArgumentRated {
        round: usize,
        author_index: usize,
        rater_index: usize,
        rater: String,
        feedback: Feedback,
        clamped: bool,
    },
    FactVerified {
        round: usize,
        author_index: usize,
        rating: u8,
    },
    PairSampled {
        round: usize,
        generalist_index: usize,
        supporting_author: usize,
        opposing_author: Option<usize>,
        n_for: usize,
        n_against: usize,
    },
    Refined {
        round: usize,
        generalist_index: usize,
        agent: String,
        answer: String,
        confidence: f64,
    },
    RefineFallback {
        round: usize,
        generalist_index: usize,
        reason: String,
    },
    Aggregated {
        final_answer: String,
        final_confidence: f64,
        counts: Vec<(String, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateResult {
    pub final_answer: String,
    pub final_confidence: f64,
    pub stage1: Vec<StanceSummary>,
    pub refined: Vec<RefinedOutput>,
    pub transcript: Vec<TranscriptEvent>,
}

/// A debate that failed mid-flight, carrying the transcript up to the
/// failure point.
#[derive(Debug)]
pub struct DebateAborted {
    pub error: CalibError,
    pub transcript: Vec<TranscriptEvent>,
}

impl std::fmt::Display for DebateAborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "debate aborted: {}", self.error)
    }
}

impl std::error::Error for DebateAborted {}

impl From<DebateAborted> for CalibError {
    fn from(aborted: DebateAborted) -> Self {
        aborted.error
    }
}
