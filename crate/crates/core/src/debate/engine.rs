//! Debate orchestration: clustering, assignment, argumentation, rating,
//! pairing, refinement and aggregation.

use std::collections::BTreeMap;

use crate::agents::{
    prompts, respond, Agent, AgentResponse, CallKind, CompletionRequest, Query,
};
use crate::error::{CalibError, Result};
use crate::rng::SplitRng;

use super::judge::{NormalizingJudge, SemanticJudge};
use super::{
    Argument, ConfidenceSource, DebateAborted, DebateConfig, DebatePair, DebateResult, Feedback,
    RefinedOutput, Side, StanceSummary, TranscriptEvent,
};

/// Factuality checker used while rating arguments.
pub trait FactVerifier {
    fn verify(&mut self, query: &Query, argument_text: &str) -> Result<(u8, String)>;
}

/// Default verifier: no checking, rating 3, note "unverified".
#[derive(Debug, Default, Clone, Copy)]
pub struct StubVerifier;

impl FactVerifier for StubVerifier {
    fn verify(&mut self, _query: &Query, _argument_text: &str) -> Result<(u8, String)> {
        Ok((3, "unverified".to_string()))
    }
}

/// Chain-of-verification style checker: one call to list the argument's
/// premises, a second call to check them and rate factuality.
pub struct AgentVerifier {
    agent: Box<dyn Agent>,
}

impl AgentVerifier {
    pub fn new(agent: Box<dyn Agent>) -> Self {
        Self { agent }
    }
}

impl FactVerifier for AgentVerifier {
    fn verify(&mut self, query: &Query, argument_text: &str) -> Result<(u8, String)> {
        let kind = CallKind::Premises { argument: argument_text.to_string() };
        let prompt = prompts::render_prompt(&kind, self.agent.spec().strategy, query, &BTreeMap::new())?;
        let premises = self.agent.complete(&CompletionRequest { query, kind, prompt })?;

        let kind = CallKind::FactCheck { premises: premises.text.clone() };
        let prompt = prompts::render_prompt(&kind, self.agent.spec().strategy, query, &BTreeMap::new())?;
        let checked = self.agent.complete(&CompletionRequest { query, kind, prompt })?;
        let rating = prompts::parse_labeled_int(&checked.text, "Factual:")
            .unwrap_or(3)
            .clamp(1, 5) as u8;
        let notes = checked
            .text
            .find("Notes:")
            .map(|at| checked.text[at + "Notes:".len()..].trim().to_string())
            .unwrap_or_else(|| "checked".to_string());
        Ok((rating, notes))
    }
}

/// The confidence a response contributes to its stance.
fn chosen_confidence(response: &AgentResponse, source: ConfidenceSource) -> f64 {
    match source {
        ConfidenceSource::VerbalizedFirst => response
            .verbalized_confidence
            .unwrap_or(response.sequence_confidence)
            .max(0.01),
        ConfidenceSource::SequenceOnly => response.sequence_confidence,
    }
}

/// Merge responses into stances under the judge. Greedy first-match keeps
/// the partition deterministic even for non-transitive judges; the
/// canonical answer is the first member's. Output is sorted by
/// (frequency desc, canonical answer asc).
pub fn cluster_stances(
    responses: &[AgentResponse],
    judge: &mut dyn SemanticJudge,
    source: ConfidenceSource,
) -> Result<Vec<StanceSummary>> {
    if responses.is_empty() {
        return Err(CalibError::EmptyInput("responses to cluster"));
    }
    let mut clusters: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, response) in responses.iter().enumerate() {
        let mut placed = false;
        for (canonical, members) in clusters.iter_mut() {
            let same = judge.same_stance(canonical, &response.parsed_answer).map_err(|e| {
                CalibError::JudgeFailure {
                    left: canonical.clone(),
                    right: response.parsed_answer.clone(),
                    message: e.to_string(),
                }
            })?;
            if same {
                members.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            clusters.push((response.parsed_answer.clone(), vec![i]));
        }
    }
    let mut summaries: Vec<StanceSummary> = clusters
        .into_iter()
        .map(|(answer, member_ids)| {
            let mean = member_ids
                .iter()
                .map(|&i| chosen_confidence(&responses[i], source))
                .sum::<f64>()
                / member_ids.len() as f64;
            StanceSummary {
                answer,
                frequency: member_ids.len(),
                member_ids,
                mean_confidence: mean,
            }
        })
        .collect();
    summaries.sort_by(|a, b| {
        b.frequency.cmp(&a.frequency).then_with(|| a.answer.cmp(&b.answer))
    });
    Ok(summaries)
}

/// Assign each of `m` generalists a stance sampled with probability
/// proportional to the stance frequencies; one child stream per slot keeps
/// the draws order-independent.
pub fn assign_stances(
    summaries: &[StanceSummary],
    m: usize,
    rng: &SplitRng,
) -> Result<Vec<String>> {
    if summaries.is_empty() {
        return Err(CalibError::EmptyInput("stance summaries"));
    }
    if m == 0 {
        return Err(CalibError::InvalidParam("need at least one generalist".into()));
    }
    let weights: Vec<f64> = summaries.iter().map(|s| s.frequency as f64).collect();
    Ok((0..m)
        .map(|j| {
            let mut slot = rng.child_idx(j as u64);
            summaries[slot.weighted_choice(&weights)].answer.clone()
        })
        .collect())
}

/// One 'for' argument from the agent for its assigned stance.
pub fn generate_arguments(
    agent: &mut dyn Agent,
    query: &Query,
    stance: &str,
) -> Result<Vec<Argument>> {
    let kind = CallKind::Argue { stance: stance.to_string() };
    let prompt = prompts::render_prompt(&kind, agent.spec().strategy, query, &BTreeMap::new())?;
    let completion = agent.complete(&CompletionRequest { query, kind, prompt })?;
    Ok(vec![Argument {
        stance: stance.to_string(),
        side: Side::For,
        text: completion.text,
        feedback: None,
    }])
}

/// Ratings for one argument: logical/clarity/concise from the rating
/// agent, factuality from the verifier. Returns the (possibly clamped)
/// feedback and whether clamping happened.
pub fn rate_argument(
    agent: &mut dyn Agent,
    query: &Query,
    argument: &Argument,
    verifier: &mut dyn FactVerifier,
) -> Result<(Feedback, bool)> {
    if argument.text.trim().is_empty() {
        return Err(CalibError::InvalidParam("cannot rate an empty argument".into()));
    }
    let kind = CallKind::Rate {
        stance: Some(argument.stance.clone()),
        argument: argument.text.clone(),
    };
    let prompt = prompts::render_prompt(&kind, agent.spec().strategy, query, &BTreeMap::new())?;
    let completion = agent.complete(&CompletionRequest { query, kind, prompt })?;

    let mut clamped = false;
    let mut take = |label: &str| -> u8 {
        let raw = prompts::parse_labeled_int(&completion.text, label).unwrap_or(3);
        if !(1..=5).contains(&raw) {
            clamped = true;
        }
        raw.clamp(1, 5) as u8
    };
    let logical = take("Logical:");
    let clarity = take("Clarity:");
    let concise = take("Concise:");
    let agent_notes = completion
        .text
        .find("Notes:")
        .map(|at| completion.text[at + "Notes:".len()..].trim().to_string())
        .unwrap_or_default();
    let (factual, factual_note) = verifier.verify(query, &argument.text)?;
    let notes = if agent_notes.is_empty() {
        factual_note
    } else {
        format!("{agent_notes}; factual: {factual_note}")
    };
    Ok((Feedback { logical, factual, clarity, concise, notes }, clamped))
}

/// Sample a supporting argument from the assigned stance's pool and an
/// opposing one from the union of the other stances' pools. Head counts
/// come from the stage-1 summaries.
pub fn build_debate_pair(
    assigned_stance: &str,
    summaries: &[StanceSummary],
    all_arguments: &[Argument],
    rng: &mut SplitRng,
) -> Result<DebatePair> {
    let total: usize = summaries.iter().map(|s| s.frequency).sum();
    let stance = summaries.iter().find(|s| s.answer == assigned_stance).ok_or_else(|| {
        CalibError::InvalidParam(format!("'{assigned_stance}' is not a known stance"))
    })?;

    let supporting_pool: Vec<&Argument> =
        all_arguments.iter().filter(|a| a.stance == assigned_stance).collect();
    if supporting_pool.is_empty() {
        return Err(CalibError::InvalidParam(format!(
            "no supporting argument exists for stance '{assigned_stance}'"
        )));
    }
    let opposing_pool: Vec<&Argument> =
        all_arguments.iter().filter(|a| a.stance != assigned_stance).collect();

    let supporting = supporting_pool[rng.gen_range(supporting_pool.len())].clone();
    let opposing = if opposing_pool.is_empty() {
        None
    } else {
        let mut arg = opposing_pool[rng.gen_range(opposing_pool.len())].clone();
        arg.side = Side::Against;
        Some(arg)
    };
    Ok(DebatePair {
        supporting,
        opposing,
        n_for: stance.frequency,
        n_against: total - stance.frequency,
    })
}

fn feedback_text(feedback: &Option<Feedback>) -> String {
    match feedback {
        Some(f) => format!(
            "logical {}/5, factual {}/5, clarity {}/5, concise {}/5; {}",
            f.logical, f.factual, f.clarity, f.concise, f.notes
        ),
        None => "(no feedback)".to_string(),
    }
}

/// A refinement plus whether the engine had to fall back to the assigned
/// stance or its stage-1 confidence.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub output: RefinedOutput,
    pub fallback: Option<String>,
}

/// Render the final-confidence template, let the agent complete it, and
/// parse the refined answer and confidence per the configured source.
/// An unparseable answer keeps the assigned stance with its stage-1 mean
/// confidence and reports the fallback.
pub fn refine(
    agent: &mut dyn Agent,
    agent_id: usize,
    query: &Query,
    stance: &str,
    mean_confidence: f64,
    pair: &DebatePair,
    config: &DebateConfig,
) -> Result<RefineOutcome> {
    let mut vars = BTreeMap::new();
    vars.insert("STANCE".to_string(), stance.to_string());
    vars.insert("ORIGINAL-CONFIDENCE".to_string(), mean_confidence.to_string());
    vars.insert("ARGUMENT_FOR".to_string(), pair.supporting.text.clone());
    vars.insert("FEEDBACK-SUPPORTING".to_string(), feedback_text(&pair.supporting.feedback));
    let (arg_against, fb_against) = match &pair.opposing {
        Some(arg) => (arg.text.clone(), feedback_text(&arg.feedback)),
        None => ("(none)".to_string(), "(none)".to_string()),
    };
    vars.insert("ARGUMENT-AGAINST".to_string(), arg_against);
    vars.insert("FEEDBACK-AGAINST".to_string(), fb_against);
    vars.insert("NUMBER_AGAINST".to_string(), pair.n_against.to_string());
    vars.insert("NUMBER-SUPPORTING".to_string(), pair.n_for.to_string());
    vars.insert("CONFIDENCE-RATIONALE".to_string(), String::new());

    let kind = CallKind::Refine {
        stance: stance.to_string(),
        mean_confidence,
        n_for: pair.n_for,
        n_against: pair.n_against,
        opposing_stance: pair.opposing.as_ref().map(|a| a.stance.clone()),
    };
    let prompt = prompts::render_prompt(&kind, agent.spec().strategy, query, &vars)?;
    let completion = agent.complete(&CompletionRequest { query, kind, prompt })?;

    let parsed = prompts::parse_answer_and_confidence(&completion.text);
    let sequence = completion
        .token_probs
        .as_deref()
        .map(crate::agents::sequence_confidence)
        .transpose()?;

    let (answer, confidence, fallback) = match parsed.answer {
        Some(answer) => {
            let confidence = match config.confidence_source {
                ConfidenceSource::VerbalizedFirst => parsed.confidence.or(sequence),
                ConfidenceSource::SequenceOnly => sequence,
            };
            match confidence {
                Some(c) => (answer, c.clamp(0.0, 1.0), None),
                None => (
                    answer,
                    mean_confidence,
                    Some("no usable confidence in completion; kept stage-1 mean".to_string()),
                ),
            }
        }
        None => (
            stance.to_string(),
            mean_confidence,
            Some("unparseable answer; kept assigned stance and stage-1 mean".to_string()),
        ),
    };
    Ok(RefineOutcome {
        output: RefinedOutput {
            agent_id,
            answer,
            confidence,
            rationale: completion.text,
        },
        fallback,
    })
}

/// Re-cluster refined answers and pick the majority stance. Ties break by
/// higher mean refined confidence, then canonical answer ascending. The
/// final confidence is the winners' mean confidence.
pub fn aggregate(
    refined: &[RefinedOutput],
    judge: &mut dyn SemanticJudge,
) -> Result<(String, f64, Vec<(String, usize)>)> {
    if refined.is_empty() {
        return Err(CalibError::EmptyInput("refined outputs"));
    }
    let mut clusters: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, r) in refined.iter().enumerate() {
        let mut placed = false;
        for (canonical, members) in clusters.iter_mut() {
            let same = judge.same_stance(canonical, &r.answer).map_err(|e| {
                CalibError::JudgeFailure {
                    left: canonical.clone(),
                    right: r.answer.clone(),
                    message: e.to_string(),
                }
            })?;
            if same {
                members.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            clusters.push((r.answer.clone(), vec![i]));
        }
    }
    let mut scored: Vec<(String, usize, f64)> = clusters
        .into_iter()
        .map(|(answer, members)| {
            let mean = members.iter().map(|&i| refined[i].confidence).sum::<f64>()
                / members.len() as f64;
            (answer, members.len(), mean)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| b.2.partial_cmp(&a.2).unwrap())
            .then_with(|| a.0.cmp(&b.0))
    });
    let counts = scored.iter().map(|(answer, n, _)| (answer.clone(), *n)).collect();
    let (answer, _, confidence) = scored.into_iter().next().unwrap();
    Ok((answer, confidence, counts))
}

/// Judge and verifier bundle driving a full debate.
pub struct DebateEngine<'a> {
    pub judge: &'a mut dyn SemanticJudge,
    pub verifier: &'a mut dyn FactVerifier,
}

impl DebateEngine<'_> {
    /// Execute stage 1, `config.rounds` rounds of stage 2, and aggregation.
    ///
    /// When stage 1 produces a single stance, stage 2 is skipped and the
    /// result is that stance with its mean confidence (a debate pair needs
    /// an opposing side). Any mid-flight error aborts with the transcript
    /// collected so far.
    pub fn run(
        &mut self,
        query: &Query,
        specialists: &mut [Box<dyn Agent>],
        generalists: &mut [Box<dyn Agent>],
        config: &DebateConfig,
    ) -> std::result::Result<DebateResult, DebateAborted> {
        let mut transcript = Vec::new();
        match self.run_inner(query, specialists, generalists, config, &mut transcript) {
            Ok((final_answer, final_confidence, stage1, refined)) => Ok(DebateResult {
                final_answer,
                final_confidence,
                stage1,
                refined,
                transcript,
            }),
            Err(error) => Err(DebateAborted { error, transcript }),
        }
    }

    #[allow(clippy::type_complexity)]
    fn run_inner(
        &mut self,
        query: &Query,
        specialists: &mut [Box<dyn Agent>],
        generalists: &mut [Box<dyn Agent>],
        config: &DebateConfig,
        transcript: &mut Vec<TranscriptEvent>,
    ) -> Result<(String, f64, Vec<StanceSummary>, Vec<RefinedOutput>)> {
        if specialists.is_empty() {
            return Err(CalibError::InvalidParam("need at least one specialist".into()));
        }
        if config.rounds == 0 {
            return Err(CalibError::InvalidParam("rounds must be >= 1".into()));
        }
        let m = config.num_generalists;
        if m == 0 || generalists.len() < m {
            return Err(CalibError::InvalidParam(format!(
                "config asks for {m} generalists but {} are available",
                generalists.len()
            )));
        }
        query.validate()?;
        let generalists = &mut generalists[..m];
        let root = SplitRng::new(config.seed);

        // Stage 1: independent specialist answers, then clustering.
        let mut responses = Vec::with_capacity(specialists.len());
        for (index, agent) in specialists.iter_mut().enumerate() {
            let response = respond(agent.as_mut(), query)?;
            transcript.push(TranscriptEvent::SpecialistResponded {
                index,
                agent: agent.name().to_string(),
                answer: response.parsed_answer.clone(),
                confidence: chosen_confidence(&response, config.confidence_source),
            });
            responses.push(response);
        }
        let stage1 = cluster_stances(&responses, self.judge, config.confidence_source)?;
        transcript.push(TranscriptEvent::StancesClustered { stances: stage1.clone() });

        if stage1.len() == 1 {
            let lone = &stage1[0];
            transcript.push(TranscriptEvent::StageTwoSkipped {
                reason: "single stance after stage 1".to_string(),
            });
            transcript.push(TranscriptEvent::Aggregated {
                final_answer: lone.answer.clone(),
                final_confidence: lone.mean_confidence,
                counts: vec![(lone.answer.clone(), lone.frequency)],
            });
            return Ok((lone.answer.clone(), lone.mean_confidence, stage1, Vec::new()));
        }

        // Stage 2: one or more rounds of argue / rate / pair / refine.
        let mut summaries = stage1.clone();
        let mut refined: Vec<RefinedOutput> = Vec::new();
        for round in 0..config.rounds {
            let round_rng = root.child("round").child_idx(round as u64);
            let assignments: Vec<String> = if round == 0 {
                assign_stances(&summaries, m, &round_rng.child("assign"))?
            } else {
                // Later rounds carry each generalist's refined stance,
                // canonicalized against the freshly clustered summaries.
                summaries = cluster_refined(&refined, self.judge)?;
                let carried = refined
                    .iter()
                    .map(|r| canonical_stance(&summaries, &r.answer, self.judge))
                    .collect::<Result<Vec<_>>>()?;
                refined.clear();
                carried
            };
            for (j, stance) in assignments.iter().enumerate() {
                transcript.push(TranscriptEvent::StanceAssigned {
                    round,
                    generalist_index: j,
                    stance: stance.clone(),
                });
            }

            // Each generalist argues for its stance.
            let mut arguments = Vec::with_capacity(m);
            for (j, stance) in assignments.iter().enumerate() {
                let args = generate_arguments(generalists[j].as_mut(), query, stance)?;
                for arg in args {
                    transcript.push(TranscriptEvent::ArgumentGenerated {
                        round,
                        generalist_index: j,
                        agent: generalists[j].name().to_string(),
                        stance: arg.stance.clone(),
                        text: arg.text.clone(),
                    });
                    arguments.push((j, arg));
                }
            }

            // Round-robin rating: the next generalist reviews each argument.
            for idx in 0..arguments.len() {
                let (author, mut arg) = (arguments[idx].0, arguments[idx].1.clone());
                let rater_index = (author + 1) % m;
                let (feedback, clamped) = rate_argument(
                    generalists[rater_index].as_mut(),
                    query,
                    &arg,
                    self.verifier,
                )?;
                transcript.push(TranscriptEvent::ArgumentRated {
                    round,
                    author_index: author,
                    rater_index,
                    rater: generalists[rater_index].name().to_string(),
                    feedback: feedback.clone(),
                    clamped,
                });
                arg.feedback = Some(feedback);
                arguments[idx].1 = arg;
            }
            let rated: Vec<Argument> = arguments.iter().map(|(_, a)| a.clone()).collect();
            let authors: Vec<usize> = arguments.iter().map(|(j, _)| *j).collect();

            // Pair and refine.
            for (j, stance) in assignments.iter().enumerate() {
                let mut pair_rng = round_rng.child("pair").child_idx(j as u64);
                let pair = build_debate_pair(stance, &summaries, &rated, &mut pair_rng)?;
                let sup_author = authors
                    .iter()
                    .zip(&rated)
                    .find(|(_, a)| a.text == pair.supporting.text && a.stance == pair.supporting.stance)
                    .map(|(idx, _)| *idx)
                    .unwrap_or(j);
                let opp_author = pair.opposing.as_ref().and_then(|opp| {
                    authors
                        .iter()
                        .zip(&rated)
                        .find(|(_, a)| a.text == opp.text && a.stance == opp.stance)
                        .map(|(idx, _)| *idx)
                });
                transcript.push(TranscriptEvent::PairSampled {
                    round,
                    generalist_index: j,
                    supporting_author: sup_author,
                    opposing_author: opp_author,
                    n_for: pair.n_for,
                    n_against: pair.n_against,
                });

                let mean_conf = summaries
                    .iter()
                    .find(|s| s.answer == *stance)
                    .map(|s| s.mean_confidence)
                    .unwrap_or(0.5);
                let outcome =
                    refine(generalists[j].as_mut(), j, query, stance, mean_conf, &pair, config)?;
                if let Some(reason) = &outcome.fallback {
                    transcript.push(TranscriptEvent::RefineFallback {
                        round,
                        generalist_index: j,
                        reason: reason.clone(),
                    });
                }
                transcript.push(TranscriptEvent::Refined {
                    round,
                    generalist_index: j,
                    agent: generalists[j].name().to_string(),
                    answer: outcome.output.answer.clone(),
                    confidence: outcome.output.confidence,
                });
                refined.push(outcome.output);
            }
        }

        let (final_answer, final_confidence, counts) = aggregate(&refined, self.judge)?;
        transcript.push(TranscriptEvent::Aggregated {
            final_answer: final_answer.clone(),
            final_confidence,
            counts,
        });
        Ok((final_answer, final_confidence, stage1, refined))
    }
}

/// Cluster refined outputs into summaries for a follow-up round.
fn cluster_refined(
    refined: &[RefinedOutput],
    judge: &mut dyn SemanticJudge,
) -> Result<Vec<StanceSummary>> {
    let mut clusters: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, r) in refined.iter().enumerate() {
        let mut placed = false;
        for (canonical, members) in clusters.iter_mut() {
            if judge.same_stance(canonical, &r.answer)? {
                members.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            clusters.push((r.answer.clone(), vec![i]));
        }
    }
    let mut summaries: Vec<StanceSummary> = clusters
        .into_iter()
        .map(|(answer, members)| StanceSummary {
            answer,
            frequency: members.len(),
            mean_confidence: members.iter().map(|&i| refined[i].confidence).sum::<f64>()
                / members.len() as f64,
            member_ids: members,
        })
        .collect();
    summaries.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.answer.cmp(&b.answer)));
    Ok(summaries)
}

fn canonical_stance(
    summaries: &[StanceSummary],
    answer: &str,
    judge: &mut dyn SemanticJudge,
) -> Result<String> {
    for s in summaries {
        if judge.same_stance(&s.answer, answer)? {
            return Ok(s.answer.clone());
        }
    }
    Ok(answer.to_string())
}

/// Run a debate with the default normalizing judge and stub verifier.
pub fn run_debate(
    query: &Query,
    specialists: &mut [Box<dyn Agent>],
    generalists: &mut [Box<dyn Agent>],
    config: &DebateConfig,
) -> std::result::Result<DebateResult, DebateAborted> {
    let mut judge = NormalizingJudge;
    let mut verifier = StubVerifier;
    DebateEngine { judge: &mut judge, verifier: &mut verifier }
        .run(query, specialists, generalists, config)
}
