//! Prompt templates and completion parsing shared by all backends.
//!
//! Three templates drive the debate protocol: stance generation with
//! confidence elicitation, argument generation, and final-confidence
//! elicitation. Placeholders use `{NAME}` syntax; rendering substitutes in
//! a single left-to-right pass, so placeholder-like text inside substituted
//! values is never re-expanded.

use std::collections::BTreeMap;

use crate::error::{CalibError, Result};

use super::{CallKind, Query, Strategy};

/// Confidence-elicitation block appended to every stance prompt.
pub const STANCE_ELICITATION: &str = "\
State your answer (as short as possible, in one or a few words), then rate:
the level of ambiguity in the input query (a float from 0 to 1);
the level of complexity of the input query (a float from 0 to 1);
and your level of ability for solving the input query (a float from 0 to 1).
Note that your uncertainty about correctness is affected by input ambiguity, task complexity, and your own knowledge and abilities.
Based on this, give a float (between 0 and 1) indicating your overall confidence that your answer is correct.
Format: Answer: <your short answer>  Confidence: <float in [0,1]>";

pub const ARGUMENT_TEMPLATE: &str = "\
You are participating in a debate on the question: \"{QUERY}\".
Your assigned stance on the question is: \"{STANCE}\".
Generate arguments or evidence (no more than three sentences) explaining why your assigned stance is correct.
If the question is ambiguous, explicitly state the assumptions or interpretations you adopt.
Be concise and exclude anything irrelevant or unhelpful to supporting the stance.";

pub const FINAL_CONFIDENCE_TEMPLATE: &str = "\
Given the question: \"{QUERY}\", your original answer is \"{STANCE}\" with a confidence score of {ORIGINAL-CONFIDENCE}.
An argument from the opposing side is \"{ARGUMENT-AGAINST}\", which received the following rating and feedback from other deliberators: \"{FEEDBACK-AGAINST}\". Note that {NUMBER_AGAINST} people disagreed with you.
An argument supporting your original answer is \"{ARGUMENT_FOR}\", which received the following rating and feedback from other deliberators: \"{FEEDBACK-SUPPORTING}\". Note that {NUMBER-SUPPORTING} people agreed with you.
Provide your final answer to the question (as short as possible). Considering your original belief, group consensus, and these new observations, weighing arguments from multiple sides (including your own), give a brief rationale for whether you would adjust your original confidence score.
Recall your original confidence is {ORIGINAL-CONFIDENCE}. Given your rationale \"{CONFIDENCE-RATIONALE}\", provide your final confidence score (a float in [0,1]) in the exact format: Confidence: <float in [0,1]>.";

/// Prompt used by the chain-of-verification fact check, first call.
pub const PREMISES_TEMPLATE: &str = "\
Consider the following argument: \"{ARGUMENT_FOR}\".
List the underlying premises or assumptions the argument relies on, one per line.";

/// Prompt used by the chain-of-verification fact check, second call.
pub const FACTCHECK_TEMPLATE: &str = "\
Check the following premises against what you know and identify any unfactual statements:
{CONFIDENCE-RATIONALE}
Rate the overall factuality on an integer scale from 1 (mostly unfactual) to 5 (fully factual).
Format: Factual: <integer in [1,5]>  Notes: <one sentence>";

/// Every placeholder the templates may carry.
pub const PLACEHOLDERS: [&str; 10] = [
    "QUERY",
    "STANCE",
    "ORIGINAL-CONFIDENCE",
    "ARGUMENT_FOR",
    "ARGUMENT-AGAINST",
    "FEEDBACK-SUPPORTING",
    "FEEDBACK-AGAINST",
    "NUMBER_AGAINST",
    "NUMBER-SUPPORTING",
    "CONFIDENCE-RATIONALE",
];

fn strategy_preamble(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::CoT => "Think through the question step by step before committing to an answer.",
        Strategy::SelfAsk => {
            "Break the question into simpler follow-up questions, answer each one, then combine them."
        }
        Strategy::SearchStyle => {
            "Recall relevant external facts as if retrieved from a search engine and cite them while reasoning."
        }
        Strategy::GenRead => {
            "First write a short background passage about the question, then read it to derive the answer."
        }
        Strategy::Generalist => "",
    }
}

/// Substitute `{NAME}` placeholders from `vars`. Errors list every key the
/// template needs but `vars` lacks; the output never contains a known
/// placeholder because substitution is single-pass.
pub fn substitute(template: &str, vars: &BTreeMap<String, String>) -> Result<String> {
    let mut missing = Vec::new();
    for name in PLACEHOLDERS {
        if template.contains(&format!("{{{name}}}")) && !vars.contains_key(name) {
            missing.push(name.to_string());
        }
    }
    if !missing.is_empty() {
        return Err(CalibError::MissingPlaceholders(missing));
    }

    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for name in PLACEHOLDERS {
            let token = format!("{{{name}}}");
            if tail.starts_with(&token) {
                out.push_str(&vars[name]);
                rest = &tail[token.len()..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Stage-1 prompt: strategy preamble, the question (with options when
/// present), then the confidence-elicitation block.
pub fn render_stance_prompt(strategy: Strategy, query: &Query) -> String {
    let mut prompt = String::new();
    let preamble = strategy_preamble(strategy);
    if !preamble.is_empty() {
        prompt.push_str(preamble);
        prompt.push_str("\n\n");
    }
    prompt.push_str("Question: ");
    prompt.push_str(&query.question);
    if let Some(options) = &query.options {
        prompt.push_str("\nOptions: ");
        prompt.push_str(&options.join(" | "));
    }
    prompt.push_str("\n\n");
    prompt.push_str(STANCE_ELICITATION);
    prompt
}

pub fn render_argument_prompt(query: &Query, vars: &BTreeMap<String, String>) -> Result<String> {
    let mut all = vars.clone();
    all.entry("QUERY".to_string()).or_insert_with(|| query.question.clone());
    substitute(ARGUMENT_TEMPLATE, &all)
}

pub fn render_final_confidence_prompt(
    query: &Query,
    vars: &BTreeMap<String, String>,
) -> Result<String> {
    let mut all = vars.clone();
    all.entry("QUERY".to_string()).or_insert_with(|| query.question.clone());
    substitute(FINAL_CONFIDENCE_TEMPLATE, &all)
}

/// Engine-facing renderer: build the right template and variables for a
/// call. Refine callers provide the argument/feedback variables themselves.
pub fn render_prompt(
    kind: &CallKind,
    strategy: Strategy,
    query: &Query,
    vars: &BTreeMap<String, String>,
) -> Result<String> {
    match kind {
        CallKind::StanceAnswer => Ok(render_stance_prompt(strategy, query)),
        CallKind::Argue { stance } => {
            let mut all = vars.clone();
            all.insert("STANCE".to_string(), stance.clone());
            render_argument_prompt(query, &all)
        }
        CallKind::Rate { argument, .. } => Ok(format!(
            "Rate the following debate argument for logical consistency, clarity and conciseness, \
             each on an integer scale from 1 (poor) to 5 (excellent).\n\
             Argument: \"{argument}\"\n\
             Format: Logical: <int>  Clarity: <int>  Concise: <int>  Notes: <one sentence>"
        )),
        CallKind::Refine { .. } => render_final_confidence_prompt(query, vars),
        CallKind::Premises { argument } => {
            let mut all = BTreeMap::new();
            all.insert("ARGUMENT_FOR".to_string(), argument.clone());
            substitute(PREMISES_TEMPLATE, &all)
        }
        CallKind::FactCheck { premises } => {
            let mut all = BTreeMap::new();
            all.insert("CONFIDENCE-RATIONALE".to_string(), premises.clone());
            substitute(FACTCHECK_TEMPLATE, &all)
        }
    }
}

/// Answer / confidence extracted from a completion. Absent markers yield
/// absent fields, never defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedCompletion {
    pub answer: Option<String>,
    pub confidence: Option<f64>,
}

/// Extract the text after `Answer:` (up to the confidence marker or line
/// end) and the first real after `Confidence:`, clamped to [0,1].
pub fn parse_answer_and_confidence(raw_text: &str) -> ParsedCompletion {
    let answer = raw_text.find("Answer:").map(|at| {
        let tail = &raw_text[at + "Answer:".len()..];
        let end = tail
            .find("Confidence:")
            .or_else(|| tail.find('\n'))
            .unwrap_or(tail.len());
        tail[..end].trim().to_string()
    });
    let answer = answer.filter(|a| !a.is_empty());

    let confidence = raw_text.find("Confidence:").and_then(|at| {
        let tail = raw_text[at + "Confidence:".len()..].trim_start();
        let end = tail
            .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E'))
            .unwrap_or(tail.len());
        tail[..end].parse::<f64>().ok()
    });
    ParsedCompletion { answer, confidence: confidence.map(|c| c.clamp(0.0, 1.0)) }
}

/// First integer after `label` in `text`, if any.
pub fn parse_labeled_int(text: &str, label: &str) -> Option<i64> {
    let at = text.find(label)?;
    let tail = text[at + label.len()..].trim_start();
    let end = tail
        .find(|c: char| !(c.is_ascii_digit() || c == '-'))
        .unwrap_or(tail.len());
    tail[..end].parse::<i64>().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_query() -> Query {
        Query {
            id: "q1".into(),
            question: "Identify the type of fish in the picture".into(),
            options: None,
            image_ref: None,
            true_answer: None,
        }
    }

    #[test]
    fn stance_prompt_carries_the_elicitation_format_line() {
        let prompt = render_stance_prompt(Strategy::CoT, &plain_query());
        assert!(prompt.contains("Confidence: <float in [0,1]>"));
        assert!(prompt.contains("Identify the type of fish"));
    }

    #[test]
    fn substitution_without_placeholders_is_identity() {
        let vars = BTreeMap::new();
        assert_eq!(substitute("no placeholders here", &vars).unwrap(), "no placeholders here");
    }

    #[test]
    fn missing_keys_are_listed() {
        let vars = BTreeMap::new();
        match substitute(ARGUMENT_TEMPLATE, &vars) {
            Err(CalibError::MissingPlaceholders(keys)) => {
                assert_eq!(keys, vec!["QUERY".to_string(), "STANCE".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn final_confidence_prompt_substitutes_all_ten_placeholders() {
        let mut vars = BTreeMap::new();
        for name in PLACEHOLDERS {
            vars.insert(name.to_string(), format!("<{}>", name.to_lowercase()));
        }
        let out = substitute(FINAL_CONFIDENCE_TEMPLATE, &vars).unwrap();
        for name in PLACEHOLDERS {
            assert!(!out.contains(&format!("{{{name}}}")), "placeholder {name} survived");
        }
        assert!(out.contains("<argument-against>"));
        assert!(out.contains("<number-supporting>"));
    }

    #[test]
    fn substituted_values_are_not_re_expanded() {
        let mut vars = BTreeMap::new();
        vars.insert("QUERY".to_string(), "sneaky {STANCE} text".to_string());
        vars.insert("STANCE".to_string(), "benign".to_string());
        let out = substitute(ARGUMENT_TEMPLATE, &vars).unwrap();
        assert!(out.contains("sneaky {STANCE} text"));
    }

    #[test]
    fn parse_answer_and_confidence_cases() {
        let p = parse_answer_and_confidence("Answer: yes  Confidence: 0.85");
        assert_eq!(p.answer.as_deref(), Some("yes"));
        assert_eq!(p.confidence, Some(0.85));

        let p = parse_answer_and_confidence("Answer: cardinalfish");
        assert_eq!(p.answer.as_deref(), Some("cardinalfish"));
        assert_eq!(p.confidence, None);

        let p = parse_answer_and_confidence("Confidence: 1.7");
        assert_eq!(p.answer, None);
        assert_eq!(p.confidence, Some(1.0));

        let p = parse_answer_and_confidence("nothing structured");
        assert_eq!(p.answer, None);
        assert_eq!(p.confidence, None);
    }

    #[test]
    fn parse_round_trips_rendered_completions() {
        let text = format!("Answer: black howler  Confidence: {}", 0.9);
        let p = parse_answer_and_confidence(&text);
        assert_eq!(p.answer.as_deref(), Some("black howler"));
        assert_eq!(p.confidence, Some(0.9));
    }

    #[test]
    fn labeled_int_parsing() {
        let text = "Logical: 4  Clarity: 5  Concise: 3  Notes: fine";
        assert_eq!(parse_labeled_int(text, "Logical:"), Some(4));
        assert_eq!(parse_labeled_int(text, "Clarity:"), Some(5));
        assert_eq!(parse_labeled_int(text, "Concise:"), Some(3));
        assert_eq!(parse_labeled_int(text, "Factual:"), None);
    }
}
