//! Semantic equivalence judges for merging answers into stances.

use crate::error::Result;
use crate::records::normalize_answer;

/// Decides whether two answer strings denote the same stance. A `&mut`
/// receiver leaves room for stateful backends (e.g. a model-backed judge
/// with a cache).
pub trait SemanticJudge {
    fn same_stance(&mut self, a: &str, b: &str) -> Result<bool>;
}

/// Default judge: deterministic normalization with exact match.
/// Trim, case-fold, strip surrounding punctuation, drop a leading article.
#[derive(Debug, Default, Clone, Copy)]
pub struct NormalizingJudge;

fn canonical(s: &str) -> String {
    let n = normalize_answer(s);
    for article in ["the ", "a ", "an "] {
        if let Some(rest) = n.strip_prefix(article) {
            return rest.to_string();
        }
    }
    n
}

impl SemanticJudge for NormalizingJudge {
    fn same_stance(&mut self, a: &str, b: &str) -> Result<bool> {
        Ok(canonical(a) == canonical(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_trivial_variants() {
        let mut judge = NormalizingJudge;
        assert!(judge.same_stance("Yes", "yes.").unwrap());
        assert!(judge.same_stance("the cardinalfish", "Cardinalfish").unwrap());
        assert!(judge.same_stance("\"black howler\"", "black howler").unwrap());
        assert!(!judge.same_stance("yes", "no").unwrap());
    }
}
