use std::collections::HashSet;

use super::{AnnotatedSentence, Construction};

/// Lemmas of the target verbs used by the evaluation templates (`is` appears as its lemma `be`).
pub const TOKEN_ABLATION_LEMMAS: [&str; 13] = [
    "swim", "smile", "laugh", "enjoy", "hate", "bring", "interest", "like", "write", "admire",
    "love", "know", "be",
];

/// Drops every target whose lemma is in `excluded`; tokens are left untouched.
pub fn filter_targets_by_lemma(
    corpus: &[AnnotatedSentence],
    excluded: &HashSet<String>,
) -> Vec<AnnotatedSentence> {
    corpus
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.targets.retain(|t| !excluded.contains(&t.lemma));
            s
        })
        .collect()
}

/// Drops all targets of sentences tagged `excluded`.
pub fn filter_targets_by_construction(
    corpus: &[AnnotatedSentence],
    excluded: Construction,
) -> Vec<AnnotatedSentence> {
    corpus
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if s.construction == excluded {
                s.targets.clear();
            }
            s
        })
        .collect()
}
