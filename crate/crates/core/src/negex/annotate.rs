use super::inflect::{flip_reflexive, flip_verb_number, reflexive_number, verb_lemma};
use super::{AnnotatedSentence, Construction, Number, TargetAnnotation, TargetKind};
use crate::error::{Error, Result};

/// Result of [`annotate_targets`]: the sentence plus the number of tagged
/// tokens that could not be inflected and were skipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub sentence: AnnotatedSentence,
    pub warnings: usize,
}

/// Marks present-tense verbs (Penn tags `VBZ`/`VBP`) and reflexive pronouns
/// (`PRP` on a reflexive form) as targets with their negative tokens.
pub fn annotate_targets<S: AsRef<str>, T: AsRef<str>>(
    tokens: &[S],
    tags: &[T],
    construction: Construction,
) -> Result<Annotation> {
    if tokens.len() != tags.len() {
        return Err(Error::Shape(format!(
            "{} tokens but {} tags",
            tokens.len(),
            tags.len()
        )));
    }
    let mut sentence = AnnotatedSentence::new(
        tokens.iter().map(|t| t.as_ref().to_string()).collect(),
        construction,
    );
    let mut warnings = 0;
    for (position, (tok, tag)) in tokens.iter().zip(tags).enumerate() {
        let tok = tok.as_ref();
        let target = match tag.as_ref() {
            "VBZ" | "VBP" => {
                let number = if tag.as_ref() == "VBZ" {
                    Number::Singular
                } else {
                    Number::Plural
                };
                match flip_verb_number(tok, number) {
                    Ok(neg) => Some(TargetAnnotation {
                        position,
                        kind: TargetKind::PresentVerb,
                        number,
                        lemma: verb_lemma(tok, number)?,
                        negatives: vec![neg],
                    }),
                    Err(Error::NotInflectable(_)) => {
                        warnings += 1;
                        None
                    }
                    Err(e) => return Err(e),
                }
            }
            "PRP" => reflexive_number(tok).map(|number| TargetAnnotation {
                position,
                kind: TargetKind::Reflexive,
                number,
                lemma: tok.to_string(),
                negatives: flip_reflexive(tok).expect("reflexive form"),
            }),
            _ => None,
        };
        sentence.targets.extend(target);
    }
    Ok(Annotation { sentence, warnings })
}

/// One ungrammatical copy of the sentence per (target, negative) pair, in
/// position order and then negative-list order.
pub fn negative_sentences(s: &AnnotatedSentence) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for t in &s.targets {
        for neg in &t.negatives {
            let mut tokens = s.tokens.clone();
            tokens[t.position] = neg.clone();
            out.push(tokens);
        }
    }
    out
}
