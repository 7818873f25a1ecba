//! Negative tokens and negative sentences derived from annotated training text.
//!
//! Targets are present-tense verbs (number flipped) and reflexive pronouns
//! (`themselves` ↔ `himself`/`herself`). NPIs never get negatives.

mod annotate;
mod filters;
mod format;
mod inflect;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use annotate::{annotate_targets, negative_sentences, Annotation};
pub use filters::{
    filter_targets_by_construction, filter_targets_by_lemma, TOKEN_ABLATION_LEMMAS,
};
pub use format::{
    format_sentence, parse_sentence, read_corpus, read_plain_text, write_corpus,
};
pub use inflect::{
    flip_reflexive, flip_verb_number, irregular_table, reflexive_number, verb_lemma, IrregularVerb,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Number {
    Singular,
    Plural,
}

impl Number {
    pub fn flip(self) -> Self {
        match self {
            Number::Singular => Number::Plural,
            Number::Plural => Number::Singular,
        }
    }

    /// Class index used by the binary number classifier.
    pub fn index(self) -> usize {
        match self {
            Number::Singular => 0,
            Number::Plural => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Number::Singular => "singular",
            Number::Plural => "plural",
        }
    }
}

impl FromStr for Number {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singular" => Ok(Number::Singular),
            "plural" => Ok(Number::Plural),
            _ => Err(Error::Config(format!("unknown number `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetKind {
    PresentVerb,
    Reflexive,
}

impl TargetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::PresentVerb => "present-verb",
            TargetKind::Reflexive => "reflexive",
        }
    }
}

impl FromStr for TargetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "present-verb" => Ok(TargetKind::PresentVerb),
            "reflexive" => Ok(TargetKind::Reflexive),
            _ => Err(Error::Config(format!("unknown target kind `{s}`"))),
        }
    }
}

/// Construction tag carried by every training sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Construction {
    None,
    Simple,
    InComplement,
    ShortVp,
    LongVp,
    AcrossPp,
    AcrossSrc,
    AcrossOrc,
    AcrossOrcNoThat,
    Reflexive,
    Npi,
}

impl Construction {
    pub const ALL: [Construction; 11] = [
        Construction::None,
        Construction::Simple,
        Construction::InComplement,
        Construction::ShortVp,
        Construction::LongVp,
        Construction::AcrossPp,
        Construction::AcrossSrc,
        Construction::AcrossOrc,
        Construction::AcrossOrcNoThat,
        Construction::Reflexive,
        Construction::Npi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Construction::None => "none",
            Construction::Simple => "simple",
            Construction::InComplement => "in-complement",
            Construction::ShortVp => "short-vp",
            Construction::LongVp => "long-vp",
            Construction::AcrossPp => "across-pp",
            Construction::AcrossSrc => "across-src",
            Construction::AcrossOrc => "across-orc",
            Construction::AcrossOrcNoThat => "across-orc-no-that",
            Construction::Reflexive => "reflexive",
            Construction::Npi => "npi",
        }
    }

    pub fn is_object_rc(self) -> bool {
        matches!(self, Construction::AcrossOrc | Construction::AcrossOrcNoThat)
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Construction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Construction::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownConstruction(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetAnnotation {
    pub position: usize,
    pub kind: TargetKind,
    pub number: Number,
    pub lemma: String,
    pub negatives: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    pub targets: Vec<TargetAnnotation>,
    pub construction: Construction,
}

impl AnnotatedSentence {
    pub fn new(tokens: Vec<String>, construction: Construction) -> Self {
        AnnotatedSentence {
            tokens,
            targets: Vec::new(),
            construction,
        }
    }

    /// Checks positions (strictly increasing, in bounds) and negatives
    /// (non-empty, never the original token).
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<usize> = None;
        for t in &self.targets {
            if t.position >= self.tokens.len() || prev.is_some_and(|p| p >= t.position) {
                return Err(Error::Config(format!(
                    "bad target position {} in `{}`",
                    t.position,
                    self.tokens.join(" ")
                )));
            }
            prev = Some(t.position);
            if t.negatives.is_empty() || t.negatives.contains(&self.tokens[t.position]) {
                return Err(Error::Config(format!(
                    "bad negatives {:?} for `{}`",
                    t.negatives, self.tokens[t.position]
                )));
            }
        }
        Ok(())
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_flip_is_an_involution() {
        for n in [Number::Singular, Number::Plural] {
            assert_ne!(n.flip(), n);
            assert_eq!(n.flip().flip(), n);
        }
    }

    #[test]
    fn construction_tags_round_trip() {
        for c in Construction::ALL {
            assert_eq!(c.as_str().parse::<Construction>().unwrap(), c);
        }
        assert!(matches!(
            "across-xyz".parse::<Construction>(),
            Err(Error::UnknownConstruction(_))
        ));
    }
}
