//! Minimal-pair test suites and likelihood-comparison scoring.

mod report;
mod suite;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::LanguageModel;
use crate::vocab::UNK_ID;

pub use report::{lemma_breakdown, subset_accuracy, ConstructionResult, LemmaBreakdown, SuiteReport};
pub use suite::{generate_suite, read_suite, write_suite};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    Agreement,
    Reflexive,
    Npi,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Agreement, Category::Reflexive, Category::Npi];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Agreement => "agreement",
            Category::Reflexive => "reflexive",
            Category::Npi => "npi",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Category::Agreement => "Subject-verb agreement",
            Category::Reflexive => "Reflexive anaphora",
            Category::Npi => "Negative polarity items",
        }
    }
}

/// The fifteen evaluated constructions, in report row order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvalConstruction {
    SimpleAgreement,
    SentComplement,
    ShortVpCoord,
    LongVpCoord,
    AcrossPp,
    AcrossSrc,
    AcrossOrc,
    AcrossOrcNoThat,
    InOrc,
    InOrcNoThat,
    ReflexiveSimple,
    ReflexiveComplement,
    ReflexiveAcrossOrc,
    NpiSimple,
    NpiAcrossOrc,
}

use EvalConstruction as E;

impl EvalConstruction {
    pub const ALL: [EvalConstruction; 15] = [
        E::SimpleAgreement,
        E::SentComplement,
        E::ShortVpCoord,
        E::LongVpCoord,
        E::AcrossPp,
        E::AcrossSrc,
        E::AcrossOrc,
        E::AcrossOrcNoThat,
        E::InOrc,
        E::InOrcNoThat,
        E::ReflexiveSimple,
        E::ReflexiveComplement,
        E::ReflexiveAcrossOrc,
        E::NpiSimple,
        E::NpiAcrossOrc,
    ];

    /// Long-distance agreement constructions used by the ablation reports.
    pub const NON_LOCAL: [EvalConstruction; 4] =
        [E::LongVpCoord, E::AcrossPp, E::AcrossSrc, E::AcrossOrc];

    pub fn as_str(self) -> &'static str {
        match self {
            E::SimpleAgreement => "simple-agreement",
            E::SentComplement => "sent-complement",
            E::ShortVpCoord => "short-vp-coord",
            E::LongVpCoord => "long-vp-coord",
            E::AcrossPp => "across-pp",
            E::AcrossSrc => "across-src",
            E::AcrossOrc => "across-orc",
            E::AcrossOrcNoThat => "across-orc-no-that",
            E::InOrc => "in-orc",
            E::InOrcNoThat => "in-orc-no-that",
            E::ReflexiveSimple => "reflexive-simple",
            E::ReflexiveComplement => "reflexive-complement",
            E::ReflexiveAcrossOrc => "reflexive-across-orc",
            E::NpiSimple => "npi-simple",
            E::NpiAcrossOrc => "npi-across-orc",
        }
    }

    /// Row label for markdown tables.
    pub fn label(self) -> &'static str {
        match self {
            E::SimpleAgreement | E::ReflexiveSimple | E::NpiSimple => "Simple",
            E::SentComplement | E::ReflexiveComplement => "In a sentential complement",
            E::ShortVpCoord => "Short VP coordination",
            E::LongVpCoord => "Long VP coordination",
            E::AcrossPp => "Across a prepositional phrase",
            E::AcrossSrc => "Across a subject relative clause",
            E::AcrossOrc | E::ReflexiveAcrossOrc | E::NpiAcrossOrc => {
                "Across an object relative clause"
            }
            E::AcrossOrcNoThat => "Across an object relative (no that)",
            E::InOrc => "In an object relative clause",
            E::InOrcNoThat => "In an object relative clause (no that)",
        }
    }

    pub fn category(self) -> Category {
        match self {
            E::ReflexiveSimple | E::ReflexiveComplement | E::ReflexiveAcrossOrc => {
                Category::Reflexive
            }
            E::NpiSimple | E::NpiAcrossOrc => Category::Npi,
            _ => Category::Agreement,
        }
    }

    /// Whether the construction's head noun may be inanimate (the "animate only"
    /// subset is meaningful for these).
    pub fn has_animacy_subset(self) -> bool {
        matches!(self, E::AcrossOrc | E::AcrossOrcNoThat)
    }
}

impl fmt::Display for EvalConstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalConstruction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        E::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownConstruction(s.to_string()))
    }
}

/// A minimal pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub grammatical: Vec<String>,
    pub ungrammatical: Vec<String>,
    pub construction: EvalConstruction,
    pub differing_position: usize,
}

impl TestCase {
    pub fn new(
        grammatical: Vec<String>,
        ungrammatical: Vec<String>,
        construction: EvalConstruction,
    ) -> Result<Self> {
        let diffs: Vec<usize> = (0..grammatical.len())
            .filter(|&i| ungrammatical.get(i) != Some(&grammatical[i]))
            .collect();
        if grammatical.len() != ungrammatical.len() || diffs.len() != 1 {
            return Err(Error::Config(format!(
                "`{}` / `{}` is not a minimal pair",
                grammatical.join(" "),
                ungrammatical.join(" ")
            )));
        }
        Ok(TestCase {
            grammatical,
            ungrammatical,
            construction,
            differing_position: diffs[0],
        })
    }

    /// The grammatical word at the critical position.
    pub fn critical_word(&self) -> &str {
        &self.grammatical[self.differing_position]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Correct,
    Incorrect,
    Tie,
}

/// Log-probabilities of (grammatical, ungrammatical), scored as one batch of two.
pub fn pair_logprobs(model: &LanguageModel, case: &TestCase) -> Result<(f64, f64)> {
    let g = model.encode(&case.grammatical);
    let u = model.encode(&case.ungrammatical);
    let lp = model.sentence_logprobs(&[&g, &u])?;
    Ok((lp[0], lp[1]))
}

pub fn compare_pair(model: &LanguageModel, case: &TestCase) -> Result<Outcome> {
    let (g, u) = pair_logprobs(model, case)?;
    Ok(if g > u {
        Outcome::Correct
    } else if g == u {
        Outcome::Tie
    } else {
        Outcome::Incorrect
    })
}

/// True iff the grammatical sentence is strictly more probable; ties are false.
pub fn score_pair(model: &LanguageModel, case: &TestCase) -> Result<bool> {
    Ok(compare_pair(model, case)? == Outcome::Correct)
}

/// Whether either sentence contains a word outside the model's vocabulary.
pub fn has_unknown(model: &LanguageModel, case: &TestCase) -> bool {
    model
        .encode(&case.grammatical)
        .into_iter()
        .chain(model.encode(&case.ungrammatical))
        .any(|id| id == UNK_ID)
}

/// Outcome of every case, in suite order. Cases are scored independently, so
/// the result does not depend on how the suite is ordered or sharded.
pub fn score_suite(model: &LanguageModel, suite: &[TestCase], threads: usize) -> Result<Vec<Outcome>> {
    let threads = threads.max(1).min(suite.len().max(1));
    if threads == 1 {
        return suite.iter().map(|c| compare_pair(model, c)).collect();
    }
    let chunk = suite.len().div_ceil(threads);
    let parts: Vec<Result<Vec<Outcome>>> = std::thread::scope(|s| {
        let handles: Vec<_> = suite
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|c| compare_pair(model, c)).collect()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(suite.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub fn evaluate(model: &LanguageModel, suite: &[TestCase]) -> Result<SuiteReport> {
    evaluate_with_threads(model, suite, 1)
}

pub fn evaluate_with_threads(
    model: &LanguageModel,
    suite: &[TestCase],
    threads: usize,
) -> Result<SuiteReport> {
    if suite.is_empty() {
        return Err(Error::Config("empty test suite".into()));
    }
    let outcomes = score_suite(model, suite, threads)?;
    let unknown: Vec<bool> = suite.iter().map(|c| has_unknown(model, c)).collect();
    Ok(SuiteReport::from_outcomes(suite, &outcomes, &unknown))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn tags_round_trip() {
        for c in E::ALL {
            assert_eq!(c.as_str().parse::<E>().unwrap(), c);
        }
        assert!(matches!("across-xyz".parse::<E>(), Err(Error::UnknownConstruction(_))));
    }

    #[test]
    fn minimal_pair_validation() {
        let c = TestCase::new(w("the senators smile"), w("the senators smiles"), E::SimpleAgreement).unwrap();
        assert_eq!(c.differing_position, 2);
        assert_eq!(c.critical_word(), "smile");
        assert!(TestCase::new(w("a b"), w("a b"), E::SimpleAgreement).is_err());
        assert!(TestCase::new(w("a b"), w("c d"), E::SimpleAgreement).is_err());
        assert!(TestCase::new(w("a b"), w("a b c"), E::SimpleAgreement).is_err());
    }
}
