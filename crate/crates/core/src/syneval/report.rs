use std::fmt::Write as _;

use super::{Category, EvalConstruction, Outcome, TestCase};
use crate::negex::{verb_lemma, Number};

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionResult {
    pub construction: EvalConstruction,
    pub n: usize,
    pub correct: usize,
    pub ties: usize,
    /// Cases with at least one out-of-vocabulary word.
    pub unknown: usize,
}

impl ConstructionResult {
    pub fn accuracy(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.correct as f64 / self.n as f64
        }
    }
}

/// Per-construction counts in report row order (constructions absent from
/// the suite are omitted).
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub rows: Vec<ConstructionResult>,
}

impl SuiteReport {
    pub fn from_outcomes(suite: &[TestCase], outcomes: &[Outcome], unknown: &[bool]) -> Self {
        assert_eq!(suite.len(), outcomes.len());
        let mut rows = Vec::new();
        for c in EvalConstruction::ALL {
            let mut r = ConstructionResult {
                construction: c,
                n: 0,
                correct: 0,
                ties: 0,
                unknown: 0,
            };
            for ((case, o), unk) in suite.iter().zip(outcomes).zip(unknown) {
                if case.construction != c {
                    continue;
                }
                r.n += 1;
                r.correct += (*o == Outcome::Correct) as usize;
                r.ties += (*o == Outcome::Tie) as usize;
                r.unknown += *unk as usize;
            }
            if r.n > 0 {
                rows.push(r);
            }
        }
        SuiteReport { rows }
    }

    pub fn get(&self, c: EvalConstruction) -> Option<&ConstructionResult> {
        self.rows.iter().find(|r| r.construction == c)
    }

    pub fn accuracy(&self, c: EvalConstruction) -> Option<f64> {
        self.get(c).map(ConstructionResult::accuracy)
    }

    /// Unweighted mean of the member constructions' accuracies.
    pub fn macro_average(&self, cat: Category) -> Option<f64> {
        let accs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.construction.category() == cat)
            .map(ConstructionResult::accuracy)
            .collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("construction,n,correct,ties,accuracy\n");
        for r in &self.rows {
            writeln!(s, "{},{},{},{},{:.6}", r.construction, r.n, r.correct, r.ties, r.accuracy()).unwrap();
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| | construction | n | accuracy |\n|---|---|---|---|\n");
        let mut last = None;
        for r in &self.rows {
            let cat = r.construction.category();
            let head = if last != Some(cat) { cat.title() } else { "" };
            last = Some(cat);
            writeln!(
                s,
                "| {head} | {} | {} | {:.1} |",
                r.construction.label(),
                r.n,
                100.0 * r.accuracy()
            )
            .unwrap();
        }
        s
    }
}

/// Accuracy over the cases selected by `keep`; `None` when nothing is selected.
pub fn subset_accuracy(
    suite: &[TestCase],
    outcomes: &[Outcome],
    keep: impl Fn(&TestCase) -> bool,
) -> Option<f64> {
    let (mut n, mut ok) = (0usize, 0usize);
    for (c, o) in suite.iter().zip(outcomes) {
        if keep(c) {
            n += 1;
            ok += (*o == Outcome::Correct) as usize;
        }
    }
    (n > 0).then(|| ok as f64 / n as f64)
}

/// Accuracy split by whether the critical verb is a form of `lemma`.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaBreakdown {
    pub all: Option<f64>,
    pub lemma: Option<f64>,
    pub other: Option<f64>,
}

fn lemma_of(word: &str) -> Option<String> {
    verb_lemma(word, Number::Singular)
        .or_else(|_| verb_lemma(word, Number::Plural))
        .ok()
}

pub fn lemma_breakdown(
    suite: &[TestCase],
    outcomes: &[Outcome],
    construction: EvalConstruction,
    lemma: &str,
) -> LemmaBreakdown {
    let is = |c: &TestCase| lemma_of(c.critical_word()).as_deref() == Some(lemma);
    LemmaBreakdown {
        all: subset_accuracy(suite, outcomes, |c| c.construction == construction),
        lemma: subset_accuracy(suite, outcomes, |c| c.construction == construction && is(c)),
        other: subset_accuracy(suite, outcomes, |c| c.construction == construction && !is(c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syneval::EvalConstruction as E;

    fn case(g: &str, u: &str, c: E) -> TestCase {
        let w = |s: &str| s.split(' ').map(str::to_string).collect();
        TestCase::new(w(g), w(u), c).unwrap()
    }

    #[test]
    fn counting_and_macro_average() {
        let suite = vec![
            case("a x", "a y", E::SimpleAgreement),
            case("a x", "a y", E::SimpleAgreement),
            case("a x", "a y", E::SimpleAgreement),
            case("a x", "a y", E::SimpleAgreement),
            case("b x", "b y", E::AcrossPp),
            case("c x", "c y", E::ReflexiveSimple),
        ];
        use Outcome::*;
        let out = [Correct, Correct, Tie, Correct, Incorrect, Correct];
        let r = SuiteReport::from_outcomes(&suite, &out, &[false; 6]);
        assert_eq!(r.accuracy(E::SimpleAgreement), Some(0.75));
        assert_eq!(r.get(E::SimpleAgreement).unwrap().ties, 1);
        assert_eq!(r.macro_average(Category::Agreement), Some(0.375));
        assert_eq!(r.macro_average(Category::Reflexive), Some(1.0));
        assert_eq!(r.macro_average(Category::Npi), None);
        assert!(r.to_csv().starts_with("construction,n,correct,ties,accuracy\nsimple-agreement,4,3,1,0.750000\n"));
        assert!(r.to_markdown().contains("| Subject-verb agreement | Simple | 4 | 75.0 |"));
    }

    #[test]
    fn like_breakdown() {
        let suite = vec![
            case("the author laughs and likes x", "the author laughs and like x", E::LongVpCoord),
            case("the author laughs and knows x", "the author laughs and know x", E::LongVpCoord),
        ];
        let b = lemma_breakdown(&suite, &[Outcome::Incorrect, Outcome::Correct], E::LongVpCoord, "like");
        assert_eq!((b.all, b.lemma, b.other), (Some(0.5), Some(0.0), Some(1.0)));
    }
}
