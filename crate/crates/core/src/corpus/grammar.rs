//! Recursive-descent agreement checker for the template language.
//!
//! It is written independently of the generator: it only knows word classes
//! from the lexicon and checks subject-verb agreement, reflexive agreement and
//! `ever` licensing by a `no` subject.

use std::collections::{HashMap, HashSet};

use super::lexicon::{Lexicon, DETERMINERS};
use crate::negex::{reflexive_number, Number};

pub struct AgreementChecker {
    verbs: HashMap<String, Number>,
    nouns: HashMap<String, Number>,
    /// Multi-word VP tails and preposition phrases, longest first.
    tails: Vec<Vec<String>>,
    preps: Vec<Vec<String>>,
    adjectives: HashSet<String>,
    comp: HashSet<String>,
    refl: HashSet<String>,
}

#[derive(Clone, Copy)]
struct Subject {
    number: Number,
    licenses_npi: bool,
}

struct Parser<'a> {
    c: &'a AgreementChecker,
    toks: &'a [&'a str],
    pos: usize,
}

type Check<T = ()> = std::result::Result<T, String>;

impl AgreementChecker {
    pub fn new(lex: &Lexicon) -> Self {
        let mut nouns = HashMap::new();
        for n in &lex.nouns {
            nouns.insert(n.singular.clone(), Number::Singular);
            nouns.insert(n.plural.clone(), Number::Plural);
        }
        let mut tails: Vec<Vec<String>> = lex
            .long_vps
            .iter()
            .chain(&lex.inanimate_vps)
            .map(|vp| vp.tail().to_vec())
            .filter(|t| !t.is_empty())
            .collect();
        tails.sort_by_key(|t| std::cmp::Reverse(t.len()));
        let mut preps: Vec<Vec<String>> = lex.prepositions.iter().map(|p| p.tokens.clone()).collect();
        preps.sort_by_key(|t| std::cmp::Reverse(t.len()));
        AgreementChecker {
            verbs: lex.present_verbs(),
            nouns,
            tails,
            preps,
            adjectives: lex.adjectives.iter().map(|a| a.tokens.join(" ")).collect(),
            comp: lex.complement_verbs.iter().cloned().collect(),
            refl: lex.reflexive_verbs.iter().cloned().collect(),
        }
    }

    /// `Ok` when the token sequence parses and every agreement holds,
    /// otherwise the first violation found.
    pub fn check(&self, tokens: &[impl AsRef<str>]) -> Check {
        let toks: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
        let mut p = Parser {
            c: self,
            toks: &toks,
            pos: 0,
        };
        p.clause()?;
        match p.peek() {
            None => Ok(()),
            Some(w) => Err(format!("unexpected `{w}` at {}", p.pos)),
        }
    }

    pub fn is_grammatical(&self, tokens: &[impl AsRef<str>]) -> bool {
        self.check(tokens).is_ok()
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self, what: &str) -> Check<&'a str> {
        let w = self
            .peek()
            .ok_or_else(|| format!("expected {what} at end of sentence"))?;
        self.pos += 1;
        Ok(w)
    }

    fn expect(&mut self, word: &str) -> Check {
        let w = self.next(word)?;
        if w == word {
            Ok(())
        } else {
            Err(format!("expected `{word}`, found `{w}`"))
        }
    }

    fn at_det(&self) -> bool {
        self.peek().is_some_and(|w| DETERMINERS.contains(&w))
    }

    fn matches_phrase(&self, phrases: &[Vec<String>]) -> Option<usize> {
        let rest = &self.toks[self.pos..];
        phrases
            .iter()
            .find(|p| rest.len() >= p.len() && rest.iter().zip(p.iter()).all(|(a, b)| a == b))
            .map(Vec::len)
    }

    /// `det noun`; returns the noun's number and the determiner.
    fn bare_np(&mut self) -> Check<(Number, &'a str)> {
        let det = self.next("determiner")?;
        if !DETERMINERS.contains(&det) {
            return Err(format!("expected determiner, found `{det}`"));
        }
        let noun = self.next("noun")?;
        let n = *self
            .c
            .nouns
            .get(noun)
            .ok_or_else(|| format!("expected noun, found `{noun}`"))?;
        Ok((n, det))
    }

    /// Subject NP with an optional PP or relative clause.
    fn subject(&mut self) -> Check<Subject> {
        let (number, det) = self.bare_np()?;
        let subject = Subject {
            number,
            licenses_npi: det == "no",
        };
        if let Some(len) = self.matches_phrase(&self.c.preps) {
            self.pos += len;
            self.bare_np()?;
        } else if self.peek() == Some("that") {
            self.pos += 1;
            if self.at_det() {
                self.object_rc()?;
            } else {
                // Subject RC: the head noun is the relative-clause subject.
                let rc_subject = Subject {
                    number,
                    licenses_npi: false,
                };
                self.vp(rc_subject)?;
            }
        } else if self.at_det() {
            self.object_rc()?;
        }
        Ok(subject)
    }

    /// `det noun verb` with the object gap; the verb agrees with the inner noun.
    fn object_rc(&mut self) -> Check {
        let (n, _) = self.bare_np()?;
        let v = self.next("relative clause verb")?;
        self.agree_present(v, n)
    }

    fn agree_present(&self, verb: &str, number: Number) -> Check {
        match self.c.verbs.get(verb) {
            Some(&n) if n == number => Ok(()),
            Some(_) => Err(format!("`{verb}` does not agree with a {} subject", number.as_str())),
            None => Err(format!("expected present-tense verb, found `{verb}`")),
        }
    }

    fn clause(&mut self) -> Check {
        let subject = self.subject()?;
        self.vp(subject)?;
        while self.peek() == Some("and") {
            self.pos += 1;
            self.vp(subject)?;
        }
        Ok(())
    }

    fn adjective(&mut self) -> Check {
        let a = self.next("adjective")?;
        if self.c.adjectives.contains(a) {
            Ok(())
        } else {
            Err(format!("expected adjective, found `{a}`"))
        }
    }

    fn vp(&mut self, subject: Subject) -> Check {
        let v = self.next("verb")?;
        if self.c.refl.contains(v) {
            let r = self.next("reflexive")?;
            return match reflexive_number(r) {
                Some(n) if n == subject.number => Ok(()),
                Some(_) => Err(format!("`{r}` does not agree with its antecedent")),
                None => Err(format!("expected reflexive, found `{r}`")),
            };
        }
        if self.c.comp.contains(v) {
            if self.peek() == Some("that") {
                self.pos += 1;
            }
            return self.clause();
        }
        self.agree_present(v, subject.number)?;
        if matches!(v, "has" | "have") {
            if self.peek() == Some("ever") {
                if !subject.licenses_npi {
                    return Err("`ever` is not licensed".into());
                }
                self.pos += 1;
            }
            self.expect("been")?;
            return self.adjective();
        }
        if let Some(len) = self.matches_phrase(&self.c.tails) {
            self.pos += len;
            return Ok(());
        }
        if matches!(v, "is" | "are") {
            return self.adjective();
        }
        if self.at_det() {
            self.bare_np()?;
        }
        Ok(())
    }
}
