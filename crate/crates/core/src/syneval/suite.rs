use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EvalConstruction as E, TestCase};
use crate::corpus::{Lexicon, Noun, Split, VerbPhrase};
use crate::error::{Error, Result};
use crate::negex::{flip_reflexive, flip_verb_number, Number};

struct Pieces<'a> {
    lex: &'a Lexicon,
    animate: Vec<&'a Noun>,
    inanimate: Vec<&'a Noun>,
    verbs: HashMap<String, Number>,
}

/// Sentence under construction plus the index of its critical word.
#[derive(Default)]
struct Pair {
    tokens: Vec<String>,
    critical: usize,
}

impl Pair {
    fn push(&mut self, w: &str) {
        self.tokens.push(w.to_string());
    }

    fn extend(&mut self, ws: &[String]) {
        self.tokens.extend(ws.iter().cloned());
    }

    fn mark(&mut self) {
        self.critical = self.tokens.len() - 1;
    }

    fn np(&mut self, det: &str, noun: &Noun, n: Number) {
        self.push(det);
        self.push(noun.form(n));
    }

    fn verb(&mut self, vp: &VerbPhrase, n: Number, critical: bool) {
        let form = vp.form(n);
        self.push(&form[0]);
        if critical {
            self.mark();
        }
        self.extend(&form[1..]);
    }
}

fn other_number<R: Rng + ?Sized>(rng: &mut R) -> Number {
    if rng.random_bool(0.5) {
        Number::Singular
    } else {
        Number::Plural
    }
}

impl<'a> Pieces<'a> {
    fn pick<'v, T, R: Rng + ?Sized>(v: &'v [T], rng: &mut R) -> &'v T {
        v.choose(rng).expect("validated lexicon")
    }

    fn animate<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a Noun {
        Self::pick::<&Noun, R>(&self.animate, rng)
    }

    /// Two different animate nouns.
    fn two_animate<R: Rng + ?Sized>(&self, rng: &mut R) -> (&'a Noun, &'a Noun) {
        let a = self.animate(rng);
        loop {
            let b = self.animate(rng);
            if b != a || self.animate.len() == 1 {
                return (a, b);
            }
        }
    }

    fn reflexive<R: Rng + ?Sized>(n: Number, rng: &mut R) -> &'static str {
        match n {
            Number::Plural => "themselves",
            Number::Singular => ["himself", "herself"].choose(rng).expect("non-empty"),
        }
    }

    /// Grammatical sentence for case `i` and the index of its critical word.
    fn build<R: Rng + ?Sized>(&self, c: E, i: usize, rng: &mut R) -> Pair {
        let n = if i.is_multiple_of(2) { Number::Singular } else { Number::Plural };
        let lex = self.lex;
        let mut p = Pair::default();
        match c {
            E::SimpleAgreement => {
                p.np("the", self.animate(rng), n);
                p.verb(Self::pick(&lex.intransitive, rng), n, true);
            }
            E::SentComplement => {
                let (a, b) = self.two_animate(rng);
                p.np("the", a, other_number(rng));
                p.push(Self::pick(&lex.complement_verbs, rng));
                p.np("the", b, n);
                p.verb(Self::pick(&lex.intransitive, rng), n, true);
            }
            E::ShortVpCoord => {
                p.np("the", self.animate(rng), n);
                let v1 = Self::pick(&lex.intransitive, rng);
                let v2 = loop {
                    let v = Self::pick(&lex.intransitive, rng);
                    if v != v1 || lex.intransitive.len() == 1 {
                        break v;
                    }
                };
                p.verb(v1, n, false);
                p.push("and");
                p.verb(v2, n, true);
            }
            E::LongVpCoord => {
                p.np("the", self.animate(rng), n);
                let v1 = Self::pick(&lex.long_vps, rng);
                let v2 = loop {
                    let v = Self::pick(&lex.long_vps, rng);
                    if v != v1 {
                        break v;
                    }
                };
                p.verb(v1, n, false);
                p.push("and");
                p.verb(v2, n, true);
            }
            E::AcrossPp => {
                let (a, b) = self.two_animate(rng);
                p.np("the", a, n);
                p.extend(&Self::pick(&lex.prepositions, rng).tokens);
                p.np("the", b, other_number(rng));
                p.verb(Self::pick(&lex.intransitive, rng), n, true);
            }
            E::AcrossSrc => {
                let (a, b) = self.two_animate(rng);
                p.np("the", a, n);
                p.push("that");
                p.verb(Self::pick(&lex.transitive, rng), n, false);
                p.np("the", b, other_number(rng));
                p.verb(Self::pick(&lex.intransitive, rng), n, true);
            }
            E::AcrossOrc | E::AcrossOrcNoThat | E::InOrc | E::InOrcNoThat => {
                let animate = self.inanimate.is_empty() || rng.random_bool(0.5);
                let (head, inner) = if animate {
                    self.two_animate(rng)
                } else {
                    (*Self::pick(&self.inanimate, rng), self.animate(rng))
                };
                let in_rc = matches!(c, E::InOrc | E::InOrcNoThat);
                // The critical number belongs to the head (across) or the inner subject (in).
                let (head_n, inner_n) = if in_rc {
                    (other_number(rng), n)
                } else {
                    (n, other_number(rng))
                };
                p.np("the", head, head_n);
                if matches!(c, E::AcrossOrc | E::InOrc) {
                    p.push("that");
                }
                p.np("the", inner, inner_n);
                p.verb(Self::pick(&lex.transitive, rng), inner_n, in_rc);
                if animate {
                    p.verb(Self::pick(&lex.intransitive, rng), head_n, !in_rc);
                } else if lex.inanimate_vps.is_empty() || rng.random_bool(0.5) {
                    p.push(if head_n == Number::Singular { "is" } else { "are" });
                    if !in_rc {
                        p.mark();
                    }
                    p.extend(&Self::pick(&lex.adjectives, rng).tokens);
                } else {
                    p.verb(Self::pick(&lex.inanimate_vps, rng), head_n, !in_rc);
                }
            }
            E::ReflexiveSimple => {
                p.np("the", self.animate(rng), n);
                p.push(Self::pick(&lex.reflexive_verbs, rng));
                p.push(Self::reflexive(n, rng));
                p.mark();
            }
            E::ReflexiveComplement => {
                let (a, b) = self.two_animate(rng);
                p.np("the", a, other_number(rng));
                p.push(Self::pick(&lex.complement_verbs, rng));
                p.np("the", b, n);
                p.push(Self::pick(&lex.reflexive_verbs, rng));
                p.push(Self::reflexive(n, rng));
                p.mark();
            }
            E::ReflexiveAcrossOrc => {
                let (a, b) = self.two_animate(rng);
                p.np("the", a, n);
                p.push("that");
                let inner_n = other_number(rng);
                p.np("the", b, inner_n);
                p.verb(Self::pick(&lex.transitive, rng), inner_n, false);
                p.push(Self::pick(&lex.reflexive_verbs, rng));
                p.push(Self::reflexive(n, rng));
                p.mark();
            }
            E::NpiSimple | E::NpiAcrossOrc => {
                let (a, b) = self.two_animate(rng);
                p.np("no", a, Number::Plural);
                p.critical = 0;
                if c == E::NpiAcrossOrc {
                    p.push("that");
                    let inner_n = other_number(rng);
                    p.np("no", b, inner_n);
                    p.verb(Self::pick(&lex.transitive, rng), inner_n, false);
                }
                p.push("have");
                p.push("ever");
                p.push("been");
                p.extend(&Self::pick(&lex.adjectives, rng).tokens);
            }
        }
        p
    }

    fn case<R: Rng + ?Sized>(&self, c: E, i: usize, rng: &mut R) -> Result<TestCase> {
        let p = self.build(c, i, rng);
        let word = &p.tokens[p.critical];
        let replacement = match c.category() {
            super::Category::Npi => "most".to_string(),
            super::Category::Reflexive => flip_reflexive(word)?
                .choose(rng)
                .expect("non-empty")
                .clone(),
            super::Category::Agreement => {
                let number = *self.verbs.get(word.as_str()).expect("critical word is a present verb");
                flip_verb_number(word, number)?
            }
        };
        let mut bad = p.tokens.clone();
        bad[p.critical] = replacement;
        TestCase::new(p.tokens, bad, c)
    }
}

/// `n` cases per requested construction, drawn from the test-split lexicon.
///
/// Even-indexed cases have a singular critical subject, odd ones a plural
/// one. Each construction uses its own random stream, so its cases do not
/// depend on which other constructions are requested.
pub fn generate_suite(lexicon: &Lexicon, constructions: &[E], n: usize, seed: u64) -> Result<Vec<TestCase>> {
    let lex = lexicon.restricted(Some(Split::Test));
    lex.validate()?;
    let pieces = Pieces {
        lex: &lex,
        animate: lex.nouns.iter().filter(|x| x.animate).collect(),
        inanimate: lex.nouns.iter().filter(|x| !x.animate).collect(),
        verbs: lex.present_verbs(),
    };
    let mut out = Vec::with_capacity(constructions.len() * n);
    for &c in constructions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64 + 1);
        for i in 0..n {
            out.push(pieces.case(c, i, &mut rng)?);
        }
    }
    Ok(out)
}

/// Tab-separated: grammatical, ungrammatical, construction, differing position.
pub fn write_suite(path: &Path, suite: &[TestCase]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for c in suite {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            c.grammatical.join(" "),
            c.ungrammatical.join(" "),
            c.construction,
            c.differing_position
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_suite(path: &Path) -> Result<Vec<TestCase>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, got {}", f.len())));
        }
        let words = |s: &str| s.split(' ').map(str::to_string).collect::<Vec<_>>();
        let construction: E = f[2].parse().map_err(|e: Error| err(e.to_string()))?;
        let case = TestCase::new(words(f[0]), words(f[1]), construction).map_err(|e| err(e.to_string()))?;
        let pos: usize = f[3].parse().map_err(|_| err(format!("bad position `{}`", f[3])))?;
        if pos != case.differing_position {
            return Err(err(format!(
                "position {pos} but the sentences differ at {}",
                case.differing_position
            )));
        }
        out.push(case);
    }
    Ok(out)
}
