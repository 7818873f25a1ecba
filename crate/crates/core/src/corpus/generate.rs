//! Template grammar for the synthetic training corpus.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::lexicon::{Lexicon, Noun, VerbPhrase};
use crate::error::Result;
use crate::negex::{annotate_targets, AnnotatedSentence, Construction, Number};

pub const MAX_SENTENCE_LEN: usize = 20;

/// Token and Penn-tag accumulator shared with the evaluation templates.
#[derive(Default)]
pub(crate) struct Builder {
    pub tokens: Vec<String>,
    pub tags: Vec<&'static str>,
}

impl Builder {
    pub fn word(&mut self, w: &str, tag: &'static str) -> &mut Self {
        self.tokens.push(w.to_string());
        self.tags.push(tag);
        self
    }

    pub fn phrase(&mut self, ws: &[String]) -> &mut Self {
        for w in ws {
            self.word(w, "XX");
        }
        self
    }

    pub fn np(&mut self, det: &str, noun: &Noun, n: Number) -> &mut Self {
        let tag = match n {
            Number::Singular => "NN",
            Number::Plural => "NNS",
        };
        self.word(det, "DT").word(noun.form(n), tag)
    }

    /// A present-tense VP whose head verb is tagged as a target.
    pub fn present(&mut self, vp: &VerbPhrase, n: Number) -> &mut Self {
        let form = vp.form(n);
        let tag = match n {
            Number::Singular => "VBZ",
            Number::Plural => "VBP",
        };
        self.word(&form[0], tag).phrase(&form[1..])
    }

    pub fn copula(&mut self, n: Number) -> &mut Self {
        match n {
            Number::Singular => self.word("is", "VBZ"),
            Number::Plural => self.word("are", "VBP"),
        }
    }

    pub fn perfect(&mut self, n: Number) -> &mut Self {
        match n {
            Number::Singular => self.word("has", "VBZ"),
            Number::Plural => self.word("have", "VBP"),
        }
    }

    pub fn reflexive<R: Rng + ?Sized>(&mut self, n: Number, rng: &mut R) -> &mut Self {
        match n {
            Number::Plural => self.word("themselves", "PRP"),
            Number::Singular if rng.random_bool(0.5) => self.word("himself", "PRP"),
            Number::Singular => self.word("herself", "PRP"),
        }
    }

    pub fn finish(self, construction: Construction) -> Result<AnnotatedSentence> {
        let a = annotate_targets(&self.tokens, &self.tags, construction)?;
        debug_assert_eq!(a.warnings, 0, "{:?}", self.tokens);
        Ok(a.sentence)
    }
}

/// Samples template pieces from a lexicon.
pub(crate) struct Sampler<'a> {
    lex: &'a Lexicon,
    animate: Vec<&'a Noun>,
    inanimate: Vec<&'a Noun>,
}

fn number<R: Rng + ?Sized>(rng: &mut R) -> Number {
    if rng.random_bool(0.5) {
        Number::Singular
    } else {
        Number::Plural
    }
}

impl<'a> Sampler<'a> {
    pub fn new(lex: &'a Lexicon) -> Self {
        Sampler {
            lex,
            animate: lex.nouns.iter().filter(|n| n.animate).collect(),
            inanimate: lex.nouns.iter().filter(|n| !n.animate).collect(),
        }
    }

    fn animate<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a Noun {
        self.animate.choose(rng).expect("validated lexicon")
    }

    fn inanimate<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a Noun {
        self.inanimate.choose(rng).expect("validated lexicon")
    }

    fn pick<'v, T, R: Rng + ?Sized>(items: &'v [T], rng: &mut R) -> &'v T {
        items.choose(rng).expect("validated lexicon")
    }

    fn adjective<R: Rng + ?Sized>(&self, b: &mut Builder, rng: &mut R) {
        b.phrase(&Self::pick(&self.lex.adjectives, rng).tokens);
    }

    /// Object NP: `the` plus a noun of random number.
    fn object<R: Rng + ?Sized>(&self, b: &mut Builder, rng: &mut R) {
        let n = self.animate(rng);
        b.np("the", n, number(rng));
    }

    /// Short VP (one verb, optional object).
    fn short_vp<R: Rng + ?Sized>(&self, b: &mut Builder, n: Number, rng: &mut R) {
        if rng.random_bool(0.5) {
            b.present(Self::pick(&self.lex.intransitive, rng), n);
        } else {
            b.present(Self::pick(&self.lex.transitive, rng), n);
            self.object(b, rng);
        }
    }

    /// Any VP suited to an animate subject.
    fn animate_vp<R: Rng + ?Sized>(&self, b: &mut Builder, n: Number, rng: &mut R) {
        let r: f64 = rng.random();
        if r < 0.7 {
            self.short_vp(b, n, rng);
        } else if r < 0.85 {
            b.copula(n);
            self.adjective(b, rng);
        } else {
            b.present(Self::pick(&self.lex.long_vps, rng), n);
        }
    }

    fn inanimate_vp<R: Rng + ?Sized>(&self, b: &mut Builder, n: Number, rng: &mut R) {
        if self.lex.inanimate_vps.is_empty() || rng.random_bool(0.5) {
            b.copula(n);
            self.adjective(b, rng);
        } else {
            b.present(Self::pick(&self.lex.inanimate_vps, rng), n);
        }
    }

    /// Subject NP `the N` with a VP matching its animacy.
    fn subject_and_vp<R: Rng + ?Sized>(&self, b: &mut Builder, animate_share: f64, rng: &mut R) {
        let n = number(rng);
        if rng.random_bool(animate_share) {
            b.np("the", self.animate(rng), n);
            self.animate_vp(b, n, rng);
        } else {
            b.np("the", self.inanimate(rng), n);
            self.inanimate_vp(b, n, rng);
        }
    }

    /// `N2 V` object relative clause, optionally introduced by `that`.
    fn object_rc<R: Rng + ?Sized>(&self, b: &mut Builder, that: bool, det: &str, rng: &mut R) {
        if that {
            b.word("that", "WDT");
        }
        let n2 = number(rng);
        b.np(det, self.animate(rng), n2);
        b.present(Self::pick(&self.lex.transitive, rng), n2);
    }

    pub fn sentence<R: Rng + ?Sized>(&self, c: Construction, rng: &mut R) -> Builder {
        let mut b = Builder::default();
        match c {
            Construction::None | Construction::Simple => self.subject_and_vp(&mut b, 0.8, rng),
            Construction::InComplement => {
                b.np("the", self.animate(rng), number(rng));
                b.word(Self::pick(&self.lex.complement_verbs, rng), "VBD");
                if rng.random_bool(0.5) {
                    b.word("that", "IN");
                }
                self.subject_and_vp(&mut b, 0.8, rng);
            }
            Construction::ShortVp => {
                let n = number(rng);
                b.np("the", self.animate(rng), n);
                self.short_vp(&mut b, n, rng);
                b.word("and", "CC");
                self.short_vp(&mut b, n, rng);
            }
            Construction::LongVp => {
                let n = number(rng);
                b.np("the", self.animate(rng), n);
                let first = Self::pick(&self.lex.long_vps, rng);
                let second = loop {
                    let v = Self::pick(&self.lex.long_vps, rng);
                    if v != first {
                        break v;
                    }
                };
                b.present(first, n).word("and", "CC").present(second, n);
            }
            Construction::AcrossPp => {
                let n = number(rng);
                let animate = rng.random_bool(0.7);
                let head = if animate { self.animate(rng) } else { self.inanimate(rng) };
                b.np("the", head, n);
                b.phrase(&Self::pick(&self.lex.prepositions, rng).tokens);
                let pp_noun = if rng.random_bool(0.5) { self.animate(rng) } else { self.inanimate(rng) };
                b.np("the", pp_noun, number(rng));
                if animate {
                    self.animate_vp(&mut b, n, rng);
                } else {
                    self.inanimate_vp(&mut b, n, rng);
                }
            }
            Construction::AcrossSrc => {
                let n = number(rng);
                b.np("the", self.animate(rng), n);
                b.word("that", "WDT");
                b.present(Self::pick(&self.lex.transitive, rng), n);
                self.object(&mut b, rng);
                self.animate_vp(&mut b, n, rng);
            }
            Construction::AcrossOrc | Construction::AcrossOrcNoThat => {
                let n = number(rng);
                let animate = rng.random_bool(0.5);
                let head = if animate { self.animate(rng) } else { self.inanimate(rng) };
                b.np("the", head, n);
                self.object_rc(&mut b, c == Construction::AcrossOrc, "the", rng);
                if animate {
                    self.animate_vp(&mut b, n, rng);
                } else {
                    self.inanimate_vp(&mut b, n, rng);
                }
            }
            Construction::Reflexive => {
                let r: f64 = rng.random();
                let n = number(rng);
                if r < 0.6 {
                    b.np("the", self.animate(rng), n);
                } else if r < 0.8 {
                    b.np("the", self.animate(rng), number(rng));
                    b.word(Self::pick(&self.lex.complement_verbs, rng), "VBD");
                    b.np("the", self.animate(rng), n);
                } else {
                    b.np("the", self.animate(rng), n);
                    self.object_rc(&mut b, rng.random_bool(0.5), "the", rng);
                }
                b.word(Self::pick(&self.lex.reflexive_verbs, rng), "VBD");
                b.reflexive(n, rng);
            }
            Construction::Npi => {
                // `ever` appears only under a `no` subject; `most` takes plural nouns.
                let det = *[
                    "no", "no", "most", "the",
                ]
                .choose(rng)
                .expect("non-empty");
                let n = if det == "most" { Number::Plural } else { number(rng) };
                b.np(det, self.animate(rng), n);
                if rng.random_bool(0.4) {
                    let inner = if rng.random_bool(0.5) { "the" } else { "no" };
                    self.object_rc(&mut b, true, inner, rng);
                }
                b.perfect(n);
                if det == "no" && rng.random_bool(0.7) {
                    b.word("ever", "RB");
                }
                b.word("been", "VBN");
                self.adjective(&mut b, rng);
            }
        }
        b
    }
}
