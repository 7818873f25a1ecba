//! Closed lexicon shared by the corpus generator, the agreement checker and the
//! evaluation templates.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::negex::Number;

const BUILTIN: &str = include_str!("../../data/lexicon.tsv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    /// Also used by the evaluation templates.
    Test,
    /// Training corpus only.
    Train,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Noun {
    pub singular: String,
    pub plural: String,
    pub animate: bool,
    pub split: Split,
}

impl Noun {
    pub fn form(&self, n: Number) -> &str {
        match n {
            Number::Singular => &self.singular,
            Number::Plural => &self.plural,
        }
    }
}

/// A present-tense verb (or verb-initial phrase) in both numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerbPhrase {
    pub singular: Vec<String>,
    pub plural: Vec<String>,
    pub split: Split,
}

impl VerbPhrase {
    pub fn form(&self, n: Number) -> &[String] {
        match n {
            Number::Singular => &self.singular,
            Number::Plural => &self.plural,
        }
    }

    pub fn head(&self, n: Number) -> &str {
        &self.form(n)[0]
    }

    /// Tokens after the verb (identical in both numbers).
    pub fn tail(&self) -> &[String] {
        &self.singular[1..]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub tokens: Vec<String>,
    pub split: Split,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub nouns: Vec<Noun>,
    pub intransitive: Vec<VerbPhrase>,
    pub transitive: Vec<VerbPhrase>,
    /// Multi-word VPs for animate subjects.
    pub long_vps: Vec<VerbPhrase>,
    /// Multi-word VPs for inanimate subjects.
    pub inanimate_vps: Vec<VerbPhrase>,
    pub adjectives: Vec<Entry>,
    pub prepositions: Vec<Entry>,
    pub complement_verbs: Vec<String>,
    pub reflexive_verbs: Vec<String>,
}

/// Function words the templates use besides the lexicon entries.
pub const DETERMINERS: [&str; 3] = ["the", "no", "most"];
pub const REFLEXIVES: [&str; 3] = ["himself", "herself", "themselves"];

fn split_of(s: &str, line: usize) -> Result<Split> {
    match s {
        "test" => Ok(Split::Test),
        "train" => Ok(Split::Train),
        _ => Err(Error::Parse {
            line,
            msg: format!("unknown split `{s}`"),
        }),
    }
}

fn words(s: &str) -> Vec<String> {
    s.split(' ').map(str::to_string).collect()
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled lexicon parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Lexicon::default();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Parse {
                line: ln,
                msg: format!("malformed entry `{line}`"),
            };
            match f.as_slice() {
                ["noun", sg, pl, anim, split] => lex.nouns.push(Noun {
                    singular: sg.to_string(),
                    plural: pl.to_string(),
                    animate: match *anim {
                        "animate" => true,
                        "inanimate" => false,
                        _ => return Err(bad()),
                    },
                    split: split_of(split, ln)?,
                }),
                [cat @ ("intrans" | "trans" | "longvp" | "ivp"), sg, pl, split] => {
                    let vp = VerbPhrase {
                        singular: words(sg),
                        plural: words(pl),
                        split: split_of(split, ln)?,
                    };
                    if vp.singular.len() != vp.plural.len() || vp.singular[1..] != vp.plural[1..] {
                        return Err(bad());
                    }
                    match *cat {
                        "intrans" => lex.intransitive.push(vp),
                        "trans" => lex.transitive.push(vp),
                        "longvp" => lex.long_vps.push(vp),
                        _ => lex.inanimate_vps.push(vp),
                    }
                }
                ["adj", w, split] => lex.adjectives.push(Entry {
                    tokens: words(w),
                    split: split_of(split, ln)?,
                }),
                ["prep", w, split] => lex.prepositions.push(Entry {
                    tokens: words(w),
                    split: split_of(split, ln)?,
                }),
                ["comp", w] => lex.complement_verbs.push(w.to_string()),
                ["refl", w] => lex.reflexive_verbs.push(w.to_string()),
                _ => return Err(bad()),
            }
        }
        Ok(lex)
    }

    /// Fails with [`Error::EmptyLexicon`] when a category the templates need is empty.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("animate nouns", self.nouns.iter().any(|n| n.animate)),
            ("inanimate nouns", self.nouns.iter().any(|n| !n.animate)),
            ("intransitive verbs", !self.intransitive.is_empty()),
            ("transitive verbs", !self.transitive.is_empty()),
            ("long VPs", self.long_vps.len() >= 2),
            ("adjectives", !self.adjectives.is_empty()),
            ("prepositions", !self.prepositions.is_empty()),
            ("complement verbs", !self.complement_verbs.is_empty()),
            ("reflexive verbs", !self.reflexive_verbs.is_empty()),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((what, _)) => Err(Error::EmptyLexicon(format!("no {what}"))),
            None => Ok(()),
        }
    }

    /// The sub-lexicon restricted to one split (`None` keeps everything).
    /// Prepositions are closed-class and always kept.
    pub fn restricted(&self, split: Option<Split>) -> Lexicon {
        let Some(split) = split else {
            return self.clone();
        };
        let keep_vp = |v: &Vec<VerbPhrase>| v.iter().filter(|x| x.split == split).cloned().collect();
        let keep_entry = |v: &Vec<Entry>| v.iter().filter(|x| x.split == split).cloned().collect();
        Lexicon {
            nouns: self.nouns.iter().filter(|n| n.split == split).cloned().collect(),
            intransitive: keep_vp(&self.intransitive),
            transitive: keep_vp(&self.transitive),
            long_vps: keep_vp(&self.long_vps),
            inanimate_vps: keep_vp(&self.inanimate_vps),
            adjectives: keep_entry(&self.adjectives),
            prepositions: self.prepositions.clone(),
            complement_verbs: self.complement_verbs.clone(),
            reflexive_verbs: self.reflexive_verbs.clone(),
        }
    }

    /// Present-tense verb forms with their number, including `is/are` and `has/have`.
    pub fn present_verbs(&self) -> HashMap<String, Number> {
        let mut m = HashMap::new();
        for vp in self
            .intransitive
            .iter()
            .chain(&self.transitive)
            .chain(&self.long_vps)
            .chain(&self.inanimate_vps)
        {
            m.insert(vp.singular[0].clone(), Number::Singular);
            m.insert(vp.plural[0].clone(), Number::Plural);
        }
        for (w, n) in [
            ("is", Number::Singular),
            ("are", Number::Plural),
            ("has", Number::Singular),
            ("have", Number::Plural),
        ] {
            m.insert(w.to_string(), n);
        }
        m
    }

    /// Every token the templates can emit, sorted and deduplicated.
    pub fn all_tokens(&self) -> Vec<String> {
        let mut v: Vec<String> = Vec::new();
        for n in &self.nouns {
            v.push(n.singular.clone());
            v.push(n.plural.clone());
        }
        for vp in self
            .intransitive
            .iter()
            .chain(&self.transitive)
            .chain(&self.long_vps)
            .chain(&self.inanimate_vps)
        {
            v.extend(vp.singular.iter().cloned());
            v.extend(vp.plural.iter().cloned());
        }
        for e in self.adjectives.iter().chain(&self.prepositions) {
            v.extend(e.tokens.iter().cloned());
        }
        v.extend(self.complement_verbs.iter().cloned());
        v.extend(self.reflexive_verbs.iter().cloned());
        v.extend(
            DETERMINERS
                .iter()
                .chain(&REFLEXIVES)
                .chain(&["that", "and", "ever", "been", "is", "are", "has", "have"])
                .map(|s| s.to_string()),
        );
        v.sort();
        v.dedup();
        v
    }

    /// Best-effort Penn-style tags from the closed lexicon, for raw text.
    ///
    /// Present verbs are tagged `VBZ`/`VBP`, reflexives `PRP`; words inside a
    /// multi-word VP tail and unknown words get `XX`.
    pub fn tag(&self, tokens: &[impl AsRef<str>]) -> Vec<&'static str> {
        let verbs = self.present_verbs();
        let mut nouns: HashMap<&str, &'static str> = HashMap::new();
        for n in &self.nouns {
            nouns.insert(&n.singular, "NN");
            nouns.insert(&n.plural, "NNS");
        }
        let tails: Vec<&[String]> = self
            .long_vps
            .iter()
            .chain(&self.inanimate_vps)
            .map(|vp| vp.tail())
            .filter(|t| !t.is_empty())
            .collect();
        let toks: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
        let mut tags = vec!["XX"; toks.len()];
        let mut i = 0;
        while i < toks.len() {
            let w = toks[i];
            if let Some(n) = verbs.get(w) {
                tags[i] = if *n == Number::Singular { "VBZ" } else { "VBP" };
                // Skip a known phrase tail so words like `watch` inside it stay untagged.
                if let Some(t) = tails
                    .iter()
                    .filter(|t| toks[i + 1..].starts_with_strs(t))
                    .max_by_key(|t| t.len())
                {
                    i += 1 + t.len();
                    continue;
                }
            } else if REFLEXIVES.contains(&w) {
                tags[i] = "PRP";
            } else if DETERMINERS.contains(&w) {
                tags[i] = "DT";
            } else if let Some(t) = nouns.get(w) {
                tags[i] = t;
            } else if self.complement_verbs.iter().chain(&self.reflexive_verbs).any(|v| v == w) {
                tags[i] = "VBD";
            } else if w == "that" {
                tags[i] = "WDT";
            }
            i += 1;
        }
        tags
    }
}

trait StartsWithStrs {
    fn starts_with_strs(&self, prefix: &[String]) -> bool;
}

impl StartsWithStrs for [&str] {
    fn starts_with_strs(&self, prefix: &[String]) -> bool {
        self.len() >= prefix.len() && self.iter().zip(prefix).all(|(a, b)| *a == b)
    }
}
