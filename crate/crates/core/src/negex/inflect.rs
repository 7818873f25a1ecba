//! Present-tense number inflection and reflexive flipping.

use std::sync::OnceLock;

use super::Number;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrregularVerb {
    pub singular: String,
    pub plural: String,
    pub lemma: String,
}

struct Table {
    verbs: Vec<IrregularVerb>,
    excluded: Vec<String>,
}

const TABLE_SRC: &str = include_str!("../../data/irregular_verbs.tsv");

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut verbs = Vec::new();
        let mut excluded = Vec::new();
        for line in TABLE_SRC.lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["exclude", w] => excluded.push(w.to_string()),
                [s, p, l] => verbs.push(IrregularVerb {
                    singular: s.to_string(),
                    plural: p.to_string(),
                    lemma: l.to_string(),
                }),
                _ => panic!("malformed irregular verb row `{line}`"),
            }
        }
        Table { verbs, excluded }
    })
}

pub fn irregular_table() -> &'static [IrregularVerb] {
    &table().verbs
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// Stems that take `-es` in the third person singular.
fn sibilant_stem(stem: &str) -> bool {
    ["ss", "sh", "ch", "x", "zz", "o"]
        .iter()
        .any(|s| stem.ends_with(s))
}

fn plausible_word(w: &str) -> bool {
    w.len() >= 2 && w.bytes().all(|b| b.is_ascii_lowercase())
}

/// Returns the opposite-number present-tense form of `surface`, whose current number is `from`.
///
/// Irregular forms come from the bundled table; regular ones follow the
/// `-ies`/`-es`/`-s` suffix rules.
pub fn flip_verb_number(surface: &str, from: Number) -> Result<String> {
    let not = || Error::NotInflectable(surface.to_string());
    let t = table();
    if t.excluded.iter().any(|w| w == surface) {
        return Err(not());
    }
    for v in &t.verbs {
        match from {
            Number::Singular if v.singular == surface => return Ok(v.plural.clone()),
            Number::Plural if v.plural == surface => return Ok(v.singular.clone()),
            _ => {}
        }
    }
    if !plausible_word(surface) {
        return Err(not());
    }
    let b = surface.as_bytes();
    match from {
        Number::Singular => {
            if !surface.ends_with('s') || surface.ends_with("ss") {
                return Err(not());
            }
            if let Some(stem) = surface.strip_suffix("ies") {
                if !stem.is_empty() && !is_vowel(*stem.as_bytes().last().unwrap()) {
                    return Ok(format!("{stem}y"));
                }
            }
            if let Some(stem) = surface.strip_suffix("es") {
                if sibilant_stem(stem) {
                    return Ok(stem.to_string());
                }
            }
            let stem = &surface[..surface.len() - 1];
            if stem.len() < 2 {
                return Err(not());
            }
            Ok(stem.to_string())
        }
        Number::Plural => {
            let last = b[b.len() - 1];
            if last == b's' && !surface.ends_with("ss") {
                // A plural base form ending in a single `s` would be ambiguous with a 3sg form.
                return Err(not());
            }
            if last == b'y' && !is_vowel(b[b.len() - 2]) {
                return Ok(format!("{}ies", &surface[..surface.len() - 1]));
            }
            if sibilant_stem(surface) {
                return Ok(format!("{surface}es"));
            }
            Ok(format!("{surface}s"))
        }
    }
}

/// Base (plural) form used as the lemma of a present-tense verb, e.g. `laughs` → `laugh`, `is` → `be`.
pub fn verb_lemma(surface: &str, number: Number) -> Result<String> {
    if let Some(v) = table()
        .verbs
        .iter()
        .find(|v| v.singular == surface || v.plural == surface)
    {
        return Ok(v.lemma.clone());
    }
    match number {
        Number::Plural => {
            flip_verb_number(surface, Number::Plural)?;
            Ok(surface.to_string())
        }
        Number::Singular => flip_verb_number(surface, Number::Singular),
    }
}

pub fn reflexive_number(surface: &str) -> Option<Number> {
    match surface {
        "themselves" => Some(Number::Plural),
        "himself" | "herself" => Some(Number::Singular),
        _ => None,
    }
}

/// `themselves` → `[himself, herself]`; `himself`/`herself` → `[themselves]`.
pub fn flip_reflexive(surface: &str) -> Result<Vec<String>> {
    match surface {
        "themselves" => Ok(vec!["himself".into(), "herself".into()]),
        "himself" | "herself" => Ok(vec!["themselves".into()]),
        _ => Err(Error::NotReflexive(surface.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-built (singular, plural) pairs, independent of the suffix rules.
    const PAIRS: [(&str, &str); 50] = [
        ("laughs", "laugh"),
        ("smiles", "smile"),
        ("swims", "swim"),
        ("likes", "like"),
        ("admires", "admire"),
        ("hates", "hate"),
        ("loves", "love"),
        ("knows", "know"),
        ("brings", "bring"),
        ("writes", "write"),
        ("enjoys", "enjoy"),
        ("interests", "interest"),
        ("is", "are"),
        ("has", "have"),
        ("does", "do"),
        ("goes", "go"),
        ("flies", "fly"),
        ("cries", "cry"),
        ("tries", "try"),
        ("carries", "carry"),
        ("worries", "worry"),
        ("studies", "study"),
        ("plays", "play"),
        ("says", "say"),
        ("stays", "stay"),
        ("watches", "watch"),
        ("teaches", "teach"),
        ("reaches", "reach"),
        ("pushes", "push"),
        ("wishes", "wish"),
        ("washes", "wash"),
        ("fixes", "fix"),
        ("mixes", "mix"),
        ("kisses", "kiss"),
        ("misses", "miss"),
        ("passes", "pass"),
        ("buzzes", "buzz"),
        ("echoes", "echo"),
        ("uses", "use"),
        ("loses", "lose"),
        ("runs", "run"),
        ("sleeps", "sleep"),
        ("talks", "talk"),
        ("waits", "wait"),
        ("sings", "sing"),
        ("dances", "dance"),
        ("works", "work"),
        ("visits", "visit"),
        ("helps", "help"),
        ("meets", "meet"),
    ];

    #[test]
    fn paper_examples() {
        assert_eq!(flip_verb_number("laughs", Number::Singular).unwrap(), "laugh");
        assert_eq!(flip_verb_number("is", Number::Singular).unwrap(), "are");
        assert_eq!(flip_verb_number("flies", Number::Singular).unwrap(), "fly");
        assert_eq!(flip_verb_number("watch", Number::Plural).unwrap(), "watches");
    }

    #[test]
    fn hand_built_list_both_directions() {
        for (sg, pl) in PAIRS {
            assert_eq!(flip_verb_number(sg, Number::Singular).unwrap(), pl, "{sg}");
            assert_eq!(flip_verb_number(pl, Number::Plural).unwrap(), sg, "{pl}");
        }
    }

    #[test]
    fn non_present_forms_are_not_inflectable() {
        for w in ["was", "were", "am"] {
            for n in [Number::Singular, Number::Plural] {
                assert!(matches!(flip_verb_number(w, n), Err(Error::NotInflectable(_))));
            }
        }
        assert!(flip_verb_number("laugh", Number::Singular).is_err());
        assert!(flip_verb_number("pass", Number::Singular).is_err());
        assert!(flip_verb_number("Laughs", Number::Singular).is_err());
        assert!(flip_verb_number("s", Number::Singular).is_err());
    }

    #[test]
    fn lemmas() {
        assert_eq!(verb_lemma("laughs", Number::Singular).unwrap(), "laugh");
        assert_eq!(verb_lemma("like", Number::Plural).unwrap(), "like");
        assert_eq!(verb_lemma("is", Number::Singular).unwrap(), "be");
        assert_eq!(verb_lemma("are", Number::Plural).unwrap(), "be");
    }

    #[test]
    fn reflexives() {
        assert_eq!(flip_reflexive("themselves").unwrap(), ["himself", "herself"]);
        assert_eq!(flip_reflexive("himself").unwrap(), ["themselves"]);
        assert_eq!(flip_reflexive("herself").unwrap(), ["themselves"]);
        assert!(matches!(flip_reflexive("itself"), Err(Error::NotReflexive(_))));
    }
}
