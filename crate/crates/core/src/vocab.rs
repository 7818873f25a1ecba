//! Token ↔ id mapping with reserved UNK/BOS/EOS entries.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const UNK_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;
const RESERVED: [&str; 3] = [UNK, BOS, EOS];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
    min_freq: usize,
}

impl Vocabulary {
    /// Keeps tokens seen at least `min_freq` times, ordered by frequency
    /// (descending) and then lexicographically.
    pub fn from_tokens<I, S>(tokens: I, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in tokens {
            let t = t.as_ref();
            if RESERVED.contains(&t) {
                continue;
            }
            *counts.entry(t.to_string()).or_default() += 1;
        }
        let mut kept: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_freq.max(1))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let list = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(t, _)| t))
            .collect();
        Self::from_list(list, min_freq).expect("reserved entries present")
    }

    /// Rebuilds a vocabulary from its tokens in id order.
    pub fn from_list(tokens: Vec<String>, min_freq: usize) -> Result<Self> {
        if tokens.len() < RESERVED.len() || tokens[..3].iter().zip(RESERVED).any(|(a, b)| a != b) {
            return Err(Error::VocabMismatch(
                "the first three entries must be <unk>, <bos>, <eos>".into(),
            ));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i).is_some() {
                return Err(Error::VocabMismatch(format!("duplicate token `{t}`")));
            }
        }
        Ok(Vocabulary {
            tokens,
            ids,
            min_freq,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, words: &[impl AsRef<str>]) -> Vec<usize> {
        words.iter().map(|w| self.id(w.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<&str> {
        ids.iter().map(|&i| self.token(i)).collect()
    }

    /// One token per line in id order, after a `# min_freq N` line.
    pub fn to_text(&self) -> String {
        let mut s = format!("# min_freq {}\n", self.min_freq);
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let min_freq = lines
            .next()
            .and_then(|l| l.strip_prefix("# min_freq "))
            .and_then(|n| n.trim().parse().ok())
            .ok_or(Error::Parse {
                line: 1,
                msg: "expected `# min_freq N`".into(),
            })?;
        Self::from_list(lines.map(str::to_string).collect(), min_freq)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
