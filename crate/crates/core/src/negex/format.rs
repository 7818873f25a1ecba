//! Annotated corpus files: one sentence per line,
//! `tokens<TAB>construction<TAB>targets`, where targets are
//! `position,kind,number,lemma,neg1|neg2` records joined by `;`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{AnnotatedSentence, Construction, TargetAnnotation};
use crate::error::{Error, Result};

pub fn format_sentence(s: &AnnotatedSentence) -> String {
    let targets: Vec<String> = s
        .targets
        .iter()
        .map(|t| {
            format!(
                "{},{},{},{},{}",
                t.position,
                t.kind.as_str(),
                t.number.as_str(),
                t.lemma,
                t.negatives.join("|")
            )
        })
        .collect();
    format!(
        "{}\t{}\t{}",
        s.tokens.join(" "),
        s.construction.as_str(),
        targets.join(";")
    )
}

pub fn parse_sentence(line: &str, line_no: usize) -> Result<AnnotatedSentence> {
    let err = |msg: String| Error::Parse { line: line_no, msg };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
    }
    let tokens: Vec<String> = fields[0].split(' ').map(str::to_string).collect();
    if tokens.iter().any(String::is_empty) {
        return Err(err("empty token".into()));
    }
    let construction: Construction = fields[1].parse().map_err(|e: Error| err(e.to_string()))?;
    let mut targets = Vec::new();
    if !fields[2].is_empty() {
        for rec in fields[2].split(';') {
            let p: Vec<&str> = rec.split(',').collect();
            if p.len() != 5 {
                return Err(err(format!("bad target record `{rec}`")));
            }
            targets.push(TargetAnnotation {
                position: p[0]
                    .parse()
                    .map_err(|_| err(format!("bad position `{}`", p[0])))?,
                kind: p[1].parse().map_err(|e: Error| err(e.to_string()))?,
                number: p[2].parse().map_err(|e: Error| err(e.to_string()))?,
                lemma: p[3].to_string(),
                negatives: p[4].split('|').map(str::to_string).collect(),
            });
        }
    }
    let s = AnnotatedSentence {
        tokens,
        targets,
        construction,
    };
    s.validate().map_err(|e| err(e.to_string()))?;
    Ok(s)
}

pub fn write_corpus(path: &Path, corpus: &[AnnotatedSentence]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for s in corpus {
        writeln!(w, "{}", format_sentence(s)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_corpus(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        out.push(parse_sentence(&line, i + 1)?);
    }
    Ok(out)
}

/// Whitespace-tokenized text, one sentence per line, without annotations.
pub fn read_plain_text(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            AnnotatedSentence::new(
                l.split_whitespace().map(str::to_string).collect(),
                Construction::None,
            )
        })
        .collect())
}
