//! `NEGEXLM1` checkpoint container.
//!
//! Layout (text header lines, raw little-endian `f64` payloads):
//!
//! ```text
//! NEGEXLM1
//! config <layers> <embed> <hidden> <vocab> <dropout_embed> <dropout_hidden> <tie>
//! vocab <count> <min_freq>
//! <token>            (count lines, id order)
//! params <count>
//! <name> <ndim> <d0> .. <dn>
//! <8 * numel bytes>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{LanguageModel, LmConfig};
use crate::error::{Error, Result};
use crate::numcore::{ParamStore, Tensor};
use crate::vocab::Vocabulary;

pub const MAGIC: &str = "NEGEXLM1";

pub fn write_checkpoint<W: Write>(model: &LanguageModel, mut w: W) -> std::io::Result<()> {
    let c = &model.config;
    writeln!(w, "{MAGIC}")?;
    writeln!(
        w,
        "config {} {} {} {} {} {} {}",
        c.num_layers,
        c.embed_dim,
        c.hidden_dim,
        c.vocab_size,
        c.dropout_embed,
        c.dropout_hidden,
        c.tie_embeddings
    )?;
    writeln!(w, "vocab {} {}", model.vocab.len(), model.vocab.min_freq())?;
    for t in model.vocab.tokens() {
        writeln!(w, "{t}")?;
    }
    writeln!(w, "params {}", model.params.len())?;
    for (name, t) in model.params.iter() {
        let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        writeln!(w, "{name} {} {}", t.shape().len(), dims.join(" "))?;
        let mut buf = Vec::with_capacity(t.len() * 8);
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        writeln!(w)?;
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn read_line<R: BufRead>(r: &mut R) -> Result<String> {
    let mut line = String::new();
    let n = r
        .read_line(&mut line)
        .map_err(|e| bad(format!("read failed: {e}")))?;
    if n == 0 {
        return Err(bad("unexpected end of file"));
    }
    Ok(line.trim_end_matches('\n').to_string())
}

fn field<T: std::str::FromStr>(parts: &[&str], i: usize, what: &str) -> Result<T> {
    parts
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(format!("bad {what}")))
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<LanguageModel> {
    let mut r = BufReader::new(r);
    if read_line(&mut r)? != MAGIC {
        return Err(bad(format!("missing {MAGIC} header")));
    }
    let line = read_line(&mut r)?;
    let p: Vec<&str> = line.split(' ').collect();
    if p.first() != Some(&"config") || p.len() != 8 {
        return Err(bad("bad config line"));
    }
    let config = LmConfig {
        num_layers: field(&p, 1, "num_layers")?,
        embed_dim: field(&p, 2, "embed_dim")?,
        hidden_dim: field(&p, 3, "hidden_dim")?,
        vocab_size: field(&p, 4, "vocab_size")?,
        dropout_embed: field(&p, 5, "dropout_embed")?,
        dropout_hidden: field(&p, 6, "dropout_hidden")?,
        tie_embeddings: field(&p, 7, "tie_embeddings")?,
    };
    config.validate()?;

    let line = read_line(&mut r)?;
    let p: Vec<&str> = line.split(' ').collect();
    if p.first() != Some(&"vocab") {
        return Err(bad("bad vocab line"));
    }
    let count: usize = field(&p, 1, "vocab count")?;
    let min_freq: usize = field(&p, 2, "min_freq")?;
    let mut tokens = Vec::with_capacity(count);
    for _ in 0..count {
        tokens.push(read_line(&mut r)?);
    }
    let vocab = Vocabulary::from_list(tokens, min_freq)?;

    let line = read_line(&mut r)?;
    let p: Vec<&str> = line.split(' ').collect();
    if p.first() != Some(&"params") {
        return Err(bad("bad params line"));
    }
    let count: usize = field(&p, 1, "param count")?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let line = read_line(&mut r)?;
        let p: Vec<&str> = line.split(' ').collect();
        let name = p.first().ok_or_else(|| bad("missing param name"))?.to_string();
        let ndim: usize = field(&p, 1, "ndim")?;
        let shape: Vec<usize> = (0..ndim)
            .map(|i| field(&p, 2 + i, "dimension"))
            .collect::<Result<_>>()?;
        let n: usize = shape.iter().product();
        let mut buf = vec![0u8; n * 8 + 1];
        r.read_exact(&mut buf)
            .map_err(|e| bad(format!("truncated tensor `{name}`: {e}")))?;
        if buf[n * 8] != b'\n' {
            return Err(bad(format!("tensor `{name}` not newline-terminated")));
        }
        let data = buf[..n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.insert(name, Tensor::new(shape, data)?);
    }
    let model = LanguageModel {
        config,
        vocab,
        params,
    };
    super::check_vocab(&model.config, &model.vocab)?;
    verify_layout(&model)?;
    Ok(model)
}

/// Every parameter the model needs must be present with the expected shape.
fn verify_layout(model: &LanguageModel) -> Result<()> {
    let expected = super::zero_params(&model.config)?;
    for (name, t) in expected.iter() {
        let got = model
            .params
            .get(name)
            .map_err(|_| bad(format!("missing parameter `{name}`")))?;
        if got.shape() != t.shape() {
            return Err(bad(format!(
                "parameter `{name}` has shape {:?}, expected {:?}",
                got.shape(),
                t.shape()
            )));
        }
    }
    Ok(())
}

pub fn save_checkpoint(model: &LanguageModel, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_checkpoint(model, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<LanguageModel> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(f)
}
