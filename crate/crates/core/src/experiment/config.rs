use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::corpus::{CorpusConfig, Lexicon};
use crate::error::{Error, Result};
use crate::losses::{LossConfig, LossKind};
use crate::model::LmConfig;
use crate::negex::Construction;
use crate::trainer::TrainConfig;

/// Which negative examples are withheld from training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblateMode {
    None,
    /// Drop targets whose lemma is one of the evaluation verbs.
    Token,
    /// Drop all targets of one construction.
    Pattern,
}

impl AblateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AblateMode::None => "none",
            AblateMode::Token => "token",
            AblateMode::Pattern => "pattern",
        }
    }
}

impl std::str::FromStr for AblateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AblateMode::None),
            "token" => Ok(AblateMode::Token),
            "pattern" => Ok(AblateMode::Pattern),
            _ => Err(Error::Config(format!("unknown ablate mode `{s}`"))),
        }
    }
}

/// Constructions that `ablate.target` may name.
pub const PATTERN_TARGETS: [Construction; 4] = [
    Construction::AcrossPp,
    Construction::AcrossSrc,
    Construction::AcrossOrc,
    Construction::LongVp,
];

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSettings {
    pub num_sentences: usize,
    pub seed: u64,
    /// `None` means the built-in lexicon.
    pub lexicon: Option<PathBuf>,
    pub lexicon_split: bool,
    /// train / dev / test.
    pub fractions: [f64; 3],
    pub min_freq: usize,
    pub mix: Vec<(Construction, f64)>,
    /// Scales the object-RC share of the training split by adding fresh object-RC sentences.
    pub orc_multiplier: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteSettings {
    pub per_construction: usize,
    pub seed: u64,
    /// Read the suite from this file instead of generating it.
    pub path: Option<PathBuf>,
}

/// Flat `key = value` experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub corpus: CorpusSettings,
    /// `vocab_size` is filled in from the corpus vocabulary.
    pub model: LmConfig,
    pub loss: LossConfig,
    /// `seed` is replaced by each entry of `seeds`.
    pub train: TrainConfig,
    pub suite: SuiteSettings,
    pub sweep_kinds: Vec<LossKind>,
    pub sweep_deltas: Vec<f64>,
    pub augment_multipliers: Vec<f64>,
    pub ablate_mode: AblateMode,
    pub ablate_target: Option<Construction>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            out_dir: PathBuf::from("runs"),
            seeds: vec![1, 2, 3, 4, 5],
            threads: 1,
            corpus: CorpusSettings {
                num_sentences: 50_000,
                seed: 1,
                lexicon: None,
                lexicon_split: false,
                fractions: [0.8, 0.1, 0.1],
                min_freq: 1,
                mix: CorpusConfig::default_mix(),
                orc_multiplier: 1.0,
            },
            model: LmConfig::desk(0),
            loss: LossConfig::baseline(),
            train: TrainConfig::default(),
            suite: SuiteSettings {
                per_construction: 200,
                seed: 1,
                path: None,
            },
            sweep_kinds: vec![LossKind::TokenMargin, LossKind::SentenceMargin],
            sweep_deltas: vec![0.0, 1.0, 5.0, 10.0, 15.0],
            augment_multipliers: vec![1.0, 2.0, 4.0, 8.0],
            ablate_mode: AblateMode::None,
            ablate_target: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad value `{v}` for `{key}`"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut mix_given = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(tag) = k.strip_prefix("corpus.mix.") {
                if !mix_given {
                    cfg.corpus.mix.clear();
                    mix_given = true;
                }
                let c: Construction = tag.parse()?;
                let p: f64 = parse(k, v)?;
                cfg.corpus.mix.retain(|(x, _)| *x != c);
                cfg.corpus.mix.push((c, p));
                continue;
            }
            cfg.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::Parse { line: i + 1, msg },
                e => e,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Sets one key; unknown keys are errors.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let c = &mut self.corpus;
        let m = &mut self.model;
        let t = &mut self.train;
        match key {
            "out_dir" => self.out_dir = PathBuf::from(v),
            "seeds" => self.seeds = parse_list(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "corpus.num_sentences" => c.num_sentences = parse(key, v)?,
            "corpus.seed" => c.seed = parse(key, v)?,
            "corpus.lexicon" => c.lexicon = (v != "builtin").then(|| PathBuf::from(v)),
            "corpus.lexicon_split" => c.lexicon_split = parse_bool(key, v)?,
            "corpus.train_fraction" => c.fractions[0] = parse(key, v)?,
            "corpus.dev_fraction" => c.fractions[1] = parse(key, v)?,
            "corpus.test_fraction" => c.fractions[2] = parse(key, v)?,
            "corpus.min_freq" => c.min_freq = parse(key, v)?,
            "corpus.orc_multiplier" => c.orc_multiplier = parse(key, v)?,
            "model.num_layers" => m.num_layers = parse(key, v)?,
            "model.embed_dim" => m.embed_dim = parse(key, v)?,
            "model.hidden_dim" => m.hidden_dim = parse(key, v)?,
            "model.dropout_embed" => m.dropout_embed = parse(key, v)?,
            "model.dropout_hidden" => m.dropout_hidden = parse(key, v)?,
            "model.tie_embeddings" => m.tie_embeddings = parse_bool(key, v)?,
            "loss.kind" => self.loss.kind = v.parse()?,
            "loss.alpha" => self.loss.alpha = parse(key, v)?,
            "loss.beta" => self.loss.beta = parse(key, v)?,
            "loss.delta" => self.loss.delta = parse(key, v)?,
            "train.batch_size" => t.batch_size = parse(key, v)?,
            "train.initial_lr" => t.initial_lr = parse(key, v)?,
            "train.weight_decay" => t.weight_decay = parse(key, v)?,
            "train.anneal_factor" => t.anneal_factor = parse(key, v)?,
            "train.lr_floor" => t.lr_floor = parse(key, v)?,
            "train.check_interval" => t.check_interval = parse(key, v)?,
            "train.max_epochs" => t.max_epochs = parse(key, v)?,
            "train.clip_norm" => {
                t.clip_norm = match v {
                    "none" | "off" => None,
                    _ => Some(parse(key, v)?),
                }
            }
            "suite.per_construction" => self.suite.per_construction = parse(key, v)?,
            "suite.seed" => self.suite.seed = parse(key, v)?,
            "suite.path" => self.suite.path = (v != "none").then(|| PathBuf::from(v)),
            "sweep.kinds" => self.sweep_kinds = parse_list(key, v)?,
            "sweep.deltas" => self.sweep_deltas = parse_list(key, v)?,
            "augment.multipliers" => self.augment_multipliers = parse_list(key, v)?,
            "ablate.mode" => self.ablate_mode = v.parse()?,
            "ablate.target" => {
                self.ablate_target = match v {
                    "none" => None,
                    _ => Some(v.parse()?),
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if self.threads == 0 {
            return bad("threads must be positive".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad("seed list has duplicates".into());
        }
        // A user lexicon is checked when it is loaded.
        self.corpus_config(Lexicon::builtin()).validate()?;
        let f = self.corpus.fractions;
        if f.iter().any(|x| !(0.0..=1.0).contains(x)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {f:?} must sum to 1"));
        }
        if !(self.corpus.orc_multiplier >= 1.0) || !self.corpus.orc_multiplier.is_finite() {
            return bad("corpus.orc_multiplier must be >= 1".into());
        }
        if self.suite.per_construction == 0 {
            return bad("suite.per_construction must be positive".into());
        }
        let mut m = self.model.clone();
        m.vocab_size = m.vocab_size.max(1);
        m.validate()?;
        self.loss.validate()?;
        self.train.validate()?;
        if self.sweep_kinds.iter().any(|k| !k.is_margin()) {
            return bad("sweep.kinds may only list margin losses".into());
        }
        if self.sweep_deltas.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return bad("sweep.deltas must be finite and >= 0".into());
        }
        if self.augment_multipliers.iter().any(|m| !m.is_finite() || *m < 1.0) {
            return bad("augment.multipliers must be >= 1".into());
        }
        match (self.ablate_mode, self.ablate_target) {
            (AblateMode::Pattern, None) => bad("ablate.mode = pattern needs ablate.target".into()),
            (AblateMode::Pattern, Some(t)) if !PATTERN_TARGETS.contains(&t) => bad(format!(
                "`{t}` cannot be ablated; choose one of {}",
                list(&PATTERN_TARGETS)
            )),
            _ => Ok(()),
        }
    }

    pub(crate) fn corpus_config(&self, lexicon: Lexicon) -> CorpusConfig {
        CorpusConfig {
            num_sentences: self.corpus.num_sentences,
            lexicon,
            mix: self.corpus.mix.clone(),
            seed: self.corpus.seed,
            lexicon_split: self.corpus.lexicon_split,
        }
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        match &self.corpus.lexicon {
            Some(p) => Lexicon::load(p),
            None => Ok(Lexicon::builtin()),
        }
    }

    fn write_section(&self, s: &mut String, sections: &[&str]) {
        let on = |name: &str| sections.contains(&name);
        let c = &self.corpus;
        let m = &self.model;
        let t = &self.train;
        if on("general") {
            writeln!(s, "out_dir = {}", self.out_dir.display()).unwrap();
            writeln!(s, "seeds = {}", list(&self.seeds)).unwrap();
            writeln!(s, "threads = {}", self.threads).unwrap();
        }
        if on("corpus") {
            writeln!(s, "corpus.num_sentences = {}", c.num_sentences).unwrap();
            writeln!(s, "corpus.seed = {}", c.seed).unwrap();
            let lex = c.lexicon.as_ref().map_or("builtin".to_string(), |p| p.display().to_string());
            writeln!(s, "corpus.lexicon = {lex}").unwrap();
            writeln!(s, "corpus.lexicon_split = {}", c.lexicon_split).unwrap();
            writeln!(s, "corpus.train_fraction = {}", c.fractions[0]).unwrap();
            writeln!(s, "corpus.dev_fraction = {}", c.fractions[1]).unwrap();
            writeln!(s, "corpus.test_fraction = {}", c.fractions[2]).unwrap();
            writeln!(s, "corpus.min_freq = {}", c.min_freq).unwrap();
            writeln!(s, "corpus.orc_multiplier = {}", c.orc_multiplier).unwrap();
            for (k, p) in &c.mix {
                writeln!(s, "corpus.mix.{k} = {p}").unwrap();
            }
        }
        if on("model") {
            writeln!(s, "model.num_layers = {}", m.num_layers).unwrap();
            writeln!(s, "model.embed_dim = {}", m.embed_dim).unwrap();
            writeln!(s, "model.hidden_dim = {}", m.hidden_dim).unwrap();
            writeln!(s, "model.dropout_embed = {}", m.dropout_embed).unwrap();
            writeln!(s, "model.dropout_hidden = {}", m.dropout_hidden).unwrap();
            writeln!(s, "model.tie_embeddings = {}", m.tie_embeddings).unwrap();
        }
        if on("loss") {
            writeln!(s, "loss.kind = {}", self.loss.kind).unwrap();
            writeln!(s, "loss.alpha = {}", self.loss.alpha).unwrap();
            writeln!(s, "loss.beta = {}", self.loss.beta).unwrap();
            writeln!(s, "loss.delta = {}", self.loss.delta).unwrap();
        }
        if on("train") {
            writeln!(s, "train.batch_size = {}", t.batch_size).unwrap();
            writeln!(s, "train.initial_lr = {}", t.initial_lr).unwrap();
            writeln!(s, "train.weight_decay = {}", t.weight_decay).unwrap();
            writeln!(s, "train.anneal_factor = {}", t.anneal_factor).unwrap();
            writeln!(s, "train.lr_floor = {}", t.lr_floor).unwrap();
            writeln!(s, "train.check_interval = {}", t.check_interval).unwrap();
            writeln!(s, "train.max_epochs = {}", t.max_epochs).unwrap();
            let clip = t.clip_norm.map_or("none".to_string(), |c| c.to_string());
            writeln!(s, "train.clip_norm = {clip}").unwrap();
        }
        if on("suite") {
            writeln!(s, "suite.per_construction = {}", self.suite.per_construction).unwrap();
            writeln!(s, "suite.seed = {}", self.suite.seed).unwrap();
            let path = self.suite.path.as_ref().map_or("none".to_string(), |p| p.display().to_string());
            writeln!(s, "suite.path = {path}").unwrap();
        }
        if on("drivers") {
            writeln!(s, "sweep.kinds = {}", list(&self.sweep_kinds)).unwrap();
            writeln!(s, "sweep.deltas = {}", list(&self.sweep_deltas)).unwrap();
            writeln!(s, "augment.multipliers = {}", list(&self.augment_multipliers)).unwrap();
        }
        if on("ablate") {
            writeln!(s, "ablate.mode = {}", self.ablate_mode.as_str()).unwrap();
            let target = self.ablate_target.map_or("none", Construction::as_str);
            writeln!(s, "ablate.target = {target}").unwrap();
        }
    }

    /// Every key with its resolved value; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_section(
            &mut s,
            &["general", "corpus", "model", "loss", "train", "suite", "drivers", "ablate"],
        );
        s
    }

    /// The keys that determine a trained checkpoint (everything but the seed list).
    pub(crate) fn training_key(&self) -> String {
        let mut s = String::new();
        self.write_section(&mut s, &["corpus", "model", "loss", "train", "ablate"]);
        s
    }

    /// The keys that determine the generated corpus files.
    pub(crate) fn corpus_key(&self) -> String {
        let mut c = self.clone();
        c.corpus.orc_multiplier = 1.0;
        let mut s = String::new();
        c.write_section(&mut s, &["corpus"]);
        s
    }

    /// First 16 hex digits of the SHA-256 of the resolved text.
    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.to_text().as_bytes());
        d.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Comment line stamped at the top of every CSV.
    pub fn csv_stamp(&self) -> String {
        format!("# config {}\n", self.hash())
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("resolved.cfg");
        let text = format!("# config {}\n{}", self.hash(), self.to_text());
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_text_round_trips() {
        let mut cfg = ExperimentConfig {
            loss: LossConfig::tuned(LossKind::TokenMargin),
            seeds: vec![3, 4],
            ablate_mode: AblateMode::Pattern,
            ablate_target: Some(Construction::AcrossPp),
            ..ExperimentConfig::default()
        };
        cfg.train.clip_norm = Some(0.25);
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::parse("model.hiden_dim = 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
        assert!(ExperimentConfig::parse("corpus.mix.across-xyz = 1").is_err());
        assert!(ExperimentConfig::parse("just words").is_err());
    }

    #[test]
    fn mix_keys_replace_the_default_mix() {
        let cfg = ExperimentConfig::parse("corpus.mix.simple = 0.5\ncorpus.mix.npi = 0.5 # halves\n").unwrap();
        assert_eq!(cfg.corpus.mix, vec![(Construction::Simple, 0.5), (Construction::Npi, 0.5)]);
        assert!(ExperimentConfig::parse("corpus.mix.simple = 0.5").is_err());
    }

    #[test]
    fn pattern_ablation_needs_a_supported_target() {
        assert!(ExperimentConfig::parse("ablate.mode = pattern").is_err());
        assert!(ExperimentConfig::parse("ablate.mode = pattern\nablate.target = npi").is_err());
        assert!(ExperimentConfig::parse("ablate.mode = pattern\nablate.target = long-vp").is_ok());
    }
}
