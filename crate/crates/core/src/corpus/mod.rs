//! Synthetic annotated corpora with controllable construction frequencies.

mod generate;
mod grammar;
mod lexicon;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::negex::{AnnotatedSentence, Construction};
use crate::vocab::Vocabulary;

pub(crate) use generate::Sampler;
pub use generate::MAX_SENTENCE_LEN;
pub use grammar::AgreementChecker;
pub use lexicon::{Entry, Lexicon, Noun, Split, VerbPhrase, DETERMINERS, REFLEXIVES};

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub num_sentences: usize,
    pub lexicon: Lexicon,
    /// Construction → probability; probabilities sum to 1.
    pub mix: Vec<(Construction, f64)>,
    pub seed: u64,
    /// Draw content words of non-simple sentences from the training-only lexicon,
    /// so test-suite words appear only in simple sentences.
    pub lexicon_split: bool,
}

impl CorpusConfig {
    /// Object RCs make up 2% of the default mix.
    pub fn default_mix() -> Vec<(Construction, f64)> {
        vec![
            (Construction::Simple, 0.30),
            (Construction::InComplement, 0.08),
            (Construction::ShortVp, 0.08),
            (Construction::LongVp, 0.06),
            (Construction::AcrossPp, 0.12),
            (Construction::AcrossSrc, 0.12),
            (Construction::AcrossOrc, 0.01),
            (Construction::AcrossOrcNoThat, 0.01),
            (Construction::Reflexive, 0.12),
            (Construction::Npi, 0.10),
        ]
    }

    pub fn new(num_sentences: usize, seed: u64) -> Self {
        CorpusConfig {
            num_sentences,
            lexicon: Lexicon::builtin(),
            mix: Self::default_mix(),
            seed,
            lexicon_split: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sentences == 0 {
            return Err(Error::Config("num_sentences must be positive".into()));
        }
        let mut seen = Vec::new();
        let mut total = 0.0;
        for &(c, p) in &self.mix {
            if c == Construction::None {
                return Err(Error::Config("mix cannot contain `none`".into()));
            }
            if seen.contains(&c) {
                return Err(Error::Config(format!("`{c}` listed twice in mix")));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Config(format!("bad probability {p} for `{c}`")));
            }
            seen.push(c);
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("mix sums to {total}, not 1")));
        }
        self.lexicon.validate()?;
        if self.lexicon_split {
            self.lexicon.restricted(Some(Split::Train)).validate()?;
        }
        Ok(())
    }

    /// Probability of a construction in the mix (0 when absent).
    pub fn share(&self, c: Construction) -> f64 {
        self.mix.iter().find(|(k, _)| *k == c).map_or(0.0, |(_, p)| *p)
    }
}

fn sample_construction<R: Rng + ?Sized>(mix: &[(Construction, f64)], rng: &mut R) -> Construction {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for &(c, p) in mix {
        acc += p;
        if r < acc {
            return c;
        }
    }
    mix.iter().rev().find(|(_, p)| *p > 0.0).expect("validated mix").0
}

struct Generator {
    full: Lexicon,
    train_only: Option<Lexicon>,
}

impl Generator {
    fn new(config: &CorpusConfig) -> Self {
        Generator {
            full: config.lexicon.clone(),
            train_only: config
                .lexicon_split
                .then(|| config.lexicon.restricted(Some(Split::Train))),
        }
    }

    fn one<R: Rng + ?Sized>(&self, c: Construction, rng: &mut R) -> Result<AnnotatedSentence> {
        let lex = match (&self.train_only, c) {
            (Some(t), c) if c != Construction::Simple => t,
            _ => &self.full,
        };
        Sampler::new(lex).sentence(c, rng).finish(c)
    }
}

/// Generates `num_sentences` sentences with construction tags drawn from the mix.
pub fn generate_synthetic(config: &CorpusConfig) -> Result<Vec<AnnotatedSentence>> {
    config.validate()?;
    let g = Generator::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.num_sentences)
        .map(|_| {
            let c = sample_construction(&config.mix, &mut rng);
            g.one(c, &mut rng)
        })
        .collect()
}

/// Appends `extra` fresh object-RC sentences, half with `that` and half without
/// (the odd one out gets `that`).
pub fn augment_orc(
    corpus: &[AnnotatedSentence],
    extra: usize,
    config: &CorpusConfig,
) -> Result<Vec<AnnotatedSentence>> {
    let mut out = corpus.to_vec();
    if extra == 0 {
        return Ok(out);
    }
    config.validate()?;
    let g = Generator::new(config);
    // A stream distinct from the one used for the base corpus.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    for i in 0..extra {
        let c = if i % 2 == 0 {
            Construction::AcrossOrc
        } else {
            Construction::AcrossOrcNoThat
        };
        out.push(g.one(c, &mut rng)?);
    }
    Ok(out)
}

/// Vocabulary over all tokens of the corpus.
pub fn build_vocab(corpus: &[AnnotatedSentence], min_freq: usize) -> Vocabulary {
    Vocabulary::from_tokens(corpus.iter().flat_map(|s| s.tokens.iter()), min_freq)
}

/// Shuffles and cuts the corpus into train/dev/test parts.
///
/// Sizes are `floor(f·n)` for dev and test; train takes the remainder.
pub fn split(
    corpus: &[AnnotatedSentence],
    fractions: [f64; 3],
    seed: u64,
) -> Result<[Vec<AnnotatedSentence>; 3]> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0)
        || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!("bad split fractions {fractions:?}")));
    }
    let n = corpus.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_dev = (fractions[1] * n as f64 + 1e-9).floor() as usize;
    let n_test = (fractions[2] * n as f64 + 1e-9).floor() as usize;
    let n_train = n - n_dev - n_test;
    let take = |r: std::ops::Range<usize>| order[r].iter().map(|&i| corpus[i].clone()).collect();
    Ok([
        take(0..n_train),
        take(n_train..n_train + n_dev),
        take(n_train + n_dev..n),
    ])
}

/// Number of sentences carrying each construction tag.
pub fn construction_counts(corpus: &[AnnotatedSentence]) -> Vec<(Construction, usize)> {
    Construction::ALL
        .iter()
        .map(|&c| (c, corpus.iter().filter(|s| s.construction == c).count()))
        .collect()
}
