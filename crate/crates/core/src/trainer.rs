//! SGD training with dev-perplexity annealing and the negative-example losses.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::losses::{
    binary_pred_sum, lm_nll_sum, sentence_logprob_node, sentence_margin_sum, token_margin_sum,
    unlikelihood_sum, BinaryHead, LossConfig, LossKind, TokenTarget, BINARY_WEIGHT,
};
use crate::model::{forward_batch, LanguageModel, PaddedBatch};
use crate::negex::{negative_sentences, AnnotatedSentence, Number};
use crate::numcore::{clip_grad_norm, sgd_step, Graph, Mode, NodeId};
use crate::vocab::UNK_ID;

/// Learning-rate schedule description stored with every log.
pub const ANNEAL_RULE: &str =
    "halve lr when dev perplexity at a check is >= the best so far; lr never drops below lr_floor";

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub initial_lr: f64,
    pub weight_decay: f64,
    pub anneal_factor: f64,
    pub lr_floor: f64,
    /// Mini-batches between dev evaluations.
    pub check_interval: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Global gradient-norm limit; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            initial_lr: 20.0,
            weight_decay: 1.2e-6,
            anneal_factor: 0.5,
            lr_floor: 1e-4,
            check_interval: 200,
            max_epochs: 10,
            seed: 1,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if !(self.initial_lr > 0.0) || !self.initial_lr.is_finite() {
            return bad("initial_lr must be positive");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be >= 0");
        }
        if !(self.anneal_factor > 0.0 && self.anneal_factor < 1.0) {
            return bad("anneal_factor must lie in (0, 1)");
        }
        if !(self.lr_floor > 0.0) {
            return bad("lr_floor must be positive");
        }
        if self.check_interval == 0 || self.max_epochs == 0 {
            return bad("check_interval and max_epochs must be positive");
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    /// LM mini-batches processed so far.
    pub step: usize,
    /// Learning rate used during the interval ending here.
    pub lr: f64,
    /// Mean token NLL over the interval's LM batches.
    pub lm_loss: f64,
    /// Mean weighted auxiliary loss per predicted token.
    pub aux_loss: f64,
    pub dev_ppl: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
    pub best_step: usize,
    pub best_dev_ppl: f64,
    pub anneal_rule: String,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# anneal: {}\n# best_step: {}\n", self.anneal_rule, self.best_step);
        s.push_str("step,lr,lm_loss,aux_loss,dev_ppl\n");
        for r in &self.records {
            writeln!(s, "{},{},{},{},{}", r.step, r.lr, r.lm_loss, r.aux_loss, r.dev_ppl).unwrap();
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `exp(Σ NLL / #predictions)` with every sentence's EOS counted; eval mode.
pub fn perplexity(model: &LanguageModel, corpus: &[AnnotatedSentence]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let encoded: Vec<Vec<usize>> = corpus.iter().map(|s| model.encode(&s.tokens)).collect();
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    order.sort_by_key(|&i| (encoded[i].len(), i));
    let mut nll = 0.0;
    let mut count = 0usize;
    for chunk in order.chunks(64) {
        let sents: Vec<&[usize]> = chunk.iter().map(|&i| encoded[i].as_slice()).collect();
        for (lp, s) in model.sentence_logprobs(&sents)?.iter().zip(&sents) {
            nll -= lp;
            count += s.len() + 1;
        }
    }
    Ok((nll / count as f64).exp())
}

/// (position, correct id, negative ids, number).
type PreparedTarget = (usize, usize, Vec<usize>, Number);

struct Prepared {
    ids: Vec<Vec<usize>>,
    targets: Vec<Vec<PreparedTarget>>,
}

fn prepare(model: &LanguageModel, corpus: &[AnnotatedSentence]) -> Prepared {
    let ids: Vec<Vec<usize>> = corpus.iter().map(|s| model.encode(&s.tokens)).collect();
    let targets = corpus
        .iter()
        .zip(&ids)
        .map(|(s, ids)| {
            s.targets
                .iter()
                .map(|t| {
                    // A negative that is not in the vocabulary would only push down UNK.
                    let negs = model
                        .encode(&t.negatives)
                        .into_iter()
                        .filter(|&id| id != UNK_ID)
                        .collect();
                    (t.position, ids[t.position], negs, t.number)
                })
                .collect()
        })
        .collect();
    Prepared { ids, targets }
}

/// Length-grouped batches: shuffle, sort pools of 50 batches by length, cut,
/// then shuffle the batch order.
fn make_batches<R: Rng + ?Sized>(lengths: &[usize], batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..lengths.len()).collect();
    idx.shuffle(rng);
    let mut batches = Vec::new();
    for pool in idx.chunks(batch_size * 50) {
        let mut pool = pool.to_vec();
        pool.sort_by_key(|&i| lengths[i]);
        batches.extend(pool.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

/// One (positive sentence, negative sentence) pair per target negative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginPair {
    pub sentence: usize,
    pub negative: Vec<String>,
}

pub fn margin_pairs(corpus: &[AnnotatedSentence]) -> Vec<MarginPair> {
    corpus
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            negative_sentences(s).into_iter().map(move |negative| MarginPair {
                sentence: i,
                negative,
            })
        })
        .collect()
}

/// Pair batches for one epoch of the sentence-level margin loss.
///
/// Batches hold `batch_size / 2` pairs drawn without replacement from the
/// shuffled pair list, and there are at most `lm_batches / 2` of them.
pub fn schedule_margin_batches(
    num_pairs: usize,
    batch_size: usize,
    lm_batches: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<usize>> {
    if num_pairs == 0 {
        return Vec::new();
    }
    let half = (batch_size / 2).max(1);
    let mut order: Vec<usize> = (0..num_pairs).collect();
    order.shuffle(rng);
    order
        .chunks(half)
        .take(lm_batches / 2)
        .map(<[usize]>::to_vec)
        .collect()
}

fn non_finite(step: usize, what: &str, v: f64) -> Error {
    Error::NonFiniteLoss {
        step,
        detail: format!("{what} = {v}"),
    }
}

struct Trainer<'a> {
    model: &'a mut LanguageModel,
    loss: LossConfig,
    cfg: TrainConfig,
    data: Prepared,
    pairs: Vec<MarginPair>,
    dropout_rng: ChaCha8Rng,
}

impl Trainer<'_> {
    /// One LM batch; returns (token NLL sum, weighted aux sum, predicted tokens).
    fn lm_batch(&mut self, batch: &[usize], lr: f64, step: usize) -> Result<(f64, f64, usize)> {
        let sents: Vec<&[usize]> = batch.iter().map(|&i| self.data.ids[i].as_slice()).collect();
        let padded = PaddedBatch::new(&sents);
        let n_tokens = padded.targets.len();
        let bsz = padded.batch();
        let mut targets = Vec::new();
        if matches!(
            self.loss.kind,
            LossKind::Binary | LossKind::Unlikelihood | LossKind::TokenMargin
        ) {
            for (b, &i) in batch.iter().enumerate() {
                for (pos, correct, negs, number) in &self.data.targets[i] {
                    targets.push(TokenTarget {
                        row: pos * bsz + b,
                        correct: *correct,
                        negatives: negs.clone(),
                        number: *number,
                    });
                }
            }
        }
        let grads;
        let (lm_v, aux_v): (f64, f64);
        {
            let mut g = Graph::new(&self.model.params);
            let out = forward_batch(&mut g, &self.model.config, &padded, Mode::Train, &mut self.dropout_rng)?;
            let lm = lm_nll_sum(&mut g, out.log_probs, &padded)?;
            let aux: Option<NodeId> = match self.loss.kind {
                LossKind::None | LossKind::SentenceMargin => None,
                LossKind::Binary => match binary_pred_sum(&mut g, out.hidden, &targets)? {
                    Some(a) => Some(g.scale(a, self.loss.beta)),
                    None => None,
                },
                LossKind::Unlikelihood => unlikelihood_sum(&mut g, out.log_probs, &targets, self.loss.alpha)?,
                LossKind::TokenMargin => {
                    token_margin_sum(&mut g, out.log_probs, &targets, self.loss.delta, self.loss.alpha)?
                }
            };
            lm_v = g.value(lm).item();
            aux_v = aux.map_or(0.0, |a| g.value(a).item());
            if !lm_v.is_finite() {
                return Err(non_finite(step, "lm_nll_sum", lm_v));
            }
            if !aux_v.is_finite() {
                return Err(non_finite(step, "aux_sum", aux_v));
            }
            let total = match aux {
                Some(a) => g.add(lm, a)?,
                None => lm,
            };
            let loss = g.scale(total, 1.0 / n_tokens as f64);
            grads = g.backward(loss)?;
        }
        self.update(grads, lr, step)?;
        Ok((lm_v, aux_v, n_tokens))
    }

    /// One sentence-margin batch; returns the weighted hinge sum and the positive token count.
    fn margin_batch(&mut self, pair_ids: &[usize], lr: f64, step: usize) -> Result<(f64, usize)> {
        let neg_ids: Vec<Vec<usize>> = pair_ids
            .iter()
            .map(|&p| self.model.encode(&self.pairs[p].negative))
            .collect();
        let mut sents: Vec<&[usize]> = pair_ids
            .iter()
            .map(|&p| self.data.ids[self.pairs[p].sentence].as_slice())
            .collect();
        let n_pos: usize = sents.iter().map(|s| s.len() + 1).sum();
        sents.extend(neg_ids.iter().map(Vec::as_slice));
        let padded = PaddedBatch::new(&sents);
        let grads;
        let hinge_v;
        {
            let mut g = Graph::new(&self.model.params);
            let out = forward_batch(&mut g, &self.model.config, &padded, Mode::Train, &mut self.dropout_rng)?;
            let slp = sentence_logprob_node(&mut g, out.log_probs, &padded)?;
            let hinge = sentence_margin_sum(&mut g, slp, pair_ids.len(), self.loss.delta)?;
            hinge_v = self.loss.beta * g.value(hinge).item();
            if !hinge_v.is_finite() {
                return Err(non_finite(step, "sentence_margin_sum", hinge_v));
            }
            let loss = g.scale(hinge, self.loss.beta / n_pos as f64);
            grads = g.backward(loss)?;
        }
        self.update(grads, lr, step)?;
        Ok((hinge_v, n_pos))
    }

    fn update(&mut self, mut grads: crate::numcore::Gradients, lr: f64, step: usize) -> Result<()> {
        if let Some(max) = self.cfg.clip_norm {
            let norm = clip_grad_norm(&mut grads, max);
            if !norm.is_finite() {
                return Err(non_finite(step, "gradient norm", norm));
            }
        }
        sgd_step(&mut self.model.params, &grads, lr, self.cfg.weight_decay)?;
        if !self.model.params.all_finite() {
            return Err(non_finite(step, "parameters", f64::NAN));
        }
        Ok(())
    }
}

/// Trains `model` in place and leaves it at the parameters with the best dev perplexity.
///
/// For the binary kind a classifier head is added to the parameters when
/// missing. Sentence-margin batches are interleaved after every second LM batch.
pub fn train(
    model: &mut LanguageModel,
    train_set: &[AnnotatedSentence],
    dev_set: &[AnnotatedSentence],
    loss: &LossConfig,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    loss.validate()?;
    model.config.validate()?;
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(1);
    let mut margin_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    margin_rng.set_stream(2);
    if loss.kind == LossKind::Binary && !model.params.contains(BINARY_WEIGHT) {
        let mut head_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        head_rng.set_stream(3);
        BinaryHead::init(model.config.hidden_dim, &mut head_rng).install(&mut model.params);
    }
    let data = prepare(model, train_set);
    let lengths: Vec<usize> = data.ids.iter().map(Vec::len).collect();
    let pairs = if loss.kind == LossKind::SentenceMargin {
        margin_pairs(train_set)
    } else {
        Vec::new()
    };
    let mut t = Trainer {
        model,
        loss: *loss,
        cfg: cfg.clone(),
        data,
        pairs,
        dropout_rng,
    };

    let mut lr = cfg.initial_lr;
    let mut best_ppl = f64::INFINITY;
    let mut best_step = 0;
    let mut best_params = t.model.params.clone();
    let mut records = Vec::new();
    let (mut lm_sum, mut aux_sum, mut tok_sum) = (0.0, 0.0, 0usize);
    let mut step = 0usize;

    let mut check = |t: &mut Trainer, step: usize, lr: &mut f64, sums: (f64, f64, usize)| -> Result<()> {
        let dev_ppl = perplexity(t.model, dev_set)?;
        let tokens = sums.2.max(1) as f64;
        records.push(TrainRecord {
            step,
            lr: *lr,
            lm_loss: sums.0 / tokens,
            aux_loss: sums.1 / tokens,
            dev_ppl,
        });
        if dev_ppl < best_ppl {
            best_ppl = dev_ppl;
            best_step = step;
            best_params = t.model.params.clone();
        } else {
            *lr = (*lr * cfg.anneal_factor).max(cfg.lr_floor);
        }
        Ok(())
    };

    for _epoch in 0..cfg.max_epochs {
        let batches = make_batches(&lengths, cfg.batch_size, &mut shuffle_rng);
        let margin = schedule_margin_batches(t.pairs.len(), cfg.batch_size, batches.len(), &mut margin_rng);
        let mut margin_iter = margin.iter();
        for (k, batch) in batches.iter().enumerate() {
            step += 1;
            let (l, a, n) = t.lm_batch(batch, lr, step)?;
            lm_sum += l;
            aux_sum += a;
            tok_sum += n;
            if k % 2 == 1 {
                if let Some(mb) = margin_iter.next() {
                    let (h, _) = t.margin_batch(mb, lr, step)?;
                    aux_sum += h;
                }
            }
            if step.is_multiple_of(cfg.check_interval) {
                check(&mut t, step, &mut lr, (lm_sum, aux_sum, tok_sum))?;
                (lm_sum, aux_sum, tok_sum) = (0.0, 0.0, 0);
            }
        }
    }
    if !step.is_multiple_of(cfg.check_interval) {
        check(&mut t, step, &mut lr, (lm_sum, aux_sum, tok_sum))?;
    }
    t.model.params = best_params;
    Ok(TrainLog {
        records,
        best_step,
        best_dev_ppl: best_ppl,
        anneal_rule: ANNEAL_RULE.to_string(),
    })
}
