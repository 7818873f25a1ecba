//! Multi-layer LSTM language model with tied input/output embeddings.
//!
//! Sentences are modelled on their own: a BOS symbol is fed first and the model
//! predicts every token followed by EOS, so a sentence of `n` tokens yields
//! `n + 1` predictive distributions.

mod checkpoint;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numcore::{dropout_node, Graph, Mode, NodeId, ParamStore, Tensor};
use crate::vocab::{Vocabulary, BOS_ID, EOS_ID};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, MAGIC};

#[derive(Clone, Debug, PartialEq)]
pub struct LmConfig {
    pub num_layers: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub vocab_size: usize,
    pub dropout_embed: f64,
    pub dropout_hidden: f64,
    pub tie_embeddings: bool,
}

impl LmConfig {
    /// Two layers, 64-dimensional embeddings, 128 hidden units.
    pub fn desk(vocab_size: usize) -> Self {
        LmConfig {
            num_layers: 2,
            embed_dim: 64,
            hidden_dim: 128,
            vocab_size,
            dropout_embed: 0.1,
            dropout_hidden: 0.1,
            tie_embeddings: true,
        }
    }

    /// Three layers, 400-dimensional embeddings, 1150 hidden units.
    pub fn full_size(vocab_size: usize) -> Self {
        LmConfig {
            num_layers: 3,
            embed_dim: 400,
            hidden_dim: 1150,
            ..Self::desk(vocab_size)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.embed_dim == 0 || self.hidden_dim == 0 || self.vocab_size == 0
        {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        for r in [self.dropout_embed, self.dropout_hidden] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::DropoutRate(r));
            }
        }
        Ok(())
    }

    fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embed_dim
        } else {
            self.hidden_dim
        }
    }
}

pub const EMBEDDING: &str = "embedding";
pub const OUTPUT_PROJECTION: &str = "output.projection";
pub const OUTPUT_WEIGHT: &str = "output.weight";
pub const OUTPUT_BIAS: &str = "output.bias";

fn lstm_name(layer: usize, part: &str) -> String {
    format!("lstm.{layer}.{part}")
}

/// Model configuration, vocabulary and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageModel {
    pub config: LmConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore,
}

/// Graph nodes produced by a batched forward pass.
///
/// Rows are laid out step-major: row `t * batch + b` belongs to sentence `b` at step `t`.
#[derive(Clone, Copy, Debug)]
pub struct BatchOutput {
    pub log_probs: NodeId,
    pub hidden: NodeId,
    pub steps: usize,
    pub batch: usize,
}

impl BatchOutput {
    pub fn row(&self, step: usize, sentence: usize) -> usize {
        step * self.batch + sentence
    }
}

/// Padded batch of sentences prepared for [`forward_batch`].
#[derive(Clone, Debug)]
pub struct PaddedBatch {
    pub lengths: Vec<usize>,
    /// `steps * batch` input ids, step-major.
    pub inputs: Vec<usize>,
    /// `(row, target id)` for every non-padding prediction, in row order.
    pub targets: Vec<(usize, usize)>,
    pub steps: usize,
}

impl PaddedBatch {
    pub fn new(sentences: &[&[usize]]) -> Self {
        let batch = sentences.len();
        let lengths: Vec<usize> = sentences.iter().map(|s| s.len()).collect();
        let steps = lengths.iter().copied().max().unwrap_or(0) + 1;
        let mut inputs = vec![EOS_ID; steps * batch];
        let mut targets = Vec::new();
        for t in 0..steps {
            for (b, s) in sentences.iter().enumerate() {
                let row = t * batch + b;
                if t == 0 {
                    inputs[row] = BOS_ID;
                } else if t <= s.len() {
                    inputs[row] = s[t - 1];
                }
                if t < s.len() {
                    targets.push((row, s[t]));
                } else if t == s.len() {
                    targets.push((row, EOS_ID));
                }
            }
        }
        PaddedBatch {
            lengths,
            inputs,
            targets,
            steps,
        }
    }

    pub fn batch(&self) -> usize {
        self.lengths.len()
    }

    /// Sentence index of every entry of `targets`.
    pub fn target_sentences(&self) -> Vec<usize> {
        self.targets.iter().map(|(r, _)| r % self.batch()).collect()
    }
}

/// Samples fresh parameters: weights uniform in [-0.1, 0.1], zero biases, forget-gate bias 1.
pub fn init_params<R: Rng + ?Sized>(config: &LmConfig, rng: &mut R) -> Result<ParamStore> {
    config.validate()?;
    let mut uniform = |shape: &[usize]| -> Tensor {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-0.1..=0.1)).collect();
        Tensor::new(shape.to_vec(), data).expect("shape")
    };
    let (v, e, h) = (config.vocab_size, config.embed_dim, config.hidden_dim);
    let mut ps = ParamStore::new();
    ps.insert(EMBEDDING, uniform(&[v, e]));
    for l in 0..config.num_layers {
        ps.insert(lstm_name(l, "w_input"), uniform(&[config.layer_input_dim(l), 4 * h]));
        ps.insert(lstm_name(l, "w_hidden"), uniform(&[h, 4 * h]));
        let mut bias = Tensor::zeros(&[4 * h]);
        bias.data_mut()[h..2 * h].fill(1.0);
        ps.insert(lstm_name(l, "bias"), bias);
    }
    if config.tie_embeddings {
        ps.insert(OUTPUT_PROJECTION, uniform(&[h, e]));
    } else {
        ps.insert(OUTPUT_WEIGHT, uniform(&[v, h]));
    }
    ps.insert(OUTPUT_BIAS, Tensor::zeros(&[v]));
    Ok(ps)
}

/// All-zero parameters with the layout of [`init_params`]; the model is then uniform.
pub fn zero_params(config: &LmConfig) -> Result<ParamStore> {
    config.validate()?;
    let mut ps = init_params(config, &mut no_rng())?;
    for i in 0..ps.len() {
        ps.by_index_mut(i).data_mut().fill(0.0);
    }
    Ok(ps)
}

/// Records a batched forward pass on `g`.
pub fn forward_batch<R: Rng + ?Sized>(
    g: &mut Graph<'_>,
    config: &LmConfig,
    batch: &PaddedBatch,
    mode: Mode,
    rng: &mut R,
) -> Result<BatchOutput> {
    let v = config.vocab_size;
    if let Some(&id) = batch.inputs.iter().find(|&&id| id >= v) {
        return Err(Error::TokenOutOfRange { id, vocab: v });
    }
    if let Some(&(_, id)) = batch.targets.iter().find(|(_, id)| *id >= v) {
        return Err(Error::TokenOutOfRange { id, vocab: v });
    }
    let (bsz, steps, h) = (batch.batch(), batch.steps, config.hidden_dim);

    let table = g.param(EMBEDDING)?;
    let emb = g.embedding(table, &batch.inputs)?;
    let mut layer_in = dropout_node(g, emb, config.dropout_embed, mode, rng)?;

    for l in 0..config.num_layers {
        let w_in = g.param(&lstm_name(l, "w_input"))?;
        let w_h = g.param(&lstm_name(l, "w_hidden"))?;
        let bias = g.param(&lstm_name(l, "bias"))?;
        let xw = g.matmul(layer_in, w_in, false)?;
        let xw = g.add_bias(xw, bias)?;

        let mut outputs = Vec::with_capacity(steps);
        let mut state: Option<(NodeId, NodeId)> = None;
        for t in 0..steps {
            let mut gates = g.slice_rows(xw, t * bsz, bsz)?;
            if let Some((h_prev, _)) = state {
                let hw = g.matmul(h_prev, w_h, false)?;
                gates = g.add(gates, hw)?;
            }
            let i_pre = g.slice_cols(gates, 0, h)?;
            let f_pre = g.slice_cols(gates, h, h)?;
            let g_pre = g.slice_cols(gates, 2 * h, h)?;
            let o_pre = g.slice_cols(gates, 3 * h, h)?;
            let i_gate = g.sigmoid(i_pre);
            let cand = g.tanh(g_pre);
            let o_gate = g.sigmoid(o_pre);
            let mut c = g.mul(i_gate, cand)?;
            if let Some((_, c_prev)) = state {
                let f_gate = g.sigmoid(f_pre);
                let kept = g.mul(f_gate, c_prev)?;
                c = g.add(c, kept)?;
            }
            let squashed = g.tanh(c);
            let h_t = g.mul(o_gate, squashed)?;
            outputs.push(h_t);
            state = Some((h_t, c));
        }
        let stacked = g.concat_rows(&outputs)?;
        layer_in = dropout_node(g, stacked, config.dropout_hidden, mode, rng)?;
    }

    let hidden = layer_in;
    let out_bias = g.param(OUTPUT_BIAS)?;
    let logits = if config.tie_embeddings {
        let proj = g.param(OUTPUT_PROJECTION)?;
        let projected = g.matmul(hidden, proj, false)?;
        g.matmul(projected, table, true)?
    } else {
        let w = g.param(OUTPUT_WEIGHT)?;
        g.matmul(hidden, w, true)?
    };
    let logits = g.add_bias(logits, out_bias)?;
    let log_probs = g.log_softmax(logits)?;
    Ok(BatchOutput {
        log_probs,
        hidden,
        steps,
        batch: bsz,
    })
}

impl LanguageModel {
    pub fn new<R: Rng + ?Sized>(config: LmConfig, vocab: Vocabulary, rng: &mut R) -> Result<Self> {
        check_vocab(&config, &vocab)?;
        let params = init_params(&config, rng)?;
        Ok(LanguageModel {
            config,
            vocab,
            params,
        })
    }

    /// A model whose parameters are all zero, i.e. uniform over the vocabulary.
    pub fn uniform(config: LmConfig, vocab: Vocabulary) -> Result<Self> {
        check_vocab(&config, &vocab)?;
        let params = zero_params(&config)?;
        Ok(LanguageModel {
            config,
            vocab,
            params,
        })
    }

    /// `n + 1` log-probability vectors for a sentence of `n` token ids.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tokens: &[usize],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        let batch = PaddedBatch::new(&[tokens]);
        let mut g = Graph::new(&self.params);
        let out = forward_batch(&mut g, &self.config, &batch, mode, rng)?;
        let lp = g.value(out.log_probs);
        Ok((0..out.steps).map(|t| lp.row(t).to_vec()).collect())
    }

    /// Top-layer hidden vectors; index `t` is the state that predicts token `t`.
    pub fn hidden_states(&self, tokens: &[usize]) -> Result<Vec<Vec<f64>>> {
        let batch = PaddedBatch::new(&[tokens]);
        let mut g = Graph::new(&self.params);
        let out = forward_batch(&mut g, &self.config, &batch, Mode::Eval, &mut no_rng())?;
        let hv = g.value(out.hidden);
        Ok((0..out.steps).map(|t| hv.row(t).to_vec()).collect())
    }

    /// Sum of next-token log-probabilities, EOS included.
    pub fn sentence_logprob(&self, tokens: &[usize]) -> Result<f64> {
        Ok(self.sentence_logprobs(&[tokens])?[0])
    }

    /// [`Self::sentence_logprob`] for several sentences scored in one padded batch.
    pub fn sentence_logprobs(&self, sentences: &[&[usize]]) -> Result<Vec<f64>> {
        if sentences.is_empty() {
            return Ok(Vec::new());
        }
        let batch = PaddedBatch::new(sentences);
        let mut g = Graph::new(&self.params);
        let out = forward_batch(&mut g, &self.config, &batch, Mode::Eval, &mut no_rng())?;
        let lp = g.value(out.log_probs);
        let v = self.config.vocab_size;
        let mut sums = vec![0.0; sentences.len()];
        for &(row, id) in &batch.targets {
            sums[row % batch.batch()] += lp.data()[row * v + id];
        }
        Ok(sums)
    }

    /// Token ids for a whitespace-split sentence (unknown words map to UNK).
    pub fn encode(&self, words: &[impl AsRef<str>]) -> Vec<usize> {
        self.vocab.encode(words)
    }
}

fn check_vocab(config: &LmConfig, vocab: &Vocabulary) -> Result<()> {
    if config.vocab_size != vocab.len() {
        return Err(Error::VocabMismatch(format!(
            "config says {} entries, vocabulary has {}",
            config.vocab_size,
            vocab.len()
        )));
    }
    Ok(())
}

/// Eval-mode passes draw no random numbers; this generator is never consulted.
pub(crate) fn no_rng() -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(0)
}
