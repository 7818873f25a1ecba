//! The LM objective and the four negative-example losses.
//!
//! Scalar reference functions sit next to the graph builders used for training.
//! In training every summed term is divided by the number of predicted tokens of
//! the mini-batch, so `L_lm` is the mean token NLL and auxiliary sums share its scale.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::PaddedBatch;
use crate::negex::Number;
use crate::numcore::{log1m_exp_clamped, log_softmax, Graph, NodeId, ParamStore, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    None,
    Binary,
    Unlikelihood,
    SentenceMargin,
    TokenMargin,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::None,
        LossKind::Binary,
        LossKind::Unlikelihood,
        LossKind::SentenceMargin,
        LossKind::TokenMargin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::None => "none",
            LossKind::Binary => "binary",
            LossKind::Unlikelihood => "unlikelihood",
            LossKind::SentenceMargin => "sentence-margin",
            LossKind::TokenMargin => "token-margin",
        }
    }

    pub fn is_margin(self) -> bool {
        matches!(self, LossKind::SentenceMargin | LossKind::TokenMargin)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown loss kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Weight of per-token terms (unlikelihood, token margin).
    pub alpha: f64,
    /// Weight of `L_add` (binary prediction, sentence margin).
    pub beta: f64,
    /// Margin for the hinge losses.
    pub delta: f64,
}

impl LossConfig {
    pub fn baseline() -> Self {
        LossConfig {
            kind: LossKind::None,
            alpha: 1.0,
            beta: 1.0,
            delta: 0.0,
        }
    }

    /// Tuned weights: β = 1 for binary prediction, α = 1000 for unlikelihood,
    /// δ = 10 with α = β = 1 for both margin losses.
    pub fn tuned(kind: LossKind) -> Self {
        match kind {
            LossKind::None => Self::baseline(),
            LossKind::Binary => LossConfig {
                kind,
                ..Self::baseline()
            },
            LossKind::Unlikelihood => LossConfig {
                kind,
                alpha: 1000.0,
                ..Self::baseline()
            },
            LossKind::SentenceMargin | LossKind::TokenMargin => LossConfig {
                kind,
                delta: 10.0,
                ..Self::baseline()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("delta", self.delta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Singular/plural classifier over top-layer LSTM states, shared by verbs and reflexives.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryHead {
    pub weight: Tensor,
    pub bias: Tensor,
}

pub const BINARY_WEIGHT: &str = "binary_head.weight";
pub const BINARY_BIAS: &str = "binary_head.bias";

impl BinaryHead {
    pub fn zeros(hidden_dim: usize) -> Self {
        BinaryHead {
            weight: Tensor::zeros(&[hidden_dim, 2]),
            bias: Tensor::zeros(&[2]),
        }
    }

    pub fn init<R: Rng + ?Sized>(hidden_dim: usize, rng: &mut R) -> Self {
        let data = (0..hidden_dim * 2)
            .map(|_| rng.random_range(-0.1..=0.1))
            .collect();
        BinaryHead {
            weight: Tensor::matrix(hidden_dim, 2, data).expect("shape"),
            bias: Tensor::zeros(&[2]),
        }
    }

    pub fn install(&self, params: &mut ParamStore) {
        params.insert(BINARY_WEIGHT, self.weight.clone());
        params.insert(BINARY_BIAS, self.bias.clone());
    }

    pub fn from_params(params: &ParamStore) -> Result<Self> {
        Ok(BinaryHead {
            weight: params.get(BINARY_WEIGHT)?.clone(),
            bias: params.get(BINARY_BIAS)?.clone(),
        })
    }

    /// `W·h + b` for one hidden vector.
    pub fn logits(&self, h: &[f64]) -> Result<[f64; 2]> {
        if self.weight.shape() != [h.len(), 2] {
            return Err(Error::Shape(format!(
                "head {:?} for hidden size {}",
                self.weight.shape(),
                h.len()
            )));
        }
        let w = self.weight.data();
        let b = self.bias.data();
        let mut out = [b[0], b[1]];
        for (i, x) in h.iter().enumerate() {
            out[0] += x * w[2 * i];
            out[1] += x * w[2 * i + 1];
        }
        Ok(out)
    }
}

/// Mean of `−log p(target)` over all predicted positions.
pub fn lm_nll(log_probs: &[Vec<f64>], targets: &[usize]) -> Result<f64> {
    if log_probs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} distributions for {} targets",
            log_probs.len(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let mut total = 0.0;
    for (lp, &t) in log_probs.iter().zip(targets) {
        let v = lp.get(t).ok_or(Error::TokenOutOfRange {
            id: t,
            vocab: lp.len(),
        })?;
        total -= v;
    }
    Ok(total / targets.len() as f64)
}

/// `Σ −log softmax(W·h + b)[label]` over target prefixes; 0 without targets.
pub fn binary_pred_loss(hidden: &[Vec<f64>], labels: &[Number], head: &BinaryHead) -> Result<f64> {
    if hidden.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} hidden states for {} labels",
            hidden.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (h, label) in hidden.iter().zip(labels) {
        let lp = log_softmax(&head.logits(h)?)?;
        total -= lp[label.index()];
    }
    Ok(total)
}

/// `−α·log(1 − p)` with `p = exp(logp_neg)` and `1 − p` floored at 1e-12.
pub fn unlikelihood_term(logp_neg: f64, alpha: f64) -> f64 {
    -alpha * log1m_exp_clamped(logp_neg).0
}

/// `max(0, δ − (logp_correct − logp_neg))`.
pub fn token_margin_term(logp_correct: f64, logp_neg: f64, delta: f64) -> f64 {
    (delta - (logp_correct - logp_neg)).max(0.0)
}

/// `max(0, δ − (log p(x) − log p(x*)))`.
pub fn sentence_margin_term(logp_x: f64, logp_xneg: f64, delta: f64) -> f64 {
    (delta - (logp_x - logp_xneg)).max(0.0)
}

/// Combines the LM loss with an auxiliary component.
///
/// Binary prediction and sentence margin weight `aux` by β. The token-level
/// kinds carry their α weighting inside `aux` already, so it is added as is.
pub fn total_loss(lm: f64, aux: f64, config: &LossConfig) -> f64 {
    match config.kind {
        LossKind::None => lm,
        LossKind::Binary | LossKind::SentenceMargin => lm + config.beta * aux,
        LossKind::Unlikelihood | LossKind::TokenMargin => lm + aux,
    }
}

/// A target word inside a padded batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenTarget {
    /// Row of the distribution that predicts the target (conditioned on the words before it).
    pub row: usize,
    pub correct: usize,
    pub negatives: Vec<usize>,
    pub number: Number,
}

fn target_pairs(targets: &[TokenTarget]) -> Vec<(usize, usize, usize)> {
    targets
        .iter()
        .flat_map(|t| t.negatives.iter().map(move |&n| (t.row, t.correct, n)))
        .collect()
}

/// `Σ −log p(target)` over the batch's predicted positions.
pub fn lm_nll_sum(g: &mut Graph<'_>, log_probs: NodeId, batch: &PaddedBatch) -> Result<NodeId> {
    let picked = g.pick(log_probs, &batch.targets)?;
    let n = batch.targets.len();
    g.weighted_sum(picked, vec![-1.0; n])
}

/// `Σ α·g(x*)` with the unlikelihood `g`; `None` when there are no negatives.
pub fn unlikelihood_sum(
    g: &mut Graph<'_>,
    log_probs: NodeId,
    targets: &[TokenTarget],
    alpha: f64,
) -> Result<Option<NodeId>> {
    let pairs = target_pairs(targets);
    if pairs.is_empty() {
        return Ok(None);
    }
    let entries: Vec<(usize, usize)> = pairs.iter().map(|&(r, _, n)| (r, n)).collect();
    let lp_neg = g.pick(log_probs, &entries)?;
    let l1m = g.log1m_exp(lp_neg);
    let n = entries.len();
    Ok(Some(g.weighted_sum(l1m, vec![-alpha; n])?))
}

/// `Σ α·max(0, δ − (log p(x) − log p(x*)))` over target/negative pairs.
pub fn token_margin_sum(
    g: &mut Graph<'_>,
    log_probs: NodeId,
    targets: &[TokenTarget],
    delta: f64,
    alpha: f64,
) -> Result<Option<NodeId>> {
    let pairs = target_pairs(targets);
    if pairs.is_empty() {
        return Ok(None);
    }
    let pos: Vec<(usize, usize)> = pairs.iter().map(|&(r, c, _)| (r, c)).collect();
    let neg: Vec<(usize, usize)> = pairs.iter().map(|&(r, _, n)| (r, n)).collect();
    let lp_pos = g.pick(log_probs, &pos)?;
    let lp_neg = g.pick(log_probs, &neg)?;
    let gap = g.sub(lp_pos, lp_neg)?;
    let hinge_arg = g.scale(gap, -1.0);
    let hinge_arg = g.add_scalar(hinge_arg, delta);
    let hinge = g.relu(hinge_arg);
    let n = pairs.len();
    Ok(Some(g.weighted_sum(hinge, vec![alpha; n])?))
}

/// `Σ −log p(num(x_i) | x_{1:i−1})` read off the hidden rows predicting each target.
pub fn binary_pred_sum(
    g: &mut Graph<'_>,
    hidden: NodeId,
    targets: &[TokenTarget],
) -> Result<Option<NodeId>> {
    if targets.is_empty() {
        return Ok(None);
    }
    let rows: Vec<usize> = targets.iter().map(|t| t.row).collect();
    let states = g.gather_rows(hidden, rows)?;
    let w = g.param(BINARY_WEIGHT)?;
    let b = g.param(BINARY_BIAS)?;
    let logits = g.matmul(states, w, false)?;
    let logits = g.add_bias(logits, b)?;
    let lp = g.log_softmax(logits)?;
    let entries: Vec<(usize, usize)> = targets
        .iter()
        .enumerate()
        .map(|(i, t)| (i, t.number.index()))
        .collect();
    let picked = g.pick(lp, &entries)?;
    let n = entries.len();
    Ok(Some(g.weighted_sum(picked, vec![-1.0; n])?))
}

/// Per-sentence log-probabilities `[batch]` of a padded batch.
pub fn sentence_logprob_node(g: &mut Graph<'_>, log_probs: NodeId, batch: &PaddedBatch) -> Result<NodeId> {
    let picked = g.pick(log_probs, &batch.targets)?;
    g.segment_sum(picked, batch.target_sentences(), batch.batch())
}

/// `Σ_j max(0, δ − (log p(x_j) − log p(x_j*)))` where the first `pairs` entries of
/// `sentence_lp` are positives and the next `pairs` their negatives.
pub fn sentence_margin_sum(
    g: &mut Graph<'_>,
    sentence_lp: NodeId,
    pairs: usize,
    delta: f64,
) -> Result<NodeId> {
    if g.value(sentence_lp).len() != 2 * pairs || pairs == 0 {
        return Err(Error::Shape(format!(
            "{} sentence scores for {pairs} pairs",
            g.value(sentence_lp).len()
        )));
    }
    let pos: Vec<(usize, usize)> = (0..pairs).map(|i| (0, i)).collect();
    let neg: Vec<(usize, usize)> = (0..pairs).map(|i| (0, pairs + i)).collect();
    let lp_pos = g.pick(sentence_lp, &pos)?;
    let lp_neg = g.pick(sentence_lp, &neg)?;
    let gap = g.sub(lp_pos, lp_neg)?;
    let arg = g.scale(gap, -1.0);
    let arg = g.add_scalar(arg, delta);
    let hinge = g.relu(arg);
    Ok(g.sum(hinge))
}
