use rand::Rng;

use super::graph::{Graph, NodeId};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::DropoutRate(rate));
    }
    Ok(())
}

/// Inverted dropout mask: 0 with probability `rate`, else `1 / (1 - rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_rate(rate)?;
    let keep = 1.0 / (1.0 - rate);
    Ok((0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect())
}

/// Inverted dropout on a plain tensor. Identity in eval mode or when `rate == 0`.
pub fn dropout<R: Rng + ?Sized>(t: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> Result<Tensor> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(t.clone());
    }
    let mask = dropout_mask(t.len(), rate, rng)?;
    let data = t.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
    Tensor::new(t.shape().to_vec(), data)
}

/// Graph version of [`dropout`]; returns `x` itself when dropout is inactive.
pub fn dropout_node<R: Rng + ?Sized>(
    g: &mut Graph<'_>,
    x: NodeId,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<NodeId> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x);
    }
    let mask = dropout_mask(g.value(x).len(), rate, rng)?;
    g.mul_const(x, mask)
}
