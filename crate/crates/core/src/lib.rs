//! Language-model training with explicit negative examples.
//!
//! The crate bundles a small reverse-mode autodiff engine ([`numcore`]), an LSTM
//! language model ([`model`]), negative-example construction ([`negex`]), the
//! auxiliary losses ([`losses`]), a synthetic annotated corpus generator
//! ([`corpus`]), minimal-pair syntactic evaluation ([`syneval`]), the SGD
//! training loop ([`trainer`]) and the experiment drivers behind the CLI
//! ([`experiment`]).

// `!(x > 0.0)` is how the validators reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod model;
pub mod negex;
pub mod numcore;
pub mod syneval;
pub mod trainer;
pub mod vocab;

pub use error::{Error, Result};
