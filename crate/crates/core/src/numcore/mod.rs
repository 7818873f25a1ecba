//! Dense tensors, a dynamic autodiff graph and the plain-SGD optimizer.

mod dropout;
pub mod gradcheck;
mod graph;
mod optim;
mod params;
mod tensor;

pub use dropout::{dropout, dropout_mask, dropout_node, Mode};
pub use graph::{log1m_exp_clamped, log_softmax, Graph, NodeId, ONE_MINUS_P_FLOOR};
pub use optim::{clip_grad_norm, sgd_step, sgd_update};
pub use params::{Gradients, ParamStore};
pub use tensor::Tensor;

