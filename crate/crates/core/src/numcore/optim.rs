use super::params::{Gradients, ParamStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// `p ← p − lr·(g + weight_decay·p)`, element-wise.
pub fn sgd_update(p: &mut Tensor, g: &Tensor, lr: f64, weight_decay: f64) -> Result<()> {
    if !p.same_shape(g) {
        return Err(Error::Shape(format!(
            "parameter {:?} vs gradient {:?}",
            p.shape(),
            g.shape()
        )));
    }
    for (w, d) in p.data_mut().iter_mut().zip(g.data()) {
        *w -= lr * (d + weight_decay * *w);
    }
    Ok(())
}

/// Applies [`sgd_update`] to every parameter of the store.
pub fn sgd_step(
    params: &mut ParamStore,
    grads: &Gradients,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Shape(format!(
            "{} parameters vs {} gradients",
            params.len(),
            grads.len()
        )));
    }
    for i in 0..params.len() {
        sgd_update(params.by_index_mut(i), grads.by_index(i), lr, weight_decay)?;
    }
    Ok(())
}

/// Rescales gradients so their global L2 norm is at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(p: f64, g: f64, lr: f64, wd: f64) -> f64 {
        let mut t = Tensor::scalar(p);
        sgd_update(&mut t, &Tensor::scalar(g), lr, wd).unwrap();
        t.item()
    }

    #[test]
    fn hand_computed_updates() {
        assert_eq!(step(1.0, 0.0, 1.0, 0.0), 1.0);
        assert_eq!(step(2.0, 1.0, 0.5, 0.0), 1.5);
        assert!((step(1.0, 0.0, 1.0, 0.1) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = Tensor::zeros(&[2]);
        assert!(sgd_update(&mut p, &Tensor::zeros(&[3]), 1.0, 0.0).is_err());
    }

    #[test]
    fn clipping_caps_the_norm() {
        let mut ps = ParamStore::new();
        ps.insert("a", Tensor::zeros(&[2]));
        let mut g = Gradients::zeros_like(&ps);
        g.by_index_mut(0).data_mut().copy_from_slice(&[3.0, 4.0]);
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
    }
}
