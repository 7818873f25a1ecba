//! Central finite-difference gradient checking.
//!
//! The numerical side only ever evaluates the forward pass, so it stays
//! independent of [`Graph::backward`].

use super::graph::{Graph, NodeId};
use super::params::ParamStore;
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Largest relative error seen, with the parameter name and flat index where it occurred.
    pub max_rel_error: f64,
    pub worst: Option<(String, usize)>,
    /// Analytic and numeric gradient at the worst entry.
    pub worst_values: (f64, f64),
    pub checked: usize,
}

/// Relative error `|a − n| / max(|a|, |n|, floor)`.
///
/// The floor keeps entries whose true gradient is zero from dividing round-off by zero.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `backward` against central differences with the given `step` on every
/// element of every parameter.
pub fn check_gradients<F>(params: &mut ParamStore, step: f64, floor: f64, build: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_>) -> Result<NodeId>,
{
    let analytic = {
        let mut g = Graph::new(params);
        let loss = build(&mut g)?;
        g.backward(loss)?
    };
    let eval = |ps: &ParamStore| -> Result<f64> {
        let mut g = Graph::new(ps);
        let loss = build(&mut g)?;
        Ok(g.value(loss).item())
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        worst_values: (0.0, 0.0),
        checked: 0,
    };
    for p in 0..params.len() {
        for i in 0..params.by_index(p).len() {
            let orig = params.by_index(p).data()[i];
            params.by_index_mut(p).data_mut()[i] = orig + step;
            let plus = eval(params)?;
            params.by_index_mut(p).data_mut()[i] = orig - step;
            let minus = eval(params)?;
            params.by_index_mut(p).data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(analytic.by_index(p).data()[i], numeric, floor);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((params.name(p).to_string(), i));
                report.worst_values = (analytic.by_index(p).data()[i], numeric);
            }
        }
    }
    Ok(report)
}
