//! Numerical evaluation of the almost-sure convergence hypotheses on a probe
//! grid. Diagnostic only.

use crate::aggregators::Aggregation;
use crate::attacks::AttackSpec;
use crate::error::{invalid, Result};
use crate::harness::LrSchedule;
use crate::vector::GradVec;

use super::{capital_lambda, mc_bias_estimate, noniid_constants, BoundInputs, GaussianPanel};

/// An objective with a closed-form gradient.
pub trait Objective {
    fn gradient(&self, w: &GradVec) -> GradVec;
}

/// `F(w) = ||w - center||^2 / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub center: GradVec,
}

impl Objective for Quadratic {
    fn gradient(&self, w: &GradVec) -> GradVec {
        w.sub(&self.center)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem3Report {
    pub probes: usize,
    /// `min over grid of w^T grad F / (||w|| ||grad F||)`.
    pub min_cosine: f64,
    pub inf_expected_update_sq: f64,
    pub inf_grad_sq: f64,
    /// `C1 + C2 Lambda`.
    pub bias_bound: f64,
    pub beta: f64,
    /// `inf ||E[U]||^2 + inf ||grad F||^2 - (C1 + C2 Lambda) - beta`.
    pub margin: f64,
    pub lr_sum_diverges: bool,
    pub lr_sq_sum_converges: bool,
}

/// Evaluates the hypotheses at every probe `w` with `||w||^2 >= radius_sq`.
/// `E[U(w)]` is estimated by Monte Carlo on a Gaussian panel centred on the
/// closed-form gradient, using `inputs` for shape and variances.
#[allow(clippy::too_many_arguments)]
pub fn theorem3_condition_report(
    radius_sq: f64,
    grid: &[GradVec],
    objective: &dyn Objective,
    agg: &Aggregation,
    inputs: &BoundInputs,
    beta: f64,
    schedule: LrSchedule,
    trials: usize,
    seed: u64,
) -> Result<Theorem3Report> {
    if grid.is_empty() {
        return invalid("probe grid is empty");
    }
    let (c1, c2) = noniid_constants(inputs)?;
    let bias_bound = c1 + c2 * capital_lambda(inputs.n, inputs.f, inputs.d, inputs.p)?;
    let mut min_cosine = f64::INFINITY;
    let mut inf_update = f64::INFINITY;
    let mut inf_grad = f64::INFINITY;
    for (k, w) in grid.iter().enumerate() {
        if w.dim() != inputs.d {
            return invalid(format!("probe {k} has dimension {}, expected {}", w.dim(), inputs.d));
        }
        let wsq = w.dot(w);
        if wsq < radius_sq {
            return invalid(format!("probe {k} has ||w||^2 = {wsq} < R = {radius_sq}"));
        }
        let g = objective.gradient(w);
        let gnorm = g.norm2();
        let cos = if gnorm == 0.0 { 0.0 } else { w.dot(&g) / (wsq.sqrt() * gnorm) };
        min_cosine = min_cosine.min(cos);
        inf_grad = inf_grad.min(gnorm * gnorm);
        let model = GaussianPanel { true_grad: g, sigma2: inputs.sigma2, delta2: inputs.delta2, n: inputs.n, f: inputs.f };
        let est = mc_bias_estimate(agg, &model, &AttackSpec::None, trials, seed.wrapping_add(k as u64))?;
        inf_update = inf_update.min(est.mean_update.dot(&est.mean_update));
    }
    let (lr_sum_diverges, lr_sq_sum_converges) = schedule.robbins_monro();
    Ok(Theorem3Report {
        probes: grid.len(),
        min_cosine,
        inf_expected_update_sq: inf_update,
        inf_grad_sq: inf_grad,
        bias_bound,
        beta,
        margin: inf_update + inf_grad - bias_bound - beta,
        lr_sum_diverges,
        lr_sq_sum_converges,
    })
}
