//! Closed-form bias bounds for generalized Krum, the pool-size condition for
//! randomized aggregation, and Monte Carlo estimators that check them.

mod montecarlo;
mod convergence;

pub use montecarlo::{
    mc_bias_estimate, mc_moment_ratio, mc_resilience_margin, BiasEstimate, GaussianPanel, MarginEstimate,
};
pub use convergence::{theorem3_condition_report, Objective, Quadratic, Theorem3Report};

use crate::error::{invalid, Result};

/// Inputs of the bound calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub f: usize,
    pub d: usize,
    pub p: f64,
    /// Per-worker gradient variance bound `E||V_i - grad F||^2`.
    pub sigma2: f64,
    /// Inter-client heterogeneity.
    pub delta2: f64,
}

impl BoundInputs {
    pub fn new(n: usize, f: usize, d: usize, p: f64) -> Self {
        BoundInputs { n, f, d, p, sigma2: 1.0, delta2: 0.0 }
    }

    pub fn with_variances(mut self, sigma2: f64, delta2: f64) -> Self {
        self.sigma2 = sigma2;
        self.delta2 = delta2;
        self
    }

    fn check(&self) -> Result<()> {
        if self.n <= 2 * self.f + 2 {
            return invalid(format!("n > 2f+2 violated (n={}, f={})", self.n, self.f));
        }
        if self.d == 0 {
            return invalid("d >= 1 violated");
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return invalid(format!("p >= 1 violated (p={})", self.p));
        }
        if !(self.sigma2 >= 0.0) || !(self.delta2 >= 0.0) {
            return invalid("variances must be nonnegative");
        }
        Ok(())
    }
}

/// `C(n, f) = 1 + 2f / (n - 2f - 2)`.
pub fn worker_count_factor(n: usize, f: usize) -> Result<f64> {
    if n <= 2 * f + 2 {
        return invalid(format!("n > 2f+2 violated (n={n}, f={f})"));
    }
    Ok(1.0 + 2.0 * f as f64 / (n - 2 * f - 2) as f64)
}

/// `Lambda(n,f,d,p) = d^((max(p,2) - min(p,2)) / p) * C(n,f)`.
pub fn capital_lambda(n: usize, f: usize, d: usize, p: f64) -> Result<f64> {
    BoundInputs::new(n, f, d, p).check()?;
    let exponent = (p.max(2.0) - p.min(2.0)) / p;
    Ok((d as f64).powf(exponent) * worker_count_factor(n, f)?)
}

/// iid bound on `||E[U] - grad F||^2`: `2 sigma^2 (1 + Lambda)`.
pub fn iid_bias_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.check()?;
    let lambda = capital_lambda(inputs.n, inputs.f, inputs.d, inputs.p)?;
    Ok(2.0 * inputs.sigma2 * (1.0 + lambda))
}

/// The non-iid constants `(C1, C2)`.
pub fn noniid_constants(inputs: &BoundInputs) -> Result<(f64, f64)> {
    inputs.check()?;
    let n = inputs.n as f64;
    let f = inputs.f as f64;
    let c1 = 6.0 * inputs.sigma2 + 2.0 * (n - f + 3.0 + 2.0 * (n - f) / (n - 2.0 * f - 2.0)) * inputs.delta2;
    let c2 = 4.0 * inputs.sigma2 + 8.0 * (n - f) * inputs.delta2;
    Ok((c1, c2))
}

/// non-iid bound on `||E[U] - grad F||^2`: `C1 + C2 Lambda`.
pub fn noniid_bias_bound(inputs: &BoundInputs) -> Result<f64> {
    let (c1, c2) = noniid_constants(inputs)?;
    Ok(c1 + c2 * capital_lambda(inputs.n, inputs.f, inputs.d, inputs.p)?)
}

/// Pool-size threshold `q (1 + lambda L / beta_min)`: a pool with strictly more
/// members than this stays resilient when `q` of its rules are compromised.
#[allow(non_snake_case)]
pub fn mixtailor_sufficient_M(q: usize, lambda_sup: f64, lipschitz: f64, beta_min: f64) -> Result<f64> {
    if !(beta_min > 0.0) {
        return invalid(format!("beta_min > 0 violated (beta_min={beta_min})"));
    }
    if q == 0 {
        return invalid("q >= 1 violated");
    }
    if !(lambda_sup >= 0.0) || !(lipschitz > 0.0) {
        return invalid("lambda >= 0 and L > 0 required");
    }
    Ok(q as f64 * (1.0 + lambda_sup * lipschitz / beta_min))
}
