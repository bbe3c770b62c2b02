//! Monte Carlo estimates over synthetic Gaussian gradient panels.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::aggregators::Aggregation;
use crate::attacks::{AdversaryView, AttackCost, AttackSpec};
use crate::error::{invalid, Result};
use crate::rng::{SeededRng, Stream};
use crate::vector::{mean_of, GradVec};

/// Honest worker `i` sends `grad F + offset_i + noise` with isotropic Gaussian
/// noise of total variance `sigma2` (so `E||V_i - grad F - offset_i||^2 = sigma2`).
/// Offsets are zero-mean with average squared norm `delta2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPanel {
    pub true_grad: GradVec,
    pub sigma2: f64,
    pub delta2: f64,
    pub n: usize,
    pub f: usize,
}

impl GaussianPanel {
    pub fn iid(true_grad: GradVec, sigma2: f64, n: usize, f: usize) -> Self {
        GaussianPanel { true_grad, sigma2, delta2: 0.0, n, f }
    }

    fn check(&self) -> Result<()> {
        if self.n <= self.f || self.true_grad.dim() == 0 {
            return invalid("panel needs n > f and d >= 1");
        }
        if !(self.sigma2 >= 0.0 && self.delta2 >= 0.0) {
            return invalid("variances must be nonnegative");
        }
        Ok(())
    }

    /// Fixed per-worker offsets for `count` workers.
    fn offsets(&self, count: usize, rng: &mut SeededRng) -> Vec<GradVec> {
        let d = self.true_grad.dim();
        if self.delta2 == 0.0 || count < 2 {
            return vec![GradVec::zeros(d); count];
        }
        let raw: Vec<GradVec> = (0..count)
            .map(|_| GradVec::new((0..d).map(|_| rng.sample(StandardNormal)).collect()))
            .collect();
        let centre = mean_of(&raw);
        let centred: Vec<GradVec> = raw.iter().map(|r| r.sub(&centre)).collect();
        let mean_sq = centred.iter().map(|c| c.dot(c)).sum::<f64>() / count as f64;
        let scale = (self.delta2 / mean_sq).sqrt();
        centred.iter().map(|c| c.scaled(scale)).collect()
    }

    fn sample(&self, offsets: &[GradVec], rng: &mut SeededRng) -> Vec<GradVec> {
        let d = self.true_grad.dim();
        let sd = (self.sigma2 / d as f64).sqrt();
        offsets
            .iter()
            .map(|o| {
                GradVec::new(
                    (0..d)
                        .map(|c| {
                            let z: f64 = rng.sample(StandardNormal);
                            self.true_grad[c] + o[c] + sd * z
                        })
                        .collect(),
                )
            })
            .collect()
    }
}

/// Runs `trials` rounds; calls `visit` with each aggregate and the honest panel.
fn run_trials(
    agg: &Aggregation,
    model: &GaussianPanel,
    attack: &AttackSpec,
    trials: usize,
    seed: u64,
    mut visit: impl FnMut(&GradVec, &[GradVec]),
) -> Result<()> {
    model.check()?;
    agg.validate(model.n, model.f)?;
    attack.validate(model.n, model.f)?;
    let mut data = SeededRng::new(seed, Stream::MonteCarlo);
    let mut server = SeededRng::new(seed, Stream::ServerPool);
    let honest_count = if attack.is_none() { model.n } else { model.n - model.f };
    let offsets = model.offsets(honest_count, &mut data);
    let mut view = AdversaryView::new(Vec::new(), Some(agg.known_rules()), SeededRng::new(seed, Stream::Attack))?;
    let mut cost = AttackCost::default();
    for _ in 0..trials {
        let honest = model.sample(&offsets, &mut data);
        let panel = if attack.is_none() {
            honest.clone()
        } else {
            view.set_honest(honest.clone());
            let mut panel = attack.generate(&mut view, model.n, model.f, &mut cost)?.byzantine;
            panel.extend(honest.iter().cloned());
            panel
        };
        let out = agg.apply(&panel, model.f, &mut server)?;
        visit(&out.result, &honest);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginEstimate {
    pub mean_dot: f64,
    pub std_err: f64,
}

impl MarginEstimate {
    /// Resilient when the alignment is positive by more than 3 standard errors.
    pub fn resilient(&self) -> bool {
        self.mean_dot - 3.0 * self.std_err > 0.0
    }
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let t = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / t;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0).max(1.0);
    (mean, (var / t).sqrt())
}

/// Estimates `E[U]^T grad F` under the given attack.
pub fn mc_resilience_margin(
    agg: &Aggregation,
    model: &GaussianPanel,
    attack: &AttackSpec,
    trials: usize,
    seed: u64,
) -> Result<MarginEstimate> {
    if trials < 100 {
        return invalid(format!("need at least 100 trials, got {trials}"));
    }
    let mut dots = Vec::with_capacity(trials);
    run_trials(agg, model, attack, trials, seed, |u, _| dots.push(u.dot(&model.true_grad)))?;
    let (mean_dot, std_err) = mean_and_se(&dots);
    Ok(MarginEstimate { mean_dot, std_err })
}

/// Empirical `E||U||^r / E||G||^r`, where G is one honest gradient.
pub fn mc_moment_ratio(
    agg: &Aggregation,
    model: &GaussianPanel,
    attack: &AttackSpec,
    r: u32,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(2..=4).contains(&r) {
        return invalid(format!("moment order must be 2, 3 or 4, got {r}"));
    }
    if trials < 100 {
        return invalid(format!("need at least 100 trials, got {trials}"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    run_trials(agg, model, attack, trials, seed, |u, honest| {
        num += u.norm2().powi(r as i32);
        den += honest.iter().map(|g| g.norm2().powi(r as i32)).sum::<f64>() / honest.len() as f64;
    })?;
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasEstimate {
    /// `||mean(U) - grad F||^2`.
    pub squared_bias: f64,
    /// Propagated 1-sigma Monte Carlo error of `squared_bias`:
    /// `sum_c (2 |b_c| s_c + s_c^2)` with `s_c` the standard error of coordinate c.
    pub mc_error: f64,
    pub mean_update: GradVec,
}

pub fn mc_bias_estimate(
    agg: &Aggregation,
    model: &GaussianPanel,
    attack: &AttackSpec,
    trials: usize,
    seed: u64,
) -> Result<BiasEstimate> {
    if trials < 2 {
        return invalid("need at least 2 trials");
    }
    let d = model.true_grad.dim();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    run_trials(agg, model, attack, trials, seed, |u, _| {
        for c in 0..d {
            sum[c] += u[c];
            sum_sq[c] += u[c] * u[c];
        }
    })?;
    let t = trials as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / t).collect();
    let mut squared_bias = 0.0;
    let mut mc_error = 0.0;
    for c in 0..d {
        let b = mean[c] - model.true_grad[c];
        let var = ((sum_sq[c] - t * mean[c] * mean[c]) / (t - 1.0)).max(0.0);
        let se = (var / t).sqrt();
        squared_bias += b * b;
        mc_error += 2.0 * b.abs() * se + se * se;
    }
    Ok(BiasEstimate { squared_bias, mc_error, mean_update: GradVec::new(mean) })
}
