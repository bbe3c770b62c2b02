//! Attacks that simulate the server: adaptive epsilon enumeration, the
//! pool-wide min-max grid search, and sign verification.

use crate::aggregators::AggregatorSpec;
use crate::error::{invalid, Result};
use crate::rng::SeededRng;
use crate::vector::{check_panel, mean_of, sum_of, GradVec};

use super::{attack_epsilon_reverse, AdversaryView, AttackCost};

/// 25 log-spaced points in [1e-2, 1e2].
pub fn default_lambda_grid() -> Vec<f64> {
    (0..25).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 24.0)).collect()
}

/// Byzantine vectors first, then the honest ones.
fn panel(byzantine: &[GradVec], honest: &[GradVec]) -> Vec<GradVec> {
    byzantine.iter().chain(honest).cloned().collect()
}

fn simulate(
    rule: &AggregatorSpec,
    byzantine: &[GradVec],
    honest: &[GradVec],
    clean: &GradVec,
    rng: &mut SeededRng,
    cost: &mut AttackCost,
) -> Result<f64> {
    let full = panel(byzantine, honest);
    let out = rule.apply(&full, byzantine.len(), rng)?;
    cost.record(rule, full.len(), clean.dim());
    Ok(out.result.dot(clean))
}

/// Computes `U = agg(byzantine ++ honest)` and its alignment with the honest
/// mean. The attack succeeds when the alignment is negative.
pub fn verify_attack(
    byzantine: &[GradVec],
    honest: &[GradVec],
    agg: &AggregatorSpec,
    rng: &mut SeededRng,
    cost: &mut AttackCost,
) -> Result<(f64, bool)> {
    if honest.is_empty() {
        return invalid("verification needs honest gradients");
    }
    check_panel(&panel(byzantine, honest))?;
    let clean = mean_of(honest);
    let dot = simulate(agg, byzantine, honest, &clean, rng, cost)?;
    Ok((dot, dot < 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveChoice {
    pub byzantine: Vec<GradVec>,
    pub epsilon: f64,
    /// Simulated alignment for the chosen epsilon.
    pub dot: f64,
    pub simulated_member: usize,
}

/// Draws one known rule with the adversary's stream, simulates it for every
/// epsilon and keeps the epsilon with the smallest alignment (first on ties).
pub fn attack_adaptive(
    view: &mut AdversaryView,
    f: usize,
    epsilon_set: &[f64],
    n: usize,
    cost: &mut AttackCost,
) -> Result<AdaptiveChoice> {
    let Some(pool) = view.pool_description.clone() else {
        return invalid("adaptive attack needs the pool description");
    };
    if epsilon_set.is_empty() {
        return invalid("epsilon set must not be empty");
    }
    if f + view.honest_gradients.len() != n {
        return invalid(format!(
            "adaptive attack needs the full honest panel: f + {} != n = {n}",
            view.honest_gradients.len()
        ));
    }
    pool.validate(n, f)?;
    let member = pool.draw(view.rng());
    let rule = &pool.members()[member];
    let honest = view.honest_gradients.clone();
    let clean = mean_of(&honest);
    let mut best: Option<(f64, f64, Vec<GradVec>)> = None;
    for &eps in epsilon_set {
        let byz = attack_epsilon_reverse(view, f, eps)?;
        let dot = simulate(rule, &byz, &honest, &clean, view.rng(), cost)?;
        if best.as_ref().map_or(true, |(d, _, _)| dot < *d) {
            best = Some((dot, eps, byz));
        }
    }
    let (dot, epsilon, byzantine) = best.expect("nonempty set");
    Ok(AdaptiveChoice { byzantine, epsilon, dot, simulated_member: member })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxChoice {
    pub byzantine: Vec<GradVec>,
    pub lambda: f64,
    /// `min over grid of max over members` of the alignment with the honest mean.
    pub xi: f64,
}

/// Restricted min-max attack: all Byzantines send `-lambda * sum(honest)` and
/// lambda is chosen from the grid to minimize the worst-case (over pool
/// members) alignment with the honest mean.
pub fn attack_minmax_pool(
    view: &mut AdversaryView,
    f: usize,
    lambda_grid: &[f64],
    cost: &mut AttackCost,
) -> Result<MinMaxChoice> {
    let Some(pool) = view.pool_description.clone() else {
        return invalid("min-max attack needs the pool description");
    };
    if lambda_grid.is_empty() {
        return invalid("lambda grid must not be empty");
    }
    if view.honest_gradients.is_empty() {
        return invalid("adversary view has no honest gradients");
    }
    let honest = view.honest_gradients.clone();
    check_panel(&honest)?;
    pool.validate(f + honest.len(), f)?;
    let clean = mean_of(&honest);
    let total = sum_of(&honest);
    let mut best: Option<MinMaxChoice> = None;
    for &lambda in lambda_grid {
        let byz = vec![total.scaled(-lambda); f];
        let mut xi = f64::NEG_INFINITY;
        for rule in pool.members() {
            xi = xi.max(simulate(rule, &byz, &honest, &clean, view.rng(), cost)?);
        }
        if best.as_ref().map_or(true, |b| xi < b.xi) {
            best = Some(MinMaxChoice { byzantine: byz, lambda, xi });
        }
    }
    Ok(best.expect("nonempty grid"))
}
