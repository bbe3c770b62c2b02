use rand::Rng;

use crate::error::{invalid, Result};
use crate::vector::{check_panel, mean_of, GradVec};

use super::AdversaryView;

fn honest_mean(view: &AdversaryView) -> Result<GradVec> {
    if view.honest_gradients.is_empty() {
        return invalid("adversary view has no honest gradients");
    }
    check_panel(&view.honest_gradients)?;
    Ok(mean_of(&view.honest_gradients))
}

/// `f` copies of `-epsilon * mean(honest)`.
pub fn attack_epsilon_reverse(view: &AdversaryView, f: usize, epsilon: f64) -> Result<Vec<GradVec>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return invalid(format!("epsilon must be a positive real, got {epsilon}"));
    }
    let mean = honest_mean(view)?;
    Ok(vec![mean.scaled(-epsilon); f])
}

/// Reverse attack from partial knowledge: the view holds the `k - f` honest
/// gradients the adversary can see; the `n - k` unseen honest slots are filled
/// with their mean and the attack is computed against that filled panel.
pub fn attack_partial_knowledge(view: &AdversaryView, n: usize, f: usize, epsilon: f64) -> Result<Vec<GradVec>> {
    let known = view.honest_gradients.len();
    let k = f + known;
    if known == 0 {
        return invalid(format!("partial knowledge needs k > f (k={k}, f={f})"));
    }
    if k > n {
        return invalid(format!("partial knowledge needs k <= n (k={k}, n={n})"));
    }
    let fill = honest_mean(view)?;
    let mut panel = view.honest_gradients.clone();
    panel.extend(std::iter::repeat(fill).take(n - k));
    let filled = AdversaryView {
        honest_gradients: panel,
        pool_description: None,
        rng: view.rng.clone(),
    };
    attack_epsilon_reverse(&filled, f, epsilon)
}

/// Draws epsilon uniformly from `epsilon_set` with the adversary stream.
pub fn attack_random_epsilon(view: &mut AdversaryView, f: usize, epsilon_set: &[f64]) -> Result<(Vec<GradVec>, f64)> {
    if epsilon_set.is_empty() {
        return invalid("epsilon set must not be empty");
    }
    let eps = epsilon_set[view.rng().gen_range(0..epsilon_set.len())];
    Ok((attack_epsilon_reverse(view, f, eps)?, eps))
}

/// Per coordinate `mean - z * std` of the honest gradients, population std.
pub fn attack_a_little(view: &AdversaryView, f: usize, _n: usize, z: f64) -> Result<Vec<GradVec>> {
    let honest = &view.honest_gradients;
    if honest.len() < 2 {
        return invalid("A Little needs at least 2 honest gradients");
    }
    let mean = honest_mean(view)?;
    let count = honest.len() as f64;
    let out: Vec<f64> = (0..mean.dim())
        .map(|c| {
            let var = honest.iter().map(|g| (g[c] - mean[c]).powi(2)).sum::<f64>() / count;
            mean[c] - z * var.sqrt()
        })
        .collect();
    Ok(vec![GradVec::new(out); f])
}
