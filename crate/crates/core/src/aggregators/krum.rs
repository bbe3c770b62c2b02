//! Generalized Krum: pick the worker whose `n - f - 2` nearest neighbours are
//! closest in squared l_p distance.

use crate::error::{invalid, Result};
use crate::vector::{pairwise_distances, DistanceMatrix, GradVec, PNorm};

use super::AggregationOutcome;

/// Indices of the `k` nearest other workers of `i`, ordered by distance then index.
fn nearest(dist: &DistanceMatrix, i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..dist.size()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| dist.get(i, a).total_cmp(&dist.get(i, b)).then(a.cmp(&b)));
    others.truncate(k);
    others
}

fn check_krum_shape(n: usize, f: usize) -> Result<()> {
    if n <= 2 * f + 2 {
        return invalid(format!("generalized Krum needs n > 2f+2 (n={n}, f={f})"));
    }
    Ok(())
}

/// The neighbour set used for each worker's score.
pub fn krum_neighbor_sets(updates: &[GradVec], p: PNorm, f: usize) -> Result<Vec<Vec<usize>>> {
    check_krum_shape(updates.len(), f)?;
    let dist = pairwise_distances(updates, p)?;
    let k = updates.len() - f - 2;
    Ok((0..updates.len()).map(|i| nearest(&dist, i, k)).collect())
}

/// Scores with an explicit neighbour count (`1 <= neighbors < n`).
pub(crate) fn scores_with_neighbors(dist: &DistanceMatrix, neighbors: usize) -> Vec<f64> {
    (0..dist.size())
        .map(|i| {
            nearest(dist, i, neighbors)
                .into_iter()
                .map(|j| dist.get(i, j).powi(2))
                .sum()
        })
        .collect()
}

/// First index of the minimum score.
pub(crate) fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    best
}

pub fn krum_scores(updates: &[GradVec], p: PNorm, f: usize) -> Result<Vec<f64>> {
    check_krum_shape(updates.len(), f)?;
    let dist = pairwise_distances(updates, p)?;
    Ok(scores_with_neighbors(&dist, updates.len() - f - 2))
}

pub fn agg_generalized_krum(updates: &[GradVec], p: PNorm, f: usize) -> Result<AggregationOutcome> {
    let scores = krum_scores(updates, p, f)?;
    let best = argmin(&scores);
    Ok(AggregationOutcome {
        result: updates[best].clone(),
        chosen_member: 0,
        selected_worker: Some(best),
    })
}

/// Krum with the neighbour count clamped into `[1, n-1]`, for use on the
/// shrinking candidate sets inside Bulyan where `n > 2f+2` need not hold.
pub(crate) fn clamped_krum_index(updates: &[GradVec], p: PNorm, f: usize) -> Result<usize> {
    let n = updates.len();
    if n == 1 {
        return Ok(0);
    }
    let neighbors = n.saturating_sub(f + 2).clamp(1, n - 1);
    let dist = pairwise_distances(updates, p)?;
    Ok(argmin(&scores_with_neighbors(&dist, neighbors)))
}
