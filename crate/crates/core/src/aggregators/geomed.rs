//! Approximate geometric median by smoothed Weiszfeld iteration.

use crate::error::{invalid, Result};
use crate::vector::{check_panel, mean_of, pdistance, GradVec};

/// Lower bound on distances in the Weiszfeld weights.
pub const SMOOTHING_NU: f64 = 1e-8;
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Sum of Euclidean distances from `z` to every update.
pub fn weber_objective(z: &[f64], updates: &[GradVec]) -> f64 {
    updates.iter().map(|u| pdistance(z, u, 2.0)).sum()
}

/// Minimizes `sum_i ||z - u_i||_2` starting from the mean. Stops once an
/// iterate moves less than `tol`, or after `max_iters` steps, and returns the
/// iterate with the smallest objective seen.
pub fn agg_geom_median(updates: &[GradVec], tol: f64, max_iters: usize) -> Result<GradVec> {
    let dim = check_panel(updates)?;
    if !(tol > 0.0) {
        return invalid(format!("geometric median tolerance must be positive, got {tol}"));
    }
    if updates.len() == 1 {
        return Ok(updates[0].clone());
    }
    let mut z = mean_of(updates);
    let mut best = z.clone();
    let mut best_obj = f64::INFINITY;
    let mut next = vec![0.0; dim];
    for _ in 0..max_iters {
        let mut obj = 0.0;
        let mut weight_sum = 0.0;
        next.iter_mut().for_each(|v| *v = 0.0);
        for u in updates {
            let d = pdistance(&z, u, 2.0);
            obj += d;
            let w = 1.0 / d.max(SMOOTHING_NU);
            weight_sum += w;
            for (acc, x) in next.iter_mut().zip(u.iter()) {
                *acc += w * x;
            }
        }
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&z);
        }
        next.iter_mut().for_each(|v| *v /= weight_sum);
        let step = pdistance(&next, &z, 2.0);
        z.as_mut_slice().copy_from_slice(&next);
        if step < tol {
            break;
        }
    }
    if weber_objective(&z, updates) < best_obj {
        best = z;
    }
    Ok(optimal_update(updates).unwrap_or(best))
}

/// The exact minimizer when it is attained at updates. `u_k` minimizes the
/// objective iff the summed unit vectors pointing from the other updates to it
/// have norm at most the number of copies of `u_k`. Collinear panels with an
/// even split have a segment of minimizers whose endpoints are both updates;
/// its midpoint is returned so the result does not depend on panel order.
fn optimal_update(updates: &[GradVec]) -> Option<GradVec> {
    let dim = updates[0].dim();
    let mut pull = vec![0.0; dim];
    let mut optimal: Vec<&GradVec> = Vec::new();
    for u in updates {
        pull.iter_mut().for_each(|v| *v = 0.0);
        let mut copies = 0.0;
        for other in updates {
            let d = pdistance(u, other, 2.0);
            if d == 0.0 {
                copies += 1.0;
                continue;
            }
            for ((acc, a), b) in pull.iter_mut().zip(u.iter()).zip(other.iter()) {
                *acc += (a - b) / d;
            }
        }
        if pull.iter().map(|v| v * v).sum::<f64>().sqrt() <= copies && !optimal.contains(&u) {
            optimal.push(u);
        }
    }
    optimal.sort_by(|a, b| {
        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    match optimal.as_slice() {
        [] => None,
        [only] => Some((*only).clone()),
        [first, .., last] => Some(GradVec::new(first.iter().zip(last.iter()).map(|(a, b)| 0.5 * (a + b)).collect())),
    }
}
