//! Bulyan: iterative selection of `n - 2f` updates with a base rule, then a
//! per-coordinate aggregation over the `n - 4f` selected values closest to the
//! coordinate median.

use crate::error::{invalid, Result};
use crate::vector::{check_panel, pdistance, GradVec};

use super::basic::{median_in_place, trimmed_mean_in_place};
use super::geomed::{agg_geom_median, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use super::krum::clamped_krum_index;
use super::{AggregatorKind, AggregatorSpec};

pub fn check_bulyan_shape(n: usize, f: usize) -> Result<()> {
    if n < 4 * f + 3 {
        return invalid(format!("Bulyan needs n >= 4f+3 (n={n}, f={f})"));
    }
    Ok(())
}

/// Index (into `candidates`) of the update picked by one selection step.
fn select_one(candidates: &[GradVec], rule: &AggregatorSpec, f: usize) -> Result<usize> {
    let target = match rule.kind {
        AggregatorKind::GeneralizedKrum => return clamped_krum_index(candidates, rule.p, f),
        AggregatorKind::Mean => super::basic::agg_mean(candidates)?,
        AggregatorKind::CoordMedian => super::basic::agg_coord_median(candidates)?,
        AggregatorKind::TrimmedMean => {
            let trim = rule.trim_f.min((candidates.len() - 1) / 2);
            super::basic::agg_trimmed_mean(candidates, trim)?
        }
        AggregatorKind::GeomMedian => agg_geom_median(candidates, DEFAULT_TOL, DEFAULT_MAX_ITERS)?,
        AggregatorKind::Bulyan => return invalid("Bulyan cannot be nested inside Bulyan"),
    };
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let d = pdistance(c, &target, 2.0);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    Ok(best)
}

/// Applies the aggregation-phase rule to one coordinate's window of values.
fn aggregate_scalars(values: &mut [f64], rule: &AggregatorSpec, f: usize) -> Result<f64> {
    Ok(match rule.kind {
        AggregatorKind::Mean => values.iter().sum::<f64>() / values.len() as f64,
        AggregatorKind::CoordMedian => median_in_place(values),
        AggregatorKind::TrimmedMean => {
            if values.len() <= 2 * rule.trim_f {
                return invalid(format!(
                    "Bulyan window of {} values is too small for trim_f={}",
                    values.len(),
                    rule.trim_f
                ));
            }
            trimmed_mean_in_place(values, rule.trim_f)
        }
        AggregatorKind::GeomMedian | AggregatorKind::GeneralizedKrum => {
            let points: Vec<GradVec> = values.iter().map(|&v| GradVec::new(vec![v])).collect();
            if rule.kind == AggregatorKind::GeomMedian {
                agg_geom_median(&points, DEFAULT_TOL, DEFAULT_MAX_ITERS)?[0]
            } else {
                values[clamped_krum_index(&points, rule.p, f)?]
            }
        }
        AggregatorKind::Bulyan => return invalid("Bulyan cannot be nested inside Bulyan"),
    })
}

/// Indices of the `n - 2f` updates chosen by iterated application of `select`,
/// in selection order.
pub fn bulyan_selection(updates: &[GradVec], f: usize, select: &AggregatorSpec) -> Result<Vec<usize>> {
    check_panel(updates)?;
    check_bulyan_shape(updates.len(), f)?;
    let theta = updates.len() - 2 * f;
    let mut remaining: Vec<usize> = (0..updates.len()).collect();
    let mut chosen = Vec::with_capacity(theta);
    for _ in 0..theta {
        let candidates: Vec<GradVec> = remaining.iter().map(|&i| updates[i].clone()).collect();
        let pick = select_one(&candidates, select, f)?;
        chosen.push(remaining.remove(pick));
    }
    Ok(chosen)
}

pub fn agg_bulyan(
    updates: &[GradVec],
    f: usize,
    select: &AggregatorSpec,
    aggregate: &AggregatorSpec,
) -> Result<GradVec> {
    let dim = check_panel(updates)?;
    let mut selected = bulyan_selection(updates, f, select)?;
    selected.sort_unstable();
    let theta = selected.len();
    let beta = theta - 2 * f;

    let mut out = Vec::with_capacity(dim);
    let mut column = vec![0.0; theta];
    let mut order: Vec<usize> = (0..theta).collect();
    let mut window = vec![0.0; beta];
    for c in 0..dim {
        for (slot, &i) in column.iter_mut().zip(&selected) {
            *slot = updates[i][c];
        }
        let mut scratch = column.clone();
        let med = median_in_place(&mut scratch);
        order.sort_by(|&a, &b| {
            (column[a] - med).abs().total_cmp(&(column[b] - med).abs()).then(a.cmp(&b))
        });
        let mut picked: Vec<usize> = order[..beta].to_vec();
        picked.sort_unstable();
        for (w, &k) in window.iter_mut().zip(&picked) {
            *w = column[k];
        }
        out.push(aggregate_scalars(&mut window, aggregate, f)?);
    }
    Ok(GradVec::new(out))
}
