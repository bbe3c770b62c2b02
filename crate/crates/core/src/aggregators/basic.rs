//! Coordinate-wise rules: mean, median and trimmed mean.

use crate::error::{invalid, Result};
use crate::vector::{check_panel, mean_of, GradVec};

pub fn agg_mean(updates: &[GradVec]) -> Result<GradVec> {
    check_panel(updates)?;
    Ok(mean_of(updates))
}

/// Ascending sort for the short, finite columns of an update panel.
fn sort_small(values: &mut [f64]) {
    if values.len() > 32 {
        values.sort_unstable_by(f64::total_cmp);
        return;
    }
    for i in 1..values.len() {
        let x = values[i];
        let mut j = i;
        while j > 0 && values[j - 1] > x {
            values[j] = values[j - 1];
            j -= 1;
        }
        values[j] = x;
    }
}

/// Median of a scalar sample; even counts average the two middle order statistics.
pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    sort_small(values);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub(crate) fn trimmed_mean_in_place(values: &mut [f64], trim: usize) -> f64 {
    sort_small(values);
    let kept = &values[trim..values.len() - trim];
    kept.iter().sum::<f64>() / kept.len() as f64
}

const BLOCK: usize = 128;
const NETWORK_MAX_N: usize = 48;

/// Sorts every coordinate column and hands the sorted rows of each block to
/// `emit` together with the block's first coordinate. Small panels use an
/// odd-even transposition network applied row-wise, which vectorizes across
/// columns.
fn sorted_blocks(updates: &[GradVec], mut emit: impl FnMut(usize, &[&[f64]])) {
    let n = updates.len();
    let dim = updates[0].dim();
    let mut block = vec![0.0; n * BLOCK];
    for start in (0..dim).step_by(BLOCK) {
        let width = BLOCK.min(dim - start);
        let rows_buf = &mut block[..n * width];
        for (row, u) in rows_buf.chunks_exact_mut(width).zip(updates) {
            row.copy_from_slice(&u.as_slice()[start..start + width]);
        }
        if n <= NETWORK_MAX_N {
            for round in 0..n {
                let mut i = round % 2;
                while i + 1 < n {
                    let (lo, hi) = rows_buf.split_at_mut((i + 1) * width);
                    let a = &mut lo[i * width..];
                    let b = &mut hi[..width];
                    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                        let (small, large) = (x.min(*y), x.max(*y));
                        *x = small;
                        *y = large;
                    }
                    i += 2;
                }
            }
        } else {
            let mut column = vec![0.0; n];
            for k in 0..width {
                for (i, slot) in column.iter_mut().enumerate() {
                    *slot = rows_buf[i * width + k];
                }
                column.sort_unstable_by(f64::total_cmp);
                for (i, &x) in column.iter().enumerate() {
                    rows_buf[i * width + k] = x;
                }
            }
        }
        let rows: Vec<&[f64]> = rows_buf.chunks_exact(width).collect();
        emit(start, &rows);
    }
}

/// Coordinate-wise median (comed).
pub fn agg_coord_median(updates: &[GradVec]) -> Result<GradVec> {
    check_panel(updates)?;
    let n = updates.len();
    let mut out = vec![0.0; updates[0].dim()];
    sorted_blocks(updates, |start, rows| {
        let dst = &mut out[start..start + rows[0].len()];
        if n % 2 == 1 {
            dst.copy_from_slice(rows[n / 2]);
        } else {
            for ((o, a), b) in dst.iter_mut().zip(rows[n / 2 - 1]).zip(rows[n / 2]) {
                *o = 0.5 * (a + b);
            }
        }
    });
    Ok(GradVec::new(out))
}

/// Drops the `trim` smallest and `trim` largest values of every coordinate and
/// averages the rest.
pub fn agg_trimmed_mean(updates: &[GradVec], trim: usize) -> Result<GradVec> {
    check_panel(updates)?;
    if updates.len() <= 2 * trim {
        return invalid(format!(
            "trimmed mean needs n > 2*trim_f (n={}, trim_f={trim})",
            updates.len()
        ));
    }
    let n = updates.len();
    let kept = (n - 2 * trim) as f64;
    let mut out = vec![0.0; updates[0].dim()];
    sorted_blocks(updates, |start, rows| {
        let dst = &mut out[start..start + rows[0].len()];
        dst.iter_mut().for_each(|o| *o = 0.0);
        for row in &rows[trim..n - trim] {
            for (o, x) in dst.iter_mut().zip(row.iter()) {
                *o += x;
            }
        }
        dst.iter_mut().for_each(|o| *o /= kept);
    });
    Ok(GradVec::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(data: &[&[f64]]) -> Vec<GradVec> {
        data.iter().map(|r| GradVec::new(r.to_vec())).collect()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(agg_mean(&rows(&[&[1.0, 2.0], &[3.0, 4.0]])).unwrap().as_slice(), &[2.0, 3.0]);
        let one = rows(&[&[0.3, -7.0]]);
        assert_eq!(agg_mean(&one).unwrap(), one[0]);
        assert!(agg_mean(&[]).is_err());
    }

    #[test]
    fn median_examples() {
        let m = agg_coord_median(&rows(&[&[1.0, 2.0], &[3.0, 4.0], &[100.0, -100.0]])).unwrap();
        assert_eq!(m.as_slice(), &[3.0, 2.0]);
        let even = agg_coord_median(&rows(&[&[1.0], &[2.0], &[3.0], &[100.0]])).unwrap();
        assert_eq!(even.as_slice(), &[2.5]);
        assert!(agg_coord_median(&[]).is_err());
    }

    #[test]
    fn trimmed_mean_examples() {
        let panel = rows(&[&[0.0], &[1.0], &[2.0], &[3.0], &[100.0]]);
        assert_eq!(agg_trimmed_mean(&panel, 1).unwrap().as_slice(), &[2.0]);
        assert_eq!(agg_trimmed_mean(&panel, 0).unwrap(), agg_mean(&panel).unwrap());
        assert!(agg_trimmed_mean(&panel[..4], 2).is_err());
    }
}
