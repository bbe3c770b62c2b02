//! Flat gradient vectors, p-norms and pairwise distance tables.

use std::ops::{Deref, Index};

use crate::error::{invalid, Result};

/// A flat d-dimensional update vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradVec(Vec<f64>);

impl GradVec {
    pub fn new(values: Vec<f64>) -> Self {
        GradVec(values)
    }

    pub fn zeros(dim: usize) -> Self {
        GradVec(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &GradVec) -> f64 {
        dot(&self.0, &other.0)
    }

    /// Euclidean norm (overflow-safe).
    pub fn norm2(&self) -> f64 {
        scaled_pnorm(&self.0, 2.0)
    }

    pub fn scaled(&self, factor: f64) -> GradVec {
        GradVec(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn sub(&self, other: &GradVec) -> GradVec {
        GradVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &GradVec) -> GradVec {
        GradVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, other: &GradVec, factor: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
    }
}

impl From<Vec<f64>> for GradVec {
    fn from(values: Vec<f64>) -> Self {
        GradVec(values)
    }
}

impl Deref for GradVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for GradVec {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One worker's submission for a round. `honest` is simulation metadata; the
/// server path only ever receives the gradients (see [`WorkerUpdate::gradients`]).
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerUpdate {
    pub worker_id: usize,
    pub gradient: GradVec,
    pub honest: bool,
}

impl WorkerUpdate {
    /// Strips the honesty flags, leaving the panel the server sees.
    pub fn gradients(updates: &[WorkerUpdate]) -> Vec<GradVec> {
        updates.iter().map(|u| u.gradient.clone()).collect()
    }
}

/// Exponent of an l_p norm, p >= 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PNorm(f64);

impl PNorm {
    pub const L1: PNorm = PNorm(1.0);
    pub const L2: PNorm = PNorm(2.0);

    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return invalid(format!("norm exponent must be a finite real >= 1, got {p}"));
        }
        Ok(PNorm(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for PNorm {
    fn default() -> Self {
        PNorm::L2
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(sum |x_i|^p)^(1/p)` with the largest magnitude factored out so that large p
/// and large entries do not overflow. Requires finite input and p > 0.
pub(crate) fn scaled_pnorm(x: &[f64], p: f64) -> f64 {
    let max = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let sum: f64 = if p == 2.0 {
        x.iter().map(|v| (v / max) * (v / max)).sum()
    } else if p == 1.0 {
        x.iter().map(|v| v.abs() / max).sum()
    } else {
        x.iter().map(|v| (v.abs() / max).powf(p)).sum()
    };
    if p == 1.0 {
        max * sum
    } else if p == 2.0 {
        max * sum.sqrt()
    } else {
        max * sum.powf(1.0 / p)
    }
}

/// `||a - b||_p` without allocating the difference.
pub(crate) fn pdistance(a: &[f64], b: &[f64], p: f64) -> f64 {
    let max = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if max == 0.0 {
        return 0.0;
    }
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs() / max);
    if p == 2.0 {
        max * diffs.map(|v| v * v).sum::<f64>().sqrt()
    } else if p == 1.0 {
        max * diffs.sum::<f64>()
    } else {
        max * diffs.map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// The l_p norm of `x`.
pub fn pnorm(x: &[f64], p: PNorm) -> Result<f64> {
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return invalid(format!("non-finite entry {bad} in vector"));
    }
    Ok(scaled_pnorm(x, p.0))
}

/// Checks that every vector in the panel is finite and shares one dimension.
/// Returns that dimension.
pub fn check_panel(updates: &[GradVec]) -> Result<usize> {
    let Some(first) = updates.first() else {
        return invalid("empty update panel");
    };
    let dim = first.dim();
    for (i, u) in updates.iter().enumerate() {
        if u.dim() != dim {
            return invalid(format!(
                "dimension mismatch: update {i} has {} entries, expected {dim}",
                u.dim()
            ));
        }
        if !u.is_finite() {
            return invalid(format!("update {i} has a non-finite entry"));
        }
    }
    Ok(dim)
}

/// Symmetric matrix of pairwise l_p distances, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

pub fn pairwise_distances(updates: &[GradVec], p: PNorm) -> Result<DistanceMatrix> {
    if updates.len() < 2 {
        return invalid("pairwise distances need at least 2 updates");
    }
    check_panel(updates)?;
    let n = updates.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pdistance(&updates[i], &updates[j], p.0);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Evaluates `||x||_q <= ||x||_p <= d^(1/p - 1/q) ||x||_q` with 1e-9 relative slack.
pub fn norm_sandwich_check(x: &[f64], p: f64, q: f64) -> Result<bool> {
    if !(p > 0.0 && p < q && q.is_finite()) {
        return invalid(format!("norm sandwich needs 0 < p < q, got p={p}, q={q}"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("non-finite entry in vector");
    }
    const SLACK: f64 = 1e-9;
    let np = scaled_pnorm(x, p);
    let nq = scaled_pnorm(x, q);
    let d = x.len().max(1) as f64;
    let upper = d.powf(1.0 / p - 1.0 / q) * nq;
    Ok(nq <= np * (1.0 + SLACK) && np <= upper * (1.0 + SLACK))
}

/// Coordinate-wise mean of a nonempty, equal-dimension panel.
pub(crate) fn mean_of(updates: &[GradVec]) -> GradVec {
    let dim = updates[0].dim();
    let mut acc = vec![0.0; dim];
    for u in updates {
        for (a, v) in acc.iter_mut().zip(u.iter()) {
            *a += v;
        }
    }
    let k = updates.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    GradVec(acc)
}

pub(crate) fn sum_of(updates: &[GradVec]) -> GradVec {
    let dim = updates[0].dim();
    let mut acc = vec![0.0; dim];
    for u in updates {
        for (a, v) in acc.iter_mut().zip(u.iter()) {
            *a += v;
        }
    }
    GradVec(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> PNorm {
        PNorm::new(v).unwrap()
    }

    #[test]
    fn pnorm_examples() {
        assert_eq!(pnorm(&[3.0, 4.0], p(2.0)).unwrap(), 5.0);
        assert_eq!(pnorm(&[1.0, 1.0, 1.0, 1.0], p(1.0)).unwrap(), 4.0);
        let v = pnorm(&[1.0, -2.0, 2.0], p(4.0)).unwrap();
        assert!((v - 33f64.powf(0.25)).abs() < 1e-12);
        assert!((v - 2.39678).abs() < 1e-5);
    }

    #[test]
    fn pnorm_rejects_non_finite() {
        assert!(pnorm(&[1.0, f64::NAN], PNorm::L2).is_err());
        assert!(pnorm(&[f64::INFINITY], PNorm::L1).is_err());
        assert!(PNorm::new(0.5).is_err());
        assert!(PNorm::new(f64::NAN).is_err());
    }

    #[test]
    fn pnorm_large_p_and_large_entries_do_not_overflow() {
        let x = [1e200, -1e200, 3e199];
        let v = pnorm(&x, p(16.0)).unwrap();
        assert!(v.is_finite() && v > 1e200);
        assert_eq!(pnorm(&[0.0, 0.0], p(16.0)).unwrap(), 0.0);
    }

    #[test]
    fn pairwise_examples() {
        let u: Vec<GradVec> = [0.0, 3.0, 7.0].iter().map(|&v| GradVec::new(vec![v])).collect();
        let m = pairwise_distances(&u, PNorm::L1).unwrap();
        assert_eq!(
            m.to_rows(),
            vec![vec![0.0, 3.0, 7.0], vec![3.0, 0.0, 4.0], vec![7.0, 4.0, 0.0]]
        );
        let same = vec![GradVec::new(vec![1.0, 2.0]); 2];
        let m = pairwise_distances(&same, PNorm::L2).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn pairwise_errors() {
        let u = vec![GradVec::new(vec![1.0]), GradVec::new(vec![1.0, 2.0])];
        assert!(pairwise_distances(&u, PNorm::L2).is_err());
        assert!(pairwise_distances(&u[..1], PNorm::L2).is_err());
    }

    #[test]
    fn sandwich_examples() {
        assert!(norm_sandwich_check(&[1.0, 1.0, 1.0, 1.0], 1.0, 2.0).unwrap());
        assert!(norm_sandwich_check(&[5.0, 0.0, 0.0], 1.5, 7.0).unwrap());
        assert!(norm_sandwich_check(&[1.0], 2.0, 1.0).is_err());
    }
}
