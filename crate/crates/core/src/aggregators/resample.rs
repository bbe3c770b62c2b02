use rand::seq::SliceRandom;

use crate::rng::SeededRng;
use crate::vector::{mean_of, GradVec};

/// Replaces each of the n updates by the average of `s` updates drawn so that
/// every input is used exactly `s` times overall (a random permutation of the
/// multiset with `s` copies of each index, cut into groups of `s`).
///
/// `s <= 1` returns the inputs unchanged and in order.
pub fn resample(updates: &[GradVec], s: usize, rng: &mut SeededRng) -> Vec<GradVec> {
    resample_groups(updates.len(), s, rng)
        .map(|groups| {
            groups
                .iter()
                .map(|g| {
                    let members: Vec<GradVec> = g.iter().map(|&i| updates[i].clone()).collect();
                    mean_of(&members)
                })
                .collect()
        })
        .unwrap_or_else(|| updates.to_vec())
}

/// The index groups behind [`resample`]; `None` when `s <= 1`.
pub fn resample_groups(n: usize, s: usize, rng: &mut SeededRng) -> Option<Vec<Vec<usize>>> {
    if s <= 1 || n == 0 {
        return None;
    }
    let mut slots: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat(i).take(s)).collect();
    slots.shuffle(rng);
    Some(slots.chunks(s).map(|c| c.to_vec()).collect())
}
