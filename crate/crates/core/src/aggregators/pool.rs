//! The randomized pool: each round the server draws one member uniformly.

use rand::Rng;

use crate::error::{config, Result};
use crate::rng::SeededRng;
use crate::vector::{GradVec, PNorm};

use super::{AggregationOutcome, AggregatorKind, AggregatorSpec};

/// Members per rule class in the standard pool.
pub const PAPER_POOL_CLASS_SIZE: usize = 16;

/// An ordered, nonempty set of rules drawn with probability 1/M each.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSpec {
    members: Vec<AggregatorSpec>,
}

impl PoolSpec {
    pub fn new(members: Vec<AggregatorSpec>) -> Result<Self> {
        if members.is_empty() {
            return config("aggregator pool must have at least one member");
        }
        Ok(PoolSpec { members })
    }

    pub fn members(&self) -> &[AggregatorSpec] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Checks every member against the panel shape; reports the first failure.
    pub fn validate(&self, n: usize, f: usize) -> Result<()> {
        for (i, m) in self.members.iter().enumerate() {
            m.validate(n, f)
                .map_err(|e| crate::Error::Config(format!("pool member {i} ({m}): {e}")))?;
        }
        Ok(())
    }

    /// Drops every member of the given classes.
    pub fn without(&self, kinds: &[AggregatorKind]) -> Result<PoolSpec> {
        PoolSpec::new(self.members.iter().filter(|m| !kinds.contains(&m.kind)).cloned().collect())
    }

    pub fn with_resample(&self, s: usize) -> PoolSpec {
        PoolSpec { members: self.members.iter().cloned().map(|m| m.with_resample(s)).collect() }
    }

    /// Draws a member index uniformly from `[0, M)`.
    pub fn draw(&self, rng: &mut SeededRng) -> usize {
        rng.gen_range(0..self.members.len())
    }
}

/// MixTailor: applies a uniformly drawn pool member. `rng` is the server stream.
pub fn agg_mixtailor(
    updates: &[GradVec],
    pool: &PoolSpec,
    f: usize,
    rng: &mut SeededRng,
) -> Result<AggregationOutcome> {
    let m = pool.draw(rng);
    let mut out = pool.members[m].apply(updates, f, rng)?;
    out.chosen_member = m;
    Ok(out)
}

/// The 64-member pool: 16 each of comed, generalized Krum, geometric median and
/// Bulyan, every member with its own p drawn uniformly from [1, 16]. The 16
/// Bulyan members cover all (selection, aggregation) pairs over
/// {Krum, mean, geometric median, comed}.
pub fn build_paper_pool(rng: &mut SeededRng) -> PoolSpec {
    let phase_rules = [
        AggregatorSpec::generalized_krum(PNorm::L2),
        AggregatorSpec::mean(),
        AggregatorSpec::geom_median(),
        AggregatorSpec::coord_median(),
    ];
    let mut members = Vec::with_capacity(4 * PAPER_POOL_CLASS_SIZE);
    let draw_p = |rng: &mut SeededRng| PNorm::new(rng.gen_range(1.0..=16.0)).expect("p in [1,16]");
    for _ in 0..PAPER_POOL_CLASS_SIZE {
        members.push(AggregatorSpec::coord_median().with_p(draw_p(rng)));
    }
    for _ in 0..PAPER_POOL_CLASS_SIZE {
        members.push(AggregatorSpec::generalized_krum(draw_p(rng)));
    }
    for _ in 0..PAPER_POOL_CLASS_SIZE {
        members.push(AggregatorSpec::geom_median().with_p(draw_p(rng)));
    }
    for j in 0..PAPER_POOL_CLASS_SIZE {
        let select = phase_rules[j / 4].clone();
        let aggregate = phase_rules[j % 4].clone();
        members.push(AggregatorSpec::bulyan(select, aggregate).with_p(draw_p(rng)));
    }
    PoolSpec { members }
}
