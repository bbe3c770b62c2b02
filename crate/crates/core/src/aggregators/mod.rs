//! Robust aggregation rules and the randomized MixTailor pool.

mod basic;
mod bulyan;
mod descriptor;
mod geomed;
mod krum;
mod pool;
mod resample;

use std::fmt;

pub use basic::{agg_coord_median, agg_mean, agg_trimmed_mean};
pub use bulyan::{agg_bulyan, bulyan_selection};
pub use descriptor::{parse_aggregator, AggregatorDescriptor};
pub use geomed::{agg_geom_median, weber_objective, DEFAULT_MAX_ITERS, DEFAULT_TOL, SMOOTHING_NU};
pub use krum::{agg_generalized_krum, krum_neighbor_sets, krum_scores};
pub use pool::{agg_mixtailor, build_paper_pool, PoolSpec, PAPER_POOL_CLASS_SIZE};
pub use resample::{resample, resample_groups};

use crate::error::{config, Result};
use crate::rng::SeededRng;
use crate::vector::{check_panel, GradVec, PNorm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregatorKind {
    Mean,
    CoordMedian,
    TrimmedMean,
    GeneralizedKrum,
    GeomMedian,
    Bulyan,
}

impl AggregatorKind {
    pub fn name(self) -> &'static str {
        match self {
            AggregatorKind::Mean => "mean",
            AggregatorKind::CoordMedian => "comed",
            AggregatorKind::TrimmedMean => "trimmedmean",
            AggregatorKind::GeneralizedKrum => "krum",
            AggregatorKind::GeomMedian => "geomed",
            AggregatorKind::Bulyan => "bulyan",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "mean" | "average" | "fedavg" => AggregatorKind::Mean,
            "comed" | "coordmedian" | "median" => AggregatorKind::CoordMedian,
            "trimmedmean" | "trimmed" => AggregatorKind::TrimmedMean,
            "krum" | "generalizedkrum" => AggregatorKind::GeneralizedKrum,
            "geomed" | "geommedian" | "rfa" => AggregatorKind::GeomMedian,
            "bulyan" => AggregatorKind::Bulyan,
            _ => return None,
        })
    }
}

/// One deterministic aggregation rule with its parameters.
///
/// `p` only changes the distances of generalized Krum (directly or as a Bulyan
/// phase rule); it is carried by every rule so randomized pools can record it.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorSpec {
    pub kind: AggregatorKind,
    pub p: PNorm,
    pub trim_f: usize,
    pub bulyan_select: Option<Box<AggregatorSpec>>,
    pub bulyan_aggregate: Option<Box<AggregatorSpec>>,
    /// Resampling factor applied before the rule; 1 disables resampling.
    pub resample_s: usize,
}

impl AggregatorSpec {
    fn simple(kind: AggregatorKind) -> Self {
        AggregatorSpec {
            kind,
            p: PNorm::L2,
            trim_f: 0,
            bulyan_select: None,
            bulyan_aggregate: None,
            resample_s: 1,
        }
    }

    pub fn mean() -> Self {
        Self::simple(AggregatorKind::Mean)
    }

    pub fn coord_median() -> Self {
        Self::simple(AggregatorKind::CoordMedian)
    }

    pub fn trimmed_mean(trim_f: usize) -> Self {
        AggregatorSpec { trim_f, ..Self::simple(AggregatorKind::TrimmedMean) }
    }

    pub fn generalized_krum(p: PNorm) -> Self {
        AggregatorSpec { p, ..Self::simple(AggregatorKind::GeneralizedKrum) }
    }

    pub fn geom_median() -> Self {
        Self::simple(AggregatorKind::GeomMedian)
    }

    pub fn bulyan(select: AggregatorSpec, aggregate: AggregatorSpec) -> Self {
        AggregatorSpec {
            bulyan_select: Some(Box::new(select)),
            bulyan_aggregate: Some(Box::new(aggregate)),
            ..Self::simple(AggregatorKind::Bulyan)
        }
    }

    /// Sets the norm, including on Bulyan's phase rules.
    pub fn with_p(mut self, p: PNorm) -> Self {
        self.p = p;
        for phase in [&mut self.bulyan_select, &mut self.bulyan_aggregate].into_iter().flatten() {
            phase.p = p;
        }
        self
    }

    pub fn with_resample(mut self, s: usize) -> Self {
        self.resample_s = s;
        self
    }

    /// Checks that this rule can run on every panel of `n` updates with `f` Byzantines.
    pub fn validate(&self, n: usize, f: usize) -> Result<()> {
        if self.resample_s == 0 {
            return config("resampling factor s must be >= 1");
        }
        if n == 0 {
            return config("aggregation needs at least one update");
        }
        match self.kind {
            AggregatorKind::Mean | AggregatorKind::CoordMedian | AggregatorKind::GeomMedian => Ok(()),
            AggregatorKind::TrimmedMean if n <= 2 * self.trim_f => config(format!(
                "trimmed mean needs n > 2*trim_f (n={n}, trim_f={})",
                self.trim_f
            )),
            AggregatorKind::TrimmedMean => Ok(()),
            AggregatorKind::GeneralizedKrum if n <= 2 * f + 2 => {
                config(format!("generalized Krum needs n > 2f+2 (n={n}, f={f})"))
            }
            AggregatorKind::GeneralizedKrum => Ok(()),
            AggregatorKind::Bulyan => {
                if n < 4 * f + 3 {
                    return config(format!("Bulyan needs n >= 4f+3 (n={n}, f={f})"));
                }
                let (Some(select), Some(aggregate)) = (&self.bulyan_select, &self.bulyan_aggregate) else {
                    return config("Bulyan needs both a selection and an aggregation rule");
                };
                for phase in [select, aggregate] {
                    if phase.kind == AggregatorKind::Bulyan {
                        return config("Bulyan phase rules cannot themselves be Bulyan");
                    }
                }
                let window = n - 4 * f;
                if aggregate.kind == AggregatorKind::TrimmedMean && window <= 2 * aggregate.trim_f {
                    return config(format!(
                        "Bulyan aggregation window of {window} values is too small for trim_f={}",
                        aggregate.trim_f
                    ));
                }
                Ok(())
            }
        }
    }

    /// Runs the rule (after optional resampling). `rng` is only consumed when
    /// `resample_s > 1`.
    pub fn apply(&self, updates: &[GradVec], f: usize, rng: &mut SeededRng) -> Result<AggregationOutcome> {
        check_panel(updates)?;
        self.validate(updates.len(), f)
            .map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
        if self.resample_s > 1 {
            let mixed = resample(updates, self.resample_s, rng);
            let mut out = self.apply_rule(&mixed, f)?;
            // indices refer to the resampled panel, not to workers
            out.selected_worker = None;
            return Ok(out);
        }
        self.apply_rule(updates, f)
    }

    fn apply_rule(&self, updates: &[GradVec], f: usize) -> Result<AggregationOutcome> {
        let result = match self.kind {
            AggregatorKind::Mean => agg_mean(updates)?,
            AggregatorKind::CoordMedian => agg_coord_median(updates)?,
            AggregatorKind::TrimmedMean => agg_trimmed_mean(updates, self.trim_f)?,
            AggregatorKind::GeneralizedKrum => return agg_generalized_krum(updates, self.p, f),
            AggregatorKind::GeomMedian => agg_geom_median(updates, DEFAULT_TOL, DEFAULT_MAX_ITERS)?,
            AggregatorKind::Bulyan => {
                let select = self.bulyan_select.as_deref().expect("validated");
                let aggregate = self.bulyan_aggregate.as_deref().expect("validated");
                agg_bulyan(updates, f, select, aggregate)?
            }
        };
        Ok(AggregationOutcome { result, chosen_member: 0, selected_worker: None })
    }

    /// Rough count of floating point operations for one call on an `n x d` panel.
    pub fn flops_estimate(&self, n: usize, d: usize) -> u64 {
        let (n, d) = (n as u64, d as u64);
        let base = match self.kind {
            AggregatorKind::Mean => n * d,
            AggregatorKind::CoordMedian | AggregatorKind::TrimmedMean => {
                n * d * (64 - n.leading_zeros() as u64).max(1)
            }
            AggregatorKind::GeneralizedKrum => n * n * d,
            AggregatorKind::GeomMedian => DEFAULT_MAX_ITERS as u64 * n * d,
            AggregatorKind::Bulyan => {
                let select = self.bulyan_select.as_deref().map_or(n * n * d, |s| s.flops_estimate(n as usize, d as usize));
                n * select + n * d * 8
            }
        };
        if self.resample_s > 1 {
            base + self.resample_s as u64 * n * d
        } else {
            base
        }
    }
}

impl fmt::Display for AggregatorSpec {
    /// The descriptor syntax accepted by [`parse_aggregator`].
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "kind={}", self.kind.name())?;
        if matches!(self.kind, AggregatorKind::GeneralizedKrum | AggregatorKind::Bulyan) || self.p != PNorm::L2 {
            write!(out, " p={}", self.p.value())?;
        }
        if self.kind == AggregatorKind::TrimmedMean {
            write!(out, " trim={}", self.trim_f)?;
        }
        if let (Some(s), Some(a)) = (&self.bulyan_select, &self.bulyan_aggregate) {
            write!(out, " select={} aggregate={}", s.kind.name(), a.kind.name())?;
            if let Some(t) = [a, s].iter().find(|r| r.kind == AggregatorKind::TrimmedMean) {
                write!(out, " trim={}", t.trim_f)?;
            }
        }
        if self.resample_s > 1 {
            write!(out, " s={}", self.resample_s)?;
        }
        Ok(())
    }
}

/// Result of one aggregation call.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationOutcome {
    pub result: GradVec,
    /// Pool index drawn by MixTailor; 0 for deterministic rules.
    pub chosen_member: usize,
    /// Worker picked by Krum-like selection rules.
    pub selected_worker: Option<usize>,
}

/// What the server runs each round: one fixed rule or a randomized pool.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregation {
    Single(AggregatorSpec),
    Pool(PoolSpec),
}

impl Aggregation {
    pub fn validate(&self, n: usize, f: usize) -> Result<()> {
        match self {
            Aggregation::Single(spec) => spec.validate(n, f),
            Aggregation::Pool(pool) => pool.validate(n, f),
        }
    }

    /// `rng` must be the server's own stream.
    pub fn apply(&self, updates: &[GradVec], f: usize, rng: &mut SeededRng) -> Result<AggregationOutcome> {
        match self {
            Aggregation::Single(spec) => spec.apply(updates, f, rng),
            Aggregation::Pool(pool) => agg_mixtailor(updates, pool, f, rng),
        }
    }

    /// The set of rules an informed adversary knows about.
    pub fn known_rules(&self) -> PoolSpec {
        match self {
            Aggregation::Single(spec) => PoolSpec::new(vec![spec.clone()]).expect("one member"),
            Aggregation::Pool(pool) => pool.clone(),
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, Aggregation::Pool(p) if p.len() > 1)
    }
}
