//! Wall-clock timing of aggregation rules on synthetic panels.

use std::hint::black_box;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::aggregators::{build_paper_pool, Aggregation, AggregatorSpec};
use crate::error::{invalid, Result};
use crate::rng::{SeededRng, Stream};
use crate::vector::{GradVec, PNorm};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub mean_us: f64,
}

/// Mean, comed, Krum, geometric median, Bulyan and the 64-member pool.
pub fn default_bench_rules(seed: u64) -> Vec<(String, Aggregation)> {
    let single = |s: AggregatorSpec| Aggregation::Single(s);
    vec![
        ("mean".into(), single(AggregatorSpec::mean())),
        ("comed".into(), single(AggregatorSpec::coord_median())),
        ("krum".into(), single(AggregatorSpec::generalized_krum(PNorm::L2))),
        ("geomed".into(), single(AggregatorSpec::geom_median())),
        (
            "bulyan".into(),
            single(AggregatorSpec::bulyan(AggregatorSpec::generalized_krum(PNorm::L2), AggregatorSpec::mean())),
        ),
        ("mixtailor".into(), Aggregation::Pool(build_paper_pool(&mut SeededRng::new(seed, Stream::PoolBuild)))),
    ]
}

/// Times each rule on one Gaussian `(n, d)` panel, `repeats` calls per rule.
pub fn bench_aggregators(rules: &[(String, Aggregation)], n: usize, f: usize, d: usize, repeats: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if repeats < 10 {
        return invalid(format!("repeats >= 10 required, got {repeats}"));
    }
    let mut rng = SeededRng::new(seed, Stream::MonteCarlo);
    let panel: Vec<GradVec> =
        (0..n).map(|_| GradVec::new((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())).collect();
    let mut rows = Vec::with_capacity(rules.len());
    for (name, agg) in rules {
        agg.validate(n, f)?;
        let mut server = SeededRng::new(seed, Stream::ServerPool);
        black_box(agg.apply(&panel, f, &mut server)?);
        let start = Instant::now();
        for _ in 0..repeats {
            black_box(agg.apply(black_box(&panel), f, &mut server)?);
        }
        let mean_us = start.elapsed().as_secs_f64() * 1e6 / repeats as f64;
        rows.push(BenchRow { name: name.clone(), mean_us });
    }
    Ok(rows)
}
