use crate::descriptor::Pairs;
use crate::error::{invalid, Result};
use crate::rng::{SeededRng, Stream};
use crate::vector::PNorm;

use super::{build_paper_pool, Aggregation, AggregatorKind, AggregatorSpec};

/// A parsed aggregator description. Pools are materialized later because the
/// standard pool draws its norms from the experiment seed.
#[derive(Debug, Clone, PartialEq)]
pub enum AggregatorDescriptor {
    Rule(AggregatorSpec),
    /// The 64-member pool, optionally without some rule classes.
    PaperPool { exclude: Vec<AggregatorKind>, resample_s: usize },
}

impl AggregatorDescriptor {
    pub fn instantiate(&self, seed: u64) -> Result<Aggregation> {
        match self {
            AggregatorDescriptor::Rule(spec) => Ok(Aggregation::Single(spec.clone())),
            AggregatorDescriptor::PaperPool { exclude, resample_s } => {
                let pool = build_paper_pool(&mut SeededRng::new(seed, Stream::PoolBuild));
                Ok(Aggregation::Pool(pool.without(exclude)?.with_resample(*resample_s)))
            }
        }
    }
}

fn kind_named(name: &str) -> Result<AggregatorKind> {
    AggregatorKind::from_name(name).map_or_else(|| invalid(format!("unknown aggregator kind {name:?}")), Ok)
}

/// Parses e.g. `kind=krum p=2`, `kind=bulyan select=krum aggregate=mean p=3`,
/// `kind=trimmedmean trim=1 s=2` or `kind=mixtailor pool=paper exclude=bulyan`.
pub fn parse_aggregator(text: &str) -> Result<AggregatorDescriptor> {
    let mut pairs = Pairs::parse(text)?;
    let kind_name = pairs.require("kind")?;
    let resample_s = pairs.count("s")?.unwrap_or(1);
    if resample_s == 0 {
        return invalid("s must be >= 1");
    }
    if kind_name.eq_ignore_ascii_case("mixtailor") {
        if let Some(pool) = pairs.take("pool") {
            if pool != "paper" {
                return invalid(format!("unknown pool {pool:?} (only \"paper\" is built in)"));
            }
        }
        let exclude = match pairs.take("exclude") {
            Some(list) => list.split(',').filter(|s| !s.is_empty()).map(kind_named).collect::<Result<_>>()?,
            None => Vec::new(),
        };
        pairs.finish()?;
        return Ok(AggregatorDescriptor::PaperPool { exclude, resample_s });
    }

    let kind = kind_named(&kind_name)?;
    let p = match pairs.real("p")? {
        Some(v) => PNorm::new(v)?,
        None => PNorm::L2,
    };
    let trim = pairs.count("trim")?;
    let spec = match kind {
        AggregatorKind::Mean => AggregatorSpec::mean(),
        AggregatorKind::CoordMedian => AggregatorSpec::coord_median(),
        AggregatorKind::GeomMedian => AggregatorSpec::geom_median(),
        AggregatorKind::GeneralizedKrum => AggregatorSpec::generalized_krum(p),
        AggregatorKind::TrimmedMean => AggregatorSpec::trimmed_mean(trim.unwrap_or(0)),
        AggregatorKind::Bulyan => {
            let select = match pairs.take("select") {
                Some(s) => kind_named(&s)?,
                None => AggregatorKind::GeneralizedKrum,
            };
            let aggregate = match pairs.take("aggregate") {
                Some(s) => kind_named(&s)?,
                None => AggregatorKind::Mean,
            };
            let phase = |k: AggregatorKind| -> Result<AggregatorSpec> {
                Ok(match k {
                    AggregatorKind::Mean => AggregatorSpec::mean(),
                    AggregatorKind::CoordMedian => AggregatorSpec::coord_median(),
                    AggregatorKind::GeomMedian => AggregatorSpec::geom_median(),
                    AggregatorKind::GeneralizedKrum => AggregatorSpec::generalized_krum(p),
                    AggregatorKind::TrimmedMean => AggregatorSpec::trimmed_mean(trim.unwrap_or(0)),
                    AggregatorKind::Bulyan => return invalid("Bulyan phase rules cannot be Bulyan"),
                })
            };
            AggregatorSpec::bulyan(phase(select)?, phase(aggregate)?)
        }
    };
    pairs.finish()?;
    Ok(AggregatorDescriptor::Rule(spec.with_p(p).with_resample(resample_s)))
}
