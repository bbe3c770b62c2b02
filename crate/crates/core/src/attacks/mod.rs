//! Informed-adversary strategies.
//!
//! The adversary sees the honest gradients of the round and (optionally) the
//! set of rules in the server's pool, but never the server's random stream.
//! Byzantine vectors always occupy the first `f` slots of a simulated panel.

mod search;
mod tailored;

use std::fmt;

pub use search::{attack_adaptive, attack_minmax_pool, default_lambda_grid, verify_attack};
pub use tailored::{attack_a_little, attack_epsilon_reverse, attack_partial_knowledge, attack_random_epsilon};

use crate::aggregators::{AggregatorSpec, PoolSpec};
use crate::descriptor::Pairs;
use crate::error::{invalid, Result};
use crate::rng::{SeededRng, Stream};
use crate::vector::GradVec;

/// The epsilon set of the adaptive attack.
pub const ADAPTIVE_EPSILONS: [f64; 4] = [0.1, 0.5, 1.0, 10.0];
/// Small epsilon against Krum, large against comed.
pub const RANDOM_EPSILONS: [f64; 2] = [0.1, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSpec {
    /// Compromised workers follow the protocol.
    None,
    /// Every Byzantine sends `-epsilon * mean(honest)`.
    EpsilonReverse { epsilon: f64 },
    /// Reverse attack computed from `k - f` known honest gradients.
    PartialKnowledge { epsilon: f64, k: usize },
    /// Reverse attack with epsilon drawn uniformly from a set each round.
    RandomEpsilon { epsilon_set: Vec<f64> },
    /// Per round, the epsilon that minimizes the simulated aggregate's
    /// alignment with the honest mean for one randomly drawn known rule.
    Adaptive { epsilon_set: Vec<f64> },
    /// Grid search over `lambda` for `-lambda * sum(honest)` against the whole pool.
    MinMaxPool { lambda_grid: Vec<f64> },
    /// `mean - z * std` per coordinate.
    ALittle { z: f64 },
}

impl AttackSpec {
    pub fn is_none(&self) -> bool {
        matches!(self, AttackSpec::None)
    }

    /// Parameter checks that do not depend on the panel.
    pub fn validate(&self, n: usize, f: usize) -> Result<()> {
        let positive = |eps: f64| {
            if eps > 0.0 && eps.is_finite() {
                Ok(())
            } else {
                invalid(format!("epsilon must be a positive real, got {eps}"))
            }
        };
        match self {
            AttackSpec::None => Ok(()),
            AttackSpec::EpsilonReverse { epsilon } => positive(*epsilon),
            AttackSpec::PartialKnowledge { epsilon, k } => {
                positive(*epsilon)?;
                if *k <= f || *k > n {
                    return invalid(format!("partial knowledge needs f < k <= n (k={k}, f={f}, n={n})"));
                }
                Ok(())
            }
            AttackSpec::RandomEpsilon { epsilon_set } | AttackSpec::Adaptive { epsilon_set } => {
                if epsilon_set.is_empty() {
                    return invalid("epsilon set must not be empty");
                }
                epsilon_set.iter().try_for_each(|e| positive(*e))
            }
            AttackSpec::MinMaxPool { lambda_grid } => {
                if lambda_grid.is_empty() {
                    return invalid("lambda grid must not be empty");
                }
                Ok(())
            }
            AttackSpec::ALittle { .. } => {
                if n < f + 2 {
                    return invalid("A Little needs at least 2 honest gradients");
                }
                Ok(())
            }
        }
    }

    /// Produces the `f` Byzantine vectors for one round.
    pub fn generate(&self, view: &mut AdversaryView, n: usize, f: usize, cost: &mut AttackCost) -> Result<AttackOutcome> {
        let plain = |byzantine: Vec<GradVec>, param: Option<f64>| AttackOutcome {
            byzantine,
            param,
            achieved_xi: None,
            simulated_member: None,
        };
        Ok(match self {
            AttackSpec::None => plain(Vec::new(), None),
            AttackSpec::EpsilonReverse { epsilon } => {
                plain(attack_epsilon_reverse(view, f, *epsilon)?, Some(*epsilon))
            }
            AttackSpec::PartialKnowledge { epsilon, k } => {
                let known = k - f;
                if view.honest_gradients.len() < known {
                    return invalid(format!(
                        "view holds {} honest gradients, partial knowledge needs {known}",
                        view.honest_gradients.len()
                    ));
                }
                let partial = AdversaryView {
                    honest_gradients: view.honest_gradients[..known].to_vec(),
                    pool_description: None,
                    rng: view.rng.clone(),
                };
                plain(attack_partial_knowledge(&partial, n, f, *epsilon)?, Some(*epsilon))
            }
            AttackSpec::RandomEpsilon { epsilon_set } => {
                let (byz, eps) = attack_random_epsilon(view, f, epsilon_set)?;
                plain(byz, Some(eps))
            }
            AttackSpec::Adaptive { epsilon_set } => {
                let out = attack_adaptive(view, f, epsilon_set, n, cost)?;
                AttackOutcome {
                    byzantine: out.byzantine,
                    param: Some(out.epsilon),
                    achieved_xi: Some(out.dot),
                    simulated_member: Some(out.simulated_member),
                }
            }
            AttackSpec::MinMaxPool { lambda_grid } => {
                let out = attack_minmax_pool(view, f, lambda_grid, cost)?;
                AttackOutcome {
                    byzantine: out.byzantine,
                    param: Some(out.lambda),
                    achieved_xi: Some(out.xi),
                    simulated_member: None,
                }
            }
            AttackSpec::ALittle { z } => plain(attack_a_little(view, f, n, *z)?, Some(*z)),
        })
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            AttackSpec::None => write!(out, "kind=none"),
            AttackSpec::EpsilonReverse { epsilon } => write!(out, "kind=reverse epsilon={epsilon}"),
            AttackSpec::PartialKnowledge { epsilon, k } => write!(out, "kind=partial epsilon={epsilon} k={k}"),
            AttackSpec::RandomEpsilon { epsilon_set } => write!(out, "kind=random set={}", list(epsilon_set)),
            AttackSpec::Adaptive { epsilon_set } => write!(out, "kind=adaptive set={}", list(epsilon_set)),
            AttackSpec::MinMaxPool { lambda_grid } => write!(out, "kind=minmax grid={}", list(lambda_grid)),
            AttackSpec::ALittle { z } => write!(out, "kind=alittle z={z}"),
        }
    }
}

/// Parses e.g. `kind=reverse epsilon=0.1`, `kind=partial epsilon=10 k=6`,
/// `kind=adaptive set=0.1,0.5,1,10`, `kind=minmax` or `kind=alittle z=1`.
pub fn parse_attack(text: &str) -> Result<AttackSpec> {
    let mut pairs = Pairs::parse(text)?;
    let kind = pairs.require("kind")?.to_ascii_lowercase();
    let spec = match kind.as_str() {
        "none" => AttackSpec::None,
        "reverse" | "epsilon" | "tailored" => AttackSpec::EpsilonReverse {
            epsilon: pairs.real("epsilon")?.ok_or_else(|| crate::Error::InvalidInput("missing key \"epsilon\"".into()))?,
        },
        "partial" => AttackSpec::PartialKnowledge {
            epsilon: pairs.real("epsilon")?.ok_or_else(|| crate::Error::InvalidInput("missing key \"epsilon\"".into()))?,
            k: pairs.count("k")?.ok_or_else(|| crate::Error::InvalidInput("missing key \"k\"".into()))?,
        },
        "random" => AttackSpec::RandomEpsilon {
            epsilon_set: pairs.reals("set")?.unwrap_or_else(|| RANDOM_EPSILONS.to_vec()),
        },
        "adaptive" => AttackSpec::Adaptive {
            epsilon_set: pairs.reals("set")?.unwrap_or_else(|| ADAPTIVE_EPSILONS.to_vec()),
        },
        "minmax" => AttackSpec::MinMaxPool {
            lambda_grid: pairs.reals("grid")?.unwrap_or_else(default_lambda_grid),
        },
        "alittle" => AttackSpec::ALittle { z: pairs.real("z")?.unwrap_or(1.0) },
        other => return invalid(format!("unknown attack kind {other:?}")),
    };
    pairs.finish()?;
    match &spec {
        AttackSpec::RandomEpsilon { epsilon_set } | AttackSpec::Adaptive { epsilon_set } if epsilon_set.is_empty() => {
            invalid("epsilon set must not be empty")
        }
        AttackSpec::MinMaxPool { lambda_grid } if lambda_grid.is_empty() => invalid("lambda grid must not be empty"),
        _ => Ok(spec),
    }
}

/// Everything the adversary knows in one round.
#[derive(Debug, Clone)]
pub struct AdversaryView {
    pub honest_gradients: Vec<GradVec>,
    /// The rules the server may apply (known set, unknown draw).
    pub pool_description: Option<PoolSpec>,
    /// The adversary's own stream.
    rng: SeededRng,
}

impl AdversaryView {
    /// Rejects the server's pool-draw stream: the adversary must not be able to
    /// predict the server's choice.
    pub fn new(honest_gradients: Vec<GradVec>, pool_description: Option<PoolSpec>, rng: SeededRng) -> Result<Self> {
        if rng.stream() == Stream::ServerPool {
            return invalid("the adversary cannot use the server's pool-draw stream");
        }
        Ok(AdversaryView { honest_gradients, pool_description, rng })
    }

    pub fn rng(&mut self) -> &mut SeededRng {
        &mut self.rng
    }

    /// Replaces the round's honest gradients, keeping the stream position.
    pub fn set_honest(&mut self, honest: Vec<GradVec>) {
        self.honest_gradients = honest;
    }
}

/// Work spent by the adversary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttackCost {
    pub aggregator_evaluations: u64,
    pub elementary_flops_estimate: u64,
}

impl AttackCost {
    pub(crate) fn record(&mut self, rule: &AggregatorSpec, n: usize, d: usize) {
        self.aggregator_evaluations += 1;
        self.elementary_flops_estimate += rule.flops_estimate(n, d);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub byzantine: Vec<GradVec>,
    /// The epsilon, lambda or z actually used.
    pub param: Option<f64>,
    /// Best simulated alignment with the honest mean (adaptive / min-max).
    pub achieved_xi: Option<f64>,
    /// Pool index the adaptive adversary simulated against.
    pub simulated_member: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for text in [
            "kind=none",
            "kind=reverse epsilon=0.1",
            "kind=partial epsilon=10 k=6",
            "kind=random set=0.1,10",
            "kind=adaptive set=0.1,0.5,1,10",
            "kind=minmax grid=0,0.5,2",
            "kind=alittle z=1.5",
        ] {
            let spec = parse_attack(text).unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(parse_attack(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn defaults() {
        assert_eq!(
            parse_attack("kind=adaptive").unwrap(),
            AttackSpec::Adaptive { epsilon_set: vec![0.1, 0.5, 1.0, 10.0] }
        );
        match parse_attack("kind=minmax").unwrap() {
            AttackSpec::MinMaxPool { lambda_grid } => assert_eq!(lambda_grid.len(), 25),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_attacks() {
        for bad in ["kind=reverse", "kind=partial epsilon=1", "kind=adaptive set=", "kind=zap", "kind=reverse epsilon=x"] {
            assert!(parse_attack(bad).is_err(), "{bad}");
        }
        assert!(AttackSpec::PartialKnowledge { epsilon: 1.0, k: 2 }.validate(12, 2).is_err());
        assert!(AttackSpec::PartialKnowledge { epsilon: 1.0, k: 13 }.validate(12, 2).is_err());
        assert!(AttackSpec::EpsilonReverse { epsilon: -1.0 }.validate(12, 2).is_err());
    }

    #[test]
    fn view_refuses_the_server_stream() {
        let honest = vec![GradVec::new(vec![1.0])];
        assert!(AdversaryView::new(honest.clone(), None, SeededRng::new(0, Stream::ServerPool)).is_err());
        assert!(AdversaryView::new(honest, None, SeededRng::new(0, Stream::Attack)).is_ok());
    }
}
