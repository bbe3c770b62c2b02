//! The simulated training loop.

use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample;

use crate::aggregators::Aggregation;
use crate::attacks::{AdversaryView, AttackCost, AttackSpec};
use crate::error::{invalid, Error, Result};
use crate::matrix_csv::fmt_real;
use crate::rng::{SeededRng, Stream};
use crate::vector::{mean_of, GradVec};

use super::config::ExperimentConfig;
use super::dataset::{generate_dataset, Dataset};
use super::model::Model;
use super::partition::partition_dataset;

/// Fraction of examples held out for test accuracy.
pub const TEST_FRACTION: f64 = 0.2;

pub const RECORD_HEADER: &str = "iteration,chosen_member,attack_param,train_loss,test_accuracy,dot_clean,wall_clock_us";

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub iteration: usize,
    /// Pool index, or -1 for a single rule.
    pub chosen_member: i64,
    pub attack_param: Option<f64>,
    pub train_loss: f64,
    pub test_accuracy: f64,
    /// Alignment of the aggregate with the honest mean.
    pub dot_clean: f64,
    pub wall_clock_us: u64,
}

pub fn write_records(mut out: impl Write, records: &[RoundRecord]) -> Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        let param = r.attack_param.map(fmt_real).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iteration,
            r.chosen_member,
            param,
            fmt_real(r.train_loss),
            fmt_real(r.test_accuracy),
            fmt_real(r.dot_clean),
            r.wall_clock_us
        )?;
    }
    Ok(())
}

/// Data, shards and model shared by a run and its baseline.
#[derive(Debug, Clone)]
pub struct Setup {
    pub train: Dataset,
    pub test: Dataset,
    pub shards: Vec<Vec<usize>>,
    pub model: Model,
    pub init: GradVec,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    let data = generate_dataset(&cfg.dataset, cfg.seed)?;
    let mut rng = SeededRng::new(cfg.seed, Stream::Data).fork(1);
    let (train, test) = data.split_test(TEST_FRACTION, &mut rng);
    let shards = partition_dataset(&train, cfg.partition, cfg.n, &mut rng)?;
    let model = Model::new(&cfg.model, train.dim, train.num_classes)?;
    let init = model.init(&mut SeededRng::new(cfg.seed, Stream::ModelInit));
    Ok(Setup { train, test, shards, model, init })
}

/// Mini-batch gradient of the loss on one shard, sampled without replacement
/// from the worker's own stream (whole shard when it is smaller than the batch).
pub fn local_gradient(model: &Model, w: &GradVec, data: &Dataset, shard: &[usize], batch_size: usize, rng: &mut SeededRng) -> Result<GradVec> {
    if shard.is_empty() {
        return invalid("worker shard is empty");
    }
    let picked: Vec<usize> = if batch_size >= shard.len() {
        shard.to_vec()
    } else {
        sample(rng, shard.len(), batch_size).into_iter().map(|k| shard[k]).collect()
    };
    Ok(model.loss_and_grad(w, data, &picked).1)
}

/// Full-data gradient of the unregularized training loss.
pub fn full_gradient(setup: &Setup, w: &GradVec) -> GradVec {
    let all: Vec<usize> = (0..setup.train.len()).collect();
    setup.model.loss_and_grad(w, &setup.train, &all).1
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    setup: &'a Setup,
    agg: Aggregation,
    attack: AttackSpec,
    /// Only workers `f..n` take part (omniscient baseline).
    honest_only: bool,
}

impl Run<'_> {
    fn execute(&self) -> Result<(Vec<RoundRecord>, GradVec)> {
        let cfg = self.cfg;
        let (n, f) = (cfg.n, cfg.f);
        let setup = self.setup;
        let mut workers: Vec<SeededRng> = (0..n).map(|i| SeededRng::new(cfg.seed, Stream::Worker(i as u32))).collect();
        let mut server = SeededRng::new(cfg.seed, Stream::ServerPool);
        let mut view = AdversaryView::new(Vec::new(), Some(self.agg.known_rules()), SeededRng::new(cfg.seed, Stream::Attack))?;
        let mut cost = AttackCost::default();
        let all: Vec<usize> = (0..setup.train.len()).collect();
        let mut w = setup.init.clone();
        let mut momentum = GradVec::zeros(w.dim());
        let mut records = Vec::new();
        let first_honest = if self.attack.is_none() && !self.honest_only { 0 } else { f };
        let agg_f = if self.honest_only { 0 } else { f };
        for t in 1..=cfg.iterations {
            let started = Instant::now();
            let mut honest = Vec::with_capacity(n - first_honest);
            for i in first_honest..n {
                honest.push(local_gradient(&setup.model, &w, &setup.train, &setup.shards[i], cfg.batch_size, &mut workers[i])?);
            }
            if let Some(k) = honest.iter().position(|g| !g.is_finite()) {
                return Err(Error::Divergence { iteration: t, reason: format!("non-finite gradient from worker {}", first_honest + k) });
            }
            let (panel, param) = if self.attack.is_none() || self.honest_only {
                (honest.clone(), None)
            } else {
                view.set_honest(honest.clone());
                let outcome = self.attack.generate(&mut view, n, f, &mut cost)?;
                let mut panel = outcome.byzantine;
                panel.extend(honest.iter().cloned());
                (panel, outcome.param)
            };
            let out = self.agg.apply(&panel, agg_f, &mut server)?;
            let dot_clean = out.result.dot(&mean_of(&honest));
            momentum = momentum.scaled(cfg.momentum);
            momentum.add_scaled(&out.result, 1.0);
            let mut step_dir = momentum.clone();
            step_dir.add_scaled(&w, cfg.model.weight_decay);
            w.add_scaled(&step_dir, -cfg.lr.rate(t));
            if !w.is_finite() {
                return Err(Error::Divergence { iteration: t, reason: "non-finite model weights".into() });
            }
            if t % cfg.eval_every == 0 {
                let wall = started.elapsed().as_micros() as u64;
                records.push(RoundRecord {
                    iteration: t,
                    chosen_member: match &self.agg {
                        Aggregation::Pool(_) => out.chosen_member as i64,
                        Aggregation::Single(_) => -1,
                    },
                    attack_param: param,
                    train_loss: setup.model.loss(&w, &setup.train, &all),
                    test_accuracy: setup.model.accuracy(&w, &setup.test),
                    dot_clean,
                    wall_clock_us: if cfg.timing { wall } else { 0 },
                });
            }
        }
        Ok((records, w))
    }
}

/// Final weights and records of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<RoundRecord>,
    pub weights: GradVec,
}

impl RunResult {
    pub fn final_accuracy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.test_accuracy)
    }
}

/// Runs the configured experiment on prepared data.
pub fn run_with_setup(cfg: &ExperimentConfig, setup: &Setup) -> Result<RunResult> {
    cfg.validate()?;
    let agg = cfg.aggregator.instantiate(cfg.seed)?;
    let run = Run { cfg, setup, agg, attack: cfg.attack.clone(), honest_only: false };
    let (records, weights) = run.execute()?;
    Ok(RunResult { records, weights })
}

/// Server that averages exactly the `n - f` honest gradients, no attack.
pub fn run_baseline_with_setup(cfg: &ExperimentConfig, setup: &Setup) -> Result<RunResult> {
    cfg.validate()?;
    let agg = Aggregation::Single(crate::aggregators::AggregatorSpec::mean());
    let run = Run { cfg, setup, agg, attack: AttackSpec::None, honest_only: true };
    let (records, weights) = run.execute()?;
    Ok(RunResult { records, weights })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RoundRecord>> {
    Ok(run_with_setup(cfg, &prepare(cfg)?)?.records)
}

pub fn run_omniscient_baseline(cfg: &ExperimentConfig) -> Result<Vec<RoundRecord>> {
    Ok(run_baseline_with_setup(cfg, &prepare(cfg)?)?.records)
}
