//! Flat `key = value` experiment files.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::aggregators::{parse_aggregator, AggregatorDescriptor, AggregatorSpec};
use crate::attacks::{parse_attack, AttackSpec};
use crate::error::{invalid, Error, Result};

use super::dataset::{DatasetKind, DatasetSpec};
use super::model::{Model, ModelKind, ModelSpec};
use super::partition::PartitionMode;
use super::schedule::LrSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub f: usize,
    pub dataset: DatasetSpec,
    pub partition: PartitionMode,
    pub model: ModelSpec,
    pub aggregator: AggregatorDescriptor,
    pub attack: AttackSpec,
    pub lr: LrSchedule,
    pub momentum: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub eval_every: usize,
    pub seed: u64,
    /// Also run the omniscient baseline and report the gap.
    pub baseline: bool,
    /// Fill `wall_clock_us`; off by default so outputs are reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 12,
            f: 2,
            dataset: DatasetSpec::default(),
            partition: PartitionMode::IidEqual,
            model: ModelSpec::default(),
            aggregator: AggregatorDescriptor::Rule(AggregatorSpec::mean()),
            attack: AttackSpec::None,
            lr: LrSchedule::Constant(0.02),
            momentum: 0.9,
            batch_size: 2,
            iterations: 2000,
            eval_every: 100,
            seed: 0,
            baseline: false,
            timing: false,
        }
    }
}

/// Config keys with a one-line description, in file order.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("n", "number of workers"),
    ("f", "number of Byzantine workers (indices 0..f)"),
    ("dataset", "linear | logistic | blobs | idx"),
    ("num_examples", "examples to generate (idx: 0 keeps all)"),
    ("dim", "feature dimension of synthetic data"),
    ("num_classes", "classes of blob data"),
    ("noise_scale", "label noise (linear, logistic) or cluster spread (blobs)"),
    ("data_path", "IDX image file"),
    ("labels_path", "IDX label file"),
    ("partition", "iid | label_sorted"),
    ("model", "linear | logistic | mlp"),
    ("hidden", "comma-separated hidden widths of the mlp"),
    ("weight_decay", "server-side weight decay"),
    ("init_scale", "std of the initial weights"),
    ("aggregator", "aggregator descriptor, e.g. kind=krum p=2"),
    ("attack", "attack descriptor, e.g. kind=reverse epsilon=0.1"),
    ("lr", "learning rate (schedule constant c)"),
    ("lr_schedule", "constant | inv_t | inv_pow"),
    ("lr_power", "exponent of inv_pow"),
    ("momentum", "server momentum in [0, 1)"),
    ("batch_size", "mini-batch size per worker"),
    ("iterations", "training rounds"),
    ("eval_every", "rounds between records"),
    ("seed", "master seed"),
    ("baseline", "true to also run the omniscient baseline"),
    ("timing", "true to record wall-clock time per round"),
];

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(line, format!("{key}: cannot parse {v:?}")))
}

fn real(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = num(line, key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(line, format!("{key}: not finite")))
    }
}

fn flag(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(line, format!("{key}: expected true or false, got {v:?}"))),
    }
}

/// Parses and validates a config file. Errors carry the 1-based line number;
/// whole-config violations are reported against line 0.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut lr = 0.02;
    let mut schedule = "constant".to_string();
    let mut power = None;
    let mut seen = std::collections::HashSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(bad(line, format!("expected key = value, found {content:?}")));
        };
        let (key, v) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(bad(line, format!("duplicate key {key:?}")));
        }
        let wrap = |e: Error| bad(line, format!("{key}: {e}"));
        match key {
            "n" => cfg.n = num(line, key, v)?,
            "f" => cfg.f = num(line, key, v)?,
            "dataset" => {
                cfg.dataset.kind = DatasetKind::from_name(v).ok_or_else(|| bad(line, format!("unknown dataset {v:?}")))?
            }
            "num_examples" => cfg.dataset.num_examples = num(line, key, v)?,
            "dim" => cfg.dataset.dim = num(line, key, v)?,
            "num_classes" => cfg.dataset.num_classes = num(line, key, v)?,
            "noise_scale" => cfg.dataset.noise_scale = real(line, key, v)?,
            "data_path" => cfg.dataset.path = Some(PathBuf::from(v)),
            "labels_path" => cfg.dataset.labels_path = Some(PathBuf::from(v)),
            "partition" => {
                cfg.partition = PartitionMode::from_name(v).ok_or_else(|| bad(line, format!("unknown partition {v:?}")))?
            }
            "model" => cfg.model.kind = ModelKind::from_name(v).ok_or_else(|| bad(line, format!("unknown model {v:?}")))?,
            "hidden" => {
                cfg.model.hidden =
                    v.split(',').map(|s| num(line, key, s.trim())).collect::<Result<Vec<usize>>>()?
            }
            "weight_decay" => cfg.model.weight_decay = real(line, key, v)?,
            "init_scale" => cfg.model.init_scale = real(line, key, v)?,
            "aggregator" => cfg.aggregator = parse_aggregator(v).map_err(wrap)?,
            "attack" => cfg.attack = parse_attack(v).map_err(wrap)?,
            "lr" => lr = real(line, key, v)?,
            "lr_schedule" => schedule = v.to_string(),
            "lr_power" => power = Some(real(line, key, v)?),
            "momentum" => cfg.momentum = real(line, key, v)?,
            "batch_size" => cfg.batch_size = num(line, key, v)?,
            "iterations" => cfg.iterations = num(line, key, v)?,
            "eval_every" => cfg.eval_every = num(line, key, v)?,
            "seed" => cfg.seed = num(line, key, v)?,
            "baseline" => cfg.baseline = flag(line, key, v)?,
            "timing" => cfg.timing = flag(line, key, v)?,
            _ => return Err(bad(line, format!("unknown key {key:?}"))),
        }
    }
    cfg.lr = LrSchedule::parse(&schedule, lr, power).map_err(|e| bad(0, e.to_string()))?;
    cfg.validate().map_err(|e| bad(0, e.to_string()))?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Load-time checks of every module precondition that does not need data.
    pub fn validate(&self) -> Result<()> {
        if self.n < self.f.saturating_mul(2).saturating_add(1) {
            return invalid(format!("n >= 2f+1 violated (n={}, f={})", self.n, self.f));
        }
        if self.batch_size == 0 || self.iterations == 0 || self.eval_every == 0 {
            return invalid("batch_size, iterations and eval_every must be >= 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return invalid(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(self.model.weight_decay >= 0.0) {
            return invalid("weight_decay must be >= 0");
        }
        if self.dataset.kind != DatasetKind::IdxImages && self.dataset.num_examples < self.n.saturating_mul(self.batch_size) {
            return invalid(format!(
                "num_examples >= n * batch_size violated ({} < {})",
                self.dataset.num_examples,
                self.n.saturating_mul(self.batch_size)
            ));
        }
        if self.dataset.kind == DatasetKind::IdxImages && (self.dataset.path.is_none() || self.dataset.labels_path.is_none()) {
            return invalid("idx dataset needs data_path and labels_path");
        }
        if self.model.kind == ModelKind::Linear && self.dataset.kind != DatasetKind::SyntheticLinear {
            return invalid("linear model needs the linear dataset");
        }
        if self.model.kind != ModelKind::Linear && self.dataset.kind == DatasetKind::SyntheticLinear {
            return invalid("the linear dataset needs the linear model");
        }
        if self.dataset.kind != DatasetKind::IdxImages {
            let classes = match self.dataset.kind {
                DatasetKind::SyntheticLinear => 1,
                DatasetKind::SyntheticLogistic => 2,
                _ => self.dataset.num_classes,
            };
            Model::new(&self.model, self.dataset.dim, classes)?;
        }
        self.aggregator.instantiate(self.seed)?.validate(self.n, self.f)?;
        self.attack.validate(self.n, self.f)?;
        Ok(())
    }

    /// Serializes back to the file format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let d = &self.dataset;
        let _ = writeln!(s, "n = {}\nf = {}", self.n, self.f);
        let _ = writeln!(s, "dataset = {}\nnum_examples = {}\ndim = {}", d.kind.name(), d.num_examples, d.dim);
        let _ = writeln!(s, "num_classes = {}\nnoise_scale = {}", d.num_classes, d.noise_scale);
        if let Some(p) = &d.path {
            let _ = writeln!(s, "data_path = {}", p.display());
        }
        if let Some(p) = &d.labels_path {
            let _ = writeln!(s, "labels_path = {}", p.display());
        }
        let _ = writeln!(s, "partition = {}\nmodel = {}", self.partition.name(), self.model.kind.name());
        let hidden: Vec<String> = self.model.hidden.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(s, "hidden = {}", hidden.join(","));
        let _ = writeln!(
            s,
            "weight_decay = {}\ninit_scale = {}",
            self.model.weight_decay,
            self.model.init_scale
        );
        let _ = writeln!(s, "aggregator = {}", describe_aggregator(&self.aggregator));
        let _ = writeln!(s, "attack = {}", self.attack);
        match self.lr {
            LrSchedule::Constant(c) => {
                let _ = writeln!(s, "lr = {}\nlr_schedule = constant", c);
            }
            LrSchedule::InvT(c) => {
                let _ = writeln!(s, "lr = {}\nlr_schedule = inv_t", c);
            }
            LrSchedule::InvPow { c, power } => {
                let _ = writeln!(s, "lr = {}\nlr_schedule = inv_pow\nlr_power = {}", c, power);
            }
        }
        let _ = writeln!(s, "momentum = {}\nbatch_size = {}", self.momentum, self.batch_size);
        let _ = writeln!(s, "iterations = {}\neval_every = {}\nseed = {}", self.iterations, self.eval_every, self.seed);
        let _ = writeln!(s, "baseline = {}\ntiming = {}", self.baseline, self.timing);
        s
    }
}

pub fn describe_aggregator(desc: &AggregatorDescriptor) -> String {
    match desc {
        AggregatorDescriptor::Rule(spec) => spec.to_string(),
        AggregatorDescriptor::PaperPool { exclude, resample_s } => {
            let mut s = "kind=mixtailor pool=paper".to_string();
            if !exclude.is_empty() {
                let names: Vec<&str> = exclude.iter().map(|k| k.name()).collect();
                let _ = write!(s, " exclude={}", names.join(","));
            }
            if *resample_s > 1 {
                let _ = write!(s, " s={resample_s}");
            }
            s
        }
    }
}
