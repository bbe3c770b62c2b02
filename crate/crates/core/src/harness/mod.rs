//! Deterministic single-process simulation of distributed SGD with Byzantine
//! workers: data, partitions, models, the training loop and benchmarks.

mod bench;
mod config;
mod dataset;
mod experiment;
mod idx;
mod model;
mod partition;
mod schedule;

pub use bench::{bench_aggregators, default_bench_rules, BenchRow};
pub use config::{describe_aggregator, parse_config, ExperimentConfig, CONFIG_KEYS};
pub use dataset::{generate_dataset, Dataset, DatasetKind, DatasetSpec};
pub use experiment::{
    full_gradient, local_gradient, prepare, run_baseline_with_setup, run_experiment, run_omniscient_baseline,
    run_with_setup, write_records, RoundRecord, RunResult, Setup, RECORD_HEADER, TEST_FRACTION,
};
pub use idx::{encode_idx_images, encode_idx_labels, parse_idx_images, parse_idx_labels, IdxImages};
pub use model::{Model, ModelKind, ModelSpec};
pub use partition::{partition_dataset, PartitionMode};
pub use schedule::LrSchedule;
