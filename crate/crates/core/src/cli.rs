//! The `mixtailor` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::aggregators::{build_paper_pool, parse_aggregator, Aggregation, PoolSpec};
use crate::attacks::{parse_attack, AdversaryView, AttackCost};
use crate::bounds::{capital_lambda, iid_bias_bound, mixtailor_sufficient_M, noniid_bias_bound, noniid_constants, BoundInputs};
use crate::error::{invalid, Error, Result};
use crate::harness::{
    bench_aggregators, default_bench_rules, parse_config, prepare, run_baseline_with_setup, run_with_setup, write_records,
};
use crate::matrix_csv::{fmt_real, read_grad_matrix, write_grad_matrix};
use crate::rng::{SeededRng, Stream};
use crate::vector::{mean_of, GradVec, PNorm};

#[derive(Debug, Parser)]
#[command(name = "mixtailor", version, about = "Randomized robust aggregation and Byzantine SGD simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a training experiment from a config file and write its metrics CSV.
    Run(RunArgs),
    /// Aggregate the rows of a gradient CSV.
    Aggregate(AggregateArgs),
    /// Generate Byzantine rows from a CSV of honest gradients.
    Attack(AttackArgs),
    /// Evaluate the bias bounds and the pool-size threshold.
    Bounds(BoundsArgs),
    /// Time aggregation rules on a synthetic panel.
    Bench(BenchArgs),
    /// Print the 64-member pool for a seed.
    Pool(PoolArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (key = value lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Metrics CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `baseline`.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Gradient CSV, one worker per row.
    #[arg(long)]
    pub grads: PathBuf,
    /// Aggregator descriptor (config key `aggregator`), e.g. "kind=krum p=2".
    #[arg(long)]
    pub agg: String,
    /// Byzantine count (config key `f`).
    #[arg(long)]
    pub f: usize,
    /// Seed for pool construction and draws (config key `seed`).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Honest gradient CSV (n - f rows).
    #[arg(long)]
    pub grads: PathBuf,
    /// Attack descriptor (config key `attack`), e.g. "kind=reverse epsilon=0.1".
    #[arg(long)]
    pub attack: String,
    /// Byzantine count (config key `f`).
    #[arg(long)]
    pub f: usize,
    /// Total workers (config key `n`).
    #[arg(long)]
    pub n: usize,
    /// Server rule set known to the adversary (config key `aggregator`).
    #[arg(long, default_value = "kind=mixtailor pool=paper")]
    pub agg: String,
    /// Seed for the adversary stream and pool construction (config key `seed`).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub f: usize,
    /// Gradient dimension.
    #[arg(long)]
    pub d: usize,
    /// Norm order of generalized Krum.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Gradient variance bound.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Heterogeneity bound.
    #[arg(long, default_value_t = 0.0)]
    pub delta2: f64,
    /// Output-norm bound of compromised rules.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Lipschitz constant.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Smallest alignment constant over the pool.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of compromised rules.
    #[arg(long)]
    pub q: Option<usize>,
    /// Pool size to check against the threshold.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub f: usize,
    #[arg(long, default_value_t = 10_000)]
    pub d: usize,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Exit code for an error: 3 for divergence, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::Aggregate(a) => cmd_aggregate(a, out, err),
        Command::Attack(a) => cmd_attack(a, out, err),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Pool(a) => cmd_pool(a, out),
    }
}

fn read_file(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn read_grads(path: &PathBuf) -> Result<Vec<GradVec>> {
    let file = File::open(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    read_grad_matrix(file)
}

pub fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = parse_config(&read_file(&a.config)?)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
        cfg.validate()?;
    }
    cfg.baseline |= a.baseline;
    let setup = prepare(&cfg)?;
    let result = run_with_setup(&cfg, &setup)?;
    let file = File::create(&a.out).map_err(|e| Error::InvalidInput(format!("{}: {e}", a.out.display())))?;
    let mut w = BufWriter::new(file);
    write_records(&mut w, &result.records)?;
    w.flush()?;
    writeln!(out, "final_test_accuracy = {}", fmt_real(result.final_accuracy()))?;
    if cfg.baseline {
        let base = run_baseline_with_setup(&cfg, &setup)?;
        writeln!(out, "omniscient_test_accuracy = {}", fmt_real(base.final_accuracy()))?;
        writeln!(out, "omniscient_gap = {}", fmt_real(base.final_accuracy() - result.final_accuracy()))?;
    }
    Ok(())
}

fn instantiate(descr: &str, seed: u64) -> Result<Aggregation> {
    parse_aggregator(descr)?.instantiate(seed)
}

pub fn cmd_aggregate(a: &AggregateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let grads = read_grads(&a.grads)?;
    let agg = instantiate(&a.agg, a.seed)?;
    agg.validate(grads.len(), a.f)?;
    let res = agg.apply(&grads, a.f, &mut SeededRng::new(a.seed, Stream::ServerPool))?;
    write_grad_matrix(&mut *out, std::slice::from_ref(&res.result))?;
    let selected = res.selected_worker.map_or_else(|| "-1".to_string(), |w| w.to_string());
    writeln!(err, "chosen_member = {}, selected_worker = {selected}", res.chosen_member)?;
    Ok(())
}

pub fn cmd_attack(a: &AttackArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let honest = read_grads(&a.grads)?;
    if honest.len() + a.f != a.n {
        return invalid(format!("expected n - f = {} honest rows, found {}", a.n.saturating_sub(a.f), honest.len()));
    }
    let attack = parse_attack(&a.attack)?;
    attack.validate(a.n, a.f)?;
    let pool: PoolSpec = instantiate(&a.agg, a.seed)?.known_rules();
    let mut view = AdversaryView::new(honest.clone(), Some(pool), SeededRng::new(a.seed, Stream::Attack))?;
    let mut cost = AttackCost::default();
    let outcome = attack.generate(&mut view, a.n, a.f, &mut cost)?;
    write_grad_matrix(&mut *out, &outcome.byzantine)?;
    let clean = mean_of(&honest);
    let opt = |v: Option<f64>| v.map_or_else(|| "null".to_string(), fmt_real);
    writeln!(
        err,
        "{{\"attack\": \"{attack}\", \"param\": {}, \"xi\": {}, \"honest_mean_norm\": {}, \"aggregator_evaluations\": {}, \"flops_estimate\": {}}}",
        opt(outcome.param),
        opt(outcome.achieved_xi),
        fmt_real(clean.norm2()),
        cost.aggregator_evaluations,
        cost.elementary_flops_estimate
    )?;
    Ok(())
}

pub fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<()> {
    let p = PNorm::new(a.p)?.value();
    let inputs = BoundInputs::new(a.n, a.f, a.d, p).with_variances(a.sigma2, a.delta2);
    let lambda = capital_lambda(a.n, a.f, a.d, p)?;
    let (c1, c2) = noniid_constants(&inputs)?;
    writeln!(out, "lambda = {}", fmt_real(lambda))?;
    writeln!(out, "iid_bias_bound = {}", fmt_real(iid_bias_bound(&inputs)?))?;
    writeln!(out, "c1 = {}", fmt_real(c1))?;
    writeln!(out, "c2 = {}", fmt_real(c2))?;
    writeln!(out, "noniid_bias_bound = {}", fmt_real(noniid_bias_bound(&inputs)?))?;
    match (a.q, a.lambda, a.lipschitz, a.beta) {
        (Some(q), Some(l), Some(lip), Some(beta)) => {
            let threshold = mixtailor_sufficient_M(q, l, lip, beta)?;
            writeln!(out, "pool_size_threshold = {}", fmt_real(threshold))?;
            if let Some(m) = a.m {
                let verdict = if m as f64 > threshold { "satisfied" } else { "not satisfied" };
                writeln!(out, "pool_size_condition = {verdict}")?;
            }
        }
        (None, None, None, None) => {
            if a.m.is_some() {
                return invalid("--m needs --q, --lambda, --lipschitz and --beta");
            }
        }
        _ => return invalid("the pool-size threshold needs all of --q, --lambda, --lipschitz and --beta"),
    }
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let rows = bench_aggregators(&default_bench_rules(a.seed), a.n, a.f, a.d, a.repeats, a.seed)?;
    writeln!(out, "aggregator,mean_us")?;
    for r in &rows {
        writeln!(out, "{},{}", r.name, fmt_real(r.mean_us))?;
    }
    let mut order: Vec<_> = rows.iter().collect();
    order.sort_by(|x, y| x.mean_us.total_cmp(&y.mean_us));
    let names: Vec<&str> = order.iter().map(|r| r.name.as_str()).collect();
    writeln!(out, "# ordering: {}", names.join(" < "))?;
    Ok(())
}

pub fn cmd_pool(a: &PoolArgs, out: &mut dyn Write) -> Result<()> {
    let pool = build_paper_pool(&mut SeededRng::new(a.seed, Stream::PoolBuild));
    for (i, m) in pool.members().iter().enumerate() {
        writeln!(out, "{i}\t{m}")?;
    }
    Ok(())
}

