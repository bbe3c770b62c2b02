use std::path::Path;
use std::process::{Command, Output};

use mixtailor::aggregators::{parse_aggregator, AggregatorDescriptor};
use mixtailor::attacks::{verify_attack, AttackCost};
use mixtailor::harness::{DatasetKind, ExperimentConfig, LrSchedule, ModelKind};
use mixtailor::matrix_csv::parse_grad_matrix;
use mixtailor::{GradVec, SeededRng, Stream};

fn mixtailor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixtailor")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

const HONEST: &str = "\
# ten honest workers
1.5,0.25,-0.5
1.25,0.5,-0.25
2,0,-0.75
1.75,0.125,-0.5
1,0.375,-0.375
1.5,0.5,-1
1.125,0.25,-0.625
2.25,0.75,-0.5
1.375,-0.125,-0.25
1.625,0.625,-0.875
";

#[test]
fn help_and_usage_errors() {
    let help = mixtailor(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for cmd in ["run", "aggregate", "attack", "bounds", "bench", "pool"] {
        assert!(text(&help.stdout).contains(cmd), "{cmd}");
    }
    assert_eq!(mixtailor(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mixtailor(&["bounds", "--n", "twelve", "--f", "2", "--d", "4"]).status.code(), Some(2));
}

#[test]
fn contract_violations_exit_with_one_line() {
    let out = mixtailor(&["bounds", "--n", "6", "--f", "2", "--d", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("n > 2f+2 violated"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_input_file() {
    let out = mixtailor(&["aggregate", "--grads", "/nonexistent/grads.csv", "--agg", "kind=mean", "--f", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).starts_with("error:"));
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.dataset.kind = DatasetKind::SyntheticLinear;
    cfg.model.kind = ModelKind::Linear;
    cfg.lr = LrSchedule::Constant(100.0);
    cfg.momentum = 0.0;
    cfg.iterations = 400;
    let config = dir.path().join("diverge.cfg");
    std::fs::write(&config, cfg.to_text()).unwrap();
    let csv = dir.path().join("out.csv");
    let out = mixtailor(&["run", "--config", config.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("diverged"), "{}", text(&out.stderr));
}

#[test]
fn bad_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    std::fs::write(&config, "n = 12\nf = 2\nmomentun = 0.9\n").unwrap();
    let out = mixtailor(&["run", "--config", config.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 3"), "{}", text(&out.stderr));
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn attack_then_aggregate_matches_verification() {
    let dir = tempfile::tempdir().unwrap();
    let honest_path = write(dir.path(), "honest.csv", HONEST);
    let honest = parse_grad_matrix(HONEST).unwrap();
    let clean = {
        let mut m = GradVec::zeros(3);
        for g in &honest {
            m.add_scaled(g, 1.0 / honest.len() as f64);
        }
        m
    };
    let cases = [
        ("kind=reverse epsilon=10", "kind=mean"),
        ("kind=reverse epsilon=0.1", "kind=krum p=2"),
        ("kind=alittle z=1.5", "kind=comed"),
        ("kind=minmax", "kind=trimmedmean trim=2"),
        ("kind=partial epsilon=10 k=8", "kind=geomed"),
    ];
    for (attack, agg) in cases {
        let generated = mixtailor(&["attack", "--grads", &honest_path, "--attack", attack, "--f", "2", "--n", "12", "--agg", agg]);
        assert_eq!(generated.status.code(), Some(0), "{attack}: {}", text(&generated.stderr));
        let byz_text = text(&generated.stdout);
        let byz = parse_grad_matrix(&byz_text).unwrap();
        assert_eq!(byz.len(), 2);
        let panel_path = write(dir.path(), "panel.csv", &format!("{byz_text}{HONEST}"));
        let aggregated = mixtailor(&["aggregate", "--grads", &panel_path, "--agg", agg, "--f", "2"]);
        assert_eq!(aggregated.status.code(), Some(0), "{agg}: {}", text(&aggregated.stderr));
        let u = parse_grad_matrix(&text(&aggregated.stdout)).unwrap();
        let cli_dot = u[0].dot(&clean);

        let AggregatorDescriptor::Rule(rule) = parse_aggregator(agg).unwrap() else { unreachable!() };
        let (dot, _) = verify_attack(&byz, &honest, &rule, &mut SeededRng::new(0, Stream::ServerPool), &mut AttackCost::default()).unwrap();
        let printing: f64 = u[0]
            .iter()
            .zip(clean.iter())
            .map(|(x, c)| if *x == 0.0 { 0.0 } else { c.abs() * 0.5 * 10f64.powf(x.abs().log10().floor() - 8.0) })
            .sum();
        let tol = 1e-9 * dot.abs().max(1.0) + printing;
        assert!((cli_dot - dot).abs() <= tol, "{attack} vs {agg}: {cli_dot} vs {dot} (tol {tol})");
    }
}

#[test]
fn attack_needs_exactly_the_honest_rows() {
    let dir = tempfile::tempdir().unwrap();
    let honest_path = write(dir.path(), "honest.csv", HONEST);
    let out = mixtailor(&["attack", "--grads", &honest_path, "--attack", "kind=reverse epsilon=1", "--f", "2", "--n", "13"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_are_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.iterations = 200;
    cfg.eval_every = 50;
    cfg.aggregator = parse_aggregator("kind=mixtailor").unwrap();
    let config = write(dir.path(), "run.cfg", &cfg.to_text());
    let run = |name: &str| {
        let csv = dir.path().join(name);
        let out = mixtailor(&["run", "--config", &config, "--out", csv.to_str().unwrap(), "--seed", "11", "--baseline"]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
        (std::fs::read(csv).unwrap(), out.stdout)
    };
    let (a, stdout_a) = run("a.csv");
    let (b, stdout_b) = run("b.csv");
    assert_eq!(a, b);
    assert_eq!(stdout_a, stdout_b);
    let stdout = text(&stdout_a);
    assert!(stdout.contains("final_test_accuracy = ") && stdout.contains("omniscient_gap = "), "{stdout}");
    assert_eq!(text(&a).lines().count(), 1 + 4);
}

#[test]
fn pool_lists_sixty_four_members() {
    let out = mixtailor(&["pool", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let body = text(&out.stdout);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 64);
    for (i, line) in lines.iter().enumerate() {
        let (idx, descr) = line.split_once('\t').unwrap();
        assert_eq!(idx, i.to_string());
        assert!(matches!(parse_aggregator(descr).unwrap(), AggregatorDescriptor::Rule(_)), "{descr}");
    }
}

#[test]
fn bench_reports_every_rule() {
    let out = mixtailor(&["bench", "--n", "12", "--f", "2", "--d", "200", "--repeats", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let body = text(&out.stdout);
    assert!(body.starts_with("aggregator,mean_us\n"));
    for name in ["mean", "comed", "krum", "geomed", "bulyan", "mixtailor"] {
        assert!(body.lines().any(|l| l.starts_with(&format!("{name},"))), "{name}");
    }
    assert!(body.lines().last().unwrap().starts_with("# ordering:"));
}
