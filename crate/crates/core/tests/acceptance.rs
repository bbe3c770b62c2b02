//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use mixtailor::aggregators::{
    agg_coord_median, agg_generalized_krum, agg_geom_median, agg_mixtailor, agg_trimmed_mean, build_paper_pool,
    krum_neighbor_sets, parse_aggregator, Aggregation, AggregatorSpec, PoolSpec,
};
use mixtailor::attacks::{attack_minmax_pool, default_lambda_grid, verify_attack, AdversaryView, AttackCost, AttackSpec, ADAPTIVE_EPSILONS};
use mixtailor::bounds::{capital_lambda, iid_bias_bound, mc_bias_estimate, BoundInputs, GaussianPanel};
use mixtailor::cli::main_with;
use mixtailor::harness::{
    bench_aggregators, default_bench_rules, prepare, run_baseline_with_setup, run_with_setup, Dataset, DatasetKind,
    DatasetSpec, ExperimentConfig, Model, ModelKind, ModelSpec,
};
use mixtailor::vector::norm_sandwich_check;
use mixtailor::{GradVec, PNorm, SeededRng, Stream};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn gaussian_panel(rng: &mut SeededRng, n: usize, d: usize, scale: f64) -> Vec<GradVec> {
    (0..n).map(|_| GradVec::new((0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())).collect()
}

fn brute_pnorm(x: &[f64], p: f64) -> f64 {
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn brute_krum(panel: &[GradVec], p: f64, f: usize) -> usize {
    let n = panel.len();
    let mut best = (f64::INFINITY, 0);
    for i in 0..n {
        let mut d: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let diff: Vec<f64> = panel[i].iter().zip(panel[j].iter()).map(|(a, b)| a - b).collect();
                brute_pnorm(&diff, p).powi(2)
            })
            .collect();
        d.sort_by(f64::total_cmp);
        let score: f64 = d[..n - f - 2].iter().sum();
        if score < best.0 {
            best = (score, i);
        }
    }
    best.1
}

fn sorted_column(panel: &[GradVec], c: usize) -> Vec<f64> {
    let mut col: Vec<f64> = panel.iter().map(|g| g[c]).collect();
    col.sort_by(f64::total_cmp);
    col
}

fn weber(z: (f64, f64), panel: &[GradVec]) -> f64 {
    panel.iter().map(|g| ((g[0] - z.0).powi(2) + (g[1] - z.1).powi(2)).sqrt()).sum()
}

/// Zooming grid search for the 2-D geometric median.
fn grid_geomed(panel: &[GradVec]) -> (f64, f64) {
    let (mut lo0, mut hi0, mut lo1, mut hi1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for g in panel {
        lo0 = lo0.min(g[0]);
        hi0 = hi0.max(g[0]);
        lo1 = lo1.min(g[1]);
        hi1 = hi1.max(g[1]);
    }
    let steps = 200;
    let mut best = (0.0, 0.0);
    for _ in 0..7 {
        let (h0, h1) = ((hi0 - lo0) / steps as f64, (hi1 - lo1) / steps as f64);
        let mut best_val = f64::INFINITY;
        for a in 0..=steps {
            for b in 0..=steps {
                let z = (lo0 + a as f64 * h0, lo1 + b as f64 * h1);
                let v = weber(z, panel);
                if v < best_val {
                    best_val = v;
                    best = z;
                }
            }
        }
        (lo0, hi0, lo1, hi1) = (best.0 - 3.0 * h0, best.0 + 3.0 * h0, best.1 - 3.0 * h1, best.1 + 3.0 * h1);
    }
    best
}

fn criterion_1() -> Verdict {
    let mut rng = SeededRng::new(1, Stream::MonteCarlo);
    let (mut krum_ok, mut comed_ok, mut trim_ok, mut geo_ok, mut geo_cases, mut worst_geo) = (0, 0, 0, 0, 0, 0.0f64);
    let panels = 400;
    for _ in 0..panels {
        let n = rng.gen_range(5..=12);
        let d = rng.gen_range(1..=6);
        let f = rng.gen_range(0..=((n - 3) / 2).min(2));
        let p = [1.0, 2.0, 4.0][rng.gen_range(0..3)];
        let panel = gaussian_panel(&mut rng, n, d, 1.0);
        let got = agg_generalized_krum(&panel, PNorm::new(p).unwrap(), f).unwrap().selected_worker.unwrap();
        krum_ok += usize::from(got == brute_krum(&panel, p, f));

        let comed = agg_coord_median(&panel).unwrap();
        let trim = agg_trimmed_mean(&panel, f).unwrap();
        let (mut c_ok, mut t_ok) = (true, true);
        for c in 0..d {
            let col = sorted_column(&panel, c);
            let med = if n % 2 == 1 { col[n / 2] } else { 0.5 * (col[n / 2 - 1] + col[n / 2]) };
            let kept = &col[f..n - f];
            let tm = kept.iter().sum::<f64>() / kept.len() as f64;
            c_ok &= comed[c] == med;
            t_ok &= trim[c] == tm;
        }
        comed_ok += usize::from(c_ok);
        trim_ok += usize::from(t_ok);

        if d == 2 || geo_cases < 60 {
            let panel2: Vec<GradVec> = if d == 2 { panel.clone() } else { gaussian_panel(&mut rng, n, 2, 1.0) };
            let z = agg_geom_median(&panel2, 1e-10, 10_000).unwrap();
            let g = grid_geomed(&panel2);
            let err = ((z[0] - g.0).powi(2) + (z[1] - g.1).powi(2)).sqrt();
            worst_geo = worst_geo.max(err);
            geo_cases += 1;
            geo_ok += usize::from(err <= 1e-4);
        }
    }
    let pass = krum_ok == panels && comed_ok == panels && trim_ok == panels && geo_ok == geo_cases;
    verdict(
        pass,
        format!(
            "{panels} panels: krum {krum_ok}/{panels}, comed {comed_ok}/{panels}, trimmed mean {trim_ok}/{panels}, geomed {geo_ok}/{geo_cases} (worst l2 gap {worst_geo:.2e})"
        ),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = SeededRng::new(2, Stream::MonteCarlo);
    let mut sandwich_ok = 0;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=50);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let a: f64 = rng.gen_range(1.0..16.0);
        let b: f64 = rng.gen_range(1.0..16.0);
        let (p, q) = (a.min(b), a.max(b) + 1e-3);
        sandwich_ok += usize::from(norm_sandwich_check(&x, p, q).unwrap());
    }
    let mut neighbor_ok = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(5..=16);
        let f = rng.gen_range(0..=(n - 3) / 2);
        let d = rng.gen_range(1..=8);
        let p = [1.0, 2.0, 3.0, 4.0][rng.gen_range(0..4)];
        let mut panel = gaussian_panel(&mut rng, n, d, 1.0);
        let mut byz: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(byz.as_mut_slice(), &mut rng);
        byz.truncate(f);
        for &b in &byz {
            let s: f64 = rng.gen_range(0.0..100.0);
            panel[b] = GradVec::new((0..d).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect());
        }
        let sets = krum_neighbor_sets(&panel, PNorm::new(p).unwrap(), f).unwrap();
        let ok = sets.iter().enumerate().filter(|(i, _)| !byz.contains(i)).all(|(_, set)| {
            let honest = set.iter().filter(|j| !byz.contains(j)).count();
            set.len() == n - f - 2 && honest + 2 * f + 2 >= n && honest <= n - f - 2
        });
        neighbor_ok += usize::from(ok);
    }
    verdict(
        sandwich_ok == 1000 && neighbor_ok == 1000,
        format!("norm sandwich {sandwich_ok}/1000, neighbour-set bounds {neighbor_ok}/1000"),
    )
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mixtailor").chain(args.iter().copied()).map(String::from);
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn labeled(text: &str, name: &str) -> Option<f64> {
    text.lines().find_map(|l| {
        let (k, v) = l.split_once(" = ")?;
        (k == name).then(|| v.parse().ok()).flatten()
    })
}

fn criterion_3() -> Verdict {
    let (code, out, _) = run_cli(&[
        "bounds", "--n", "12", "--f", "2", "--d", "4", "--p", "2", "--sigma2", "1", "--delta2", "0", "--q", "1", "--lambda", "1",
        "--lipschitz", "1", "--beta", "1",
    ]);
    let expect = [
        ("lambda", 5.0 / 3.0),
        ("iid_bias_bound", 16.0 / 3.0),
        ("noniid_bias_bound", 38.0 / 3.0),
        ("pool_size_threshold", 2.0),
    ];
    let mut fails = Vec::new();
    for (name, want) in expect {
        match labeled(&out, name) {
            Some(v) if (v - want).abs() < 5e-7 => {}
            other => fails.push(format!("{name}={other:?}")),
        }
    }
    let (bad_code, _, bad_err) = run_cli(&["bounds", "--n", "6", "--f", "2", "--d", "4"]);
    let contract = bad_code == 2 && bad_err.contains("n > 2f+2 violated");
    verdict(
        code == 0 && fails.is_empty() && contract,
        format!("lambda=5/3 iid=16/3 noniid=38/3 threshold=2 to 6 dp; n=6 f=2 exits {bad_code}; mismatches {fails:?}"),
    )
}

fn criterion_4() -> Verdict {
    let (n, f, d) = (12, 2, 10);
    let grad = GradVec::new((0..d).map(|c| 0.5 - 0.1 * c as f64).collect());
    let agg = Aggregation::Single(AggregatorSpec::generalized_krum(PNorm::L2));
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, sigma2) in [0.25, 1.0, 4.0].into_iter().enumerate() {
        let model = GaussianPanel::iid(grad.clone(), sigma2, n, f);
        let est = mc_bias_estimate(&agg, &model, &AttackSpec::None, 10_000, 40 + k as u64).unwrap();
        let bound = iid_bias_bound(&BoundInputs::new(n, f, d, 2.0).with_variances(sigma2, 0.0)).unwrap();
        let ok = est.squared_bias <= bound + 3.0 * est.mc_error;
        pass &= ok;
        parts.push(format!("sigma2={sigma2}: {:.4} <= {:.4}", est.squared_bias, bound + 3.0 * est.mc_error));
    }
    let lambda = capital_lambda(n, f, d, 2.0).unwrap();
    verdict(pass, format!("Lambda={lambda:.4}, 10^4 trials; {}", parts.join(", ")))
}

struct DeskRuns {
    base: f64,
    krum: f64,
    comed: f64,
    mix: f64,
}

fn desk_config(seed: u64, noise: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    cfg.dataset.noise_scale = noise;
    cfg.eval_every = cfg.iterations;
    cfg
}

fn desk_runs(seed: u64, noise: f64, attack: &AttackSpec, with_base: bool) -> DeskRuns {
    let cfg = desk_config(seed, noise);
    let setup = prepare(&cfg).unwrap();
    let base = if with_base { run_baseline_with_setup(&cfg, &setup).unwrap().final_accuracy() } else { f64::NAN };
    let acc = |descr: &str| {
        let mut c = cfg.clone();
        c.aggregator = parse_aggregator(descr).unwrap();
        c.attack = attack.clone();
        run_with_setup(&c, &setup).unwrap().final_accuracy()
    };
    DeskRuns { base, krum: acc("kind=krum p=2"), comed: acc("kind=comed"), mix: acc("kind=mixtailor pool=paper") }
}

fn criterion_5() -> Verdict {
    let seeds = 0..5u64;
    let small = AttackSpec::EpsilonReverse { epsilon: 0.1 };
    let large = AttackSpec::EpsilonReverse { epsilon: 10.0 };
    let mut sweep = Vec::new();
    let mut regime = None;
    for noise in [2.0, 1.0, 0.5] {
        let runs: Vec<DeskRuns> = seeds.clone().map(|s| desk_runs(s, noise, &small, true)).collect();
        let krum_fails = runs.iter().filter(|r| r.base - r.krum >= 0.10).count();
        let mix_holds = runs.iter().filter(|r| r.base - r.mix <= 0.05).count();
        sweep.push(format!("noise {noise}: krum trails>=10 in {krum_fails}/5, mix within 5 in {mix_holds}/5"));
        if krum_fails >= 4 && mix_holds >= 4 {
            regime = Some((noise, runs));
            break;
        }
    }
    let Some((noise, small_runs)) = regime else {
        return verdict(false, format!("regime-not-found; sweep: {}", sweep.join("; ")));
    };
    let large_runs: Vec<DeskRuns> = seeds.map(|s| desk_runs(s, noise, &large, true)).collect();
    let comed_fails = large_runs.iter().filter(|r| r.base - r.comed >= 0.10).count();
    let mix_holds = large_runs.iter().filter(|r| r.base - r.mix <= 0.05).count();
    let never_worst = small_runs.iter().chain(&large_runs).all(|r| r.mix >= r.krum.min(r.comed));
    let fmt = |rs: &[DeskRuns]| {
        rs.iter()
            .map(|r| format!("{:.3}/{:.3}/{:.3}/{:.3}", r.base, r.krum, r.comed, r.mix))
            .collect::<Vec<_>>()
            .join(" ")
    };
    verdict(
        comed_fails >= 4 && mix_holds >= 4 && never_worst,
        format!(
            "regime noise_scale={noise}; (a) {}; (b) comed trails>=10 in {comed_fails}/5, mix within 5 in {mix_holds}/5; (c) mix never below worst: {never_worst}; base/krum/comed/mix eps=0.1 [{}] eps=10 [{}]",
            sweep.last().unwrap(),
            fmt(&small_runs),
            fmt(&large_runs)
        ),
    )
}

fn criterion_6() -> Verdict {
    let attack = AttackSpec::Adaptive { epsilon_set: ADAPTIVE_EPSILONS.to_vec() };
    let runs: Vec<DeskRuns> = (0..5).map(|s| desk_runs(s, 2.0, &attack, false)).collect();
    let wins = runs.iter().filter(|r| r.mix > r.krum && r.mix > r.comed).count();
    let table: Vec<String> = runs.iter().map(|r| format!("{:.3}/{:.3}/{:.3}", r.krum, r.comed, r.mix)).collect();
    verdict(wins >= 4, format!("mix beats both in {wins}/5 seeds; krum/comed/mix [{}]", table.join(" ")))
}

fn criterion_7() -> Verdict {
    let pool = build_paper_pool(&mut SeededRng::new(7, Stream::PoolBuild));
    let shape_ok = pool.len() == 64 && pool.members().iter().all(|m| (1.0..=16.0).contains(&m.p.value()));
    let mut rng = SeededRng::new(7, Stream::MonteCarlo);
    let panel = gaussian_panel(&mut rng, 12, 2, 1.0);
    let mut server = SeededRng::new(7, Stream::ServerPool);
    let draws = 10_000;
    let mut counts = vec![0u32; 64];
    for _ in 0..draws {
        counts[agg_mixtailor(&panel, &pool, 2, &mut server).unwrap().chosen_member] += 1;
    }
    let expected = draws as f64 / 64.0;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p_value = 1.0 - ChiSquared::new(63.0).unwrap().cdf(stat);
    verdict(shape_ok && p_value >= 0.01, format!("64 members with p in [1,16]: {shape_ok}; chi2={stat:.2} (df 63), p={p_value:.3}"))
}

fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = desk_config(3, 2.0);
    cfg.iterations = 300;
    cfg.eval_every = 50;
    cfg.aggregator = parse_aggregator("kind=mixtailor").unwrap();
    cfg.attack = AttackSpec::Adaptive { epsilon_set: ADAPTIVE_EPSILONS.to_vec() };
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, cfg.to_text()).unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let (code, _, err) =
            run_cli(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code, 0, "{err}");
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "3");
    let b = run("b.csv", "3");
    let c = run("c.csv", "4");
    verdict(a == b && a != c, format!("same seed identical: {}, other seed differs: {}, {} bytes", a == b, a != c, a.len()))
}

fn fd_max_error(kind: ModelKind, data: DatasetKind, classes: usize, hidden: Vec<usize>) -> f64 {
    let spec = DatasetSpec { kind: data, num_examples: 40, dim: 5, num_classes: classes, ..DatasetSpec::default() };
    let ds: Dataset = mixtailor::harness::generate_dataset(&spec, 9).unwrap();
    let model = Model::new(&ModelSpec { kind, hidden, weight_decay: 0.0, init_scale: 0.3 }, ds.dim, ds.num_classes).unwrap();
    let w = model.init(&mut SeededRng::new(9, Stream::ModelInit));
    let idx: Vec<usize> = (0..ds.len()).collect();
    let (_, g) = model.loss_and_grad(&w, &ds, &idx);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for c in 0..w.dim() {
        let mut plus = w.clone();
        plus.as_mut_slice()[c] += h;
        let mut minus = w.clone();
        minus.as_mut_slice()[c] -= h;
        let fd = (model.loss(&plus, &ds, &idx) - model.loss(&minus, &ds, &idx)) / (2.0 * h);
        let err = (fd - g[c]).abs();
        let rel = err / g[c].abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

fn criterion_9() -> Verdict {
    let lin = fd_max_error(ModelKind::Linear, DatasetKind::SyntheticLinear, 1, vec![]);
    let logit = fd_max_error(ModelKind::Logistic, DatasetKind::SyntheticLogistic, 2, vec![]);
    let softmax = fd_max_error(ModelKind::Logistic, DatasetKind::SyntheticBlobs, 4, vec![]);
    let mlp = fd_max_error(ModelKind::Mlp, DatasetKind::SyntheticBlobs, 3, vec![6]);
    let worst = lin.max(logit).max(softmax).max(mlp);
    verdict(
        worst <= 1e-4,
        format!("max relative error linear {lin:.1e}, logistic {logit:.1e}, softmax {softmax:.1e}, mlp {mlp:.1e}"),
    )
}

fn criterion_10() -> Verdict {
    let rules: Vec<(String, Aggregation)> =
        default_bench_rules(0).into_iter().filter(|(n, _)| ["mean", "comed", "krum", "bulyan"].contains(&n.as_str())).collect();
    let rows = bench_aggregators(&rules, 12, 2, 10_000, 20, 0).unwrap();
    let t = |name: &str| rows.iter().find(|r| r.name == name).unwrap().mean_us;
    let ordered = t("mean") < t("comed") && t("comed") < t("krum") && t("krum") < t("bulyan");
    let table: Vec<String> = rows.iter().map(|r| format!("{} {:.0}us", r.name, r.mean_us)).collect();
    verdict(ordered, format!("n=12 d=10^4: {}", table.join(", ")))
}

fn criterion_11() -> Verdict {
    let mut rng = SeededRng::new(11, Stream::MonteCarlo);
    let honest: Vec<GradVec> =
        gaussian_panel(&mut rng, 10, 8, 1.0).into_iter().map(|g| g.add(&GradVec::new(vec![0.5; 8]))).collect();
    let pool = PoolSpec::new(vec![AggregatorSpec::mean()]).unwrap();
    let solve = |grid: &[f64]| {
        let mut view = AdversaryView::new(honest.clone(), Some(pool.clone()), SeededRng::new(11, Stream::Attack)).unwrap();
        attack_minmax_pool(&mut view, 2, grid, &mut AttackCost::default()).unwrap()
    };
    let base = solve(&default_lambda_grid());
    let (dot, success) =
        verify_attack(&base.byzantine, &honest, &AggregatorSpec::mean(), &mut SeededRng::new(0, Stream::Attack), &mut AttackCost::default())
            .unwrap();
    let certified = success && (dot - base.xi).abs() <= 1e-9 * base.xi.abs().max(1.0);
    let mut xis = vec![base.xi];
    for k in 1..=3 {
        let pts = 24 * (1 << k);
        let grid: Vec<f64> = (0..=pts).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / pts as f64)).collect();
        xis.push(solve(&grid).xi);
    }
    let monotone = xis.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs());
    verdict(
        base.xi < 0.0 && certified && monotone,
        format!("xi={:.4} at lambda={:.3}, verified dot={dot:.4}; xi under refinement {xis:.4?}", base.xi, base.lambda),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Duration); 11] = [
        ("aggregator oracle equivalence", criterion_1, Duration::from_secs(30)),
        ("norm sandwich and neighbour sets", criterion_2, Duration::from_secs(10)),
        ("bound plug-ins", criterion_3, Duration::from_secs(1)),
        ("Monte Carlo Krum bias bound", criterion_4, Duration::from_secs(120)),
        ("defense/failure ordering", criterion_5, Duration::from_secs(600)),
        ("adaptive attack parity", criterion_6, Duration::from_secs(600)),
        ("uniform pool draw", criterion_7, Duration::from_secs(60)),
        ("determinism", criterion_8, Duration::from_secs(120)),
        ("gradient correctness", criterion_9, Duration::from_secs(10)),
        ("benchmark ordering", criterion_10, Duration::from_secs(120)),
        ("min-max attack sanity", criterion_11, Duration::from_secs(10)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let stdout = std::io::stdout();
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let pass = v.pass && in_time;
        failed += usize::from(!pass);
        let mut line = format!(
            "criterion {id:>2} {}: {name} ({:.1}s): {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            v.detail
        );
        if !in_time {
            line += &format!(" [over the {}s budget]", budget.as_secs());
        }
        let mut lock = stdout.lock();
        let _ = writeln!(lock, "{line}");
        let _ = lock.flush();
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
