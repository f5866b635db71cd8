//! Acceptance criteria, one test per criterion. Each test writes a single
//! `ACCEPTANCE <id> PASS|FAIL <detail>` line to stderr (uncaptured, so it shows
//! in `cargo test` output) and then asserts the same condition.
//!
//! The two experiment criteria run the shipped configs in `configs/` and take
//! minutes in release-optimised test builds.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use minexploit::beliefs::{BetaPosterior, DirichletPosterior};
use minexploit::harness::{generate_ground_truth, run_experiment, ExperimentConfig, GroundTruth};
use minexploit::nfg::{best_response_value, best_response_value_p1, simple_regret, solve_nfg};
use minexploit::sg::{hoffman_karp, induced_mdp, policy_iteration, sg_regret, shapley};
use minexploit::{ExploitabilityCurve, MixedStrategy, PayoffMatrix, Policy, StochasticGame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Tolerances pinned by the acceptance criteria.
const NFG_TOL: f64 = 1e-6;
const SG_AGREEMENT_TOL: f64 = 2e-6;
const SG_EPS: f64 = 1e-6;
const MDP_TOL: f64 = 1e-8;
const ZERO_REGRET_TOL: f64 = 1e-5;
const STANDARD_ERRORS: f64 = 3.0;
const SIGNIFICANCE: f64 = 0.01;

fn report(id: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    // bypasses libtest capture so every line reaches the log
    let _ = writeln!(std::io::stderr(), "ACCEPTANCE {id} {verdict} {detail}");
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str) -> ExperimentConfig {
    let path = configs_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    ExperimentConfig::from_json(&text).unwrap()
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> PayoffMatrix {
    PayoffMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.random()).collect()).unwrap()
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_solver_exactness() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;

    let pennies = PayoffMatrix::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
    let rps = PayoffMatrix::from_rows(vec![
        vec![0.0, -1.0, 1.0],
        vec![1.0, 0.0, -1.0],
        vec![-1.0, 1.0, 0.0],
    ])
    .unwrap();
    for (u, n) in [(&pennies, 2), (&rps, 3)] {
        let sol = solve_nfg(u).unwrap();
        let uniform = vec![1.0 / n as f64; n];
        worst = worst
            .max(sol.value.abs())
            .max(max_abs(sol.maxmin.probs(), &uniform))
            .max(max_abs(sol.minmax.probs(), &uniform));
    }
    let classic = worst;

    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let (rows, cols) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let u = random_matrix(&mut rng, rows, cols);
        let sol = solve_nfg(&u).unwrap();
        let maxmin = best_response_value(&u, &sol.maxmin).unwrap().0;
        let minmax = best_response_value_p1(&u, &sol.minmax).unwrap().0;
        // saddle point: neither player gains by deviating from the pair
        worst = worst
            .max((maxmin - minmax).abs())
            .max((sol.value - maxmin).abs())
            .max((minmax - sol.value).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst < NFG_TOL && elapsed < Duration::from_secs(10);
    report(
        1,
        pass,
        &format!("classic games max err {classic:.2e}; 1000 random games max gap {worst:.2e}; {elapsed:.2?}"),
    );
    assert!(pass);
}

/// Value and strategies of a 2x2 game from its pure saddle point or the
/// indifference conditions.
fn closed_form_2x2(u: &PayoffMatrix) -> (f64, Option<(f64, f64)>) {
    let (a, b, c, d) = (u.get(0, 0), u.get(0, 1), u.get(1, 0), u.get(1, 1));
    let lower = a.min(b).max(c.min(d));
    let upper = a.max(c).min(b.max(d));
    if lower == upper {
        return (lower, None);
    }
    let den = a - b - c + d;
    let p = (d - c) / den;
    let q = (d - b) / den;
    ((a * d - b * c) / den, Some((p, q)))
}

#[test]
fn criterion_2_two_by_two_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    let mut mixed = 0;
    for _ in 0..1000 {
        let u = random_matrix(&mut rng, 2, 2);
        let sol = solve_nfg(&u).unwrap();
        let (value, strategies) = closed_form_2x2(&u);
        worst = worst.max((sol.value - value).abs());
        match strategies {
            Some((p, q)) => {
                mixed += 1;
                worst = worst
                    .max((sol.maxmin.probs()[0] - p).abs())
                    .max((sol.minmax.probs()[0] - q).abs());
            }
            // a pure saddle may have several optimal strategies; check optimality
            None => {
                worst = worst
                    .max((best_response_value(&u, &sol.maxmin).unwrap().0 - value).abs())
                    .max((best_response_value_p1(&u, &sol.minmax).unwrap().0 - value).abs());
            }
        }
    }
    let pass = worst < NFG_TOL && mixed > 0;
    report(
        2,
        pass,
        &format!("1000 games ({mixed} fully mixed), max err {worst:.2e}"),
    );
    assert!(pass);
}

fn jeffreys_games(
    n: usize,
    n_states: usize,
    n_a1: usize,
    n_a2: usize,
    seed: u64,
) -> Vec<StochasticGame> {
    let mut config = ExperimentConfig::sg(n_states, n_a1, n_a2, 0.9, 1, 1, n);
    config.seed = seed;
    (0..n)
        .map(|t| match generate_ground_truth(&config, t).unwrap() {
            GroundTruth::Sg(g) => g,
            GroundTruth::Nfg(_) => unreachable!("stochastic config"),
        })
        .collect()
}

#[test]
fn criterion_3_sg_solver_agreement() {
    let start = Instant::now();
    let mut agreement: f64 = 0.0;
    for g in jeffreys_games(50, 10, 3, 3, 303) {
        let a = shapley(&g, SG_EPS).unwrap();
        let b = hoffman_karp(&g, SG_EPS).unwrap();
        agreement = agreement.max(a.v.max_abs_diff(&b.v));
    }

    // single-action opponent: the game is an MDP with an exact solution;
    // iterative solvers need a threshold below the tolerance to reach it
    let mut mdp_gap: f64 = 0.0;
    for g in jeffreys_games(50, 10, 3, 1, 304) {
        let exact = policy_iteration(&induced_mdp(&g, &Policy::uniform(10, 1)).unwrap()).unwrap();
        let a = shapley(&g, MDP_TOL / 10.0).unwrap();
        let b = hoffman_karp(&g, MDP_TOL / 10.0).unwrap();
        mdp_gap = mdp_gap
            .max(a.v.max_abs_diff(&exact.v))
            .max(b.v.max_abs_diff(&exact.v));
    }
    let elapsed = start.elapsed();
    let pass =
        agreement < SG_AGREEMENT_TOL && mdp_gap < MDP_TOL && elapsed < Duration::from_secs(120);
    report(
        3,
        pass,
        &format!("shapley vs hoffman-karp max gap {agreement:.2e}; vs policy iteration {mdp_gap:.2e}; {elapsed:.2?}"),
    );
    assert!(pass);
}

/// `|mean - expected| / (sd / sqrt(n))` for i.i.d. draws.
fn z_score(draws: &[f64], expected: f64, variance: f64) -> f64 {
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    (mean - expected).abs() / (variance / n).sqrt()
}

#[test]
fn criterion_4_conjugacy() {
    const N: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut exact = true;
    let mut worst_z: f64 = 0.0;

    // Beta: counts add to the parameters, mean a/(a+b), moments of draws
    let mut beta = BetaPosterior::jeffreys();
    let outcomes = [true, true, false, true, false, true, true];
    for &o in &outcomes {
        beta.observe(o);
    }
    exact &= beta.alpha == 5.5 && beta.beta == 2.5;
    exact &= beta.mean() == 5.5 / 8.0;
    for b in [
        beta,
        BetaPosterior::jeffreys(),
        BetaPosterior::new(30.0, 2.0).unwrap(),
    ] {
        let draws: Vec<f64> = (0..N).map(|_| b.sample(&mut rng)).collect();
        let var = b.variance();
        worst_z = worst_z.max(z_score(&draws, b.mean(), var));
        // second moment around the mean, with the fourth central moment for its error
        let (a, c) = (b.alpha, b.beta);
        let s = a + c;
        let kurt = 6.0 * ((a - c).powi(2) * (s + 1.0) - a * c * (s + 2.0))
            / (a * c * (s + 2.0) * (s + 3.0));
        let m4 = (kurt + 3.0) * var * var;
        let sq: Vec<f64> = draws.iter().map(|x| (x - b.mean()).powi(2)).collect();
        worst_z = worst_z.max(z_score(&sq, var, m4 - var * var));
    }

    // Dirichlet: categorical counts add to the concentrations
    let mut dir = DirichletPosterior::jeffreys(4);
    for o in [0, 2, 2, 3, 2] {
        dir.observe(o).unwrap();
    }
    exact &= dir.concentrations == vec![1.5, 0.5, 3.5, 1.5];
    let total: f64 = dir.concentrations.iter().sum();
    exact &= dir
        .mean()
        .iter()
        .zip(&dir.concentrations)
        .all(|(m, c)| *m == c / total);
    let draws: Vec<Vec<f64>> = (0..N).map(|_| dir.sample(&mut rng)).collect();
    exact &= draws
        .iter()
        .all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|&x| x >= 0.0));
    for (i, &c) in dir.concentrations.iter().enumerate() {
        let m = c / total;
        let var = m * (1.0 - m) / (total + 1.0);
        let xs: Vec<f64> = draws.iter().map(|p| p[i]).collect();
        worst_z = worst_z.max(z_score(&xs, m, var));
    }

    let pass = exact && worst_z < STANDARD_ERRORS;
    report(
        4,
        pass,
        &format!("exact updates {exact}; worst moment deviation {worst_z:.2} standard errors at {N} draws"),
    );
    assert!(pass);
}

fn final_regrets(curve: &ExploitabilityCurve, strategy: &str) -> Vec<f64> {
    let last = curve.final_summary(strategy).unwrap().episode;
    curve.regrets_at(strategy, last)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One-sided p-value that `a` exceeds `b` on average, pairing by trial.
fn paired_p_value(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let m = mean(&d);
    let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return if m > 0.0 { 0.0 } else { 1.0 };
    }
    let t = m / (sd / n.sqrt());
    1.0 - StudentsT::new(0.0, 1.0, n - 1.0).unwrap().cdf(t)
}

#[test]
fn criterion_5_nfg_experiment_ordering() {
    let start = Instant::now();
    let config = load_config("nfg_10x2.json");
    let curve = run_experiment(&config, jobs()).unwrap();
    let finals = |s: &str| mean(&final_regrets(&curve, s));
    let baselines = ["random", "min-count", "eps-greedy:0.1", "greedy"];
    let mut beaten = true;
    for leader in ["thompson", "bayes-ucb"] {
        for b in baselines {
            beaten &= finals(leader) < finals(b);
        }
    }
    let p = paired_p_value(
        &final_regrets(&curve, "greedy"),
        &final_regrets(&curve, "thompson"),
    );
    let elapsed = start.elapsed();
    let means: Vec<String> = curve
        .strategies()
        .iter()
        .map(|s| format!("{s}={:.5}", finals(s)))
        .collect();
    let pass = beaten && p < SIGNIFICANCE;
    report(
        5,
        pass,
        &format!(
            "{} trials, final mean regret [{}]; greedy > thompson p={p:.2e}; {elapsed:.0?}",
            config.trials,
            means.join(" ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_sg_experiment_ordering() {
    let start = Instant::now();
    let config = load_config("sg_10_states.json");
    let curve = run_experiment(&config, jobs()).unwrap();
    let early = curve.summary_at("thompson", 5).unwrap().mean;
    let late = curve.summary_at("thompson", config.episodes).unwrap().mean;
    let finals = |s: &str| curve.final_summary(s).unwrap().mean;
    let mut ranked: Vec<&str> = curve.strategies();
    ranked.sort_by(|a, b| finals(a).total_cmp(&finals(b)));
    let top_two = ranked[..2].contains(&"thompson") && ranked[..2].contains(&"bayes-ucb");
    let a = late < early;
    let b = finals("greedy") > finals("thompson");
    let elapsed = start.elapsed();
    let order: Vec<String> = ranked
        .iter()
        .map(|s| format!("{s}={:.4}", finals(s)))
        .collect();
    let pass = a && b && top_two;
    report(
        6,
        pass,
        &format!(
            "thompson T=5 {early:.4} -> T={} {late:.4} ({a}); greedy > thompson ({b}); top two ({top_two}); \
             ranking [{}]; {elapsed:.0?}",
            config.episodes,
            order.join(" ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_zero_regret_at_the_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut nfg_worst: f64 = 0.0;
    for _ in 0..200 {
        let (rows, cols) = (rng.random_range(1..=10), rng.random_range(1..=10));
        let u = random_matrix(&mut rng, rows, cols);
        let sol = solve_nfg(&u).unwrap();
        nfg_worst = nfg_worst.max(simple_regret(&u, &sol.maxmin).unwrap().abs());
    }
    let mut sg_worst: f64 = 0.0;
    for g in jeffreys_games(20, 10, 10, 2, 708) {
        let sol = hoffman_karp(&g, 1e-10).unwrap();
        sg_worst = sg_worst.max(sg_regret(&g, &sol.pi1).unwrap().abs());
    }
    // a uniform recommendation is a control that should not score zero
    let g = &jeffreys_games(1, 10, 10, 2, 709)[0];
    let control = sg_regret(g, &Policy(vec![MixedStrategy::uniform(10); 10])).unwrap();
    let pass =
        nfg_worst < ZERO_REGRET_TOL && sg_worst < ZERO_REGRET_TOL && control > ZERO_REGRET_TOL;
    report(
        7,
        pass,
        &format!("normal-form max |regret| {nfg_worst:.2e}; stochastic {sg_worst:.2e}; uniform control {control:.3}"),
    );
    assert!(pass);
}

fn explore(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_explore"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "explore {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn criterion_8_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut all_identical = true;
    let mut checked = Vec::new();
    for (name, config) in [
        ("nfg", load_config("smoke.json")),
        ("sg", {
            let mut c = ExperimentConfig::sg(3, 3, 2, 0.8, 6, 15, 3);
            c.belief_samples = 4;
            c.strategy_samples = 10;
            c.seed = 88;
            c
        }),
    ] {
        let out = dir.path().join(name);
        let cfg = dir.path().join(format!("{name}.json"));
        std::fs::write(&cfg, serde_json::to_string(&config).unwrap()).unwrap();
        explore(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            "1",
        ]);
        let manifest = out.join("manifest.json");
        let recorded = std::fs::read(out.join("raw.csv")).unwrap();
        for jobs in ["1", "3"] {
            let replay = out.join(format!("replay_{jobs}.csv"));
            explore(&[
                "replay",
                "--manifest",
                manifest.to_str().unwrap(),
                "--out",
                replay.to_str().unwrap(),
                "--jobs",
                jobs,
                "--verify",
            ]);
            let identical = std::fs::read(&replay).unwrap() == recorded;
            all_identical &= identical;
            checked.push(format!("{name}/jobs={jobs}:{identical}"));
        }
    }
    report(
        8,
        all_identical,
        &format!("replays [{}]", checked.join(" ")),
    );
    assert!(all_identical);
}
