//! `explore`: run pure-exploration experiments, solve games, replay results.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use minexploit::harness::{
    emit_results, manifest_dir, run_experiment, write_raw, ExperimentConfig, Manifest, RAW_FILE,
};
use minexploit::nfg::solve_nfg;
use minexploit::sg::SgMethod;
use minexploit::{StochasticGame, StrategyKind};

#[derive(Parser)]
#[command(
    name = "explore",
    version,
    about = "Learn minimally exploitable strategies by pure exploration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve a one-state, gamma = 0 game file as a matrix game.
    SolveNfg { game: PathBuf },
    /// Solve a stochastic game file.
    SolveSg {
        game: PathBuf,
        #[arg(long, default_value = "hoffman-karp")]
        method: String,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Rerun the experiment recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Where to write the regenerated raw CSV; defaults to
        /// `replay.csv` next to the manifest.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Fail unless the regenerated raw CSV matches the recorded one byte
        /// for byte.
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated strategy names, e.g. `thompson,eps-greedy:0.1`.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(e) = self.episodes {
            config.episodes = e;
        }
        if let Some(t) = self.trials {
            config.trials = t;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(list) = &self.strategies {
            config.strategies = list
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<StrategyKind>())
                .collect::<Result<_, _>>()?;
        }
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        config.validate()?;
        Ok(())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(config_path: &Path, overrides: &Overrides) -> Result<()> {
    let mut config = ExperimentConfig::from_json(&read(config_path)?)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    overrides.apply(&mut config)?;
    let curve = run_experiment(&config, overrides.jobs)?;
    emit_results(&curve, &Manifest::new(&config), &config.out)?;
    for s in curve.strategies() {
        if let Some(row) = curve.final_summary(s) {
            println!(
                "{:<16} episode {:>6}  regret {:.6} ± {:.6}",
                s, row.episode, row.mean, row.std
            );
        }
    }
    println!("results written to {}", config.out.display());
    Ok(())
}

fn solve_nfg_file(path: &Path) -> Result<()> {
    let game = StochasticGame::from_json(&read(path)?)?;
    if game.n_states() != 1 {
        bail!(
            "{} has {} states; use solve-sg",
            path.display(),
            game.n_states()
        );
    }
    let sol = solve_nfg(game.rewards(0))?;
    println!("{}", serde_json::to_string_pretty(&sol)?);
    Ok(())
}

fn solve_sg_file(path: &Path, method: &str, eps: f64) -> Result<()> {
    let game = StochasticGame::from_json(&read(path)?)?;
    let method: SgMethod = method.parse()?;
    let sol = method.solve(&game, eps, None)?;
    println!("{}", serde_json::to_string_pretty(&sol)?);
    Ok(())
}

fn replay(manifest_path: &Path, out: Option<&Path>, jobs: usize, verify: bool) -> Result<()> {
    let manifest = Manifest::read(manifest_path)?;
    let dir = manifest_dir(manifest_path);
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("replay.csv"));
    let curve = run_experiment(&manifest.config, jobs)?;
    write_raw(&curve, &out)?;
    println!("raw rows written to {}", out.display());
    if verify {
        let recorded = dir.join(if manifest.raw.is_empty() {
            RAW_FILE
        } else {
            &manifest.raw
        });
        let a = fs::read(&recorded).with_context(|| format!("reading {}", recorded.display()))?;
        let b = fs::read(&out).with_context(|| format!("reading {}", out.display()))?;
        if a != b {
            bail!("{} differs from {}", out.display(), recorded.display());
        }
        println!("identical to {}", recorded.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, overrides } => run(config, overrides),
        Command::SolveNfg { game } => solve_nfg_file(game),
        Command::SolveSg { game, method, eps } => solve_sg_file(game, method, *eps),
        Command::Replay {
            manifest,
            out,
            jobs,
            verify,
        } => replay(manifest, out.as_deref(), *jobs, *verify),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
