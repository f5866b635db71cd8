use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::StrategyKind;
use crate::sg::{SgMethod, BASELINE_EPS, SAMPLE_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Nfg,
    Sg,
}

/// Episodes after which the current recommendation is scored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checkpoints {
    /// About this many geometrically spaced episodes in `[1, T]`, always
    /// including `T`.
    Geometric(usize),
    /// Every episode.
    Every,
    /// An explicit list.
    Episodes(Vec<usize>),
}

impl Default for Checkpoints {
    fn default() -> Self {
        Self::Geometric(20)
    }
}

impl Checkpoints {
    /// Sorted, deduplicated schedule for a budget of `episodes`. A zero budget
    /// scores only the prior.
    pub fn schedule(&self, episodes: usize) -> Vec<usize> {
        if episodes == 0 {
            return vec![0];
        }
        let mut out: Vec<usize> = match self {
            Self::Every => (1..=episodes).collect(),
            Self::Episodes(list) => list.clone(),
            Self::Geometric(points) => {
                let points = (*points).max(1);
                let top = episodes as f64;
                let mut v: Vec<usize> = (0..points)
                    .map(|i| {
                        if points == 1 {
                            episodes
                        } else {
                            top.powf(i as f64 / (points - 1) as f64).round() as usize
                        }
                    })
                    .collect();
                v.push(episodes);
                v
            }
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn default_one() -> usize {
    1
}

fn default_samples() -> usize {
    100
}

fn default_gamma() -> f64 {
    0.9
}

fn default_strategies() -> Vec<StrategyKind> {
    StrategyKind::ALL.to_vec()
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_sample_eps() -> f64 {
    SAMPLE_EPS
}

fn default_baseline_eps() -> f64 {
    BASELINE_EPS
}

/// A complete, replayable experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n_a1: usize,
    pub n_a2: usize,
    /// Stochastic games only.
    #[serde(default = "default_one")]
    pub n_states: usize,
    /// Stochastic games only.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub episodes: usize,
    /// Stochastic games only; normal-form episodes are a single joint action.
    #[serde(default = "default_one")]
    pub steps_per_episode: usize,
    pub trials: usize,
    /// Belief samples per decision and per recommendation (K).
    #[serde(default = "default_samples")]
    pub belief_samples: usize,
    /// Random mixed strategies per player in the UCB1 / Bayes-UCB candidate
    /// sets.
    #[serde(default = "default_samples")]
    pub strategy_samples: usize,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default)]
    pub checkpoints: Checkpoints,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Use one ground-truth game for every trial instead of a fresh one.
    #[serde(default)]
    pub fixed_game: bool,
    /// Solver for belief samples and regret baselines.
    #[serde(default)]
    pub solver: SgMethod,
    #[serde(default = "default_sample_eps")]
    pub sample_eps: f64,
    #[serde(default = "default_baseline_eps")]
    pub baseline_eps: f64,
}

impl ExperimentConfig {
    /// A normal-form experiment with 100 belief and strategy samples.
    pub fn nfg(n_a1: usize, n_a2: usize, episodes: usize, trials: usize) -> Self {
        Self {
            mode: Mode::Nfg,
            n_a1,
            n_a2,
            n_states: 1,
            gamma: default_gamma(),
            episodes,
            steps_per_episode: 1,
            trials,
            belief_samples: default_samples(),
            strategy_samples: default_samples(),
            strategies: default_strategies(),
            checkpoints: Checkpoints::default(),
            seed: 0,
            out: default_out(),
            fixed_game: false,
            solver: SgMethod::default(),
            sample_eps: SAMPLE_EPS,
            baseline_eps: BASELINE_EPS,
        }
    }

    /// A stochastic-game experiment with 100 belief and strategy samples.
    pub fn sg(
        n_states: usize,
        n_a1: usize,
        n_a2: usize,
        gamma: f64,
        episodes: usize,
        steps_per_episode: usize,
        trials: usize,
    ) -> Self {
        Self {
            mode: Mode::Sg,
            n_states,
            gamma,
            steps_per_episode,
            ..Self::nfg(n_a1, n_a2, episodes, trials)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_a1", self.n_a1),
            ("n_a2", self.n_a2),
            ("n_states", self.n_states),
            ("steps_per_episode", self.steps_per_episode),
            ("trials", self.trials),
            ("belief_samples", self.belief_samples),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if self.mode == Mode::Sg && !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "gamma {} outside [0, 1)",
                self.gamma
            )));
        }
        for (name, eps) in [
            ("sample_eps", self.sample_eps),
            ("baseline_eps", self.baseline_eps),
        ] {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if let Checkpoints::Episodes(list) = &self.checkpoints {
            if let Some(bad) = list.iter().find(|&&e| e > self.episodes) {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint {bad} beyond the {} episode budget",
                    self.episodes
                )));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<usize> {
        self.checkpoints.schedule(self.episodes)
    }

    /// Scale of the UCB1 confidence width: payoffs of a matrix game lie in
    /// `[0, 1]`, Q-values of a discounted game in `[0, 1 / (1 - gamma)]`.
    pub(crate) fn bonus_scale(&self) -> f64 {
        match self.mode {
            Mode::Nfg => 1.0,
            Mode::Sg => 1.0 / (1.0 - self.gamma),
        }
    }
}
