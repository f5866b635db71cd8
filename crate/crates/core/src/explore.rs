//! Exploration strategies. Each maps a belief snapshot to an [`ActionRule`],
//! a distribution over action profiles, from which profiles are drawn.
//!
//! The same code serves normal-form games and the per-state matrices of a
//! stochastic game: in the latter the ensemble holds the state-`s` slices of
//! the solved Q-functions of the episode's sampled games.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::beliefs::VisitCounts;
use crate::error::{check_dim, Error, Result};
use crate::game::{sample_index, ActionProfile, MixedStrategy, PayoffMatrix};
use crate::nfg::{solve_maxmeanmin, solve_minmeanmax, solve_nfg};

/// Default exploration probability of epsilon-greedy.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyKind {
    Random,
    MinCount,
    Greedy,
    EpsGreedy(f64),
    Thompson,
    Ucb1,
    BayesUcb,
}

impl StrategyKind {
    /// All seven strategies, epsilon-greedy at its default epsilon.
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Random,
        StrategyKind::MinCount,
        StrategyKind::Greedy,
        StrategyKind::EpsGreedy(DEFAULT_EPSILON),
        StrategyKind::Thompson,
        StrategyKind::Ucb1,
        StrategyKind::BayesUcb,
    ];

    /// Number of belief samples the strategy consumes per decision, given the
    /// configured ensemble size `k`. In stochastic games UCB1 averages the
    /// sampled Q slices because the posterior mean Q has no closed form.
    pub fn ensemble_size(&self, k: usize, stochastic: bool) -> usize {
        match self {
            Self::Random | Self::MinCount => 0,
            Self::Thompson => 1,
            Self::Ucb1 if !stochastic => 0,
            Self::Ucb1 | Self::Greedy | Self::EpsGreedy(_) | Self::BayesUcb => k,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Random => f.write_str("random"),
            Self::MinCount => f.write_str("min-count"),
            Self::Greedy => f.write_str("greedy"),
            Self::EpsGreedy(eps) => write!(f, "eps-greedy:{eps}"),
            Self::Thompson => f.write_str("thompson"),
            Self::Ucb1 => f.write_str("ucb1"),
            Self::BayesUcb => f.write_str("bayes-ucb"),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim() {
            "random" => Self::Random,
            "min-count" => Self::MinCount,
            "greedy" => Self::Greedy,
            "eps-greedy" => Self::EpsGreedy(DEFAULT_EPSILON),
            "thompson" => Self::Thompson,
            "ucb1" => Self::Ucb1,
            "bayes-ucb" => Self::BayesUcb,
            other => {
                let eps = other
                    .strip_prefix("eps-greedy:")
                    .and_then(|e| e.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy '{other}'")))?;
                if !(0.0..=1.0).contains(&eps) {
                    return Err(Error::InvalidArgument(format!(
                        "epsilon {eps} outside [0, 1]"
                    )));
                }
                Self::EpsGreedy(eps)
            }
        };
        Ok(kind)
    }
}

impl TryFrom<String> for StrategyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StrategyKind> for String {
    fn from(k: StrategyKind) -> Self {
        k.to_string()
    }
}

/// Everything a strategy may look at when choosing a profile in one matrix
/// game.
#[derive(Debug, Clone, Copy)]
pub struct ExplorationContext<'a> {
    pub counts: &'a VisitCounts,
    /// Sampled payoff matrices (or Q slices). Only strategies that need them
    /// require it to be non-empty.
    pub ensemble: &'a [PayoffMatrix],
    /// Posterior-mean payoffs for UCB1; when absent the ensemble average is
    /// used.
    pub mean: Option<&'a PayoffMatrix>,
    /// Number of random mixed strategies per player in the candidate sets of
    /// UCB1 and Bayes-UCB.
    pub n_strategy_samples: usize,
    /// Multiplies the UCB1 confidence width; 1 for payoffs in `[0, 1]`.
    pub bonus_scale: f64,
}

impl<'a> ExplorationContext<'a> {
    pub fn new(counts: &'a VisitCounts) -> Self {
        Self {
            counts,
            ensemble: &[],
            mean: None,
            n_strategy_samples: 100,
            bonus_scale: 1.0,
        }
    }

    pub fn with_ensemble(mut self, ensemble: &'a [PayoffMatrix]) -> Self {
        self.ensemble = ensemble;
        self
    }

    pub fn with_mean(mut self, mean: &'a PayoffMatrix) -> Self {
        self.mean = Some(mean);
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.counts.n_a1(), self.counts.n_a2())
    }

    fn check_ensemble(&self) -> Result<()> {
        if self.ensemble.is_empty() {
            return Err(Error::InvalidArgument(
                "strategy needs belief samples".into(),
            ));
        }
        let (n1, n2) = self.dims();
        for u in self.ensemble {
            check_dim("ensemble rows", n1, u.rows())?;
            check_dim("ensemble columns", n2, u.cols())?;
        }
        Ok(())
    }
}

/// A distribution over action profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionRule {
    Uniform {
        n_a1: usize,
        n_a2: usize,
    },
    /// Uniform over a set of profiles.
    Among(Vec<ActionProfile>),
    /// Independent draws `a1 ~ sigma1`, `a2 ~ sigma2`.
    Product(MixedStrategy, MixedStrategy),
    /// With probability `epsilon` uniform, otherwise `rule`.
    Mixture {
        epsilon: f64,
        n_a1: usize,
        n_a2: usize,
        rule: Box<ActionRule>,
    },
}

impl ActionRule {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionProfile {
        match self {
            Self::Uniform { n_a1, n_a2 } => {
                ActionProfile::new(rng.random_range(0..*n_a1), rng.random_range(0..*n_a2))
            }
            Self::Among(set) => set[rng.random_range(0..set.len())],
            Self::Product(s1, s2) => {
                let a1 = sample_index(s1.probs(), rng);
                let a2 = sample_index(s2.probs(), rng);
                ActionProfile::new(a1, a2)
            }
            Self::Mixture {
                epsilon,
                n_a1,
                n_a2,
                rule,
            } => {
                if rng.random_bool(*epsilon) {
                    Self::Uniform {
                        n_a1: *n_a1,
                        n_a2: *n_a2,
                    }
                    .sample(rng)
                } else {
                    rule.sample(rng)
                }
            }
        }
    }

    /// Probability of drawing `p`.
    pub fn probability(&self, p: ActionProfile) -> f64 {
        match self {
            Self::Uniform { n_a1, n_a2 } => 1.0 / (n_a1 * n_a2) as f64,
            Self::Among(set) => set.iter().filter(|&&q| q == p).count() as f64 / set.len() as f64,
            Self::Product(s1, s2) => s1.probs()[p.a1] * s2.probs()[p.a2],
            Self::Mixture {
                epsilon,
                n_a1,
                n_a2,
                rule,
            } => epsilon / (n_a1 * n_a2) as f64 + (1.0 - epsilon) * rule.probability(p),
        }
    }
}

/// Builds the action rule of `kind`. Epsilon-greedy becomes a
/// [`ActionRule::Mixture`] over the greedy rule.
pub fn action_rule<R: Rng + ?Sized>(
    kind: StrategyKind,
    ctx: &ExplorationContext<'_>,
    rng: &mut R,
) -> Result<ActionRule> {
    match kind {
        StrategyKind::Random => Ok(rule_random(ctx)),
        StrategyKind::MinCount => Ok(rule_min_count(ctx)),
        StrategyKind::Greedy => rule_greedy(ctx),
        StrategyKind::EpsGreedy(epsilon) => {
            let (n_a1, n_a2) = ctx.dims();
            Ok(ActionRule::Mixture {
                epsilon,
                n_a1,
                n_a2,
                rule: Box::new(rule_greedy(ctx)?),
            })
        }
        StrategyKind::Thompson => rule_thompson(ctx, rng),
        StrategyKind::Ucb1 => rule_ucb1(ctx, rng),
        StrategyKind::BayesUcb => rule_bayes_ucb(ctx, rng),
    }
}

/// Chooses one action profile with strategy `kind`.
pub fn pick<R: Rng + ?Sized>(
    kind: StrategyKind,
    ctx: &ExplorationContext<'_>,
    rng: &mut R,
) -> Result<ActionProfile> {
    Ok(action_rule(kind, ctx, rng)?.sample(rng))
}

pub fn rule_random(ctx: &ExplorationContext<'_>) -> ActionRule {
    let (n_a1, n_a2) = ctx.dims();
    ActionRule::Uniform { n_a1, n_a2 }
}

/// Uniform over the least-visited profiles.
pub fn rule_min_count(ctx: &ExplorationContext<'_>) -> ActionRule {
    let (_, n2) = ctx.dims();
    let cells = ctx.counts.cells();
    let least = cells.iter().copied().min().unwrap_or(0);
    ActionRule::Among(
        cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == least)
            .map(|(i, _)| ActionProfile::new(i / n2, i % n2))
            .collect(),
    )
}

/// Maxmeanmin strategy for Player 1 and minmeanmax strategy for Player 2 over
/// the ensemble.
pub fn rule_greedy(ctx: &ExplorationContext<'_>) -> Result<ActionRule> {
    ctx.check_ensemble()?;
    let (s1, _) = solve_maxmeanmin(ctx.ensemble)?;
    let (s2, _) = solve_minmeanmax(ctx.ensemble)?;
    Ok(ActionRule::Product(s1, s2))
}

/// Equilibrium of one ensemble member chosen uniformly.
pub fn rule_thompson<R: Rng + ?Sized>(
    ctx: &ExplorationContext<'_>,
    rng: &mut R,
) -> Result<ActionRule> {
    ctx.check_ensemble()?;
    let k = if ctx.ensemble.len() == 1 {
        0
    } else {
        rng.random_range(0..ctx.ensemble.len())
    };
    let sol = solve_nfg(&ctx.ensemble[k])?;
    Ok(ActionRule::Product(sol.maxmin, sol.minmax))
}

/// Optimistic worst-case value for Player 1 and pessimistic best-case value
/// for Player 2, each maximised over a finite candidate set of strategies.
pub fn rule_ucb1<R: Rng + ?Sized>(ctx: &ExplorationContext<'_>, rng: &mut R) -> Result<ActionRule> {
    let (n1, n2) = ctx.dims();
    let averaged;
    let mean = match ctx.mean {
        Some(m) => {
            check_dim("mean rows", n1, m.rows())?;
            check_dim("mean columns", n2, m.cols())?;
            m
        }
        None => {
            ctx.check_ensemble()?;
            averaged = ensemble_mean(ctx.ensemble);
            &averaged
        }
    };
    let total = ctx.counts.total();
    let width = |n_sigma: f64| -> f64 {
        if total == 0 || n_sigma <= 0.0 {
            f64::INFINITY
        } else {
            ctx.bonus_scale * (2.0 * (total as f64).ln() / n_sigma).sqrt()
        }
    };

    let n_row = ctx.counts.p1_marginals();
    let n_col = ctx.counts.p2_marginals();
    let mut buf = Vec::with_capacity(n1.max(n2));

    let cands1 = simplex_candidates(n1, ctx.n_strategy_samples, rng);
    let scores1: Vec<f64> = cands1
        .iter()
        .map(|s| {
            let n_sigma = dot_counts(s.probs(), &n_row);
            worst_case_row(mean, s.probs(), &mut buf) + width(n_sigma)
        })
        .collect();
    let s1 = cands1[argbest(&scores1, rng)].clone();

    let cands2 = simplex_candidates(n2, ctx.n_strategy_samples, rng);
    // minimise the lower confidence bound of Player 1's best response
    let scores2: Vec<f64> = cands2
        .iter()
        .map(|s| {
            let n_sigma = dot_counts(s.probs(), &n_col);
            width(n_sigma) - best_case_col(mean, s.probs(), &mut buf)
        })
        .collect();
    let s2 = cands2[argbest(&scores2, rng)].clone();
    Ok(ActionRule::Product(s1, s2))
}

/// Quantile-optimistic choice over candidate sets: Player 1 maximises the
/// `1 - 1/n` quantile over the ensemble of its worst-case payoff, Player 2
/// minimises the `1/n` quantile of Player 1's best-response payoff.
pub fn rule_bayes_ucb<R: Rng + ?Sized>(
    ctx: &ExplorationContext<'_>,
    rng: &mut R,
) -> Result<ActionRule> {
    ctx.check_ensemble()?;
    let (n1, n2) = ctx.dims();
    let k = ctx.ensemble.len();
    let level = bayes_ucb_level(ctx.counts.total(), k);
    let mut buf = Vec::with_capacity(n1.max(n2));
    let mut values = vec![0.0; k];

    let cands1 = simplex_candidates(n1, ctx.n_strategy_samples, rng);
    let scores1: Vec<f64> = cands1
        .iter()
        .map(|s| {
            for (v, u) in values.iter_mut().zip(ctx.ensemble) {
                *v = worst_case_row(u, s.probs(), &mut buf);
            }
            interpolated_quantile(&mut values, level)
        })
        .collect();
    let s1 = cands1[argbest(&scores1, rng)].clone();

    let cands2 = simplex_candidates(n2, ctx.n_strategy_samples, rng);
    let scores2: Vec<f64> = cands2
        .iter()
        .map(|s| {
            for (v, u) in values.iter_mut().zip(ctx.ensemble) {
                *v = best_case_col(u, s.probs(), &mut buf);
            }
            -interpolated_quantile(&mut values, 1.0 - level)
        })
        .collect();
    let s2 = cands2[argbest(&scores2, rng)].clone();
    Ok(ActionRule::Product(s1, s2))
}

/// Quantile level `1 - 1/n` for Player 1, clipped to
/// `[1/(K+1), 1 - 1/(K+1)]`; `n = 0` is treated as `n = 1`.
pub fn bayes_ucb_level(total: u64, k: usize) -> f64 {
    let n = total.max(1) as f64;
    let edge = 1.0 / (k as f64 + 1.0);
    (1.0 - 1.0 / n).clamp(edge, 1.0 - edge)
}

/// Linearly interpolated empirical quantile: with the values sorted
/// ascending, position `q (K - 1)` is interpolated between its neighbours.
/// Sorts `values` in place.
pub fn interpolated_quantile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    values.sort_unstable_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(values.len() - 1);
    values[lo] + (h - lo as f64) * (values[hi] - values[lo])
}

/// `count` strategies drawn uniformly from the simplex, followed by every
/// pure strategy.
pub fn simplex_candidates<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    rng: &mut R,
) -> Vec<MixedStrategy> {
    let mut out = Vec::with_capacity(count + n);
    for _ in 0..count {
        out.push(uniform_simplex(n, rng));
    }
    out.extend((0..n).map(|a| MixedStrategy::pure(n, a)));
    out
}

/// Symmetric Dirichlet(1) draw by normalising exponentials.
pub fn uniform_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MixedStrategy {
    loop {
        let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
        if let Ok(s) = MixedStrategy::from_weights(w) {
            return s;
        }
    }
}

fn ensemble_mean(ensemble: &[PayoffMatrix]) -> PayoffMatrix {
    let (n1, n2) = (ensemble[0].rows(), ensemble[0].cols());
    let k = ensemble.len() as f64;
    PayoffMatrix::from_fn(n1, n2, |i, j| {
        ensemble.iter().map(|u| u.get(i, j)).sum::<f64>() / k
    })
}

fn dot_counts(probs: &[f64], counts: &[u64]) -> f64 {
    probs.iter().zip(counts).map(|(p, &c)| p * c as f64).sum()
}

/// `min_{a2} u(sigma1, a2)`.
fn worst_case_row(u: &PayoffMatrix, s1: &[f64], buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.resize(u.cols(), 0.0);
    for (i, &p) in s1.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (b, x) in buf.iter_mut().zip(u.row(i)) {
            *b += p * x;
        }
    }
    buf.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `max_{a1} u(a1, sigma2)`.
fn best_case_col(u: &PayoffMatrix, s2: &[f64], _buf: &mut Vec<f64>) -> f64 {
    (0..u.rows())
        .map(|i| u.row(i).iter().zip(s2).map(|(x, p)| x * p).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Index of the largest score, uniformly among exact ties.
fn argbest<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == best).collect();
    match ties.len() {
        0 => 0,
        1 => ties[0],
        n => ties[rng.random_range(0..n)],
    }
}
