//! Ground-truth game representations, strategies and payoff evaluation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::PROB_TOL;

/// Mean payoffs to Player 1 of a zero-sum normal-form game, stored row-major
/// as an `|A1| x |A2|` grid. Player 2 receives the negation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PayoffMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(
                "payoff matrix needs at least one action per player".into(),
            ));
        }
        check_dim("payoff matrix data", rows * cols, data.len())?;
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "payoff matrix entry {bad} is not finite"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in &rows {
            check_dim("payoff matrix row length", n_cols, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(n_rows, n_cols, data)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    /// Builds a matrix from an entry generator; used internally where the
    /// entries are finite by construction.
    pub(crate) fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, a1: usize, a2: usize) -> f64 {
        self.data[a1 * self.cols + a2]
    }

    #[inline]
    pub fn at(&self, profile: ActionProfile) -> f64 {
        self.get(profile.a1, profile.a2)
    }

    #[inline]
    pub fn row(&self, a1: usize) -> &[f64] {
        &self.data[a1 * self.cols..(a1 + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// The game seen from Player 2 as a maximiser: entry `(a2, a1)` is
    /// `-u(a1, a2)`.
    pub fn negated_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |j, i| -self.get(i, j))
    }

    /// Payoff of each Player 2 action against the mixed row strategy `s1`,
    /// i.e. `u(s1, a2)` for every `a2`.
    pub fn payoffs_against_row(&self, s1: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (a1, &p) in s1.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (o, &u) in out.iter_mut().zip(self.row(a1)) {
                *o += p * u;
            }
        }
        out
    }

    /// Payoff of each Player 1 action against the mixed column strategy `s2`,
    /// i.e. `u(a1, s2)` for every `a1`.
    pub fn payoffs_against_col(&self, s2: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|a1| self.row(a1).iter().zip(s2).map(|(u, p)| u * p).sum())
            .collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for PayoffMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<PayoffMatrix> for Vec<Vec<f64>> {
    fn from(m: PayoffMatrix) -> Self {
        m.to_rows()
    }
}

/// A probability distribution over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    /// Validates that `probs` is nonnegative and sums to one within
    /// [`PROB_TOL`]. No renormalisation is applied.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_distribution(&probs)?;
        Ok(Self(probs))
    }

    /// Normalises nonnegative weights into a strategy. Used where the weights
    /// come out of a sampler or an LP and only carry rounding error.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidProbability("empty strategy".into()));
        }
        for w in &mut weights {
            if !w.is_finite() || *w < -PROB_TOL {
                return Err(Error::InvalidProbability(format!("weight {w}")));
            }
            *w = w.max(0.0);
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidProbability("weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform strategy over an empty action set");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, action: usize) -> Self {
        assert!(action < n, "pure action {action} out of range {n}");
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        Self(probs)
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        check_dim("strategy mix", self.len(), other.len())?;
        Self::from_weights(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        )
    }

    /// Draws an action index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.0, rng)
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(s: MixedStrategy) -> Self {
        s.0
    }
}

pub(crate) fn validate_distribution(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidProbability("empty distribution".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidProbability(format!("entry {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidProbability(format!("sums to {total}")));
    }
    Ok(())
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// A joint action: one index per player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionProfile {
    pub a1: usize,
    pub a2: usize,
}

impl ActionProfile {
    pub fn new(a1: usize, a2: usize) -> Self {
        Self { a1, a2 }
    }
}

/// `u(s1, s2) = sum_{a1,a2} u(a1,a2) s1(a1) s2(a2)`.
pub fn expected_payoff(u: &PayoffMatrix, s1: &MixedStrategy, s2: &MixedStrategy) -> Result<f64> {
    check_dim("row strategy", u.rows(), s1.len())?;
    check_dim("column strategy", u.cols(), s2.len())?;
    Ok(u.payoffs_against_row(s1.probs())
        .iter()
        .zip(s2.probs())
        .map(|(v, p)| v * p)
        .sum())
}

/// A two-player zero-sum discounted stochastic game with tabular mean rewards
/// and next-state distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameDoc", into = "GameDoc")]
pub struct StochasticGame {
    n_states: usize,
    n_a1: usize,
    n_a2: usize,
    gamma: f64,
    rewards: Vec<PayoffMatrix>,
    // flattened [s][a1][a2][s']
    transitions: Vec<f64>,
}

impl StochasticGame {
    /// `transitions` is flattened as `[s][a1][a2][s']`. The discount may be 1
    /// here; the solvers reject it.
    pub fn new(gamma: f64, rewards: Vec<PayoffMatrix>, transitions: Vec<f64>) -> Result<Self> {
        let n_states = rewards.len();
        if n_states == 0 {
            return Err(Error::InvalidArgument("game has no states".into()));
        }
        let n_a1 = rewards[0].rows();
        let n_a2 = rewards[0].cols();
        for r in &rewards {
            check_dim("reward rows", n_a1, r.rows())?;
            check_dim("reward columns", n_a2, r.cols())?;
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!(
                "discount {gamma} outside [0, 1]"
            )));
        }
        check_dim(
            "transition data",
            n_states * n_a1 * n_a2 * n_states,
            transitions.len(),
        )?;
        for row in transitions.chunks(n_states) {
            validate_distribution(row)?;
        }
        Ok(Self {
            n_states,
            n_a1,
            n_a2,
            gamma,
            rewards,
            transitions,
        })
    }

    /// A normal-form game as a one-state game with a self-loop and no
    /// continuation value.
    pub fn from_nfg(u: PayoffMatrix) -> Self {
        let n = u.rows() * u.cols();
        Self {
            n_states: 1,
            n_a1: u.rows(),
            n_a2: u.cols(),
            gamma: 0.0,
            rewards: vec![u],
            transitions: vec![1.0; n],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_a1(&self) -> usize {
        self.n_a1
    }

    pub fn n_a2(&self) -> usize {
        self.n_a2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!(
                "discount {gamma} outside [0, 1]"
            )));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn rewards(&self, s: usize) -> &PayoffMatrix {
        &self.rewards[s]
    }

    /// Next-state distribution after playing `(a1, a2)` in `s`.
    #[inline]
    pub fn transition(&self, s: usize, a1: usize, a2: usize) -> &[f64] {
        let start = ((s * self.n_a1 + a1) * self.n_a2 + a2) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub(crate) fn require_discounted(&self) -> Result<()> {
        if self.gamma < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "solvers require a discount below 1, got {}",
                self.gamma
            )))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// On-disk layout of a game.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GameDoc {
    n_states: usize,
    n_a1: usize,
    n_a2: usize,
    gamma: f64,
    rewards: Vec<Vec<Vec<f64>>>,
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<GameDoc> for StochasticGame {
    type Error = Error;

    fn try_from(doc: GameDoc) -> Result<Self> {
        check_dim("rewards", doc.n_states, doc.rewards.len())?;
        check_dim("transitions", doc.n_states, doc.transitions.len())?;
        let rewards = doc
            .rewards
            .into_iter()
            .map(PayoffMatrix::from_rows)
            .collect::<Result<Vec<_>>>()?;
        let mut flat = Vec::with_capacity(doc.n_states * doc.n_a1 * doc.n_a2 * doc.n_states);
        for per_state in &doc.transitions {
            check_dim("transition rows", doc.n_a1, per_state.len())?;
            for per_a1 in per_state {
                check_dim("transition columns", doc.n_a2, per_a1.len())?;
                for dist in per_a1 {
                    check_dim("next-state distribution", doc.n_states, dist.len())?;
                    flat.extend_from_slice(dist);
                }
            }
        }
        let game = StochasticGame::new(doc.gamma, rewards, flat)?;
        check_dim("n_a1", doc.n_a1, game.n_a1)?;
        check_dim("n_a2", doc.n_a2, game.n_a2)?;
        Ok(game)
    }
}

impl From<StochasticGame> for GameDoc {
    fn from(g: StochasticGame) -> Self {
        let transitions = (0..g.n_states)
            .map(|s| {
                (0..g.n_a1)
                    .map(|a1| {
                        (0..g.n_a2)
                            .map(|a2| g.transition(s, a1, a2).to_vec())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GameDoc {
            n_states: g.n_states,
            n_a1: g.n_a1,
            n_a2: g.n_a2,
            gamma: g.gamma,
            rewards: g.rewards.iter().map(PayoffMatrix::to_rows).collect(),
            transitions,
        }
    }
}

/// One mixed strategy per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy(pub Vec<MixedStrategy>);

impl Policy {
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self(vec![MixedStrategy::uniform(n_actions); n_states])
    }

    pub fn n_states(&self) -> usize {
        self.0.len()
    }

    pub fn state(&self, s: usize) -> &MixedStrategy {
        &self.0[s]
    }
}

/// Per-state matrices of action-profile values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QFunction(pub Vec<PayoffMatrix>);

impl QFunction {
    pub fn state(&self, s: usize) -> &PayoffMatrix {
        &self.0[s]
    }

    pub fn n_states(&self) -> usize {
        self.0.len()
    }
}

/// Per-state values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Sup-norm distance.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `Q(s)(a1,a2) = R(s)(a1,a2) + gamma * sum_{s'} T(s)(a1,a2)(s') v(s')`.
pub fn q_from_v(game: &StochasticGame, v: &ValueFunction) -> Result<QFunction> {
    check_dim("value function", game.n_states(), v.0.len())?;
    let gamma = game.gamma();
    let q = (0..game.n_states())
        .map(|s| {
            let r = game.rewards(s);
            if gamma == 0.0 {
                return r.clone();
            }
            PayoffMatrix::from_fn(game.n_a1(), game.n_a2(), |a1, a2| {
                let cont: f64 = game
                    .transition(s, a1, a2)
                    .iter()
                    .zip(&v.0)
                    .map(|(p, x)| p * x)
                    .sum();
                r.get(a1, a2) + gamma * cont
            })
        })
        .collect();
    Ok(QFunction(q))
}
