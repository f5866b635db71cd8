//! Conjugate beliefs over unknown games: Beta posteriors over Bernoulli reward
//! means and Dirichlet posteriors over categorical next-state distributions.
//!
//! Exploration and recommendation only need to sample from a belief (and, for
//! UCB1, its mean), which is what [`PayoffBelief`] and [`GameBelief`] expose.
//! Other likelihoods can be plugged in behind those traits.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::game::{ActionProfile, PayoffMatrix, StochasticGame};

/// Concentration of the Jeffreys prior for Bernoulli and categorical outcomes.
pub const JEFFREYS: f64 = 0.5;

fn gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    // shape > 0 is a type invariant of both posteriors
    Gamma::new(shape, 1.0)
        .expect("positive gamma shape")
        .sample(rng)
}

fn binary(reward: f64) -> Result<bool> {
    if reward == 1.0 {
        Ok(true)
    } else if reward == 0.0 {
        Ok(false)
    } else {
        Err(Error::InvalidArgument(format!(
            "rewards must be binary, got {reward}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPosterior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(Self { alpha, beta })
        } else {
            Err(Error::InvalidArgument(format!(
                "beta concentrations must be positive, got ({alpha}, {beta})"
            )))
        }
    }

    pub fn jeffreys() -> Self {
        Self {
            alpha: JEFFREYS,
            beta: JEFFREYS,
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    pub fn observe(&mut self, success: bool) {
        if success {
            self.alpha += 1.0;
        } else {
            self.beta += 1.0;
        }
    }

    /// `X / (X + Y)` with `X ~ Gamma(alpha)`, `Y ~ Gamma(beta)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = gamma_draw(self.alpha, rng);
        let y = gamma_draw(self.beta, rng);
        let total = x + y;
        if total > 0.0 {
            x / total
        } else {
            self.mean()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletPosterior {
    pub concentrations: Vec<f64>,
}

impl DirichletPosterior {
    pub fn new(concentrations: Vec<f64>) -> Result<Self> {
        if concentrations.is_empty() || concentrations.iter().any(|&c| !(c > 0.0 && c.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "dirichlet concentrations must be positive".into(),
            ));
        }
        Ok(Self { concentrations })
    }

    pub fn jeffreys(n: usize) -> Self {
        Self {
            concentrations: vec![JEFFREYS; n],
        }
    }

    pub fn len(&self) -> usize {
        self.concentrations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concentrations.is_empty()
    }

    pub fn mean(&self) -> Vec<f64> {
        let total: f64 = self.concentrations.iter().sum();
        self.concentrations.iter().map(|c| c / total).collect()
    }

    pub fn observe(&mut self, outcome: usize) -> Result<()> {
        let n = self.len();
        let c = self
            .concentrations
            .get_mut(outcome)
            .ok_or_else(|| Error::InvalidArgument(format!("outcome {outcome} out of {n}")))?;
        *c += 1.0;
        Ok(())
    }

    /// Normalised independent Gamma draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut draws: Vec<f64> = self
            .concentrations
            .iter()
            .map(|&c| gamma_draw(c, rng))
            .collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            draws.iter_mut().for_each(|x| *x /= total);
            draws
        } else {
            self.mean()
        }
    }
}

/// Visit counts `n(a1, a2)` of one matrix game, with their total `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitCounts {
    n_a1: usize,
    n_a2: usize,
    cells: Vec<u64>,
    total: u64,
}

impl VisitCounts {
    pub fn zeros(n_a1: usize, n_a2: usize) -> Self {
        Self {
            n_a1,
            n_a2,
            cells: vec![0; n_a1 * n_a2],
            total: 0,
        }
    }

    /// Builds counts from a row-major grid.
    pub fn from_grid(n_a1: usize, n_a2: usize, cells: Vec<u64>) -> Result<Self> {
        check_dim("count grid", n_a1 * n_a2, cells.len())?;
        let total = cells.iter().sum();
        Ok(Self {
            n_a1,
            n_a2,
            cells,
            total,
        })
    }

    pub fn n_a1(&self) -> usize {
        self.n_a1
    }

    pub fn n_a2(&self) -> usize {
        self.n_a2
    }

    pub fn get(&self, p: ActionProfile) -> u64 {
        self.cells[p.a1 * self.n_a2 + p.a2]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    /// `n(a1) = sum_{a2} n(a1, a2)`.
    pub fn p1_marginals(&self) -> Vec<u64> {
        self.cells
            .chunks(self.n_a2)
            .map(|r| r.iter().sum())
            .collect()
    }

    /// `n(a2) = sum_{a1} n(a1, a2)`.
    pub fn p2_marginals(&self) -> Vec<u64> {
        let mut out = vec![0; self.n_a2];
        for row in self.cells.chunks(self.n_a2) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += c;
            }
        }
        out
    }

    fn check(&self, p: ActionProfile) -> Result<()> {
        if p.a1 < self.n_a1 && p.a2 < self.n_a2 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "profile ({}, {}) outside {}x{}",
                p.a1, p.a2, self.n_a1, self.n_a2
            )))
        }
    }

    fn record(&mut self, p: ActionProfile) {
        self.cells[p.a1 * self.n_a2 + p.a2] += 1;
        self.total += 1;
    }

    fn consistent(&self) -> bool {
        self.cells.len() == self.n_a1 * self.n_a2 && self.cells.iter().sum::<u64>() == self.total
    }
}

/// A belief over normal-form payoff matrices.
pub trait PayoffBelief {
    fn dims(&self) -> (usize, usize);
    fn sample_payoffs(&self, rng: &mut dyn RngCore) -> PayoffMatrix;
    fn mean_payoffs(&self) -> PayoffMatrix;
}

/// A belief over stochastic games.
pub trait GameBelief {
    fn sample_game(&self, gamma: f64, rng: &mut dyn RngCore) -> Result<StochasticGame>;
}

/// Independent Beta beliefs over the Bernoulli mean of every action profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfgBelief {
    n_a1: usize,
    n_a2: usize,
    cells: Vec<BetaPosterior>,
    counts: VisitCounts,
}

impl NfgBelief {
    /// Beta(1/2, 1/2) on every profile, no visits.
    pub fn jeffreys(n_a1: usize, n_a2: usize) -> Result<Self> {
        if n_a1 == 0 || n_a2 == 0 {
            return Err(Error::InvalidArgument("empty action set".into()));
        }
        Ok(Self {
            n_a1,
            n_a2,
            cells: vec![BetaPosterior::jeffreys(); n_a1 * n_a2],
            counts: VisitCounts::zeros(n_a1, n_a2),
        })
    }

    /// A belief concentrated near `means` with total pseudo-count `strength`
    /// per cell. Means are clamped into the open unit interval.
    pub fn concentrated(means: &PayoffMatrix, strength: f64) -> Result<Self> {
        let mut b = Self::jeffreys(means.rows(), means.cols())?;
        for (cell, &m) in b.cells.iter_mut().zip(means.as_slice()) {
            let m = m.clamp(1e-9, 1.0 - 1e-9);
            *cell = BetaPosterior::new(m * strength, (1.0 - m) * strength)?;
        }
        Ok(b)
    }

    pub fn n_a1(&self) -> usize {
        self.n_a1
    }

    pub fn n_a2(&self) -> usize {
        self.n_a2
    }

    pub fn cell(&self, p: ActionProfile) -> &BetaPosterior {
        &self.cells[p.a1 * self.n_a2 + p.a2]
    }

    pub fn counts(&self) -> &VisitCounts {
        &self.counts
    }

    /// Conjugate update with a binary reward observed at `profile`.
    pub fn update(&mut self, profile: ActionProfile, reward: f64) -> Result<()> {
        let success = binary(reward)?;
        self.counts.check(profile)?;
        self.cells[profile.a1 * self.n_a2 + profile.a2].observe(success);
        self.counts.record(profile);
        Ok(())
    }

    /// One payoff matrix drawn cell-wise from the posterior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PayoffMatrix {
        PayoffMatrix::from_fn(self.n_a1, self.n_a2, |i, j| {
            self.cells[i * self.n_a2 + j].sample(rng)
        })
    }

    /// Posterior mean payoffs `alpha / (alpha + beta)`.
    pub fn mean(&self) -> PayoffMatrix {
        PayoffMatrix::from_fn(self.n_a1, self.n_a2, |i, j| {
            self.cells[i * self.n_a2 + j].mean()
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_dim("belief cells", self.n_a1 * self.n_a2, self.cells.len())?;
        for c in &self.cells {
            BetaPosterior::new(c.alpha, c.beta)?;
        }
        if self.counts.n_a1 != self.n_a1
            || self.counts.n_a2 != self.n_a2
            || !self.counts.consistent()
        {
            return Err(Error::InvalidArgument("inconsistent visit counts".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(text)?;
        b.validate()?;
        Ok(b)
    }
}

impl PayoffBelief for NfgBelief {
    fn dims(&self) -> (usize, usize) {
        (self.n_a1, self.n_a2)
    }

    fn sample_payoffs(&self, rng: &mut dyn RngCore) -> PayoffMatrix {
        self.sample(rng)
    }

    fn mean_payoffs(&self) -> PayoffMatrix {
        self.mean()
    }
}

/// Beta beliefs over rewards and Dirichlet beliefs over transitions for every
/// `(state, action profile)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgBelief {
    n_states: usize,
    n_a1: usize,
    n_a2: usize,
    rewards: Vec<BetaPosterior>,
    transitions: Vec<DirichletPosterior>,
    counts: Vec<VisitCounts>,
}

impl SgBelief {
    pub fn jeffreys(n_states: usize, n_a1: usize, n_a2: usize) -> Result<Self> {
        if n_states == 0 || n_a1 == 0 || n_a2 == 0 {
            return Err(Error::InvalidArgument("empty state or action set".into()));
        }
        let cells = n_states * n_a1 * n_a2;
        Ok(Self {
            n_states,
            n_a1,
            n_a2,
            rewards: vec![BetaPosterior::jeffreys(); cells],
            transitions: vec![DirichletPosterior::jeffreys(n_states); cells],
            counts: vec![VisitCounts::zeros(n_a1, n_a2); n_states],
        })
    }

    /// A belief concentrated near `game` with pseudo-count `strength` per
    /// reward cell and per transition distribution.
    pub fn concentrated(game: &StochasticGame, strength: f64) -> Result<Self> {
        let mut b = Self::jeffreys(game.n_states(), game.n_a1(), game.n_a2())?;
        for s in 0..game.n_states() {
            for a1 in 0..game.n_a1() {
                for a2 in 0..game.n_a2() {
                    let idx = b.index(s, ActionProfile::new(a1, a2));
                    let m = game.rewards(s).get(a1, a2).clamp(1e-9, 1.0 - 1e-9);
                    b.rewards[idx] = BetaPosterior::new(m * strength, (1.0 - m) * strength)?;
                    b.transitions[idx] = DirichletPosterior::new(
                        game.transition(s, a1, a2)
                            .iter()
                            .map(|p| p.max(1e-12) * strength)
                            .collect(),
                    )?;
                }
            }
        }
        Ok(b)
    }

    #[inline]
    fn index(&self, s: usize, p: ActionProfile) -> usize {
        (s * self.n_a1 + p.a1) * self.n_a2 + p.a2
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

    pub fn reward(&self, s: usize, p: ActionProfile) -> &BetaPosterior {
        &self.rewards[self.index(s, p)]
    }

    pub fn transition(&self, s: usize, p: ActionProfile) -> &DirichletPosterior {
        &self.transitions[self.index(s, p)]
    }

    pub fn counts(&self, s: usize) -> &VisitCounts {
        &self.counts[s]
    }

    pub fn update(
        &mut self,
        state: usize,
        profile: ActionProfile,
        reward: f64,
        next_state: usize,
    ) -> Result<()> {
        let success = binary(reward)?;
        if state >= self.n_states || next_state >= self.n_states {
            return Err(Error::InvalidArgument(format!(
                "state index out of range ({state} -> {next_state}, {} states)",
                self.n_states
            )));
        }
        self.counts[state].check(profile)?;
        let idx = self.index(state, profile);
        self.rewards[idx].observe(success);
        self.transitions[idx].observe(next_state)?;
        self.counts[state].record(profile);
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, gamma: f64, rng: &mut R) -> Result<StochasticGame> {
        let rewards = (0..self.n_states)
            .map(|s| {
                PayoffMatrix::from_fn(self.n_a1, self.n_a2, |a1, a2| {
                    self.rewards[self.index(s, ActionProfile::new(a1, a2))].sample(rng)
                })
            })
            .collect();
        let mut transitions = Vec::with_capacity(self.transitions.len() * self.n_states);
        for d in &self.transitions {
            transitions.extend(d.sample(rng));
        }
        StochasticGame::new(gamma, rewards, transitions)
    }

    /// The game made of posterior means.
    pub fn mean_game(&self, gamma: f64) -> Result<StochasticGame> {
        let rewards = (0..self.n_states)
            .map(|s| {
                PayoffMatrix::from_fn(self.n_a1, self.n_a2, |a1, a2| {
                    self.rewards[self.index(s, ActionProfile::new(a1, a2))].mean()
                })
            })
            .collect();
        let transitions = self.transitions.iter().flat_map(|d| d.mean()).collect();
        StochasticGame::new(gamma, rewards, transitions)
    }

    pub fn validate(&self) -> Result<()> {
        let cells = self.n_states * self.n_a1 * self.n_a2;
        check_dim("reward beliefs", cells, self.rewards.len())?;
        check_dim("transition beliefs", cells, self.transitions.len())?;
        check_dim("state counts", self.n_states, self.counts.len())?;
        for r in &self.rewards {
            BetaPosterior::new(r.alpha, r.beta)?;
        }
        for t in &self.transitions {
            check_dim("dirichlet size", self.n_states, t.len())?;
            DirichletPosterior::new(t.concentrations.clone())?;
        }
        if !self.counts.iter().all(VisitCounts::consistent) {
            return Err(Error::InvalidArgument("inconsistent visit counts".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(text)?;
        b.validate()?;
        Ok(b)
    }
}

impl GameBelief for SgBelief {
    fn sample_game(&self, gamma: f64, rng: &mut dyn RngCore) -> Result<StochasticGame> {
        self.sample(gamma, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Mean, variance, and their standard errors of a sample.
    fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let var = m2 * n / (n - 1.0);
        (mean, (m2 / n).sqrt(), var, ((m4 - m2 * m2) / n).sqrt())
    }

    #[test]
    fn jeffreys_nfg_examples() {
        let b = NfgBelief::jeffreys(2, 2).unwrap();
        for a1 in 0..2 {
            for a2 in 0..2 {
                let c = b.cell(ActionProfile::new(a1, a2));
                assert_eq!((c.alpha, c.beta), (0.5, 0.5));
            }
        }
        assert_eq!(b.counts().total(), 0);
        assert!(b.mean().as_slice().iter().all(|&m| m == 0.5));
        let single = NfgBelief::jeffreys(1, 1).unwrap();
        assert_eq!(single.dims(), (1, 1));
        assert!(NfgBelief::jeffreys(0, 2).is_err());
        assert!(NfgBelief::jeffreys(2, 0).is_err());
    }

    #[test]
    fn update_nfg_examples() {
        let p = ActionProfile::new(0, 1);
        let mut b = NfgBelief::jeffreys(2, 2).unwrap();
        b.update(p, 1.0).unwrap();
        assert_eq!(
            *b.cell(p),
            BetaPosterior {
                alpha: 1.5,
                beta: 0.5
            }
        );
        assert_eq!(b.cell(p).mean(), 0.75);
        let mut b = NfgBelief::jeffreys(2, 2).unwrap();
        b.update(p, 0.0).unwrap();
        assert_eq!(
            *b.cell(p),
            BetaPosterior {
                alpha: 0.5,
                beta: 1.5
            }
        );
        assert_eq!(b.cell(p).mean(), 0.25);

        let mut b = NfgBelief::jeffreys(2, 2).unwrap();
        for _ in 0..7 {
            b.update(p, 1.0).unwrap();
        }
        for _ in 0..4 {
            b.update(p, 0.0).unwrap();
        }
        assert_eq!(
            *b.cell(p),
            BetaPosterior {
                alpha: 7.5,
                beta: 4.5
            }
        );
        assert_eq!(b.counts().get(p), 11);
        assert_eq!(b.counts().total(), 11);
        assert_eq!(*b.cell(ActionProfile::new(1, 1)), BetaPosterior::jeffreys());
    }

    #[test]
    fn update_rejects_bad_input() {
        let mut b = NfgBelief::jeffreys(2, 2).unwrap();
        assert!(b.update(ActionProfile::new(0, 0), 0.5).is_err());
        assert!(b.update(ActionProfile::new(2, 0), 1.0).is_err());
        assert_eq!(b.counts().total(), 0);
        let mut s = SgBelief::jeffreys(2, 2, 2).unwrap();
        assert!(s.update(2, ActionProfile::new(0, 0), 1.0, 0).is_err());
        assert!(s.update(0, ActionProfile::new(0, 0), 1.0, 2).is_err());
        assert!(s.update(0, ActionProfile::new(0, 2), 1.0, 0).is_err());
        assert!(s.update(0, ActionProfile::new(0, 0), 2.0, 0).is_err());
    }

    #[test]
    fn jeffreys_sg_examples() {
        let b = SgBelief::jeffreys(2, 2, 2).unwrap();
        let t = b.transition(1, ActionProfile::new(1, 0));
        assert_eq!(t.concentrations, vec![0.5, 0.5]);
        assert_eq!(t.mean(), vec![0.5, 0.5]);
        let fig2 = SgBelief::jeffreys(10, 10, 2).unwrap();
        assert_eq!(fig2.transition(9, ActionProfile::new(9, 1)).len(), 10);
        let tiny = SgBelief::jeffreys(1, 1, 1).unwrap();
        assert_eq!(tiny.reward(0, ActionProfile::new(0, 0)).mean(), 0.5);
        assert!(SgBelief::jeffreys(0, 1, 1).is_err());
    }

    #[test]
    fn update_sg_examples() {
        let p = ActionProfile::new(0, 1);
        let mut b = SgBelief::jeffreys(2, 2, 2).unwrap();
        let untouched = b.clone();
        b.update(1, p, 1.0, 0).unwrap();
        assert_eq!(b.transition(1, p).concentrations, vec![1.5, 0.5]);
        assert_eq!(b.transition(1, p).mean(), vec![0.75, 0.25]);
        assert_eq!(b.reward(1, p).alpha, 1.5);
        assert_eq!(b.counts(1).get(p), 1);
        assert_eq!(b.counts(0).total(), 0);

        let q = ActionProfile::new(1, 0);
        b.update(0, q, 0.0, 1).unwrap();
        // each update touched only its own cell
        for s in 0..2 {
            for a1 in 0..2 {
                for a2 in 0..2 {
                    let r = ActionProfile::new(a1, a2);
                    if (s, r) == (1, p) || (s, r) == (0, q) {
                        continue;
                    }
                    assert_eq!(b.reward(s, r), untouched.reward(s, r));
                    assert_eq!(b.transition(s, r), untouched.transition(s, r));
                }
            }
        }
    }

    #[test]
    fn sample_nfg_examples() {
        let mut r = rng(11);
        let mut b = NfgBelief::jeffreys(1, 1).unwrap();
        b.cells[0] = BetaPosterior::new(1e6, 1.0).unwrap();
        for _ in 0..100 {
            assert!(b.sample(&mut r).get(0, 0) > 0.9);
        }

        let beta = BetaPosterior::new(1.5, 0.5).unwrap();
        let draws: Vec<f64> = (0..10_000).map(|_| beta.sample(&mut r)).collect();
        let (mean, _, _, _) = moments(&draws);
        assert_abs_diff_eq!(mean, 0.75, epsilon = 0.02);

        let b = NfgBelief::jeffreys(3, 2).unwrap();
        assert_eq!(b.sample(&mut rng(5)), b.sample(&mut rng(5)));
        assert!(b
            .sample(&mut r)
            .as_slice()
            .iter()
            .all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn sample_sg_examples() {
        let b = SgBelief::jeffreys(3, 2, 2).unwrap();
        let mut r = rng(2);
        let g = b.sample(0.9, &mut r).unwrap();
        for s in 0..3 {
            for a1 in 0..2 {
                for a2 in 0..2 {
                    let sum: f64 = g.transition(s, a1, a2).iter().sum();
                    assert!((sum - 1.0).abs() < 1e-9);
                }
            }
        }
        assert_eq!(
            b.sample(0.9, &mut rng(8)).unwrap(),
            b.sample(0.9, &mut rng(8)).unwrap()
        );

        let single = SgBelief::jeffreys(1, 1, 1).unwrap();
        let draws: Vec<f64> = (0..10_000)
            .map(|_| single.sample(0.5, &mut r).unwrap().rewards(0).get(0, 0))
            .collect();
        assert_abs_diff_eq!(moments(&draws).0, 0.5, epsilon = 0.02);
    }

    #[test]
    fn mean_nfg_examples() {
        let mut b = NfgBelief::jeffreys(2, 2).unwrap();
        b.update(ActionProfile::new(0, 0), 1.0).unwrap();
        let m = b.mean();
        assert_eq!(m.get(0, 0), 0.75);
        assert_eq!((m.get(0, 1), m.get(1, 0), m.get(1, 1)), (0.5, 0.5, 0.5));

        b.update(ActionProfile::new(1, 0), 0.0).unwrap();
        let mut r = rng(4);
        let mut acc = [0.0; 4];
        for _ in 0..10_000 {
            for (a, x) in acc.iter_mut().zip(b.sample(&mut r).as_slice()) {
                *a += x / 10_000.0;
            }
        }
        for (a, m) in acc.iter().zip(b.mean().as_slice()) {
            assert_abs_diff_eq!(a, m, epsilon = 0.02);
        }
    }

    #[test]
    fn beta_moments_within_three_standard_errors() {
        let mut r = rng(21);
        for (a, b) in [(0.5, 0.5), (1.5, 0.5), (3.5, 7.5), (20.5, 2.5)] {
            let post = BetaPosterior::new(a, b).unwrap();
            let draws: Vec<f64> = (0..10_000).map(|_| post.sample(&mut r)).collect();
            let (mean, se_mean, var, se_var) = moments(&draws);
            assert!((mean - post.mean()).abs() < 3.0 * se_mean, "mean {a},{b}");
            assert!((var - post.variance()).abs() < 3.0 * se_var, "var {a},{b}");
        }
    }

    #[test]
    fn dirichlet_moments_within_three_standard_errors() {
        let mut r = rng(22);
        let post = DirichletPosterior::new(vec![0.5, 1.5, 3.5]).unwrap();
        let total = 5.5;
        let draws: Vec<Vec<f64>> = (0..10_000).map(|_| post.sample(&mut r)).collect();
        for (i, &c) in post.concentrations.iter().enumerate() {
            let xs: Vec<f64> = draws.iter().map(|d| d[i]).collect();
            let (mean, se_mean, var, se_var) = moments(&xs);
            let m = c / total;
            let v = m * (1.0 - m) / (total + 1.0);
            assert!((mean - m).abs() < 3.0 * se_mean);
            assert!((var - v).abs() < 3.0 * se_var);
        }
    }

    #[test]
    fn posterior_concentrates() {
        let mut r = rng(9);
        let mut b = NfgBelief::jeffreys(1, 1).unwrap();
        let p = ActionProfile::new(0, 0);
        for _ in 0..10_000 {
            let reward = if r.random::<f64>() < 0.7 { 1.0 } else { 0.0 };
            b.update(p, reward).unwrap();
        }
        assert_abs_diff_eq!(b.mean().get(0, 0), 0.7, epsilon = 0.02);
    }

    #[test]
    fn checkpoint_json() {
        let mut b = SgBelief::jeffreys(2, 2, 1).unwrap();
        b.update(0, ActionProfile::new(1, 0), 1.0, 1).unwrap();
        let back = SgBelief::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, b);

        let mut n = NfgBelief::jeffreys(2, 3).unwrap();
        n.update(ActionProfile::new(1, 2), 0.0).unwrap();
        let text = n.to_json().unwrap();
        assert_eq!(NfgBelief::from_json(&text).unwrap(), n);
        let tampered = text.replace("\"total\":1", "\"total\":2");
        assert!(NfgBelief::from_json(&tampered).is_err());
    }

    proptest! {
        #[test]
        fn conjugacy_and_bookkeeping(obs in prop::collection::vec((0usize..3, 0usize..2, any::<bool>()), 0..200)) {
            let mut b = NfgBelief::jeffreys(3, 2).unwrap();
            let mut succ = [[0u64; 2]; 3];
            let mut trials = [[0u64; 2]; 3];
            for &(a1, a2, hit) in &obs {
                b.update(ActionProfile::new(a1, a2), if hit { 1.0 } else { 0.0 }).unwrap();
                trials[a1][a2] += 1;
                succ[a1][a2] += hit as u64;
            }
            let mean = b.mean();
            let mut sum = 0;
            for a1 in 0..3 {
                for a2 in 0..2 {
                    let p = ActionProfile::new(a1, a2);
                    let expected = (0.5 + succ[a1][a2] as f64) / (1.0 + trials[a1][a2] as f64);
                    prop_assert_eq!(mean.get(a1, a2), expected);
                    prop_assert_eq!(b.counts().get(p), trials[a1][a2]);
                    sum += b.counts().get(p);
                }
            }
            prop_assert_eq!(b.counts().total(), sum);
            prop_assert_eq!(sum as usize, obs.len());
        }
    }
}
