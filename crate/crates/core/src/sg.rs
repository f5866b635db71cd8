//! Exact solvers for two-player zero-sum discounted stochastic games, the
//! best-response MDP reduction, and regret of a recommended policy.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::game::{
    q_from_v, validate_distribution, MixedStrategy, Policy, QFunction, StochasticGame,
    ValueFunction,
};
use crate::nfg::{solve_nfg, NfgSolution};

/// Default tolerance for ground-truth solves used as regret baselines.
pub const BASELINE_EPS: f64 = 1e-8;
/// Default tolerance for solves of belief samples inside the exploration loop.
pub const SAMPLE_EPS: f64 = 1e-6;

const MAX_OUTER_ITERATIONS: usize = 100_000;
const MAX_POLICY_ITERATIONS: usize = 10_000;

/// A finite discounted MDP for a single maximising agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    // [s][a]
    rewards: Vec<f64>,
    // [s][a][s']
    transitions: Vec<f64>,
}

impl Mdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        rewards: Vec<f64>,
        transitions: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument(
                "MDP needs states and actions".into(),
            ));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!(
                "MDP discount {gamma} outside [0, 1)"
            )));
        }
        check_dim("MDP rewards", n_states * n_actions, rewards.len())?;
        check_dim(
            "MDP transitions",
            n_states * n_actions * n_states,
            transitions.len(),
        )?;
        for row in transitions.chunks(n_states) {
            validate_distribution(row)?;
        }
        Ok(Self {
            n_states,
            n_actions,
            gamma,
            rewards,
            transitions,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    #[inline]
    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    /// `R(s,a) + gamma * <T(s,a), v>`.
    pub fn q_value(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        let cont: f64 = self
            .transition(s, a)
            .iter()
            .zip(v)
            .map(|(p, x)| p * x)
            .sum();
        self.reward(s, a) + self.gamma * cont
    }
}

/// Optimal value and a deterministic optimal policy of an MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSolution {
    pub v: ValueFunction,
    pub policy: Vec<usize>,
    pub iterations: usize,
}

/// Solution of a stochastic game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SgSolution {
    pub v: ValueFunction,
    pub pi1: Policy,
    pub pi2: Policy,
    pub q: QFunction,
    pub iterations: usize,
}

/// Which exact stochastic-game solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SgMethod {
    Shapley,
    #[default]
    HoffmanKarp,
}

impl std::str::FromStr for SgMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shapley" => Ok(Self::Shapley),
            "hoffman-karp" => Ok(Self::HoffmanKarp),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

impl SgMethod {
    pub fn solve(
        self,
        game: &StochasticGame,
        eps: f64,
        warm: Option<&ValueFunction>,
    ) -> Result<SgSolution> {
        match self {
            Self::Shapley => shapley_from(game, eps, warm),
            Self::HoffmanKarp => hoffman_karp_from(game, eps, warm),
        }
    }
}

/// One application of the Shapley operator: `Q = R + gamma <T, v>` and the
/// exact solution of every per-state matrix game `Q(s)`.
pub fn bellman_backup(
    game: &StochasticGame,
    v: &ValueFunction,
) -> Result<(QFunction, Vec<NfgSolution>)> {
    let q = q_from_v(game, v)?;
    let sols = q.0.iter().map(solve_nfg).collect::<Result<Vec<_>>>()?;
    Ok((q, sols))
}

fn values_of(sols: &[NfgSolution]) -> ValueFunction {
    ValueFunction(sols.iter().map(|s| s.value).collect())
}

fn policies_of(sols: Vec<NfgSolution>) -> (Policy, Policy) {
    let (p1, p2) = sols.into_iter().map(|s| (s.maxmin, s.minmax)).unzip();
    (Policy(p1), Policy(p2))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {eps}"
        )))
    }
}

fn initial_values(game: &StochasticGame, warm: Option<&ValueFunction>) -> Result<ValueFunction> {
    match warm {
        Some(v) => {
            check_dim("warm-start values", game.n_states(), v.0.len())?;
            Ok(v.clone())
        }
        None => Ok(ValueFunction::zeros(game.n_states())),
    }
}

/// Shapley's value iteration from `V = 0`.
pub fn shapley(game: &StochasticGame, eps: f64) -> Result<SgSolution> {
    shapley_from(game, eps, None)
}

/// Shapley's value iteration from an optional warm start.
///
/// Iterates until successive value functions differ by less than
/// `eps * (1 - gamma) / gamma` in sup norm, which by contraction puts the
/// returned values within `eps` of the fixed point.
pub fn shapley_from(
    game: &StochasticGame,
    eps: f64,
    warm: Option<&ValueFunction>,
) -> Result<SgSolution> {
    game.require_discounted()?;
    check_eps(eps)?;
    let gamma = game.gamma();
    let threshold = if gamma > 0.0 {
        eps * (1.0 - gamma) / gamma
    } else {
        eps
    };
    let mut v = initial_values(game, warm)?;
    for iteration in 1..=MAX_OUTER_ITERATIONS {
        let (q, sols) = bellman_backup(game, &v)?;
        let v_new = values_of(&sols);
        if v.max_abs_diff(&v_new) < threshold {
            let (pi1, pi2) = policies_of(sols);
            return Ok(SgSolution {
                v: v_new,
                pi1,
                pi2,
                q,
                iterations: iteration,
            });
        }
        v = v_new;
    }
    Err(Error::Solver("Shapley iteration did not converge".into()))
}

/// Hoffman-Karp strategy iteration from `V = 0`.
pub fn hoffman_karp(game: &StochasticGame, eps: f64) -> Result<SgSolution> {
    hoffman_karp_from(game, eps, None)
}

/// Hoffman-Karp: extract Player 2's statewise minmax strategies from the
/// current `Q`, solve Player 1's induced MDP exactly with policy iteration,
/// and repeat until the value function moves by less than `eps`.
pub fn hoffman_karp_from(
    game: &StochasticGame,
    eps: f64,
    warm: Option<&ValueFunction>,
) -> Result<SgSolution> {
    game.require_discounted()?;
    check_eps(eps)?;
    let mut v = initial_values(game, warm)?;
    for iteration in 1..=MAX_OUTER_ITERATIONS {
        let (q, sols) = bellman_backup(game, &v)?;
        let pi2 = Policy(sols.iter().map(|s| s.minmax.clone()).collect());
        let mdp = induced_mdp(game, &pi2)?;
        let v_new = policy_iteration(&mdp)?.v;
        if v.max_abs_diff(&v_new) < eps {
            let values = values_of(&sols);
            let (pi1, pi2) = policies_of(sols);
            return Ok(SgSolution {
                v: values,
                pi1,
                pi2,
                q,
                iterations: iteration,
            });
        }
        v = v_new;
    }
    Err(Error::Solver(
        "Hoffman-Karp iteration did not converge".into(),
    ))
}

/// Player 1's MDP when Player 2 follows `pi2`: rewards and transitions are
/// averaged over Player 2's strategy in each state.
pub fn induced_mdp(game: &StochasticGame, pi2: &Policy) -> Result<Mdp> {
    game.require_discounted()?;
    check_dim("opponent policy states", game.n_states(), pi2.n_states())?;
    let (ns, n1, n2) = (game.n_states(), game.n_a1(), game.n_a2());
    let mut rewards = Vec::with_capacity(ns * n1);
    let mut transitions = vec![0.0; ns * n1 * ns];
    for s in 0..ns {
        let sigma = pi2.state(s);
        check_dim("opponent strategy", n2, sigma.len())?;
        let r = game.rewards(s);
        for a in 0..n1 {
            rewards.push(r.row(a).iter().zip(sigma.probs()).map(|(x, p)| x * p).sum());
            let out = &mut transitions[(s * n1 + a) * ns..(s * n1 + a + 1) * ns];
            for (a2, &p) in sigma.probs().iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (o, t) in out.iter_mut().zip(game.transition(s, a, a2)) {
                    *o += p * t;
                }
            }
        }
    }
    Mdp::new(ns, n1, game.gamma(), rewards, transitions)
}

/// Player 2's MDP when Player 1 follows `pi1`, with rewards negated so that
/// Player 2 maximises.
fn induced_mdp_p2(game: &StochasticGame, pi1: &Policy) -> Result<Mdp> {
    game.require_discounted()?;
    check_dim("policy states", game.n_states(), pi1.n_states())?;
    let (ns, n1, n2) = (game.n_states(), game.n_a1(), game.n_a2());
    let mut rewards = vec![0.0; ns * n2];
    let mut transitions = vec![0.0; ns * n2 * ns];
    for s in 0..ns {
        let sigma = pi1.state(s);
        check_dim("policy strategy", n1, sigma.len())?;
        let r = game.rewards(s);
        for (a1, &p) in sigma.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for a2 in 0..n2 {
                rewards[s * n2 + a2] -= p * r.get(a1, a2);
                let out = &mut transitions[(s * n2 + a2) * ns..(s * n2 + a2 + 1) * ns];
                for (o, t) in out.iter_mut().zip(game.transition(s, a1, a2)) {
                    *o += p * t;
                }
            }
        }
    }
    Mdp::new(ns, n2, game.gamma(), rewards, transitions)
}

/// Value of a deterministic policy: solves `(I - gamma T_pi) V = R_pi`.
pub fn evaluate_policy(mdp: &Mdp, policy: &[usize]) -> Result<ValueFunction> {
    let n = mdp.n_states();
    check_dim("policy", n, policy.len())?;
    let a = DMatrix::from_fn(n, n, |s, t| {
        let p = mdp.transition(s, policy[s])[t];
        f64::from(u8::from(s == t)) - mdp.gamma() * p
    });
    let b = DVector::from_fn(n, |s, _| mdp.reward(s, policy[s]));
    let v = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Solver("singular policy evaluation system".into()))?;
    Ok(ValueFunction(v.iter().copied().collect()))
}

/// Greedy improvement of `current`. A state keeps its action unless another
/// is better by more than rounding noise; otherwise the lowest-index
/// near-maximiser is taken. Keeping near-ties prevents cycling.
fn improve_policy(mdp: &Mdp, v: &ValueFunction, current: &[usize]) -> Vec<usize> {
    (0..mdp.n_states())
        .map(|s| {
            let q: Vec<f64> = (0..mdp.n_actions())
                .map(|a| mdp.q_value(s, a, v.as_slice()))
                .collect();
            let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-12 * (1.0 + best.abs());
            if q[current[s]] >= best - tol {
                current[s]
            } else {
                q.iter().position(|&x| x >= best - tol).unwrap_or(0)
            }
        })
        .collect()
}

/// Policy iteration starting from action 0 everywhere.
pub fn policy_iteration(mdp: &Mdp) -> Result<MdpSolution> {
    let mut policy = vec![0usize; mdp.n_states()];
    for iteration in 1..=MAX_POLICY_ITERATIONS {
        let v = evaluate_policy(mdp, &policy)?;
        let improved = improve_policy(mdp, &v, &policy);
        if improved == policy {
            return Ok(MdpSolution {
                v,
                policy,
                iterations: iteration,
            });
        }
        policy = improved;
    }
    Err(Error::Solver("policy iteration did not converge".into()))
}

/// Player 2's exact best response to `pi1`: per-state values
/// `V_{pi1, pi2*}(s)` and the responding deterministic policy.
pub fn best_response_p2(
    game: &StochasticGame,
    pi1: &Policy,
) -> Result<(ValueFunction, Vec<usize>)> {
    let sol = policy_iteration(&induced_mdp_p2(game, pi1)?)?;
    Ok((
        ValueFunction(sol.v.0.iter().map(|x| -x).collect()),
        sol.policy,
    ))
}

/// State-averaged value Player 1 secures with `pi1` against a best-responding
/// Player 2.
pub fn minpay(game: &StochasticGame, pi1: &Policy) -> Result<f64> {
    Ok(best_response_p2(game, pi1)?.0.mean())
}

/// Regret of `pi1_hat` against the best achievable `minpay`. Solves the game
/// from scratch; use [`RegretBaseline`] to evaluate many policies.
pub fn sg_regret(game: &StochasticGame, pi1_hat: &Policy) -> Result<f64> {
    RegretBaseline::new(game, SgMethod::HoffmanKarp, BASELINE_EPS)?.regret(pi1_hat)
}

/// The optimal `minpay` of a ground-truth game, computed once.
#[derive(Debug, Clone)]
pub struct RegretBaseline {
    game: StochasticGame,
    solution: SgSolution,
    max_minpay: f64,
}

impl RegretBaseline {
    pub fn new(game: &StochasticGame, method: SgMethod, eps: f64) -> Result<Self> {
        let solution = method.solve(game, eps, None)?;
        Ok(Self {
            game: game.clone(),
            max_minpay: solution.v.mean(),
            solution,
        })
    }

    pub fn max_minpay(&self) -> f64 {
        self.max_minpay
    }

    pub fn solution(&self) -> &SgSolution {
        &self.solution
    }

    pub fn regret(&self, pi1_hat: &Policy) -> Result<f64> {
        Ok(self.max_minpay - minpay(&self.game, pi1_hat)?)
    }
}

/// Statewise strategy of Player 1 that plays `a` with probability one.
pub fn pure_policy(n_actions: usize, actions: &[usize]) -> Policy {
    Policy(
        actions
            .iter()
            .map(|&a| MixedStrategy::pure(n_actions, a))
            .collect(),
    )
}
