//! Exact LP solving of zero-sum normal-form games.
//!
//! All programs here share one formulation: maximise the mean over samples of
//! Player 1's worst-case payoff,
//!
//! ```text
//! maximize   (1/K) sum_k v_k
//! subject to v_k <= sum_i sigma_i u_k(i, j)   for every sample k and column j
//!            sum_i sigma_i <= 1,  sigma >= 0,  v >= 0
//! ```
//!
//! Payoffs are shifted so every entry is at least 1; then the simplex
//! constraint is tight at the optimum and `v >= 0` costs nothing. With a
//! single sample this is the ordinary maxmin program, and the dual prices of
//! the `v` rows are Player 2's minmax strategy.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::game::{MixedStrategy, PayoffMatrix};
use crate::lp::{LpSolution, Tableau};

/// Spread below which a sample set is treated as constant.
const FLAT_TOL: f64 = 1e-12;

/// Value and optimal strategies of a zero-sum matrix game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfgSolution {
    pub value: f64,
    pub maxmin: MixedStrategy,
    pub minmax: MixedStrategy,
}

/// Player 2's best pure response to `s1`: `min_{a2} u(s1, a2)` and the
/// minimising column (lowest index on ties).
pub fn best_response_value(u: &PayoffMatrix, s1: &MixedStrategy) -> Result<(f64, usize)> {
    check_dim("row strategy", u.rows(), s1.len())?;
    Ok(argmin_first(&u.payoffs_against_row(s1.probs())))
}

/// Player 1's best pure response to `s2`: `max_{a1} u(a1, s2)` and the
/// maximising row (lowest index on ties).
pub fn best_response_value_p1(u: &PayoffMatrix, s2: &MixedStrategy) -> Result<(f64, usize)> {
    check_dim("column strategy", u.cols(), s2.len())?;
    let vals = u.payoffs_against_col(s2.probs());
    let mut best = (vals[0], 0);
    for (i, &x) in vals.iter().enumerate().skip(1) {
        if x > best.0 {
            best = (x, i);
        }
    }
    Ok(best)
}

fn argmin_first(vals: &[f64]) -> (f64, usize) {
    let mut best = (vals[0], 0);
    for (j, &x) in vals.iter().enumerate().skip(1) {
        if x < best.0 {
            best = (x, j);
        }
    }
    best
}

/// Solves the maxmin program; Player 2's minmax strategy is read off the dual
/// prices.
pub fn solve_nfg(u: &PayoffMatrix) -> Result<NfgSolution> {
    if is_flat(std::slice::from_ref(u)) {
        return Ok(NfgSolution {
            value: u.get(0, 0),
            maxmin: MixedStrategy::uniform(u.rows()),
            minmax: MixedStrategy::uniform(u.cols()),
        });
    }
    let program = MeanMinProgram::build(std::slice::from_ref(u))?;
    let shift = program.shift;
    let lp = program.solve()?;
    let maxmin = strategy_from(&lp.primal[..u.rows()], "maxmin")?;
    let minmax = strategy_from(&lp.dual[..u.cols()], "minmax dual")?;
    Ok(NfgSolution {
        value: lp.objective - shift,
        maxmin,
        minmax,
    })
}

/// Player 1 strategy maximising `(1/K) sum_k min_{a2} u_k(sigma, a2)`, and
/// that objective.
pub fn solve_maxmeanmin(samples: &[PayoffMatrix]) -> Result<(MixedStrategy, f64)> {
    check_samples(samples)?;
    let sigma = if is_flat(samples) {
        MixedStrategy::uniform(samples[0].rows())
    } else {
        let program = MeanMinProgram::build(samples)?;
        let lp = program.solve()?;
        strategy_from(&lp.primal[..samples[0].rows()], "maxmeanmin")?
    };
    let objective = mean_worst_case(samples, &sigma);
    Ok((sigma, objective))
}

/// Player 2 strategy minimising `(1/K) sum_k max_{a1} u_k(a1, sigma)`, and
/// that objective. Solved as Player 1's problem on the negated transposes.
pub fn solve_minmeanmax(samples: &[PayoffMatrix]) -> Result<(MixedStrategy, f64)> {
    check_samples(samples)?;
    let mirrored: Vec<PayoffMatrix> = samples
        .iter()
        .map(PayoffMatrix::negated_transpose)
        .collect();
    let (sigma, objective) = solve_maxmeanmin(&mirrored)?;
    Ok((sigma, -objective))
}

/// Exploitability of `recommended` in the true game: the game value minus the
/// worst-case payoff of the recommendation.
pub fn simple_regret(u_true: &PayoffMatrix, recommended: &MixedStrategy) -> Result<f64> {
    check_dim("recommended strategy", u_true.rows(), recommended.len())?;
    let value = solve_nfg(u_true)?.value;
    Ok(value - best_response_value(u_true, recommended)?.0)
}

/// `(1/K) sum_k min_{a2} u_k(sigma, a2)`.
pub fn mean_worst_case(samples: &[PayoffMatrix], sigma: &MixedStrategy) -> f64 {
    samples
        .iter()
        .map(|u| argmin_first(&u.payoffs_against_row(sigma.probs())).0)
        .sum::<f64>()
        / samples.len() as f64
}

fn check_samples(samples: &[PayoffMatrix]) -> Result<()> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no payoff samples".into()))?;
    for u in samples {
        check_dim("sample rows", first.rows(), u.rows())?;
        check_dim("sample columns", first.cols(), u.cols())?;
    }
    Ok(())
}

fn is_flat(samples: &[PayoffMatrix]) -> bool {
    let lo = samples
        .iter()
        .map(PayoffMatrix::min_entry)
        .fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(PayoffMatrix::max_entry)
        .fold(f64::NEG_INFINITY, f64::max);
    hi - lo <= FLAT_TOL * (1.0 + lo.abs().max(hi.abs()))
}

fn strategy_from(weights: &[f64], what: &str) -> Result<MixedStrategy> {
    MixedStrategy::from_weights(weights.to_vec())
        .map_err(|e| Error::Solver(format!("{what} recovery failed: {e}")))
}

struct MeanMinProgram {
    tableau: Tableau,
    shift: f64,
}

impl MeanMinProgram {
    fn build(samples: &[PayoffMatrix]) -> Result<Self> {
        check_samples(samples)?;
        let k = samples.len();
        let (n1, n2) = (samples[0].rows(), samples[0].cols());
        let lo = samples
            .iter()
            .map(PayoffMatrix::min_entry)
            .fold(f64::INFINITY, f64::min);
        let shift = 1.0 - lo;
        // variables: sigma_0..n1, v_0..k ; rows: (k, j) then the simplex row
        let mut t = Tableau::new(n1 + k, k * n2 + 1);
        for (s, u) in samples.iter().enumerate() {
            for j in 0..n2 {
                let row = s * n2 + j;
                t.set(row, n1 + s, 1.0);
                for i in 0..n1 {
                    t.set(row, i, -(u.get(i, j) + shift));
                }
            }
        }
        let simplex_row = k * n2;
        for i in 0..n1 {
            t.set(simplex_row, i, 1.0);
        }
        t.set_rhs(simplex_row, 1.0);
        let weight = 1.0 / k as f64;
        for s in 0..k {
            t.set_cost(n1 + s, weight);
        }
        Ok(Self { tableau: t, shift })
    }

    fn solve(self) -> Result<LpSolution> {
        self.tableau.solve()
    }
}
