//! Learning minimally exploitable strategies for two-player zero-sum games
//! through pure exploration under Bayesian uncertainty.
//!
//! The crate is organised bottom-up:
//!
//! * [`game`] holds ground-truth games, strategies, policies and payoff
//!   evaluation.
//! * [`nfg`] solves normal-form games exactly by linear programming, including
//!   the Monte-Carlo maxmeanmin / minmeanmax programs over belief samples.
//! * [`beliefs`] maintains conjugate Beta / Dirichlet posteriors.
//! * [`sg`] solves discounted stochastic games (Shapley, Hoffman-Karp, policy
//!   iteration) and measures the regret of a recommended policy.
//! * [`explore`] implements the exploration strategies.
//! * [`harness`] runs seeded experiments and writes result files.

pub mod beliefs;
pub mod error;
pub mod explore;
pub mod game;
pub mod harness;
mod lp;
pub mod nfg;
pub mod rng;
pub mod sg;

pub use beliefs::{BetaPosterior, DirichletPosterior, NfgBelief, PayoffBelief, SgBelief};
pub use error::{Error, Result};
pub use explore::{ActionRule, ExplorationContext, StrategyKind};
pub use game::{
    ActionProfile, MixedStrategy, PayoffMatrix, Policy, QFunction, StochasticGame, ValueFunction,
};
pub use harness::{ExperimentConfig, ExploitabilityCurve, Mode};
pub use nfg::NfgSolution;
pub use sg::{Mdp, SgSolution};

/// Tolerance used to validate probability vectors.
pub const PROB_TOL: f64 = 1e-9;
