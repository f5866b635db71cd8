use rand::Rng;

use crate::beliefs::{NfgBelief, SgBelief};
use crate::error::{check_dim, Error, Result};
use crate::explore::{
    action_rule, pick, rule_greedy, rule_random, ActionRule, ExplorationContext, StrategyKind,
};
use crate::game::{
    sample_index, ActionProfile, MixedStrategy, PayoffMatrix, Policy, StochasticGame, ValueFunction,
};
use crate::nfg::{best_response_value, solve_maxmeanmin, solve_nfg};
use crate::rng::{stream, Purpose, StreamRng};
use crate::sg::{RegretBaseline, SgMethod, SgSolution};

use super::config::{ExperimentConfig, Mode};

/// The true game of one trial.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Nfg(PayoffMatrix),
    Sg(StochasticGame),
}

/// Regret of the recommendation at each checkpoint of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialCurve {
    pub strategy: StrategyKind,
    pub trial: usize,
    /// `(episode, regret)` in schedule order.
    pub points: Vec<(usize, f64)>,
}

/// One environment step of a stochastic-game episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub profile: ActionProfile,
    pub reward: f64,
    pub next_state: usize,
}

/// Draws the trial's true game from the Jeffreys prior. With `fixed_game`
/// every trial sees the game of trial 0.
pub fn generate_ground_truth(config: &ExperimentConfig, trial: usize) -> Result<GroundTruth> {
    let index = if config.fixed_game { 0 } else { trial as u64 };
    let mut rng = stream(config.seed, index, Purpose::GroundTruth, 0);
    match config.mode {
        Mode::Nfg => Ok(GroundTruth::Nfg(
            NfgBelief::jeffreys(config.n_a1, config.n_a2)?.sample(&mut rng),
        )),
        Mode::Sg => Ok(GroundTruth::Sg(
            SgBelief::jeffreys(config.n_states, config.n_a1, config.n_a2)?
                .sample(config.gamma, &mut rng)?,
        )),
    }
}

fn explore_rng(config: &ExperimentConfig, trial: usize) -> StreamRng {
    stream(config.seed, trial as u64, Purpose::Explore, 0)
}

fn environment_rng(config: &ExperimentConfig, trial: usize) -> StreamRng {
    stream(config.seed, trial as u64, Purpose::Environment, 0)
}

fn evaluation_rng(config: &ExperimentConfig, trial: usize, episode: usize) -> StreamRng {
    stream(
        config.seed,
        trial as u64,
        Purpose::Evaluation,
        episode as u64,
    )
}

fn bernoulli(p: f64, rng: &mut StreamRng) -> f64 {
    if rng.random_bool(p.clamp(0.0, 1.0)) {
        1.0
    } else {
        0.0
    }
}

/// Maxmeanmin strategy over `k` fresh posterior samples.
pub fn recommend_nfg<R: Rng + ?Sized>(
    belief: &NfgBelief,
    k: usize,
    rng: &mut R,
) -> Result<MixedStrategy> {
    let samples: Vec<PayoffMatrix> = (0..k).map(|_| belief.sample(rng)).collect();
    Ok(solve_maxmeanmin(&samples)?.0)
}

/// Samples and solves `k` games, then picks the maxmeanmin strategy over the
/// `k` Q slices of every state.
pub fn recommend_sg<R: Rng + ?Sized>(
    belief: &SgBelief,
    k: usize,
    gamma: f64,
    method: SgMethod,
    eps: f64,
    rng: &mut R,
) -> Result<Policy> {
    let mut solutions = Vec::with_capacity(k);
    for _ in 0..k {
        solutions.push(method.solve(&belief.sample(gamma, rng)?, eps, None)?);
    }
    let policy = (0..belief.n_states())
        .map(|s| {
            let slices: Vec<PayoffMatrix> =
                solutions.iter().map(|sol| sol.q.state(s).clone()).collect();
            Ok(solve_maxmeanmin(&slices)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Policy(policy))
}

/// Regret of the recommendation made from `belief` after `episode`
/// episodes. Depends only on the belief, the true game and the evaluation
/// stream of `(trial, episode)`.
pub fn evaluate_nfg(
    config: &ExperimentConfig,
    belief: &NfgBelief,
    truth: &PayoffMatrix,
    truth_value: f64,
    trial: usize,
    episode: usize,
) -> Result<f64> {
    let mut rng = evaluation_rng(config, trial, episode);
    let sigma = recommend_nfg(belief, config.belief_samples, &mut rng)?;
    Ok(truth_value - best_response_value(truth, &sigma)?.0)
}

/// Stochastic-game counterpart of [`evaluate_nfg`].
pub fn evaluate_sg(
    config: &ExperimentConfig,
    belief: &SgBelief,
    baseline: &RegretBaseline,
    trial: usize,
    episode: usize,
) -> Result<f64> {
    let mut rng = evaluation_rng(config, trial, episode);
    let policy = recommend_sg(
        belief,
        config.belief_samples,
        config.gamma,
        config.solver,
        config.sample_eps,
        &mut rng,
    )?;
    baseline.regret(&policy)
}

/// Runs `config.episodes` exploration episodes of a matrix game from
/// `prior`, scoring the recommendation at every checkpoint.
pub fn run_nfg_trial(
    config: &ExperimentConfig,
    kind: StrategyKind,
    truth: &PayoffMatrix,
    prior: NfgBelief,
    trial: usize,
) -> Result<TrialCurve> {
    Ok(nfg_trial(config, kind, truth, prior, trial, None)?.0)
}

/// Every `(profile, reward)` a normal-form trial observed, in order.
pub type NfgLog = Vec<(ActionProfile, f64)>;

/// As [`run_nfg_trial`], also returning every `(profile, reward)` observed and
/// the final belief.
pub fn run_nfg_trial_logged(
    config: &ExperimentConfig,
    kind: StrategyKind,
    truth: &PayoffMatrix,
    prior: NfgBelief,
    trial: usize,
) -> Result<(TrialCurve, NfgLog, NfgBelief)> {
    let mut log = Vec::new();
    let (curve, belief) = nfg_trial(config, kind, truth, prior, trial, Some(&mut log))?;
    Ok((curve, log, belief))
}

fn nfg_trial(
    config: &ExperimentConfig,
    kind: StrategyKind,
    truth: &PayoffMatrix,
    prior: NfgBelief,
    trial: usize,
    mut log: Option<&mut Vec<(ActionProfile, f64)>>,
) -> Result<(TrialCurve, NfgBelief)> {
    check_dim("belief rows", truth.rows(), prior.n_a1())?;
    check_dim("belief columns", truth.cols(), prior.n_a2())?;
    let truth_value = solve_nfg(truth)?.value;
    let schedule = config.schedule();
    let mut next = schedule.iter().peekable();
    let mut points = Vec::with_capacity(schedule.len());
    let mut belief = prior;
    let mut explore = explore_rng(config, trial);
    let mut env = environment_rng(config, trial);

    for episode in 0..=config.episodes {
        if episode > 0 {
            let profile = nfg_profile(config, kind, &belief, &mut explore)?;
            let reward = bernoulli(truth.at(profile), &mut env);
            belief.update(profile, reward)?;
            if let Some(log) = log.as_deref_mut() {
                log.push((profile, reward));
            }
        }
        if next.peek() == Some(&&episode) {
            next.next();
            points.push((
                episode,
                evaluate_nfg(config, &belief, truth, truth_value, trial, episode)?,
            ));
        }
    }
    Ok((
        TrialCurve {
            strategy: kind,
            trial,
            points,
        },
        belief,
    ))
}

fn nfg_profile(
    config: &ExperimentConfig,
    kind: StrategyKind,
    belief: &NfgBelief,
    rng: &mut StreamRng,
) -> Result<ActionProfile> {
    let mut ctx = ExplorationContext::new(belief.counts());
    ctx.n_strategy_samples = config.strategy_samples;
    if let StrategyKind::EpsGreedy(epsilon) = kind {
        // branch first so the random arm skips the greedy programs
        if rng.random_bool(epsilon) {
            return Ok(rule_random(&ctx).sample(rng));
        }
        let ensemble = sample_payoffs(belief, config.belief_samples, rng);
        return Ok(rule_greedy(&ctx.with_ensemble(&ensemble))?.sample(rng));
    }
    let ensemble = sample_payoffs(
        belief,
        kind.ensemble_size(config.belief_samples, false),
        rng,
    );
    let mean;
    if kind == StrategyKind::Ucb1 {
        mean = belief.mean();
        ctx = ctx.with_mean(&mean);
    }
    pick(kind, &ctx.with_ensemble(&ensemble), rng)
}

fn sample_payoffs(belief: &NfgBelief, k: usize, rng: &mut StreamRng) -> Vec<PayoffMatrix> {
    (0..k).map(|_| belief.sample(rng)).collect()
}

/// Runs a stochastic-game trial: each episode commits to per-state action
/// rules derived from freshly sampled and solved games, rolls out
/// `steps_per_episode` steps, and only then updates the belief.
pub fn run_sg_trial(
    config: &ExperimentConfig,
    kind: StrategyKind,
    truth: &StochasticGame,
    baseline: &RegretBaseline,
    prior: SgBelief,
    trial: usize,
) -> Result<TrialCurve> {
    Ok(sg_trial(config, kind, truth, baseline, prior, trial, None)?.0)
}

/// As [`run_sg_trial`], also returning every observed transition and the
/// final belief.
pub fn run_sg_trial_logged(
    config: &ExperimentConfig,
    kind: StrategyKind,
    truth: &StochasticGame,
    baseline: &RegretBaseline,
    prior: SgBelief,
    trial: usize,
) -> Result<(TrialCurve, Vec<Transition>, SgBelief)> {
    let mut log = Vec::new();
    let (curve, belief) = sg_trial(config, kind, truth, baseline, prior, trial, Some(&mut log))?;
    Ok((curve, log, belief))
}

fn sg_trial(
    config: &ExperimentConfig,
    kind: StrategyKind,
    truth: &StochasticGame,
    baseline: &RegretBaseline,
    prior: SgBelief,
    trial: usize,
    mut log: Option<&mut Vec<Transition>>,
) -> Result<(TrialCurve, SgBelief)> {
    check_dim("belief states", truth.n_states(), prior.n_states())?;
    check_dim("belief rows", truth.n_a1(), prior.n_a1())?;
    check_dim("belief columns", truth.n_a2(), prior.n_a2())?;
    let schedule = config.schedule();
    let mut next = schedule.iter().peekable();
    let mut points = Vec::with_capacity(schedule.len());
    let mut belief = prior;
    let mut explore = explore_rng(config, trial);
    let mut env = environment_rng(config, trial);
    let k = kind.ensemble_size(config.belief_samples, true);
    let mut warm: Vec<Option<ValueFunction>> = vec![None; k];
    let mut episode_log = Vec::with_capacity(config.steps_per_episode);

    for episode in 0..=config.episodes {
        if episode > 0 {
            let solutions = solve_samples(config, &belief, &mut warm, &mut explore)?;
            let mut rules: Vec<Option<ActionRule>> = vec![None; truth.n_states()];
            episode_log.clear();
            let mut s = env.random_range(0..truth.n_states());
            for _ in 0..config.steps_per_episode {
                let rule = match &mut rules[s] {
                    Some(rule) => rule,
                    slot => slot.insert(state_rule(
                        config,
                        kind,
                        &belief,
                        &solutions,
                        s,
                        &mut explore,
                    )?),
                };
                let profile = rule.sample(&mut explore);
                let reward = bernoulli(truth.rewards(s).at(profile), &mut env);
                let next_state =
                    sample_index(truth.transition(s, profile.a1, profile.a2), &mut env);
                episode_log.push(Transition {
                    state: s,
                    profile,
                    reward,
                    next_state,
                });
                s = next_state;
            }
            for t in &episode_log {
                belief.update(t.state, t.profile, t.reward, t.next_state)?;
            }
            if let Some(log) = log.as_deref_mut() {
                log.extend_from_slice(&episode_log);
            }
        }
        if next.peek() == Some(&&episode) {
            next.next();
            points.push((
                episode,
                evaluate_sg(config, &belief, baseline, trial, episode)?,
            ));
        }
    }
    Ok((
        TrialCurve {
            strategy: kind,
            trial,
            points,
        },
        belief,
    ))
}

/// Samples and solves one game per ensemble slot, warm-starting each slot
/// from its previous solution.
fn solve_samples(
    config: &ExperimentConfig,
    belief: &SgBelief,
    warm: &mut [Option<ValueFunction>],
    rng: &mut StreamRng,
) -> Result<Vec<SgSolution>> {
    let mut solutions = Vec::with_capacity(warm.len());
    for slot in warm.iter_mut() {
        let game = belief.sample(config.gamma, rng)?;
        let sol = config
            .solver
            .solve(&game, config.sample_eps, slot.as_ref())?;
        *slot = Some(sol.v.clone());
        solutions.push(sol);
    }
    Ok(solutions)
}

fn state_rule(
    config: &ExperimentConfig,
    kind: StrategyKind,
    belief: &SgBelief,
    solutions: &[SgSolution],
    s: usize,
    rng: &mut StreamRng,
) -> Result<ActionRule> {
    let slices: Vec<PayoffMatrix> = solutions.iter().map(|sol| sol.q.state(s).clone()).collect();
    let mut ctx = ExplorationContext::new(belief.counts(s)).with_ensemble(&slices);
    ctx.n_strategy_samples = config.strategy_samples;
    ctx.bonus_scale = config.bonus_scale();
    action_rule(kind, &ctx, rng)
}

/// Runs every configured strategy on the trial's ground truth.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<TrialCurve>> {
    let truth = generate_ground_truth(config, trial)?;
    let wrap = |kind: StrategyKind| {
        move |e: Error| Error::Trial {
            trial,
            strategy: kind.to_string(),
            source: Box::new(e),
        }
    };
    match truth {
        GroundTruth::Nfg(u) => config
            .strategies
            .iter()
            .map(|&kind| {
                let prior = NfgBelief::jeffreys(config.n_a1, config.n_a2)?;
                run_nfg_trial(config, kind, &u, prior, trial).map_err(wrap(kind))
            })
            .collect(),
        GroundTruth::Sg(game) => {
            let baseline = RegretBaseline::new(&game, config.solver, config.baseline_eps)?;
            config
                .strategies
                .iter()
                .map(|&kind| {
                    let prior = SgBelief::jeffreys(config.n_states, config.n_a1, config.n_a2)?;
                    run_sg_trial(config, kind, &game, &baseline, prior, trial).map_err(wrap(kind))
                })
                .collect()
        }
    }
}
