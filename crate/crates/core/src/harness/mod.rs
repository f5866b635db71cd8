//! Seeded pure-exploration experiments: ground-truth generation, exploration
//! episodes, scoring of the recommendation at checkpoints, aggregation over
//! trials, and result files.
//!
//! Exploration rewards only ever update the belief; a checkpoint's regret is
//! a function of the belief at that point, the true game and a dedicated
//! evaluation stream.

mod config;
mod results;
mod trial;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use config::{Checkpoints, ExperimentConfig, Mode};
pub use results::{
    aggregate, emit_results, manifest_dir, read_raw, read_summary, write_raw, ExploitabilityCurve,
    Manifest, RawRow, SummaryRow, AGGREGATE_FILE, MANIFEST_FILE, RAW_FILE,
};
pub use trial::{
    evaluate_nfg, evaluate_sg, generate_ground_truth, recommend_nfg, recommend_sg, run_nfg_trial,
    run_nfg_trial_logged, run_sg_trial, run_sg_trial_logged, run_trial, GroundTruth, Transition,
    TrialCurve,
};

/// Runs every trial on a pool of `jobs` workers. Results are identical for
/// any worker count.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<ExploitabilityCurve> {
    config.validate()?;
    if config.strategies.is_empty() {
        return Ok(ExploitabilityCurve::default());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<TrialCurve>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect::<Result<Vec<_>>>()
    })?;
    aggregate(&per_trial.into_iter().flatten().collect::<Vec<_>>())
}
