use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::trial::TrialCurve;

pub const RAW_FILE: &str = "raw.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub episode: usize,
    pub strategy: String,
    pub trial: usize,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub episode: usize,
    pub strategy: String,
    pub mean: f64,
    pub std: f64,
}

/// Raw per-trial regrets and their per-checkpoint summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExploitabilityCurve {
    /// Ordered by strategy, trial, episode.
    pub raw: Vec<RawRow>,
    /// Ordered by strategy, episode.
    pub summary: Vec<SummaryRow>,
}

impl ExploitabilityCurve {
    pub fn strategies(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for row in &self.summary {
            if out.last() != Some(&row.strategy.as_str()) {
                out.push(&row.strategy);
            }
        }
        out
    }

    pub fn summary_at(&self, strategy: &str, episode: usize) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.strategy == strategy && r.episode == episode)
    }

    /// Summary at the last checkpoint of `strategy`.
    pub fn final_summary(&self, strategy: &str) -> Option<&SummaryRow> {
        self.summary.iter().rev().find(|r| r.strategy == strategy)
    }

    /// Regrets of every trial at `episode`, ordered by trial.
    pub fn regrets_at(&self, strategy: &str, episode: usize) -> Vec<f64> {
        self.raw
            .iter()
            .filter(|r| r.strategy == strategy && r.episode == episode)
            .map(|r| r.regret)
            .collect()
    }
}

/// Mean and sample standard deviation (`n - 1`) of each
/// `(strategy, checkpoint)` over trials. Strategies keep their order of first
/// appearance; trials are summed in index order, so the result does not
/// depend on the order of `curves`.
pub fn aggregate(curves: &[TrialCurve]) -> Result<ExploitabilityCurve> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument(
            "no trial curves to aggregate".into(),
        ));
    }
    let mut order: Vec<String> = Vec::new();
    for c in curves {
        let name = c.strategy.to_string();
        if !order.contains(&name) {
            order.push(name);
        }
    }
    let rank = |name: &str| order.iter().position(|o| o == name).unwrap_or(usize::MAX);

    let mut raw: Vec<RawRow> = curves
        .iter()
        .flat_map(|c| {
            let strategy = c.strategy.to_string();
            c.points.iter().map(move |&(episode, regret)| RawRow {
                episode,
                strategy: strategy.clone(),
                trial: c.trial,
                regret,
            })
        })
        .collect();
    raw.sort_by(|a, b| {
        (rank(&a.strategy), a.trial, a.episode).cmp(&(rank(&b.strategy), b.trial, b.episode))
    });

    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for row in &raw {
        groups
            .entry((rank(&row.strategy), row.episode))
            .or_default()
            .push(row.regret);
    }
    let summary = groups
        .into_iter()
        .map(|((s, episode), values)| {
            let (mean, std) = mean_std(&values);
            SummaryRow {
                episode,
                strategy: order[s].clone(),
                mean,
                std,
            }
        })
        .collect();
    Ok(ExploitabilityCurve { raw, summary })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Everything needed to rerun an experiment and check its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    /// How per-trial streams are derived from the master seed.
    pub streams: String,
    pub raw: String,
    pub aggregate: String,
    pub version: String,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            master_seed: config.seed,
            streams: "chacha8 seeded by splitmix64(seed, trial, purpose, index); \
                      purposes ground-truth=1 explore=2 environment=3 evaluation=4"
                .into(),
            raw: RAW_FILE.into(),
            aggregate: AGGREGATE_FILE.into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let manifest: Self = serde_json::from_str(&text)?;
        manifest.config.validate()?;
        Ok(manifest)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::InvalidArgument(format!("{}: {other:?}", path.display())),
    }
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes the raw rows of `curve` to `path`.
pub fn write_raw(curve: &ExploitabilityCurve, path: &Path) -> Result<()> {
    write_rows(
        path,
        &["episode", "strategy", "trial", "regret"],
        &curve.raw,
    )
}

/// Writes raw and aggregate CSVs and the manifest into `dir`.
pub fn emit_results(curve: &ExploitabilityCurve, manifest: &Manifest, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_raw(curve, &dir.join(RAW_FILE))?;
    let agg = dir.join(AGGREGATE_FILE);
    write_rows(
        &agg,
        &["episode", "strategy", "mean", "std"],
        &curve.summary,
    )?;
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(())
}

/// Reads a raw CSV written by [`emit_results`].
pub fn read_raw(path: &Path) -> Result<Vec<RawRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Reads an aggregate CSV written by [`emit_results`].
pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Directory holding the files a manifest refers to.
pub fn manifest_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
