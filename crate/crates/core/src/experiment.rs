//! Monte-Carlo sweeps over the number of picocells or users.
//!
//! Every replica is generated from a seed derived from the master seed, the
//! axis value and the replica index, so results do not depend on worker count
//! or completion order, and growing `replicas` only appends new records.

use std::fs::File;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{max_sinr_matching, solve_market, verify_stability, Matching};
use crate::preferences::{GameConfig, Market};
use crate::scenario::{generate, ScenarioConfig};
use crate::seeding::combine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    NPicos,
    NUsers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Proposed,
    MaxSinr,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::MaxSinr => "max_sinr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    /// Strictly increasing axis values.
    pub values: Vec<usize>,
    /// Value of the dimension that is not swept.
    pub fixed: usize,
    pub replicas: usize,
    /// Template scenario; its `seed` is the master seed of the sweep.
    pub base: ScenarioConfig,
    pub game: GameConfig,
    pub algorithms: Vec<Algorithm>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep values must be nonempty"));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sweep values must be strictly increasing"));
        }
        if self.values[0] == 0 || self.fixed == 0 {
            return Err(Error::config("sweep counts must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(Error::config("replicas must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("at least one algorithm is required"));
        }
        self.game.validate()?;
        self.scenario_config(self.values[0], 0).validate()
    }

    pub fn replica_seed(&self, axis_value: usize, replica: usize) -> u64 {
        combine(&[self.base.seed, axis_value as u64, replica as u64])
    }

    /// Scenario configuration of one replica.
    pub fn scenario_config(&self, axis_value: usize, replica: usize) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        match self.axis {
            Axis::NPicos => {
                cfg.n_picos = axis_value;
                cfg.n_users = self.fixed;
            }
            Axis::NUsers => {
                cfg.n_users = axis_value;
                cfg.n_picos = self.fixed;
            }
        }
        cfg.seed = self.replica_seed(axis_value, replica);
        cfg
    }
}

/// Outcome of one algorithm on one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub axis_value: usize,
    pub replica: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Mean utility over picocell-served users; `None` if nobody is offloaded.
    pub user_utility: Option<f64>,
    /// Mean utility over all users, macro-served ones included.
    pub all_user_utility: f64,
    /// Mean over picocells of the summed utility of their served users.
    pub cell_utility: f64,
    /// Proposals per user holding at least one mutually acceptable cell;
    /// `None` for the baseline or when no user participates.
    pub iter_per_user: Option<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub stable: bool,
    pub served_users: usize,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(
    spec: &SweepSpec,
    market: &Market,
    axis_value: usize,
    replica: usize,
    algorithm: Algorithm,
    matching: &Matching,
) -> ReplicaRecord {
    let n = market.n_users();
    let served: Vec<usize> = (0..n).filter(|&i| matching.server(i).is_some()).collect();
    ReplicaRecord {
        axis_value,
        replica,
        seed: spec.replica_seed(axis_value, replica),
        algorithm,
        user_utility: mean_of(
            served
                .iter()
                .map(|&i| market.realized_user_utility(matching, i)),
        ),
        all_user_utility: mean_of((0..n).map(|i| market.realized_user_utility(matching, i)))
            .unwrap_or(0.0),
        cell_utility: mean_of(
            (0..market.n_cells()).map(|j| market.realized_cell_utility(matching, j)),
        )
        .unwrap_or(0.0),
        iter_per_user: None,
        outer_iterations: 0,
        converged: true,
        stable: false,
        served_users: served.len(),
    }
}

/// Runs every requested algorithm on one replica.
pub fn run_replica(
    spec: &SweepSpec,
    axis_value: usize,
    replica: usize,
) -> Result<Vec<ReplicaRecord>> {
    let scenario = generate(&spec.scenario_config(axis_value, replica))?;
    let market = Market::new(&scenario, &spec.game)?;
    let participants = (0..market.n_users())
        .filter(|&i| !market.candidate_cells(i).is_empty())
        .count();
    let mut out = Vec::with_capacity(spec.algorithms.len());
    for &algorithm in &spec.algorithms {
        let record = match algorithm {
            Algorithm::Proposed => {
                let report = solve_market(&market, spec.game.max_outer);
                let mut r = summarize(
                    spec,
                    &market,
                    axis_value,
                    replica,
                    algorithm,
                    &report.matching,
                );
                r.iter_per_user =
                    (participants > 0).then(|| report.proposals as f64 / participants as f64);
                r.outer_iterations = report.outer_iterations;
                r.converged = report.converged;
                r.stable = report.stable;
                r
            }
            Algorithm::MaxSinr => {
                let matching = max_sinr_matching(&market, spec.game.baseline_quota);
                let mut r = summarize(spec, &market, axis_value, replica, algorithm, &matching);
                r.stable = verify_stability(&market, &matching).stable;
                r
            }
        };
        out.push(record);
    }
    Ok(out)
}

/// One CSV line of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    #[serde(rename = "axis")]
    pub axis_value: usize,
    pub algorithm: Algorithm,
    pub mean_user_utility: f64,
    pub se_user_utility: f64,
    pub mean_cell_utility: f64,
    pub se_cell_utility: f64,
    pub mean_iter_per_user: f64,
    pub se_iter: f64,
    pub convergence_rate: f64,
    pub replicas: usize,
}

/// A [`MetricsRow`] plus diagnostics that only go to json-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDetail {
    #[serde(flatten)]
    pub row: MetricsRow,
    pub mean_all_user_utility: f64,
    pub se_all_user_utility: f64,
    pub mean_outer_iterations: f64,
    pub stable_rate: f64,
    /// Replicas in which at least one user was offloaded.
    pub offloading_replicas: usize,
    pub failed_replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaFailure {
    pub axis_value: usize,
    pub replica: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub details: Vec<RowDetail>,
    pub records: Vec<ReplicaRecord>,
    pub failures: Vec<ReplicaFailure>,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<MetricsRow> {
        self.details.iter().map(|d| d.row.clone()).collect()
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepOutcome> {
    run_sweep_with_progress(spec, workers, |_, _| {})
}

/// Like [`run_sweep`], calling `progress(done, total)` after each replica.
pub fn run_sweep_with_progress<F>(
    spec: &SweepSpec,
    workers: Option<usize>,
    progress: F,
) -> Result<SweepOutcome>
where
    F: Fn(usize, usize) + Sync,
{
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.replicas).map(move |r| (v, r)))
        .collect();
    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    // collect keeps job order, so the reduction below is order-independent
    let results: Vec<Result<Vec<ReplicaRecord>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(v, r)| {
                let out = run_replica(spec, v, r);
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                out
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (&(axis_value, replica), res) in jobs.iter().zip(results) {
        match res {
            Ok(rs) => records.extend(rs),
            Err(e) => failures.push(ReplicaFailure {
                axis_value,
                replica,
                message: e.to_string(),
            }),
        }
    }
    let details = aggregate(spec, &records, &failures);
    Ok(SweepOutcome {
        details,
        records,
        failures,
    })
}

/// Reduces replica records to one row per axis value and algorithm.
pub fn aggregate(
    spec: &SweepSpec,
    records: &[ReplicaRecord],
    failures: &[ReplicaFailure],
) -> Vec<RowDetail> {
    let mut out = Vec::new();
    for &v in &spec.values {
        let failed = failures.iter().filter(|f| f.axis_value == v).count();
        for &alg in &spec.algorithms {
            let rs: Vec<&ReplicaRecord> = records
                .iter()
                .filter(|r| r.axis_value == v && r.algorithm == alg)
                .collect();
            let users: Vec<f64> = rs.iter().filter_map(|r| r.user_utility).collect();
            let all: Vec<f64> = rs.iter().map(|r| r.all_user_utility).collect();
            let cells: Vec<f64> = rs.iter().map(|r| r.cell_utility).collect();
            let iters: Vec<f64> = rs.iter().filter_map(|r| r.iter_per_user).collect();
            let outer: Vec<f64> = rs.iter().map(|r| r.outer_iterations as f64).collect();
            let n = rs.len();
            let rate = |pred: fn(&ReplicaRecord) -> bool| {
                if n == 0 {
                    0.0
                } else {
                    rs.iter().filter(|r| pred(r)).count() as f64 / n as f64
                }
            };
            let (mu, su) = mean_se(&users);
            let (ma, sa) = mean_se(&all);
            let (mc, sc) = mean_se(&cells);
            let (mi, si) = mean_se(&iters);
            out.push(RowDetail {
                row: MetricsRow {
                    axis_value: v,
                    algorithm: alg,
                    mean_user_utility: mu,
                    se_user_utility: su,
                    mean_cell_utility: mc,
                    se_cell_utility: sc,
                    mean_iter_per_user: mi,
                    se_iter: si,
                    convergence_rate: rate(|r| r.converged),
                    replicas: n,
                },
                mean_all_user_utility: ma,
                se_all_user_utility: sa,
                mean_outer_iterations: mean_se(&outer).0,
                stable_rate: rate(|r| r.stable),
                offloading_replicas: users.len(),
                failed_replicas: failed,
            });
        }
    }
    out
}

/// Writes `rows` as CSV to any writer.
pub fn write_csv_to<W: std::io::Write>(rows: &[MetricsRow], writer: W, path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `rows` to `path`. Nothing is created when `rows` is empty.
pub fn write_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::domain("no metrics rows to write"));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(rows, file, path)
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    r.deserialize()
        .collect::<std::result::Result<Vec<MetricsRow>, _>>()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
}
