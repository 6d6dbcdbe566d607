//! Seeded experiment runs and multi-seed sweeps: the trial loop, metric
//! snapshots, stuck-run detection, and the CSV/dump files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::config::{ConfigError, ExperimentConfig};
use crate::metrics::{MetricsRecorder, SnapshotRow, CSV_HEADER};
use crate::problems::Problem;
use crate::xcs::XcsRun;

// Metric sampling draws from its own stream so snapshot schedules never
// perturb the learning trajectory.
const METRICS_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Everything one run needs: problem, full configuration (including the
/// variant and population size), seed and trial budget.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub problem: Problem,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub trials: u64,
}

impl RunSpec {
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_seed{}",
            self.problem.name(),
            self.config.variant.name(),
            self.seed
        )
    }
}

/// In-memory results of one run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub rows: Vec<SnapshotRow>,
    pub csv: String,
    pub population_dump: String,
    pub ol_dump: String,
    pub stuck: bool,
    pub final_accuracy: f64,
    pub final_generality: Option<f64>,
}

/// Executes the trial loop, snapshotting metrics every
/// `snapshot_interval` trials and once more at the end.
pub fn run_experiment(spec: &RunSpec) -> Result<RunArtifacts, ConfigError> {
    let mut run = XcsRun::new(spec.problem.clone(), spec.config.clone(), spec.seed)?;
    let mut metrics = MetricsRecorder::new(spec.config.accuracy_window);
    let mut metrics_rng = ChaCha12Rng::seed_from_u64(spec.seed ^ METRICS_STREAM_SALT);
    let interval = spec.config.snapshot_interval.max(1);

    for trial in 1..=spec.trials {
        let outcome = run.run_trial();
        if let Some(correct) = outcome.correct {
            metrics.record_exploit(correct);
        }
        if trial % interval == 0 || trial == spec.trials {
            let row = SnapshotRow {
                trials: trial,
                accuracy: metrics.moving_accuracy(),
                generality_rate: run.generality_rate_estimate(&mut metrics_rng),
                macro_size: run.population().len(),
                ol_size: run.of().ol_len(),
                mean_cf_depth: run.of().mean_ol_depth(),
            };
            metrics.push_row(row);
        }
    }

    let rows = metrics.rows().to_vec();
    let stuck = is_stuck(&rows, spec.trials);
    let final_accuracy = rows.last().map(|r| r.accuracy).unwrap_or(0.0);
    let final_generality = rows.last().and_then(|r| r.generality_rate);
    Ok(RunArtifacts {
        csv: metrics.to_csv(),
        population_dump: run.population().dump(),
        ol_dump: run.of().ol_dump(),
        rows,
        stuck,
        final_accuracy,
        final_generality,
    })
}

/// A run counts as stuck when its moving accuracy sat inside
/// `[0.45, 0.55]` for the entire final fifth of the trial budget —
/// the signature of a parity run trapped by over-numerous short rules.
pub fn is_stuck(rows: &[SnapshotRow], total_trials: u64) -> bool {
    let cutoff = 0.8 * total_trials as f64;
    let tail: Vec<&SnapshotRow> = rows
        .iter()
        .filter(|r| r.trials as f64 > cutoff)
        .collect();
    !tail.is_empty()
        && tail
            .iter()
            .all(|r| (0.45..=0.55).contains(&r.accuracy))
}

/// Writes `<stem>.csv`, `<stem>.pop.txt` and `<stem>.ol.txt`; returns the
/// CSV path.
pub fn write_run_artifacts(
    dir: &Path,
    spec: &RunSpec,
    artifacts: &RunArtifacts,
) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let stem = spec.file_stem();
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, &artifacts.csv)?;
    fs::write(dir.join(format!("{stem}.pop.txt")), &artifacts.population_dump)?;
    fs::write(dir.join(format!("{stem}.ol.txt")), &artifacts.ol_dump)?;
    Ok(csv_path)
}

/// Result of a multi-seed sweep, in seed order.
#[derive(Debug)]
pub struct SweepResult {
    pub seeds: Vec<u64>,
    pub runs: Vec<RunArtifacts>,
}

impl SweepResult {
    /// Mean final generality rate over non-stuck runs with a defined value.
    pub fn mean_final_generality_excluding_stuck(&self) -> Option<f64> {
        let values: Vec<f64> = self
            .runs
            .iter()
            .filter(|r| !r.stuck)
            .filter_map(|r| r.final_generality)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    pub fn stuck_count(&self) -> usize {
        self.runs.iter().filter(|r| r.stuck).count()
    }

    pub fn summary(&self, spec: &RunSpec) -> String {
        let mut out = format!(
            "problem={} variant={} trials={} pop={}\n",
            spec.problem.name(),
            spec.config.variant.name(),
            spec.trials,
            spec.config.pop_size
        );
        for (seed, run) in self.seeds.iter().zip(&self.runs) {
            let generality = run
                .final_generality
                .map(|g| format!("{g:.6}"))
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "seed={seed} final_accuracy={:.6} final_generality_rate={generality} stuck={}\n",
                run.final_accuracy, run.stuck
            ));
        }
        let mean = self
            .mean_final_generality_excluding_stuck()
            .map(|g| format!("{g:.6}"))
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "stuck_runs={} mean_final_generality_rate_excluding_stuck={mean}\n",
            self.stuck_count()
        ));
        out
    }
}

/// Runs one seed per thread (each run owns an independent stream seeded by
/// its own seed, so parallelism cannot change any result).
pub fn sweep(base: &RunSpec, seeds: &[u64]) -> Result<SweepResult, ConfigError> {
    let mut results: Vec<Option<Result<RunArtifacts, ConfigError>>> =
        seeds.iter().map(|_| None).collect();
    std::thread::scope(|scope| {
        for (slot, &seed) in results.iter_mut().zip(seeds) {
            let spec = RunSpec {
                seed,
                ..base.clone()
            };
            scope.spawn(move || {
                *slot = Some(run_experiment(&spec));
            });
        }
    });
    let mut runs = Vec::with_capacity(seeds.len());
    for slot in results {
        runs.push(slot.expect("sweep thread finished")?);
    }
    Ok(SweepResult {
        seeds: seeds.to_vec(),
        runs,
    })
}

/// Writes per-seed artifacts, the aggregate mean-curve CSV and the
/// summary; returns all written paths.
pub fn write_sweep(
    dir: &Path,
    base: &RunSpec,
    result: &SweepResult,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (&seed, run) in result.seeds.iter().zip(&result.runs) {
        let spec = RunSpec {
            seed,
            ..base.clone()
        };
        paths.push(write_run_artifacts(dir, &spec, run)?);
    }
    let aggregate = dir.join(format!(
        "aggregate_{}_{}.csv",
        base.problem.name(),
        base.config.variant.name()
    ));
    fs::write(
        &aggregate,
        aggregate_csv(&result.runs.iter().map(|r| r.rows.as_slice()).collect::<Vec<_>>()),
    )?;
    paths.push(aggregate);
    let summary = dir.join(format!(
        "summary_{}_{}.txt",
        base.problem.name(),
        base.config.variant.name()
    ));
    fs::write(&summary, result.summary(base))?;
    paths.push(summary);
    Ok(paths)
}

/// Mean curve across seeds. Rows align by snapshot position (all runs of a
/// sweep share one schedule); the generality cell averages the defined
/// values and stays blank where every seed was undefined.
pub fn aggregate_csv(runs: &[&[SnapshotRow]]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    if runs.is_empty() {
        return out;
    }
    let len = runs.iter().map(|r| r.len()).min().unwrap_or(0);
    for i in 0..len {
        let trials = runs[0][i].trials;
        let accuracy: f64 = runs.iter().map(|r| r[i].accuracy).sum::<f64>() / runs.len() as f64;
        let generalities: Vec<f64> = runs.iter().filter_map(|r| r[i].generality_rate).collect();
        let generality = if generalities.is_empty() {
            String::new()
        } else {
            format!(
                "{:.6}",
                generalities.iter().sum::<f64>() / generalities.len() as f64
            )
        };
        let macro_size: f64 =
            runs.iter().map(|r| r[i].macro_size as f64).sum::<f64>() / runs.len() as f64;
        let ol_size: f64 =
            runs.iter().map(|r| r[i].ol_size as f64).sum::<f64>() / runs.len() as f64;
        let depth: f64 =
            runs.iter().map(|r| r[i].mean_cf_depth).sum::<f64>() / runs.len() as f64;
        out.push_str(&format!(
            "{trials},{accuracy:.6},{generality},{macro_size:.2},{ol_size:.2},{depth:.6}\n"
        ));
    }
    out
}
