//! Learning-curve tracking: moving exploit accuracy and the niche-averaged
//! generality rate, snapshotted into CSV rows.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use rand::Rng;

use crate::cf::CfEvaluator;
use crate::problems::Problem;
use crate::rule::{ClassifierId, Population};

/// One snapshot of a run. `generality_rate` is `None` while no experienced
/// accurate classifier exists; the CSV leaves the cell blank rather than
/// writing a misleading zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub trials: u64,
    pub accuracy: f64,
    pub generality_rate: Option<f64>,
    pub macro_size: usize,
    pub ol_size: usize,
    pub mean_cf_depth: f64,
}

pub const CSV_HEADER: &str = "trials,accuracy,generality_rate,macro_size,ol_size,mean_cf_depth";

impl SnapshotRow {
    pub fn to_csv_line(&self) -> String {
        let generality = self
            .generality_rate
            .map(|g| format!("{g:.6}"))
            .unwrap_or_default();
        format!(
            "{},{:.6},{},{},{},{:.6}",
            self.trials, self.accuracy, generality, self.macro_size, self.ol_size, self.mean_cf_depth
        )
    }
}

/// Ring buffer of exploit-trial correctness plus the snapshot series.
#[derive(Debug)]
pub struct MetricsRecorder {
    window: VecDeque<bool>,
    capacity: usize,
    rows: Vec<SnapshotRow>,
}

impl MetricsRecorder {
    pub fn new(window: usize) -> Self {
        MetricsRecorder {
            window: VecDeque::with_capacity(window),
            capacity: window.max(1),
            rows: Vec::new(),
        }
    }

    pub fn record_exploit(&mut self, correct: bool) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(correct);
    }

    /// Fraction of correct decisions over the last window; over however
    /// many trials exist while the window is still filling.
    pub fn moving_accuracy(&self) -> f64 {
        if self.window.is_empty() {
            return 0.0;
        }
        let hits = self.window.iter().filter(|&&c| c).count();
        hits as f64 / self.window.len() as f64
    }

    pub fn push_row(&mut self, row: SnapshotRow) {
        debug_assert!(self
            .rows
            .last()
            .map(|prev| prev.trials < row.trials)
            .unwrap_or(true));
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[SnapshotRow] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv_line());
            out.push('\n');
        }
        out
    }
}

/// Niche-averaged generality rate.
///
/// Samples instances, forms the action set of the correct action, and
/// takes at most one classifier per set: the highest fitness rate among
/// those experienced (`experience >= theta_ga`) and accurate
/// (`error <= eps_zero`). Classifiers picked in several niches count once.
/// Returns `None` when nothing qualifies anywhere, which is common before
/// accuracy settles.
pub fn population_generality_rate(
    pop: &Population,
    problem: &Problem,
    evaluator: &mut CfEvaluator,
    rng: &mut impl Rng,
    samples: u32,
    theta_ga: f64,
    eps_zero: f64,
) -> Option<f64> {
    if pop.is_empty() {
        return None;
    }
    let mut selected: BTreeSet<ClassifierId> = BTreeSet::new();
    for _ in 0..samples {
        let state = problem.sample(rng);
        let action = problem.label(&state);
        let aset = pop.action_set(evaluator, &state, action);
        let mut best: Option<(f64, u32, ClassifierId)> = None;
        for id in aset {
            let cl = pop.get(id);
            if (cl.experience as f64) < theta_ga || cl.error > eps_zero {
                continue;
            }
            let candidate = (cl.fitness_rate(), cl.numerosity, id);
            let better = match &best {
                None => true,
                Some((rate, num, best_id)) => {
                    candidate.0 > *rate
                        || (candidate.0 == *rate
                            && (candidate.1 > *num || (candidate.1 == *num && id < *best_id)))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
        if let Some((_, _, id)) = best {
            selected.insert(id);
        }
    }
    if selected.is_empty() {
        return None;
    }
    let rates: Vec<f64> = selected
        .iter()
        .filter_map(|&id| pop.get(id).generality_rate())
        .collect();
    if rates.is_empty() {
        return None;
    }
    Some(rates.iter().sum::<f64>() / rates.len() as f64)
}
