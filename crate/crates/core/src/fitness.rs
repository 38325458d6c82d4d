//! Per-task budgets, the blended solve/agile score, the evals and speed
//! features, and the training-set evaluation harness.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::generators;
use crate::heuristics::{HeuristicFactory, HeuristicKind};
use crate::search::{self, Outcome, SearchLimits};

use crate::task::{self, SasError, Task};

/// Default blend between solving and agile time score.
pub const DEFAULT_ALPHA: f64 = 0.25;
/// evals feature of an unsolved task, as a multiple of FF's evaluations.
pub const EVALS_SENTINEL: f64 = 10.0;
/// speed feature of an unsolved task.
pub const SPEED_SENTINEL: f64 = 0.0;

/// Per-task time limit `max(floor, factor * t_ff)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetPolicy {
    pub floor_s: f64,
    pub factor: f64,
}

impl Default for BudgetPolicy {
    fn default() -> Self {
        Self {
            floor_s: 30.0,
            factor: 1.3,
        }
    }
}

impl BudgetPolicy {
    pub fn budget(&self, t_ff: f64) -> f64 {
        self.floor_s.max(self.factor * t_ff)
    }
}

/// `max(30, 1.3 * t_ff)` seconds.
pub fn task_budget(t_ff: f64) -> f64 {
    BudgetPolicy::default().budget(t_ff)
}

/// 1 up to one second, then `1 - ln t / ln T`, and 0 beyond `T`.
/// The logarithm base cancels out.
pub fn agile(t: f64, budget: f64) -> f64 {
    debug_assert!(budget > 1.0);
    if t <= 1.0 {
        1.0
    } else if t <= budget {
        1.0 - t.ln() / budget.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct TrainingTask {
    pub domain: String,
    pub name: String,
    pub path: Option<PathBuf>,
    pub task: Arc<Task>,
    /// FF's solve time (seconds) and evaluations from calibration.
    pub t_ff: f64,
    pub e_ff: u64,
}

#[derive(Debug, Clone)]
pub struct TrainingDomain {
    pub name: String,
    /// Ascending by `t_ff`.
    pub tasks: Vec<TrainingTask>,
}

/// Calibration input: domain, task name, source path and the task.
pub type Candidate = (String, String, Option<PathBuf>, Arc<Task>);

#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    pub domains: Vec<TrainingDomain>,
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("calibration file: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Task {
        path: String,
        #[source]
        source: SasError,
    },
    #[error("calibration row {row}: {message}")]
    Row { row: usize, message: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct CalibrationRow {
    domain: String,
    task: String,
    path: String,
    t_ff: f64,
    e_ff: u64,
}

impl TrainingSet {
    /// Groups tasks by domain (first-appearance order) and sorts each domain
    /// by ascending `t_ff`, ties by name.
    pub fn from_tasks(tasks: Vec<TrainingTask>) -> Self {
        let mut domains: Vec<TrainingDomain> = Vec::new();
        for t in tasks {
            match domains.iter_mut().find(|d| d.name == t.domain) {
                Some(d) => d.tasks.push(t),
                None => domains.push(TrainingDomain {
                    name: t.domain.clone(),
                    tasks: vec![t],
                }),
            }
        }
        for d in &mut domains {
            d.tasks
                .sort_by(|a, b| a.t_ff.total_cmp(&b.t_ff).then_with(|| a.name.cmp(&b.name)));
        }
        Self { domains }
    }

    pub fn len(&self) -> usize {
        self.domains.iter().map(|d| d.tasks.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TrainingTask> + '_ {
        self.domains.iter().flat_map(|d| d.tasks.iter())
    }

    /// Runs FF on every candidate and keeps those it solves within `limits`.
    /// Returns the set and the names of dropped tasks.
    pub fn calibrate(candidates: Vec<Candidate>, limits: &SearchLimits) -> (Self, Vec<String>) {
        let results: Vec<_> = candidates
            .into_par_iter()
            .map(|(domain, name, path, task)| {
                let r = search::solve(&task, &HeuristicKind::Ff, limits).expect("ff always builds");
                (domain, name, path, task, r)
            })
            .collect();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (domain, name, path, task, r) in results {
            if r.is_solved() {
                kept.push(TrainingTask {
                    domain,
                    name,
                    path,
                    task,
                    t_ff: r.wall_time,
                    e_ff: r.evaluations,
                });
            } else {
                dropped.push(format!("{domain}/{name}"));
            }
        }
        (Self::from_tasks(kept), dropped)
    }

    /// Calibration CSV: `domain,task,path,t_ff,e_ff`.
    pub fn write_calibration(&self, out: impl std::io::Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for t in self.tasks() {
            w.serialize(CalibrationRow {
                domain: t.domain.clone(),
                task: t.name.clone(),
                path: t
                    .path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
                t_ff: t.t_ff,
                e_ff: t.e_ff,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a calibration CSV, parsing each task file. Relative paths are
    /// resolved against `base`.
    pub fn read_calibration(
        input: impl std::io::Read,
        base: &Path,
    ) -> Result<Self, CalibrationError> {
        let mut tasks = Vec::new();
        for (i, row) in csv::Reader::from_reader(input).deserialize().enumerate() {
            let row: CalibrationRow = row?;
            if row.path.is_empty() {
                return Err(CalibrationError::Row {
                    row: i + 1,
                    message: "missing task path".into(),
                });
            }
            let path = base.join(&row.path);
            let task = task::parse_sas_file(&path).map_err(|source| CalibrationError::Task {
                path: path.display().to_string(),
                source,
            })?;
            tasks.push(TrainingTask {
                domain: row.domain,
                name: row.task,
                path: Some(path),
                task: Arc::new(task),
                t_ff: row.t_ff,
                e_ff: row.e_ff,
            });
        }
        Ok(Self::from_tasks(tasks))
    }
}

/// Result of one training task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub domain: String,
    pub task: String,
    pub solved: bool,
    /// Seconds.
    pub time: f64,
    pub evaluations: u64,
    pub budget: f64,
    pub e_ff: u64,
    /// False when the domain-abort rule skipped the task.
    pub executed: bool,
    pub outcome: Option<Outcome>,
}

impl EvalRecord {
    fn skipped(t: &TrainingTask, budget: f64) -> Self {
        Self {
            domain: t.domain.clone(),
            task: t.name.clone(),
            solved: false,
            time: 0.0,
            evaluations: 0,
            budget,
            e_ff: t.e_ff,
            executed: false,
            outcome: None,
        }
    }
}

/// Mean over tasks of `alpha * solved + (1 - alpha) * agile(t, T_p)`;
/// unsolved tasks contribute 0. An empty record set scores 0.
pub fn score(records: &[EvalRecord], alpha: f64) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let total: f64 = records
        .iter()
        .filter(|r| r.solved)
        .map(|r| alpha + (1.0 - alpha) * agile(r.time, r.budget))
        .sum();
    total / records.len() as f64
}

/// `(evals, speed)`: means of `e / e_ff` and `e / t` over solved tasks, with
/// the sentinels 10 and 0 for unsolved ones.
pub fn features(records: &[EvalRecord]) -> (f64, f64) {
    if records.is_empty() {
        return (EVALS_SENTINEL, SPEED_SENTINEL);
    }
    let n = records.len() as f64;
    let evals: f64 = records
        .iter()
        .map(|r| {
            if r.solved {
                r.evaluations as f64 / r.e_ff.max(1) as f64
            } else {
                EVALS_SENTINEL
            }
        })
        .sum();
    let speed: f64 = records
        .iter()
        .map(|r| {
            if r.solved {
                r.evaluations as f64 / r.time.max(1e-9)
            } else {
                SPEED_SENTINEL
            }
        })
        .sum();
    (evals / n, speed / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub score: f64,
    pub evals: f64,
    pub speed: f64,
    pub records: Vec<EvalRecord>,
}

impl FitnessReport {
    pub fn features(&self) -> [f64; 2] {
        [self.evals, self.speed]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub alpha: f64,
    pub memory_limit: u64,
    pub clock: Clock,
    pub budget: BudgetPolicy,
    /// Evaluate domains in parallel.
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            memory_limit: 8 << 30,
            clock: Clock::Wall,
            budget: BudgetPolicy::default(),
            parallel: true,
        }
    }
}

/// Counts searches actually started by [`evaluate_heuristic`].
#[derive(Debug, Default)]
pub struct ExecutionCounter(AtomicU64);

impl ExecutionCounter {
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Builds the heuristic on the flip task and evaluates both of its states.
pub fn smoke_check(factory: &dyn HeuristicFactory) -> Result<(), String> {
    let task = Arc::new(generators::flip_task());
    let run = || -> Result<(), String> {
        let mut h = factory.build(&task).map_err(|e| e.to_string())?;
        for s in [[0u32], [1u32]] {
            h.evaluate(&s).map_err(|e| e.to_string())?;
        }
        Ok(())
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
        Ok(r) => r,
        Err(p) => Err(match p.downcast_ref::<String>() {
            Some(s) => format!("panic: {s}"),
            None => match p.downcast_ref::<&str>() {
                Some(s) => format!("panic: {s}"),
                None => "panic".into(),
            },
        }),
    }
}

fn run_domain(
    factory: &dyn HeuristicFactory,
    domain: &TrainingDomain,
    config: &EvalConfig,
    counter: &ExecutionCounter,
) -> Vec<EvalRecord> {
    let mut out = Vec::with_capacity(domain.tasks.len());
    let mut aborted = false;
    for t in &domain.tasks {
        let budget = config.budget.budget(t.t_ff);
        if aborted {
            out.push(EvalRecord::skipped(t, budget));
            continue;
        }
        counter.0.fetch_add(1, Ordering::Relaxed);
        let limits = SearchLimits::new(budget, config.memory_limit).with_clock(config.clock);
        let (outcome, time, evaluations) = match search::solve(&t.task, factory, &limits) {
            Ok(r) => {
                // FF solved this task during calibration, so giving up on
                // it means a dead end was reported for a solvable state
                let outcome = match r.outcome {
                    Outcome::Unsolvable => Outcome::DeadEndFalse,
                    o => o,
                };
                (outcome, r.wall_time, r.evaluations)
            }
            Err(_) => (Outcome::Crash, 0.0, 0),
        };
        let solved = outcome == Outcome::Solved && time <= budget;
        out.push(EvalRecord {
            domain: t.domain.clone(),
            task: t.name.clone(),
            solved,
            time,
            evaluations,
            budget,
            e_ff: t.e_ff,
            executed: true,
            outcome: Some(outcome),
        });
        if !solved {
            aborted = true;
        }
    }
    out
}

/// Runs the heuristic on every training task with its budget. Within a
/// domain tasks run in ascending difficulty and the first failure marks the
/// rest of the domain failed without running them.
pub fn evaluate_heuristic(
    factory: &dyn HeuristicFactory,
    training: &TrainingSet,
    config: &EvalConfig,
    counter: &ExecutionCounter,
) -> FitnessReport {
    let per_domain: Vec<Vec<EvalRecord>> = if config.parallel {
        training
            .domains
            .par_iter()
            .map(|d| run_domain(factory, d, config, counter))
            .collect()
    } else {
        training
            .domains
            .iter()
            .map(|d| run_domain(factory, d, config, counter))
            .collect()
    };
    let records: Vec<EvalRecord> = per_domain.into_iter().flatten().collect();
    let (evals, speed) = features(&records);
    FitnessReport {
        score: score(&records, config.alpha),
        evals,
        speed,
        records,
    }
}
