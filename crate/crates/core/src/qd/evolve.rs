use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Genome, Individual, IslandSet, Mutator, Snapshot};
use crate::fitness::{self, EvalConfig, ExecutionCounter, TrainingSet};
use crate::heuristics::HeuristicFactory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub grid: [usize; 2],
    pub islands: usize,
    pub migration_interval: u64,
    pub repair_budget: u32,
    pub iterations: u64,
    pub seed: u64,
    pub inspirations: usize,
    pub eval: EvalConfig,
    /// Extra smoke step for source genomes. `{file}` is replaced by the path
    /// of a file holding the genome; a nonzero exit fails the check with the
    /// command's stderr as diagnostic.
    pub build_command: Option<Vec<String>>,
    /// Write a snapshot every this many iterations (0 = only at the end).
    pub snapshot_every: u64,
    pub snapshot_path: Option<PathBuf>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            grid: [4, 4],
            islands: 3,
            migration_interval: 10,
            repair_budget: 4,
            iterations: 100,
            seed: 0,
            inspirations: 3,
            eval: EvalConfig::default(),
            build_command: None,
            snapshot_every: 0,
            snapshot_path: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("seed genome failed its smoke check: {0}")]
    SeedFailed(String),
    #[error("snapshot does not match config: {0}")]
    BadSnapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationOutcome {
    Seed,
    Success,
    Repaired,
    Failed,
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iteration: u64,
    pub island: usize,
    pub outcome: IterationOutcome,
    pub repairs: u32,
    pub id: Option<u64>,
    pub parent: Option<u64>,
    pub score: Option<f64>,
    pub features: Option<[f64; 2]>,
    pub cell: Option<(usize, usize)>,
    pub placed: bool,
    pub displaced: Vec<u64>,
    pub migrated: bool,
    pub best_score: f64,
    pub diagnostic: Option<String>,
}

/// Counts of iteration outcomes: first-try successes, successes after k
/// repairs, failures.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeHistogram {
    pub success: u64,
    pub repaired: BTreeMap<u32, u64>,
    pub failed: u64,
}

impl OutcomeHistogram {
    pub fn from_records(records: &[LogRecord]) -> Self {
        let mut h = Self::default();
        for r in records {
            match r.outcome {
                IterationOutcome::Seed => {}
                IterationOutcome::Success => h.success += 1,
                IterationOutcome::Repaired => *h.repaired.entry(r.repairs).or_default() += 1,
                IterationOutcome::Failed => h.failed += 1,
            }
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub islands: IslandSet,
    pub best: Individual,
    pub records: Vec<LogRecord>,
    pub histogram: OutcomeHistogram,
    /// Best score after each iteration, seed first.
    pub best_trajectory: Vec<f64>,
    /// Searches started across all fitness evaluations.
    pub searches: u64,
}

fn external_build(cmd: &[String], source: &str) -> Result<(), String> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let path = std::env::temp_dir().join(format!(
        "genome-{}-{}.h",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&path, source).map_err(|e| format!("writing genome: {e}"))?;
    let file = path.to_string_lossy();
    let args: Vec<String> = cmd.iter().map(|a| a.replace("{file}", &file)).collect();
    let result = match args.split_first() {
        None => Err("empty build command".to_string()),
        Some((prog, rest)) => match Command::new(prog).args(rest).output() {
            Err(e) => Err(format!("running build command: {e}")),
            Ok(out) if out.status.success() => Ok(()),
            Ok(out) => Err(format!(
                "build failed ({}): {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )),
        },
    };
    let _ = std::fs::remove_file(&path);
    result
}

/// Smoke check for a genome: optional external build for source genomes,
/// then construction and evaluation on the flip task.
pub fn run_smoke_check(
    genome: &Genome,
    build_command: Option<&[String]>,
) -> Result<Arc<dyn HeuristicFactory>, String> {
    if let (Genome::Source(src), Some(cmd)) = (genome, build_command) {
        external_build(cmd, src)?;
    }
    let factory = genome.factory()?;
    fitness::smoke_check(factory.as_ref())?;
    Ok(factory)
}

/// A genome that passed the smoke check, with its factory.
type Built = (Genome, Arc<dyn HeuristicFactory>);

struct Loop<'a> {
    mutator: &'a mut dyn Mutator,
    training: &'a TrainingSet,
    config: &'a EvolveConfig,
    log: &'a mut dyn Write,
    counter: ExecutionCounter,
    records: Vec<LogRecord>,
    trajectory: Vec<f64>,
}

impl Loop<'_> {
    fn emit(&mut self, rec: LogRecord) -> Result<(), EvolveError> {
        serde_json::to_writer(&mut *self.log, &rec)?;
        self.log.write_all(b"\n")?;
        self.log.flush()?;
        self.trajectory.push(rec.best_score);
        self.records.push(rec);
        Ok(())
    }

    fn evaluate(&self, factory: &dyn HeuristicFactory) -> fitness::FitnessReport {
        fitness::evaluate_heuristic(factory, self.training, &self.config.eval, &self.counter)
    }

    fn snapshot(
        &self,
        islands: &IslandSet,
        iteration: u64,
        next_id: u64,
    ) -> Result<(), EvolveError> {
        if let Some(path) = &self.config.snapshot_path {
            write_snapshot(
                path,
                &Snapshot {
                    iteration,
                    next_id,
                    islands: islands.clone(),
                },
            )?;
        }
        Ok(())
    }

    fn build_cmd(&self) -> Option<&[String]> {
        self.config.build_command.as_deref()
    }

    /// Propose, then smoke check with up to `repair_budget` repairs of the
    /// first failing genome.
    fn generate(
        &mut self,
        parent: &Individual,
        inspirations: &[Individual],
        rng: &mut ChaCha8Rng,
    ) -> (Result<Built, String>, u32) {
        let (broken, mut diag) = match self.mutator.propose(parent, inspirations, rng) {
            Ok(g) => match run_smoke_check(&g, self.build_cmd()) {
                Ok(f) => return (Ok((g, f)), 0),
                Err(d) => (g, d),
            },
            Err(e) => (parent.genome.clone(), e.0),
        };
        let mut repairs = 0;
        while repairs < self.config.repair_budget {
            repairs += 1;
            match self.mutator.repair(&broken, &diag, rng) {
                Ok(g) => match run_smoke_check(&g, self.build_cmd()) {
                    Ok(f) => return (Ok((g, f)), repairs),
                    Err(d) => diag = d,
                },
                Err(e) => diag = e.0,
            }
        }
        (Err(diag), repairs)
    }

    fn run(
        mut self,
        mut islands: IslandSet,
        start: u64,
        mut next_id: u64,
    ) -> Result<EvolveResult, EvolveError> {
        let end = start + self.config.iterations;
        for it in start + 1..=end {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            rng.set_stream(it);
            let (island, parent) = islands.sample_parent(&mut rng);
            let insp = islands
                .island(island)
                .top(self.config.inspirations, Some(parent.id));
            let (generated, repairs) = self.generate(&parent, &insp, &mut rng);
            let mut rec = LogRecord {
                iteration: it,
                island,
                outcome: IterationOutcome::Failed,
                repairs,
                id: None,
                parent: Some(parent.id),
                score: None,
                features: None,
                cell: None,
                placed: false,
                displaced: Vec::new(),
                migrated: false,
                best_score: 0.0,
                diagnostic: None,
            };
            match generated {
                Err(diag) => rec.diagnostic = Some(diag),
                Ok((genome, factory)) => {
                    let report = self.evaluate(factory.as_ref());
                    let ind = Individual {
                        id: next_id,
                        genome,
                        score: report.score,
                        features: report.features(),
                        parent: Some(parent.id),
                        island,
                        born: it,
                        repairs,
                    };
                    next_id += 1;
                    rec.outcome = if repairs == 0 {
                        IterationOutcome::Success
                    } else {
                        IterationOutcome::Repaired
                    };
                    rec.id = Some(ind.id);
                    rec.score = Some(ind.score);
                    rec.features = Some(ind.features);
                    let p = islands.insert(island, ind);
                    rec.cell = Some(p.cell);
                    rec.placed = p.placed;
                    rec.displaced = p.displaced;
                }
            }
            if islands.tick(island) {
                rec.migrated = true;
                for (_, p) in islands.migrate(island) {
                    rec.displaced.extend(p.displaced);
                }
            }
            rec.best_score = islands.best().map_or(0.0, |b| b.score);
            self.emit(rec)?;
            let every = self.config.snapshot_every;
            if every > 0 && it % every == 0 {
                self.snapshot(&islands, it, next_id)?;
            }
        }
        self.snapshot(&islands, end, next_id)?;
        let best = islands.best().cloned().expect("islands hold the seed");
        Ok(EvolveResult {
            histogram: OutcomeHistogram::from_records(&self.records),
            best,
            islands,
            records: self.records,
            best_trajectory: self.trajectory,
            searches: self.counter.get(),
        })
    }
}

/// Evolves heuristics from `seed`: every iteration samples a parent,
/// proposes a child, smoke-checks and repairs it, evaluates it on the
/// training set and inserts it into the parent's island. Writes one JSON
/// line per iteration to `log` (the seed is iteration 0).
pub fn evolve_loop(
    seed: &Genome,
    mutator: &mut dyn Mutator,
    training: &TrainingSet,
    config: &EvolveConfig,
    log: &mut dyn Write,
) -> Result<EvolveResult, EvolveError> {
    let mut lp = Loop {
        mutator,
        training,
        config,
        log,
        counter: ExecutionCounter::default(),
        records: Vec::new(),
        trajectory: Vec::new(),
    };
    let factory = run_smoke_check(seed, lp.build_cmd()).map_err(EvolveError::SeedFailed)?;
    let report = lp.evaluate(factory.as_ref());
    let ind = Individual {
        id: 0,
        genome: seed.clone(),
        score: report.score,
        features: report.features(),
        parent: None,
        island: 0,
        born: 0,
        repairs: 0,
    };
    let mut islands = IslandSet::new(config.islands, config.grid, config.migration_interval);
    let mut placement = None;
    for i in 0..islands.len() {
        placement = Some(islands.insert(i, ind.clone()));
    }
    lp.emit(LogRecord {
        iteration: 0,
        island: 0,
        outcome: IterationOutcome::Seed,
        repairs: 0,
        id: Some(0),
        parent: None,
        score: Some(ind.score),
        features: Some(ind.features),
        cell: placement.map(|p| p.cell),
        placed: true,
        displaced: Vec::new(),
        migrated: false,
        best_score: ind.score,
        diagnostic: None,
    })?;
    lp.run(islands, 0, 1)
}

/// Continues a run from a snapshot for `config.iterations` more iterations.
pub fn resume_loop(
    snapshot: Snapshot,
    mutator: &mut dyn Mutator,
    training: &TrainingSet,
    config: &EvolveConfig,
    log: &mut dyn Write,
) -> Result<EvolveResult, EvolveError> {
    if snapshot.islands.is_empty() {
        return Err(EvolveError::BadSnapshot("no elites".into()));
    }
    if snapshot.islands.len() != config.islands {
        return Err(EvolveError::BadSnapshot(format!(
            "{} islands, config says {}",
            snapshot.islands.len(),
            config.islands
        )));
    }
    let lp = Loop {
        mutator,
        training,
        config,
        log,
        counter: ExecutionCounter::default(),
        records: Vec::new(),
        trajectory: Vec::new(),
    };
    lp.run(snapshot.islands, snapshot.iteration, snapshot.next_id)
}

pub fn write_snapshot(path: &Path, snapshot: &Snapshot) -> Result<(), EvolveError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(snapshot)?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, EvolveError> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}
