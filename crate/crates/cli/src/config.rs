use std::path::{Path, PathBuf};

use planevo::clock::Clock;
use planevo::fitness::{BudgetPolicy, EvalConfig, DEFAULT_ALPHA};
use planevo::llm::LlmConfig;
use planevo::qd::{EvolveConfig, Genome};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutatorKind {
    Identity,
    Parametric,
    Llm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    /// Suite manifest; tasks are calibrated with FF before the run.
    pub manifest: Option<PathBuf>,
    /// Existing calibration CSV; skips calibration.
    pub calibration: Option<PathBuf>,
    pub calibration_time_limit: f64,
    pub memory_limit_mb: u64,
    /// Seconds per work unit; wall-clock timing when absent.
    pub virtual_seconds_per_unit: Option<f64>,
    pub budget_floor: f64,
    pub budget_factor: f64,
    pub parallel: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let b = BudgetPolicy::default();
        Self {
            manifest: None,
            calibration: None,
            calibration_time_limit: 1800.0,
            memory_limit_mb: 8192,
            virtual_seconds_per_unit: None,
            budget_floor: b.floor_s,
            budget_factor: b.factor,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationSection {
    pub sigma: f64,
    pub crossover_rate: f64,
}

impl Default for MutationSection {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            crossover_rate: 0.2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveFile {
    /// `blind`, `ff`, or a path to a definition file.
    pub seed: String,
    pub mutator: MutatorKind,
    pub iterations: u64,
    pub random_seed: u64,
    pub grid: [usize; 2],
    pub islands: usize,
    pub migration_interval: u64,
    pub repair_budget: u32,
    pub alpha: f64,
    pub inspirations: usize,
    pub snapshot_every: u64,
    pub resume: Option<PathBuf>,
    pub build_command: Option<Vec<String>>,
    pub training: TrainingSection,
    pub mutation: MutationSection,
    pub llm: Option<LlmConfig>,
}

impl Default for EvolveFile {
    fn default() -> Self {
        let d = EvolveConfig::default();
        Self {
            seed: "blind".into(),
            mutator: MutatorKind::Parametric,
            iterations: d.iterations,
            random_seed: d.seed,
            grid: d.grid,
            islands: d.islands,
            migration_interval: d.migration_interval,
            repair_budget: d.repair_budget,
            alpha: DEFAULT_ALPHA,
            inspirations: d.inspirations,
            snapshot_every: 0,
            resume: None,
            build_command: None,
            training: TrainingSection::default(),
            mutation: MutationSection::default(),
            llm: None,
        }
    }
}

impl EvolveFile {
    /// Makes relative paths relative to the config file's directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.training.manifest);
        fix(&mut self.training.calibration);
        fix(&mut self.resume);
        if let Some(llm) = &mut self.llm {
            fix(&mut llm.templates_dir);
        }
        if Genome::seed(&self.seed).is_none() && Path::new(&self.seed).is_relative() {
            self.seed = base.join(&self.seed).display().to_string();
        }
    }

    /// Every problem with the config, so they can be reported at once.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        check(
            self.grid[0] > 0 && self.grid[1] > 0,
            format!("grid must be positive, got {:?}", self.grid),
        );
        check(self.islands > 0, "islands must be at least 1".into());
        check(
            self.migration_interval > 0,
            "migration_interval must be at least 1".into(),
        );
        check(
            (0.0..=1.0).contains(&self.alpha),
            format!("alpha must lie in [0, 1], got {}", self.alpha),
        );
        let seed_builtin = Genome::seed(&self.seed).is_some();
        check(
            seed_builtin || Path::new(&self.seed).is_file(),
            format!(
                "seed `{}` is neither blind, ff nor a readable file",
                self.seed
            ),
        );
        check(
            !(self.mutator == MutatorKind::Parametric && !seed_builtin),
            "the parametric mutator needs seed = \"blind\" or \"ff\"".into(),
        );
        check(
            self.mutation.sigma > 0.0 && self.mutation.sigma.is_finite(),
            format!(
                "mutation.sigma must be positive, got {}",
                self.mutation.sigma
            ),
        );
        check(
            (0.0..=1.0).contains(&self.mutation.crossover_rate),
            format!(
                "mutation.crossover_rate must lie in [0, 1], got {}",
                self.mutation.crossover_rate
            ),
        );
        let t = &self.training;
        check(
            t.manifest.is_some() != t.calibration.is_some(),
            "give exactly one of training.manifest and training.calibration".into(),
        );
        for p in [&t.manifest, &t.calibration, &self.resume]
            .into_iter()
            .flatten()
        {
            check(p.is_file(), format!("{} does not exist", p.display()));
        }
        check(
            t.calibration_time_limit > 0.0,
            "training.calibration_time_limit must be positive".into(),
        );
        check(
            t.memory_limit_mb > 0,
            "training.memory_limit_mb must be positive".into(),
        );
        check(
            t.virtual_seconds_per_unit
                .is_none_or(|s| s > 0.0 && s.is_finite()),
            "training.virtual_seconds_per_unit must be positive".into(),
        );
        check(
            t.budget_floor > 0.0 && t.budget_factor > 0.0,
            "training budget floor and factor must be positive".into(),
        );
        check(
            (self.mutator == MutatorKind::Llm) == self.llm.is_some(),
            "an [llm] section is required with mutator = \"llm\" and only then".into(),
        );
        if let Some(cmd) = &self.build_command {
            check(!cmd.is_empty(), "build_command must not be empty".into());
        }
        errs
    }

    pub fn clock(&self) -> Clock {
        match self.training.virtual_seconds_per_unit {
            Some(seconds_per_unit) => Clock::Virtual { seconds_per_unit },
            None => Clock::Wall,
        }
    }

    pub fn evolve_config(&self, snapshot_path: PathBuf) -> EvolveConfig {
        EvolveConfig {
            grid: self.grid,
            islands: self.islands,
            migration_interval: self.migration_interval,
            repair_budget: self.repair_budget,
            iterations: self.iterations,
            seed: self.random_seed,
            inspirations: self.inspirations,
            eval: EvalConfig {
                alpha: self.alpha,
                memory_limit: self.training.memory_limit_mb << 20,
                clock: self.clock(),
                budget: BudgetPolicy {
                    floor_s: self.training.budget_floor,
                    factor: self.training.budget_factor,
                },
                parallel: self.training.parallel,
            },
            build_command: self.build_command.clone(),
            snapshot_every: self.snapshot_every,
            snapshot_path: Some(snapshot_path),
        }
    }
}
