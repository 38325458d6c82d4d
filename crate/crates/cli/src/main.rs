mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use planevo::clock::Clock;
use planevo::fitness::TrainingSet;
use planevo::heuristics::{self, BuildError};
use planevo::llm::{EnvCredentials, HttpTransport, LlmMutator};
use planevo::qd::{self, Genome, IdentityMutator, Mutator, ParametricMutator};
use planevo::report::{self, OutcomeMatrix};
use planevo::search::{self, Outcome, SearchLimits};
use planevo::task;

use config::{EvolveFile, MutatorKind};

/// Failure with its exit status: 1 usage, 2 input, 3 internal.
#[derive(Debug)]
enum CliError {
    Usage(anyhow::Error),
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            CliError::Usage(e) | CliError::Input(e) | CliError::Internal(e) => e,
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

fn input(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Input(e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Internal(e.into())
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "planevo",
    version,
    about = "Greedy best-first planning with built-in and evolved heuristics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct LimitArgs {
    /// Time limit per search in seconds.
    #[arg(long, default_value_t = 1800.0)]
    time_limit: f64,
    /// Memory limit per search in MiB.
    #[arg(long, default_value_t = 8192)]
    memory_limit_mb: u64,
    /// Charge this many seconds per unit of search work instead of reading
    /// the wall clock.
    #[arg(long)]
    virtual_clock: Option<f64>,
}

impl LimitArgs {
    fn limits(&self) -> CliResult<SearchLimits> {
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) || self.memory_limit_mb == 0 {
            return Err(usage(anyhow!("limits must be positive")));
        }
        let clock = match self.virtual_clock {
            None => Clock::Wall,
            Some(s) if s > 0.0 && s.is_finite() => Clock::Virtual {
                seconds_per_unit: s,
            },
            Some(s) => return Err(usage(anyhow!("--virtual-clock must be positive, got {s}"))),
        };
        Ok(SearchLimits::new(self.time_limit, self.memory_limit_mb << 20).with_clock(clock))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one task and write its plan.
    Solve {
        /// Task in translator output format.
        task: PathBuf,
        /// Built-in heuristic name or `file:<definition>`.
        #[arg(long, short = 'H', default_value = "ff")]
        heuristic: String,
        #[command(flatten)]
        limits: LimitArgs,
        /// Where to write the plan.
        #[arg(long, default_value = "sas_plan")]
        plan_file: PathBuf,
        /// Print statistics as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run heuristics over a suite and write the outcome matrix as CSV.
    Bench {
        /// Suite manifest, one `domain path` per line.
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated heuristic names or `file:` definitions.
        #[arg(long, value_delimiter = ',', required = true)]
        heuristics: Vec<String>,
        #[command(flatten)]
        limits: LimitArgs,
        /// Output CSV (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSONL cache of finished runs, reused on rerun.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run FF over a manifest and write the calibration CSV used for
    /// training budgets.
    Calibrate {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve heuristics as configured in a TOML file.
    Evolve {
        config: PathBuf,
        /// Output directory for the run log, snapshot and best genome.
        #[arg(long, default_value = "evolve-out")]
        out_dir: PathBuf,
    },
    /// Solve times per heuristic with cumulative counts.
    ReportCactus(ReportArgs),
    /// FF-normalized informedness and speed.
    ReportPareto(ReportArgs),
    /// Jaccard similarity and domination shares between solved sets.
    ReportSimilarity {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        jaccard_out: PathBuf,
        #[arg(long)]
        domination_out: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Outcome matrix CSV from `bench`.
    #[arg(long)]
    matrix: PathBuf,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .map_err(input)?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_matrix(path: &Path) -> CliResult<OutcomeMatrix> {
    let f = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(input)?;
    let m = OutcomeMatrix::read_csv(f)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)?;
    m.validate().map_err(input)?;
    Ok(m)
}

fn resolve_heuristic(spec: &str) -> CliResult<Arc<dyn heuristics::HeuristicFactory>> {
    heuristics::resolve(spec).map_err(|e| match e {
        BuildError::Unknown(_) => usage(e),
        other => input(other),
    })
}

fn load_task(path: &Path) -> CliResult<task::Task> {
    if !path.is_file() {
        return Err(usage(anyhow!("no such task file: {}", path.display())));
    }
    task::parse_sas_file(path)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(input)
}

fn cmd_solve(
    path: &Path,
    spec: &str,
    limits: &LimitArgs,
    plan_file: &Path,
    json: bool,
) -> CliResult {
    let limits = limits.limits()?;
    let factory = resolve_heuristic(spec)?;
    let task = Arc::new(load_task(path)?);
    let r = search::solve(&task, factory.as_ref(), &limits).map_err(input)?;
    if let Some(plan) = &r.plan {
        let cost = search::validate_plan(&task, plan)
            .context("search returned an invalid plan")
            .map_err(internal)?;
        debug_assert_eq!(cost, r.plan_cost);
        let f = File::create(plan_file)
            .with_context(|| format!("creating {}", plan_file.display()))
            .map_err(input)?;
        search::write_plan(&task, plan, BufWriter::new(f)).map_err(input)?;
    }
    let verdict = match r.outcome {
        Outcome::Solved => "solved",
        Outcome::Unsolvable => "proven unsolvable",
        Outcome::OutOfTime => "out of time",
        Outcome::OutOfMemory => "out of memory",
        Outcome::DeadEndFalse => "false dead end",
        Outcome::Crash => "crashed",
    };
    if json {
        let v = serde_json::json!({
            "outcome": r.outcome,
            "verdict": verdict,
            "time": r.wall_time,
            "evaluations": r.evaluations,
            "expansions": r.expansions,
            "generated": r.generated,
            "cost": r.plan.as_ref().map(|_| r.plan_cost),
            "plan_length": r.plan.as_ref().map(Vec::len),
            "detail": r.detail,
        });
        println!("{v}");
    } else {
        let cost = r
            .plan
            .as_ref()
            .map_or("-".to_string(), |_| r.plan_cost.to_string());
        let mut line = format!(
            "outcome={} time={:.6} evaluations={} expansions={} generated={} cost={}",
            r.outcome, r.wall_time, r.evaluations, r.expansions, r.generated, cost
        );
        if let Some(d) = &r.detail {
            line.push_str(&format!(" detail=\"{d}\""));
        }
        println!("{line}");
        eprintln!("{verdict}");
    }
    if r.outcome == Outcome::Crash {
        return Err(internal(anyhow!(
            "search crashed: {}",
            r.detail.unwrap_or_default()
        )));
    }
    Ok(())
}

fn read_manifest(path: &Path) -> CliResult<Vec<report::ManifestEntry>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    let base = path.parent().unwrap_or(Path::new("."));
    report::parse_manifest(&text, base).map_err(input)
}

fn cmd_bench(
    manifest: &Path,
    heuristic_specs: &[String],
    limits: &LimitArgs,
    out: Option<&Path>,
    cache: Option<&Path>,
    workers: usize,
) -> CliResult {
    let limits = limits.limits()?;
    for h in heuristic_specs {
        resolve_heuristic(h)?;
    }
    let entries = read_manifest(manifest)?;
    let config = report::BenchConfig {
        limits,
        workers,
        cache: cache.map(Path::to_path_buf),
    };
    let (m, stats) = report::run_bench(&entries, heuristic_specs, &config).map_err(input)?;
    eprintln!(
        "{} runs, {} from cache, {} rows",
        stats.ran + stats.cached,
        stats.cached,
        m.rows.len()
    );
    m.write_csv(open_out(out)?).map_err(input)?;
    Ok(())
}

fn candidates(entries: &[report::ManifestEntry]) -> CliResult<Vec<planevo::fitness::Candidate>> {
    entries
        .iter()
        .map(|e| {
            let t = task::parse_sas_file(&e.path)
                .with_context(|| format!("parsing {}", e.path.display()))
                .map_err(input)?;
            let path = e.path.canonicalize().unwrap_or_else(|_| e.path.clone());
            Ok((e.domain.clone(), e.task.clone(), Some(path), Arc::new(t)))
        })
        .collect()
}

fn cmd_calibrate(manifest: &Path, limits: &LimitArgs, out: &Path) -> CliResult {
    let limits = limits.limits()?;
    let entries = read_manifest(manifest)?;
    let (set, dropped) = TrainingSet::calibrate(candidates(&entries)?, &limits);
    for d in &dropped {
        eprintln!("dropped {d}: FF did not solve it");
    }
    set.write_calibration(open_out(Some(out))?).map_err(input)?;
    eprintln!("{} tasks calibrated", set.len());
    Ok(())
}

fn cmd_evolve(config_path: &Path, out_dir: &Path) -> CliResult {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))
        .map_err(usage)?;
    let mut file: EvolveFile = toml::from_str(&text)
        .with_context(|| format!("parsing {}", config_path.display()))
        .map_err(input)?;
    file.resolve_paths(config_path.parent().unwrap_or(Path::new(".")));
    let errs = file.validate();
    if !errs.is_empty() {
        return Err(input(anyhow!("invalid config:\n  {}", errs.join("\n  "))));
    }
    let mut mutator: Box<dyn Mutator> = match file.mutator {
        MutatorKind::Identity => Box::new(IdentityMutator),
        MutatorKind::Parametric => Box::new(ParametricMutator::new(
            file.mutation.sigma,
            file.mutation.crossover_rate,
        )),
        MutatorKind::Llm => {
            let llm = file.llm.as_ref().expect("validated");
            Box::new(LlmMutator::new(llm, Arc::new(HttpTransport), &EnvCredentials).map_err(input)?)
        }
    };
    let seed = match Genome::seed(&file.seed) {
        Some(g) => g,
        None => Genome::Source(
            std::fs::read_to_string(&file.seed)
                .with_context(|| format!("reading seed {}", file.seed))
                .map_err(input)?,
        ),
    };
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .map_err(input)?;

    let training = match (&file.training.calibration, &file.training.manifest) {
        (Some(cal), _) => {
            let f = File::open(cal).map_err(input)?;
            TrainingSet::read_calibration(f, cal.parent().unwrap_or(Path::new(".")))
                .map_err(input)?
        }
        (None, Some(manifest)) => {
            let entries = read_manifest(manifest)?;
            let limits = SearchLimits::new(
                file.training.calibration_time_limit,
                file.training.memory_limit_mb << 20,
            )
            .with_clock(file.clock());
            let (set, dropped) = TrainingSet::calibrate(candidates(&entries)?, &limits);
            for d in &dropped {
                eprintln!("dropped {d}: FF did not solve it");
            }
            set.write_calibration(open_out(Some(&out_dir.join("calibration.csv")))?)
                .map_err(input)?;
            set
        }
        (None, None) => unreachable!("validated"),
    };
    if training.is_empty() {
        return Err(input(anyhow!("training set is empty")));
    }
    eprintln!(
        "training on {} tasks in {} domains",
        training.len(),
        training.domains.len()
    );

    let config = file.evolve_config(out_dir.join("snapshot.json"));
    let log_path = out_dir.join("run_log.jsonl");
    let mut log = BufWriter::new(
        std::fs::OpenOptions::new()
            .create(true)
            .append(file.resume.is_some())
            .write(true)
            .truncate(file.resume.is_none())
            .open(&log_path)
            .with_context(|| format!("opening {}", log_path.display()))
            .map_err(input)?,
    );
    let result = match &file.resume {
        Some(p) => {
            let snap = qd::read_snapshot(p).map_err(input)?;
            qd::resume_loop(snap, mutator.as_mut(), &training, &config, &mut log)
        }
        None => qd::evolve_loop(&seed, mutator.as_mut(), &training, &config, &mut log),
    }
    .map_err(|e| match e {
        qd::EvolveError::SeedFailed(_) | qd::EvolveError::BadSnapshot(_) => input(e),
        other => internal(other),
    })?;
    log.flush().map_err(internal)?;

    let best = &result.best;
    std::fs::write(out_dir.join("best.h"), best.genome.to_source()).map_err(internal)?;
    std::fs::write(
        out_dir.join("histogram.json"),
        serde_json::to_vec_pretty(&result.histogram).map_err(internal)?,
    )
    .map_err(internal)?;
    let cells: usize = result.islands.islands().iter().map(|a| a.len()).sum();
    println!(
        "best id={} score={:.6} evals={:.4} speed={:.1} cells={} searches={}",
        best.id, best.score, best.features[0], best.features[1], cells, result.searches
    );
    println!(
        "best genome written to {}",
        out_dir.join("best.h").display()
    );
    Ok(())
}

fn write_json(v: &impl serde::Serialize, out: Option<&Path>) -> CliResult {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(internal)?;
    writeln!(w).map_err(input)?;
    Ok(())
}

fn cmd_cactus(a: &ReportArgs) -> CliResult {
    let rows = report::cactus(&read_matrix(&a.matrix)?);
    if a.json {
        return write_json(&rows, a.out.as_deref());
    }
    report::write_cactus_csv(&rows, open_out(a.out.as_deref())?).map_err(input)
}

fn cmd_pareto(a: &ReportArgs) -> CliResult {
    let rep = report::pareto(&read_matrix(&a.matrix)?).map_err(input)?;
    if let Some(w) = &rep.warning {
        eprintln!("warning: {w}");
    }
    if !rep.excluded.is_empty() {
        eprintln!(
            "below one third coverage, left out: {}",
            rep.excluded.join(", ")
        );
    }
    if a.json {
        return write_json(&rep, a.out.as_deref());
    }
    rep.write_csv(open_out(a.out.as_deref())?).map_err(input)
}

fn cmd_similarity(matrix: &Path, jaccard: &Path, domination: &Path, json: bool) -> CliResult {
    let rep = report::similarity(&read_matrix(matrix)?);
    if json {
        write_json(
            &serde_json::json!({"heuristics": rep.heuristics, "jaccard": rep.jaccard}),
            Some(jaccard),
        )?;
        return write_json(
            &serde_json::json!({"heuristics": rep.heuristics, "domination": rep.domination}),
            Some(domination),
        );
    }
    rep.write_jaccard_csv(open_out(Some(jaccard))?)
        .map_err(input)?;
    rep.write_domination_csv(open_out(Some(domination))?)
        .map_err(input)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Solve {
            task,
            heuristic,
            limits,
            plan_file,
            json,
        } => cmd_solve(&task, &heuristic, &limits, &plan_file, json),
        Command::Bench {
            manifest,
            heuristics,
            limits,
            out,
            cache,
            workers,
        } => cmd_bench(
            &manifest,
            &heuristics,
            &limits,
            out.as_deref(),
            cache.as_deref(),
            workers,
        ),
        Command::Calibrate {
            manifest,
            limits,
            out,
        } => cmd_calibrate(&manifest, &limits, &out),
        Command::Evolve { config, out_dir } => cmd_evolve(&config, &out_dir),
        Command::ReportCactus(a) => cmd_cactus(&a),
        Command::ReportPareto(a) => cmd_pareto(&a),
        Command::ReportSimilarity {
            matrix,
            jaccard_out,
            domination_out,
            json,
        } => cmd_similarity(&matrix, &jaccard_out, &domination_out, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error());
            ExitCode::from(e.code())
        }
    }
}
