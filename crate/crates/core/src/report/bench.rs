use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{MatrixRow, OutcomeMatrix};
use crate::heuristics::{self, BuildError, HeuristicFactory};
use crate::search::{self, Outcome, SearchLimits};
use crate::task::{self, Task};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub domain: String,
    /// Path as written in the manifest; used as the task label.
    pub task: String,
    /// Resolved against the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error(transparent)]
    Heuristic(#[from] BuildError),
    #[error("cache {path}: {source}")]
    Cache {
        path: String,
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Reads a suite manifest: one `domain path` pair per line, `#` comments
/// and blank lines ignored. Relative paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>, BenchError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(domain), Some(task), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(BenchError::Manifest {
                line: i + 1,
                msg: "expected `domain path`".into(),
            });
        };
        out.push(ManifestEntry {
            domain: domain.into(),
            task: task.into(),
            path: base.join(task),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub limits: SearchLimits,
    pub workers: usize,
    /// JSONL file of finished runs; existing entries are reused.
    pub cache: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            limits: SearchLimits::default(),
            workers: 1,
            cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub heuristic: String,
    pub domain: String,
    pub task: String,
    pub limits: SearchLimits,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: CacheKey,
    row: MatrixRow,
}

fn key_string(k: &CacheKey) -> String {
    serde_json::to_string(k).expect("cache key serializes")
}

fn load_cache(path: &Path) -> Result<HashMap<String, MatrixRow>, BenchError> {
    let mut out = HashMap::new();
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(source) => {
            return Err(BenchError::Cache {
                path: path.display().to_string(),
                source,
            })
        }
    };
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|source| BenchError::Cache {
            path: path.display().to_string(),
            source,
        })?;
        // a run killed mid-write leaves a torn last line; skip it
        if let Ok(c) = serde_json::from_str::<CacheLine>(&line) {
            out.insert(key_string(&c.key), c.row);
        }
    }
    Ok(out)
}

fn failure_row(h: &str, e: &ManifestEntry, detail: String) -> MatrixRow {
    MatrixRow {
        heuristic: h.into(),
        domain: e.domain.clone(),
        task: e.task.clone(),
        class: Outcome::Crash.into(),
        outcome: Outcome::Crash,
        wall_time: 0.0,
        evaluations: 0,
        expansions: 0,
        plan_cost: None,
        detail,
    }
}

fn run_one(
    label: &str,
    factory: &dyn HeuristicFactory,
    entry: &ManifestEntry,
    task: &Result<Arc<Task>, String>,
    limits: &SearchLimits,
) -> MatrixRow {
    let task = match task {
        Ok(t) => t,
        Err(e) => return failure_row(label, entry, format!("input error: {e}")),
    };
    let run = || search::solve(task, factory, limits);
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
        Ok(Ok(r)) => MatrixRow::from_result(label, &entry.domain, &entry.task, &r),
        Ok(Err(e)) => failure_row(label, entry, format!("build error: {e}")),
        Err(_) => failure_row(label, entry, "panic during search".into()),
    }
}

/// Summary of a bench invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BenchStats {
    pub ran: usize,
    pub cached: usize,
}

/// Runs every heuristic on every manifest task. Rows come out in
/// heuristic-major, manifest order regardless of worker count. Per-task
/// problems (unreadable file, build failure, panic) become CRASH rows.
pub fn run_bench(
    entries: &[ManifestEntry],
    heuristic_specs: &[String],
    config: &BenchConfig,
) -> Result<(OutcomeMatrix, BenchStats), BenchError> {
    let factories: Vec<(String, Arc<dyn HeuristicFactory>)> = heuristic_specs
        .iter()
        .map(|s| Ok((s.clone(), heuristics::resolve(s)?)))
        .collect::<Result<_, BenchError>>()?;
    let cached = match &config.cache {
        Some(p) => load_cache(p)?,
        None => HashMap::new(),
    };
    let sink = match &config.cache {
        Some(p) => Some(Mutex::new(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|source| BenchError::Cache {
                    path: p.display().to_string(),
                    source,
                })?,
        )),
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;

    let jobs: Vec<(usize, usize, CacheKey)> = factories
        .iter()
        .enumerate()
        .flat_map(|(hi, (label, _))| {
            entries.iter().enumerate().map(move |(ti, e)| {
                (
                    hi,
                    ti,
                    CacheKey {
                        heuristic: label.clone(),
                        domain: e.domain.clone(),
                        task: e.task.clone(),
                        limits: config.limits,
                    },
                )
            })
        })
        .collect();
    let needed: Vec<bool> = (0..entries.len())
        .map(|ti| {
            jobs.iter()
                .any(|(_, t, k)| *t == ti && !cached.contains_key(&key_string(k)))
        })
        .collect();
    let rows: Vec<(MatrixRow, bool)> = pool.install(|| {
        let tasks: Vec<Option<Result<Arc<Task>, String>>> = entries
            .par_iter()
            .zip(needed.par_iter())
            .map(|(e, need)| {
                need.then(|| {
                    task::parse_sas_file(&e.path)
                        .map(Arc::new)
                        .map_err(|err| err.to_string())
                })
            })
            .collect();
        jobs.par_iter()
            .map(|(hi, ti, key)| {
                if let Some(row) = cached.get(&key_string(key)) {
                    return (row.clone(), true);
                }
                let (label, factory) = &factories[*hi];
                let task = tasks[*ti].as_ref().expect("parsed when needed");
                let row = run_one(label, factory.as_ref(), &entries[*ti], task, &config.limits);
                if let Some(sink) = &sink {
                    let line = serde_json::to_string(&CacheLine {
                        key: key.clone(),
                        row: row.clone(),
                    })
                    .expect("cache line serializes");
                    let mut f = sink.lock().expect("cache lock");
                    let _ = writeln!(f, "{line}");
                }
                (row, false)
            })
            .collect()
    });
    let stats = BenchStats {
        ran: rows.iter().filter(|(_, c)| !c).count(),
        cached: rows.iter().filter(|(_, c)| *c).count(),
    };
    Ok((
        OutcomeMatrix::new(rows.into_iter().map(|(r, _)| r).collect()),
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn suite(dir: &Path) -> Vec<ManifestEntry> {
        let tasks = [
            ("logistics", "l1.sas", generators::logistics(3, 1, 2, 1)),
            ("gripper", "g1.sas", generators::gripper(2)),
            ("chain", "c1.sas", generators::chain(6)),
        ];
        let mut manifest = String::from("# demo suite\n\n");
        for (d, f, t) in &tasks {
            std::fs::write(dir.join(f), task::serialize_sas(t)).unwrap();
            manifest.push_str(&format!("{d} {f}  # comment\n"));
        }
        parse_manifest(&manifest, dir).unwrap()
    }

    #[test]
    fn manifest_parsing() {
        let m = parse_manifest("d a.sas\n# x\n  \nd2 sub/b.sas\n", Path::new("/base")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].path, Path::new("/base/sub/b.sas"));
        assert_eq!(m[1].task, "sub/b.sas");
        let err = parse_manifest("d\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, BenchError::Manifest { line: 1, .. }));
        assert!(parse_manifest("d a b\n", Path::new(".")).is_err());
    }

    #[test]
    fn matrix_shape_cache_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let entries = suite(dir.path());
        let hs = vec!["ff".to_string(), "blind".to_string()];
        let config = BenchConfig {
            limits: SearchLimits::new(60.0, 1 << 30),
            workers: 3,
            cache: Some(dir.path().join("cache.jsonl")),
        };
        let (m, stats) = run_bench(&entries, &hs, &config).unwrap();
        assert_eq!(m.rows.len(), 6);
        assert_eq!(stats, BenchStats { ran: 6, cached: 0 });
        m.validate().unwrap();
        let order: Vec<(&str, &str)> = m
            .rows
            .iter()
            .map(|r| (r.heuristic.as_str(), r.task.as_str()))
            .collect();
        assert_eq!(order[0], ("ff", "l1.sas"));
        assert_eq!(order[5], ("blind", "c1.sas"));
        assert!(m.rows.iter().all(|r| r.solved()));

        let mut first = Vec::new();
        m.write_csv(&mut first).unwrap();
        let (again, stats) = run_bench(&entries, &hs, &config).unwrap();
        assert_eq!(stats, BenchStats { ran: 0, cached: 6 });
        let mut second = Vec::new();
        again.write_csv(&mut second).unwrap();
        assert_eq!(
            String::from_utf8_lossy(&first),
            String::from_utf8_lossy(&second)
        );

        // different limits are a different key
        let other = BenchConfig {
            limits: SearchLimits::new(30.0, 1 << 30),
            ..config.clone()
        };
        assert_eq!(run_bench(&entries, &hs, &other).unwrap().1.ran, 6);
    }

    #[test]
    fn per_task_failures_are_rows() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("bad.sas"),
            "begin_version\n9\nend_version\n",
        )
        .unwrap();
        let entries = parse_manifest("d bad.sas\nd missing.sas\n", dir.path()).unwrap();
        let (m, _) = run_bench(&entries, &["ff".into()], &BenchConfig::default()).unwrap();
        assert_eq!(m.rows.len(), 2);
        for r in &m.rows {
            assert_eq!(r.outcome, Outcome::Crash);
            assert!(r.detail.starts_with("input error"), "{}", r.detail);
        }
        assert!(matches!(
            run_bench(&entries, &["lmcut".into()], &BenchConfig::default()),
            Err(BenchError::Heuristic(_))
        ));
    }
}
