#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use planevo::fitness::{TrainingSet, TrainingTask};
use planevo::generators;
use planevo::task::{self, Task};

/// Translator outputs shipped with the tests.
pub const TRANSLATED: [&str; 8] = [
    "gripper-p01",
    "gripper-p02",
    "blocks-p01",
    "blocks-p02",
    "logistics-p01",
    "logistics-p02",
    "oneway-p01",
    "oneway-p02",
];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.sas"))
}

pub fn fixture(name: &str) -> Task {
    task::parse_sas_file(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Translated fixtures plus the hand-written unsolvable one.
pub fn all_solvable_and_unsolvable() -> Vec<(String, Task)> {
    TRANSLATED
        .iter()
        .chain(["unsolvable-p01"].iter())
        .map(|n| (n.to_string(), fixture(n)))
        .collect()
}

/// Seconds charged per unit of search work in the desk-scale training set.
pub const DESK_SECONDS_PER_UNIT: f64 = 0.0015;

/// Twelve generated tasks in three domains. Blind solves the small ones
/// inside the 30 s floor and runs out of budget on the larger ones.
pub fn desk_training_tasks() -> Vec<(String, String, Option<PathBuf>, Arc<Task>)> {
    let mut out = Vec::new();
    let mut add = |domain: &str, name: String, t: Task| {
        out.push((domain.to_string(), name, None, Arc::new(t)));
    };
    for (l, tr, p) in [(3, 1, 2), (3, 1, 3), (4, 1, 3), (4, 2, 4)] {
        add(
            "logistics",
            format!("l{l}-t{tr}-p{p}"),
            generators::logistics(l, tr, p, 1),
        );
    }
    for b in [2, 4, 6, 8] {
        add("gripper", format!("b{b}"), generators::gripper(b));
    }
    for (w, s) in [(3, 2), (4, 3), (5, 4), (6, 5)] {
        add(
            "grid",
            format!("{w}x{w}-s{s}"),
            generators::grid_switches(w, w, s),
        );
    }
    out
}

pub fn training_from(tasks: &[(String, String, Arc<Task>, f64, u64)]) -> TrainingSet {
    TrainingSet::from_tasks(
        tasks
            .iter()
            .map(|(d, n, t, t_ff, e_ff)| TrainingTask {
                domain: d.clone(),
                name: n.clone(),
                path: None,
                task: t.clone(),
                t_ff: *t_ff,
                e_ff: *e_ff,
            })
            .collect(),
    )
}
