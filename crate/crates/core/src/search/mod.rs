//! Eager greedy best-first search with resource accounting.

mod oracle;
mod plan;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::heuristics::{BuildError, Heuristic, HeuristicFactory, HeuristicValue};
use crate::task::{OpId, State, Task};

pub use oracle::{optimal_cost_oracle, OracleError, OracleTable, DEFAULT_ORACLE_CAP};
pub use plan::{format_plan, validate_plan, write_plan, PlanError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Solved,
    OutOfTime,
    OutOfMemory,
    /// The heuristic declared a solvable state a dead end (set post hoc by
    /// harnesses that know the task is solvable).
    DeadEndFalse,
    Crash,
    /// The open list ran empty: no plan exists, assuming the heuristic's
    /// dead ends are genuine.
    Unsolvable,
}

impl Outcome {
    pub const ALL: [Outcome; 6] = [
        Self::Solved,
        Self::OutOfTime,
        Self::OutOfMemory,
        Self::DeadEndFalse,
        Self::Crash,
        Self::Unsolvable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Solved => "SOLVED",
            Self::OutOfTime => "OUT_OF_TIME",
            Self::OutOfMemory => "OUT_OF_MEMORY",
            Self::DeadEndFalse => "DEAD_END_FALSE",
            Self::Crash => "CRASH",
            Self::Unsolvable => "UNSOLVABLE",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("unknown outcome `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchLimits {
    /// Seconds.
    pub time_limit: f64,
    /// Bytes.
    pub memory_limit: u64,
    #[serde(default)]
    pub clock: Clock,
}

impl SearchLimits {
    pub fn new(time_limit: f64, memory_limit: u64) -> Self {
        assert!(
            time_limit > 0.0 && memory_limit > 0,
            "limits must be positive"
        );
        Self {
            time_limit,
            memory_limit,
            clock: Clock::Wall,
        }
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }
}

impl Default for SearchLimits {
    /// 1800 s and 8 GiB.
    fn default() -> Self {
        Self::new(1800.0, 8 << 30)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub plan: Option<Vec<OpId>>,
    pub plan_cost: u64,
    pub evaluations: u64,
    pub expansions: u64,
    pub generated: u64,
    /// Seconds, heuristic setup included when run through [`solve`].
    pub wall_time: f64,
    /// Estimated peak bytes held by the search's own structures.
    pub peak_memory: u64,
    /// Units of counted work; the basis of the virtual clock.
    pub work_units: u64,
    /// Diagnostic for crashes and unsolvable verdicts.
    pub detail: Option<String>,
}

impl SearchResult {
    fn empty(outcome: Outcome) -> Self {
        Self {
            outcome,
            plan: None,
            plan_cost: 0,
            evaluations: 0,
            expansions: 0,
            generated: 0,
            wall_time: 0.0,
            peak_memory: 0,
            work_units: 0,
            detail: None,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.outcome == Outcome::Solved
    }
}

/// Builds the heuristic from `factory` and runs [`gbfs`], charging setup to
/// the search's time.
pub fn solve(
    task: &Arc<Task>,
    factory: &dyn HeuristicFactory,
    limits: &SearchLimits,
) -> Result<SearchResult, BuildError> {
    let watch = limits.clock.start();
    let mut heuristic = factory.build(task)?;
    let setup_time = watch.elapsed(heuristic.work());
    Ok(gbfs_with_offset(
        task,
        heuristic.as_mut(),
        limits,
        setup_time,
    ))
}

/// Eager greedy best-first search. Successors are evaluated once, when first
/// generated; ties on h are broken first-in first-out; the goal test happens
/// on expansion; dead-end states are never queued.
pub fn gbfs(task: &Task, heuristic: &mut dyn Heuristic, limits: &SearchLimits) -> SearchResult {
    gbfs_with_offset(task, heuristic, limits, 0.0)
}

const NO_PARENT: u32 = u32::MAX;
/// Per-entry overheads used by the memory estimate.
const STATE_OVERHEAD: u64 = 48;
const OPEN_ENTRY: u64 = 24;
const NODE_INFO: u64 = 16;

fn gbfs_with_offset(
    task: &Task,
    heuristic: &mut dyn Heuristic,
    limits: &SearchLimits,
    offset: f64,
) -> SearchResult {
    let watch = limits.clock.start();
    let state_bytes = task.num_variables() as u64 * 4 + STATE_OVERHEAD;

    let mut res = SearchResult::empty(Outcome::Unsolvable);
    let mut registry: IndexSet<State> = IndexSet::new();
    // parent index and creating operator, per registered state
    let mut parents: Vec<(u32, u32)> = Vec::new();
    let mut closed: Vec<bool> = Vec::new();
    let mut open: BinaryHeap<Reverse<(HeuristicValue, u64, u32)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut applicable = Vec::new();

    let units = |res: &SearchResult, h: &dyn Heuristic| res.generated + res.evaluations + h.work();
    let memory = |states: usize, open_len: usize| {
        states as u64 * (state_bytes + NODE_INFO + 1) + open_len as u64 * OPEN_ENTRY
    };
    let finish = |mut res: SearchResult, h: &dyn Heuristic, outcome: Outcome| {
        res.outcome = outcome;
        res.work_units = units(&res, h);
        res.wall_time = offset + watch.elapsed(res.work_units);
        res
    };

    let init = task.initial_state().clone();
    let h0 = match heuristic.evaluate(&init) {
        Ok(h) => h,
        Err(e) => {
            res.evaluations = 1;
            res.detail = Some(e.0);
            return finish(res, heuristic, Outcome::Crash);
        }
    };
    res.evaluations = 1;
    registry.insert(init);
    parents.push((NO_PARENT, 0));
    closed.push(false);
    if h0.is_dead_end() {
        res.detail = Some("dead end at initial state".into());
        return finish(res, heuristic, Outcome::Unsolvable);
    }
    open.push(Reverse((h0, seq, 0)));
    seq += 1;
    res.peak_memory = memory(registry.len(), open.len());

    while let Some(Reverse((_, _, id))) = open.pop() {
        let id = id as usize;
        if closed[id] {
            continue;
        }
        closed[id] = true;
        if task.is_goal(&registry[id]) {
            let plan = trace_plan(&parents, id);
            res.plan_cost = task.plan_cost(&plan);
            res.plan = Some(plan);
            return finish(res, heuristic, Outcome::Solved);
        }
        res.expansions += 1;
        let state = registry[id].clone();
        task.applicable_operators_into(&state, &mut applicable);
        for &op in &applicable {
            let succ = task.apply_unchecked(&state, op);
            res.generated += 1;
            if registry.contains(&succ) {
                continue;
            }
            let h = heuristic.evaluate(&succ);
            res.evaluations += 1;
            let (succ_id, _) = registry.insert_full(succ);
            parents.push((id as u32, op as u32));
            closed.push(false);
            match h {
                Err(e) => {
                    res.detail = Some(e.0);
                    return finish(res, heuristic, Outcome::Crash);
                }
                Ok(HeuristicValue::DeadEnd) => closed[succ_id] = true,
                Ok(h) => {
                    open.push(Reverse((h, seq, succ_id as u32)));
                    seq += 1;
                }
            }
            if offset + watch.elapsed(units(&res, heuristic)) > limits.time_limit {
                return finish(res, heuristic, Outcome::OutOfTime);
            }
        }
        let mem = memory(registry.len(), open.len());
        res.peak_memory = res.peak_memory.max(mem);
        if mem > limits.memory_limit {
            return finish(res, heuristic, Outcome::OutOfMemory);
        }
        if offset + watch.elapsed(units(&res, heuristic)) > limits.time_limit {
            return finish(res, heuristic, Outcome::OutOfTime);
        }
    }
    res.detail = Some("search space exhausted".into());
    finish(res, heuristic, Outcome::Unsolvable)
}

fn trace_plan(parents: &[(u32, u32)], mut id: usize) -> Vec<OpId> {
    let mut plan = Vec::new();
    while parents[id].0 != NO_PARENT {
        plan.push(parents[id].1 as OpId);
        id = parents[id].0 as usize;
    }
    plan.reverse();
    plan
}
