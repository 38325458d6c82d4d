//! SAS+ planning with greedy best-first search, delete-relaxation and
//! DTG-based heuristics, and a MAP-Elites loop for evolving heuristics.

pub mod clock;
pub mod cost;
pub mod fitness;
pub mod generators;
pub mod graphs;
pub mod heuristics;
pub mod llm;
pub mod qd;
pub mod report;
pub mod search;
pub mod task;

pub use heuristics::{Heuristic, HeuristicFactory, HeuristicKind, HeuristicValue};
pub use search::{gbfs, solve, Outcome, SearchLimits, SearchResult};
pub use task::{OpId, Operator, PartialAssignment, State, Task, Value, VarId, Variable};
