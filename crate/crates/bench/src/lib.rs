//! Shared workloads for the criterion benches.

use std::sync::Arc;

use planevo::generators;
use planevo::{State, Task};

/// A named task together with a sample of its reachable states.
pub struct Workload {
    pub name: &'static str,
    pub task: Arc<Task>,
    pub states: Vec<State>,
}

pub fn workloads(states_per_task: usize) -> Vec<Workload> {
    [
        ("logistics-4x2x4", generators::logistics(4, 2, 4, 2)),
        ("gripper-6", generators::gripper(6)),
        ("grid-5x5-4", generators::grid_switches(5, 5, 4)),
    ]
    .into_iter()
    .map(|(name, task)| {
        let states = generators::reachable_states(&task, states_per_task);
        Workload {
            name,
            task: Arc::new(task),
            states,
        }
    })
    .collect()
}
