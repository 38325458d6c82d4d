use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use indexmap::IndexSet;
use thiserror::Error;

use crate::cost::{self, INFINITY};
use crate::task::{State, Task, Value};

pub const DEFAULT_ORACLE_CAP: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("reachable state space exceeds the cap of {cap} states")]
    CapExceeded { cap: usize },
}

/// Exact goal distance of every reachable state.
#[derive(Debug, Clone)]
pub struct OracleTable {
    states: IndexSet<State>,
    cost: Vec<u64>,
}

impl OracleTable {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// h* of `state`; `None` if the state is not reachable.
    pub fn get(&self, state: &[Value]) -> Option<u64> {
        self.states.get_index_of(state).map(|i| self.cost[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&State, u64)> + '_ {
        self.states.iter().zip(self.cost.iter().copied())
    }
}

/// Enumerates the reachable states (refusing more than `cap`) and runs a
/// uniform-cost search from all goal states over reversed transitions.
pub fn optimal_cost_oracle(task: &Task, cap: usize) -> Result<OracleTable, OracleError> {
    let mut states: IndexSet<State> = IndexSet::new();
    let mut preds: Vec<Vec<(u32, u64)>> = Vec::new();
    states.insert(task.initial_state().clone());
    preds.push(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    let mut ops = Vec::new();
    while let Some(i) = queue.pop_front() {
        let state = states[i].clone();
        task.applicable_operators_into(&state, &mut ops);
        for &op in &ops {
            let (j, fresh) = states.insert_full(task.apply_unchecked(&state, op));
            if fresh {
                if states.len() > cap {
                    return Err(OracleError::CapExceeded { cap });
                }
                preds.push(Vec::new());
                queue.push_back(j);
            }
            preds[j].push((i as u32, task.operator(op).cost));
        }
    }
    let mut cost = vec![INFINITY; states.len()];
    let mut heap = BinaryHeap::new();
    for (i, s) in states.iter().enumerate() {
        if task.is_goal(s) {
            cost[i] = 0;
            heap.push(Reverse((0u64, i)));
        }
    }
    while let Some(Reverse((d, i))) = heap.pop() {
        if d > cost[i] {
            continue;
        }
        for &(p, c) in &preds[i] {
            let nd = cost::add(d, c);
            if nd < cost[p as usize] {
                cost[p as usize] = nd;
                heap.push(Reverse((nd, p as usize)));
            }
        }
    }
    Ok(OracleTable { states, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    /// Forward uniform-cost search from one state.
    fn forward_ucs(task: &Task, start: &State) -> u64 {
        let mut best: std::collections::HashMap<State, u64> = Default::default();
        let mut heap = BinaryHeap::new();
        best.insert(start.clone(), 0);
        heap.push(Reverse((0u64, start.clone())));
        while let Some(Reverse((d, s))) = heap.pop() {
            if d > best[&s] {
                continue;
            }
            if task.is_goal(&s) {
                return d;
            }
            for op in task.applicable_operators(&s) {
                let t = task.apply_unchecked(&s, op);
                let nd = d + task.operator(op).cost;
                if best.get(&t).is_none_or(|&b| nd < b) {
                    best.insert(t.clone(), nd);
                    heap.push(Reverse((nd, t)));
                }
            }
        }
        INFINITY
    }

    #[test]
    fn flip_task_distances() {
        let t = optimal_cost_oracle(&generators::flip_task(), 10).unwrap();
        assert_eq!(t.get(&[0]), Some(1));
        assert_eq!(t.get(&[1]), Some(0));
    }

    #[test]
    fn unreachable_goal_is_infinite_everywhere() {
        let t = optimal_cost_oracle(&generators::unsolvable_task(), 10).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|(_, c)| c == INFINITY));
    }

    #[test]
    fn agrees_with_forward_search() {
        for task in [
            generators::logistics(3, 1, 2, 2),
            generators::dead_end_task(),
            generators::gripper(2),
        ] {
            let t = optimal_cost_oracle(&task, DEFAULT_ORACLE_CAP).unwrap();
            for (s, c) in t.iter() {
                assert_eq!(c, forward_ucs(&task, s), "state {s}");
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(
            optimal_cost_oracle(&generators::chain(20), 5).unwrap_err(),
            OracleError::CapExceeded { cap: 5 }
        );
    }
}
