use std::sync::Arc;

use crate::cost::{self, INFINITY};
use crate::graphs::{
    backward_goal_distances, next_operators, CausalGraph, DomainTransitionGraph, DtgDistanceTable,
};
use crate::heuristics::{EvalError, Heuristic, HeuristicValue};
use crate::task::{OpId, Task, Value, VarId};

/// Sum of DTG goal distances weighted by `1 + |causal predecessors|`, plus
/// the number of unmet preconditions of each goal's next on-path operator.
pub struct BlindMediumConf {
    task: Arc<Task>,
    goal_vars: Vec<VarId>,
    tables: Vec<DtgDistanceTable>,
    next: Vec<Vec<Option<OpId>>>,
    factor: Vec<u64>,
    work: u64,
}

impl BlindMediumConf {
    pub fn new(task: &Arc<Task>) -> Self {
        let cg = CausalGraph::build(task);
        let mut goal_vars = Vec::new();
        let mut tables = Vec::new();
        let mut next = Vec::new();
        let mut factor = Vec::new();
        let mut work = 0u64;
        for (var, value) in task.goal().iter() {
            let dtg = DomainTransitionGraph::build(task, var);
            work += dtg.edges().len() as u64 + dtg.domain_size() as u64;
            let table = backward_goal_distances(&dtg, value, None);
            next.push(next_operators(&dtg, &table, None));
            tables.push(table);
            goal_vars.push(var);
            factor.push(1 + cg.predecessors(var).len() as u64);
        }
        Self {
            task: task.clone(),
            goal_vars,
            tables,
            next,
            factor,
            work,
        }
    }

    pub fn compute(&mut self, state: &[Value]) -> u64 {
        let mut h = 0u64;
        for i in 0..self.goal_vars.len() {
            self.work += 1;
            let current = state[self.goal_vars[i]];
            let d = self.tables[i].get(current);
            if d == INFINITY {
                return INFINITY;
            }
            h = cost::add(h, d.saturating_mul(self.factor[i]).min(cost::MAX_FINITE));
            if let Some(op) = self.next[i][current as usize] {
                let unmet = self
                    .task
                    .operator(op)
                    .precondition
                    .iter()
                    .filter(|&(v, x)| state[v] != x)
                    .count();
                h = cost::add(h, unmet as u64);
            }
        }
        h
    }
}

impl Heuristic for BlindMediumConf {
    fn name(&self) -> &str {
        "evolved-blind-medium-conf"
    }

    fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError> {
        Ok(HeuristicValue::from_cost(self.compute(state)))
    }

    fn work(&self) -> u64 {
        self.work
    }
}
