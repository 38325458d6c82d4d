use std::sync::Arc;

use super::{EvalError, Heuristic, HeuristicValue};
use crate::task::{Task, Value};

/// 0 at goal states, the minimum positive operator cost elsewhere.
pub struct Blind {
    task: Arc<Task>,
    work: u64,
}

impl Blind {
    pub fn new(task: Arc<Task>) -> Self {
        Self { task, work: 0 }
    }

    pub fn value(&self, state: &[Value]) -> u64 {
        if self.task.is_goal(state) {
            0
        } else {
            self.task.min_positive_cost()
        }
    }
}

impl Heuristic for Blind {
    fn name(&self) -> &str {
        "blind"
    }

    fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError> {
        self.work += 1;
        Ok(HeuristicValue::Finite(self.value(state)))
    }

    fn work(&self) -> u64 {
        self.work
    }
}

/// Number of unsatisfied goal pairs.
pub struct GoalCount {
    task: Arc<Task>,
    work: u64,
}

impl GoalCount {
    pub fn new(task: Arc<Task>) -> Self {
        Self { task, work: 0 }
    }

    pub fn value(&self, state: &[Value]) -> u64 {
        self.task
            .goal()
            .iter()
            .filter(|&(var, value)| state[var] != value)
            .count() as u64
    }
}

impl Heuristic for GoalCount {
    fn name(&self) -> &str {
        "goalcount"
    }

    fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError> {
        self.work += 1 + self.task.goal().len() as u64;
        Ok(HeuristicValue::Finite(self.value(state)))
    }

    fn work(&self) -> u64 {
        self.work
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::task::{Operator, PartialAssignment, State, Variable};

    fn costs_task(costs: &[u64], goal: Vec<(usize, Value)>, vars: usize) -> Arc<Task> {
        let ops = costs
            .iter()
            .enumerate()
            .map(|(i, &cost)| Operator {
                name: format!("o{i}"),
                precondition: PartialAssignment::empty(),
                effect: PartialAssignment::new(vec![(i % vars, 1)]).unwrap(),
                cost,
            })
            .collect();
        Arc::new(
            Task::new(
                (0..vars)
                    .map(|i| Variable::anonymous(format!("v{i}"), 2))
                    .collect(),
                ops,
                State::new(vec![0; vars]),
                PartialAssignment::new(goal).unwrap(),
                true,
            )
            .unwrap(),
        )
    }

    #[test]
    fn blind_values() {
        let task = costs_task(&[2, 5], vec![(0, 1)], 2);
        let mut h = Blind::new(task);
        assert_eq!(h.evaluate(&[1, 0]).unwrap(), HeuristicValue::Finite(0));
        assert_eq!(h.evaluate(&[0, 0]).unwrap(), HeuristicValue::Finite(2));

        let zero = costs_task(&[0, 0], vec![(0, 1)], 2);
        assert_eq!(
            Blind::new(zero).evaluate(&[0, 0]).unwrap(),
            HeuristicValue::Finite(1)
        );
    }

    #[test]
    fn goalcount_values() {
        let task = costs_task(&[1, 1, 1], vec![(0, 1), (1, 1), (2, 1)], 3);
        let mut h = GoalCount::new(task);
        assert_eq!(h.evaluate(&[1, 1, 1]).unwrap(), HeuristicValue::Finite(0));
        assert_eq!(h.evaluate(&[1, 0, 0]).unwrap(), HeuristicValue::Finite(2));

        let empty = costs_task(&[1], vec![], 1);
        let mut h = GoalCount::new(empty);
        assert_eq!(h.evaluate(&[0]).unwrap(), HeuristicValue::Finite(0));
        assert_eq!(h.evaluate(&[1]).unwrap(), HeuristicValue::Finite(0));
    }

    #[test]
    fn flip_task_blind() {
        let task = Arc::new(generators::flip_task());
        let mut h = Blind::new(task);
        assert_eq!(h.evaluate(&[0]).unwrap(), HeuristicValue::Finite(1));
        assert_eq!(h.evaluate(&[1]).unwrap(), HeuristicValue::Finite(0));
    }
}
