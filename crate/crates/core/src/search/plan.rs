use std::io::{self, Write};

use thiserror::Error;

use crate::task::{OpId, Task};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("step {step}: unknown operator {op}")]
    UnknownOperator { step: usize, op: OpId },
    #[error("step {step}: operator `{name}` is not applicable")]
    NotApplicable { step: usize, name: String },
    #[error("final state does not satisfy the goal")]
    GoalNotReached,
}

/// Checks that `plan` is executable from the initial state and ends in a
/// goal state. Returns the plan cost. Steps are numbered from 1.
pub fn validate_plan(task: &Task, plan: &[OpId]) -> Result<u64, PlanError> {
    let mut state = task.initial_state().clone();
    for (i, &op) in plan.iter().enumerate() {
        let step = i + 1;
        if op >= task.num_operators() {
            return Err(PlanError::UnknownOperator { step, op });
        }
        if !task.is_applicable(&state, op) {
            return Err(PlanError::NotApplicable {
                step,
                name: task.operator(op).name.clone(),
            });
        }
        state = task.apply_unchecked(&state, op);
    }
    if !task.is_goal(&state) {
        return Err(PlanError::GoalNotReached);
    }
    Ok(task.plan_cost(plan))
}

/// Plan text: one `(name)` line per step and a trailing cost comment.
pub fn format_plan(task: &Task, plan: &[OpId]) -> String {
    let mut out = String::new();
    for &op in plan {
        out.push('(');
        out.push_str(task.operator(op).name.trim());
        out.push_str(")\n");
    }
    let kind = if task.metric_uses_costs() {
        "general cost"
    } else {
        "unit cost"
    };
    out.push_str(&format!("; cost = {} ({kind})\n", task.plan_cost(plan)));
    out
}

pub fn write_plan(task: &Task, plan: &[OpId], mut out: impl Write) -> io::Result<()> {
    out.write_all(format_plan(task, plan).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    #[test]
    fn empty_plan_on_goal_initial_state() {
        let t = generators::custom(&[2], &[("f", &[(0, 0)], &[(0, 1)], 1)], &[1], &[(0, 1)]);
        assert_eq!(validate_plan(&t, &[]), Ok(0));
    }

    #[test]
    fn failure_names_the_step() {
        let t = generators::truck_package();
        // drive B A, then unload A: package is not in the truck
        assert_eq!(
            validate_plan(&t, &[1, 3]),
            Err(PlanError::NotApplicable {
                step: 2,
                name: "unload A".into()
            })
        );
        assert_eq!(validate_plan(&t, &[1]), Err(PlanError::GoalNotReached));
        assert_eq!(
            validate_plan(&t, &[99]),
            Err(PlanError::UnknownOperator { step: 1, op: 99 })
        );
        // drive B A, load A, drive A B, unload B
        assert_eq!(validate_plan(&t, &[1, 2, 0, 5]), Ok(4));
    }

    #[test]
    fn plan_text_format() {
        let t = generators::flip_task();
        assert_eq!(format_plan(&t, &[0]), "(flip)\n; cost = 1 (unit cost)\n");
        let t = generators::logistics(2, 1, 1, 3);
        let text = format_plan(&t, &[0]);
        assert_eq!(text, "(drive truck0 l0 l1)\n; cost = 3 (general cost)\n");
    }
}
