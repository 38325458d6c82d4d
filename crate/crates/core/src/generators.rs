//! Small synthetic tasks for tests, benches and desk-scale training sets.

use std::collections::VecDeque;

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::task::{Operator, PartialAssignment, State, Task, Value, VarId, Variable};

fn pa(pairs: Vec<(VarId, Value)>) -> PartialAssignment {
    PartialAssignment::new(pairs).expect("generator produced a duplicate variable")
}

fn op(name: String, pre: Vec<(VarId, Value)>, eff: Vec<(VarId, Value)>, cost: u64) -> Operator {
    Operator {
        name,
        precondition: pa(pre),
        effect: pa(eff),
        cost,
    }
}

fn named_var(name: &str, values: impl IntoIterator<Item = String>) -> Variable {
    Variable::new(name, values.into_iter().collect())
}

/// Operator spec for [`custom`]: name, precondition, effect, cost.
pub type OpSpec<'a> = (&'a str, &'a [(VarId, Value)], &'a [(VarId, Value)], u64);

/// Task over anonymous variables with the given domain sizes. Panics on
/// malformed input; intended for hand-written test tasks.
pub fn custom(domains: &[usize], ops: &[OpSpec], init: &[Value], goal: &[(VarId, Value)]) -> Task {
    let variables = domains
        .iter()
        .enumerate()
        .map(|(i, &n)| Variable::anonymous(format!("v{i}"), n))
        .collect();
    let operators = ops
        .iter()
        .map(|&(name, pre, eff, cost)| op(name.into(), pre.to_vec(), eff.to_vec(), cost))
        .collect();
    Task::new(
        variables,
        operators,
        State::new(init.to_vec()),
        pa(goal.to_vec()),
        true,
    )
    .unwrap()
}

/// One binary variable, one operator `flip` setting it from 0 to 1, goal 1.
pub fn flip_task() -> Task {
    Task::new(
        vec![named_var("x", ["off".into(), "on".into()])],
        vec![op("flip".into(), vec![(0, 0)], vec![(0, 1)], 1)],
        State::new(vec![0]),
        pa(vec![(0, 1)]),
        false,
    )
    .unwrap()
}

/// A line of `n` positions with unit moves both ways; start at 0, goal `n-1`.
pub fn chain(n: usize) -> Task {
    assert!(n >= 2);
    let mut ops = Vec::new();
    for i in 0..n - 1 {
        let (a, b) = (i as Value, i as Value + 1);
        ops.push(op(format!("fwd p{a} p{b}"), vec![(0, a)], vec![(0, b)], 1));
        ops.push(op(format!("back p{b} p{a}"), vec![(0, b)], vec![(0, a)], 1));
    }
    Task::new(
        vec![Variable::anonymous("pos", n)],
        ops,
        State::new(vec![0]),
        pa(vec![(0, n as Value - 1)]),
        false,
    )
    .unwrap()
}

/// A counter modulo `n` that can only be incremented; start 0, goal `n-1`.
pub fn cyclic_counter(n: usize) -> Task {
    assert!(n >= 2);
    let ops = (0..n)
        .map(|i| {
            let next = ((i + 1) % n) as Value;
            op(
                format!("inc {i}"),
                vec![(0, i as Value)],
                vec![(0, next)],
                1,
            )
        })
        .collect();
    Task::new(
        vec![Variable::anonymous("c", n)],
        ops,
        State::new(vec![0]),
        pa(vec![(0, n as Value - 1)]),
        false,
    )
    .unwrap()
}

/// One truck (var 0, at A or B) and one package (var 1, at A, at B or in the
/// truck). The truck starts at B, the package at A, and the goal is the
/// package at B.
pub fn truck_package() -> Task {
    let truck = named_var("truck", ["at A".into(), "at B".into()]);
    let package = named_var("package", ["at A".into(), "at B".into(), "in truck".into()]);
    let mut ops = vec![
        op("drive A B".into(), vec![(0, 0)], vec![(0, 1)], 1),
        op("drive B A".into(), vec![(0, 1)], vec![(0, 0)], 1),
    ];
    for (loc, name) in [(0, "A"), (1, "B")] {
        ops.push(op(
            format!("load {name}"),
            vec![(0, loc), (1, loc)],
            vec![(1, 2)],
            1,
        ));
        ops.push(op(
            format!("unload {name}"),
            vec![(0, loc), (1, 2)],
            vec![(1, loc)],
            1,
        ));
    }
    Task::new(
        vec![truck, package],
        ops,
        State::new(vec![1, 0]),
        pa(vec![(1, 1)]),
        false,
    )
    .unwrap()
}

/// Single-city logistics: trucks drive between any two locations at
/// `drive_cost`, loading and unloading cost 1. Truck `t` starts at location
/// `t mod L`, package `p` at `p mod L` with goal `(p + 1) mod L`. Variables
/// are the trucks followed by the packages; package values are the
/// locations followed by the trucks.
pub fn logistics(locations: usize, trucks: usize, packages: usize, drive_cost: u64) -> Task {
    assert!(locations >= 2 && trucks >= 1);
    let mut vars = Vec::new();
    for t in 0..trucks {
        vars.push(named_var(
            &format!("truck{t}"),
            (0..locations).map(|l| format!("at l{l}")),
        ));
    }
    for p in 0..packages {
        vars.push(named_var(
            &format!("pkg{p}"),
            (0..locations)
                .map(|l| format!("at l{l}"))
                .chain((0..trucks).map(|t| format!("in truck{t}"))),
        ));
    }
    let mut ops = Vec::new();
    for t in 0..trucks {
        for a in 0..locations {
            for b in 0..locations {
                if a != b {
                    ops.push(op(
                        format!("drive truck{t} l{a} l{b}"),
                        vec![(t, a as Value)],
                        vec![(t, b as Value)],
                        drive_cost,
                    ));
                }
            }
        }
    }
    for p in 0..packages {
        let pv = trucks + p;
        for t in 0..trucks {
            let inside = (locations + t) as Value;
            for l in 0..locations as Value {
                ops.push(op(
                    format!("load pkg{p} truck{t} l{l}"),
                    vec![(t, l), (pv, l)],
                    vec![(pv, inside)],
                    1,
                ));
                ops.push(op(
                    format!("unload pkg{p} truck{t} l{l}"),
                    vec![(t, l), (pv, inside)],
                    vec![(pv, l)],
                    1,
                ));
            }
        }
    }
    let mut init: Vec<Value> = (0..trucks).map(|t| (t % locations) as Value).collect();
    init.extend((0..packages).map(|p| (p % locations) as Value));
    let goal = (0..packages)
        .map(|p| (trucks + p, ((p + 1) % locations) as Value))
        .collect();
    Task::new(vars, ops, State::new(init), pa(goal), drive_cost != 1).unwrap()
}

/// Gripper with `balls` balls, two rooms and two hands; all balls start in
/// room A and must end up in room B.
pub fn gripper(balls: usize) -> Task {
    let mut vars = vec![
        named_var("robot", ["at A".into(), "at B".into()]),
        named_var("left", ["free".into(), "busy".into()]),
        named_var("right", ["free".into(), "busy".into()]),
    ];
    for b in 0..balls {
        vars.push(named_var(
            &format!("ball{b}"),
            [
                "at A".into(),
                "at B".into(),
                "in left".into(),
                "in right".into(),
            ],
        ));
    }
    let mut ops = vec![
        op("move A B".into(), vec![(0, 0)], vec![(0, 1)], 1),
        op("move B A".into(), vec![(0, 1)], vec![(0, 0)], 1),
    ];
    for b in 0..balls {
        let bv = 3 + b;
        for (room, rname) in [(0, "A"), (1, "B")] {
            for (hand, hname, held) in [(1, "left", 2), (2, "right", 3)] {
                ops.push(op(
                    format!("pick ball{b} {rname} {hname}"),
                    vec![(0, room), (hand, 0), (bv, room)],
                    vec![(hand, 1), (bv, held)],
                    1,
                ));
                ops.push(op(
                    format!("drop ball{b} {rname} {hname}"),
                    vec![(0, room), (bv, held)],
                    vec![(hand, 0), (bv, room)],
                    1,
                ));
            }
        }
    }
    let mut init = vec![0, 0, 0];
    init.extend(std::iter::repeat_n(0, balls));
    let goal = (0..balls).map(|b| (3 + b, 1)).collect();
    Task::new(vars, ops, State::new(init), pa(goal), false).unwrap()
}

/// A `width` × `height` grid to walk across plus `switches` binary switches
/// that must all be turned on; switch `i` can only be flipped on cell `i`
/// (wrapping around the grid). Start in the corner, goal: every switch on and
/// the agent back in the corner.
pub fn grid_switches(width: usize, height: usize, switches: usize) -> Task {
    let cells = width * height;
    assert!(cells >= 2);
    let mut vars = vec![Variable::anonymous("cell", cells)];
    for i in 0..switches {
        vars.push(named_var(
            &format!("switch{i}"),
            ["off".into(), "on".into()],
        ));
    }
    let mut ops = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let c = (y * width + x) as Value;
            let mut nbrs = Vec::new();
            if x + 1 < width {
                nbrs.push(c + 1);
            }
            if x > 0 {
                nbrs.push(c - 1);
            }
            if y + 1 < height {
                nbrs.push(c + width as Value);
            }
            if y > 0 {
                nbrs.push(c - width as Value);
            }
            for n in nbrs {
                ops.push(op(format!("go c{c} c{n}"), vec![(0, c)], vec![(0, n)], 1));
            }
        }
    }
    for i in 0..switches {
        let at = ((i * 7 + 3) % cells) as Value;
        ops.push(op(
            format!("press switch{i} c{at}"),
            vec![(0, at), (1 + i, 0)],
            vec![(1 + i, 1)],
            1,
        ));
    }
    let mut init = vec![0];
    init.extend(std::iter::repeat_n(0, switches));
    let mut goal: Vec<_> = (0..switches).map(|i| (1 + i, 1)).collect();
    goal.push((0, 0));
    Task::new(vars, ops, State::new(init), pa(goal), false).unwrap()
}

/// Goal value 2 of a three-valued variable with no operator reaching it.
pub fn unsolvable_task() -> Task {
    Task::new(
        vec![Variable::anonymous("x", 3)],
        vec![op("step".into(), vec![(0, 0)], vec![(0, 1)], 1)],
        State::new(vec![0]),
        pa(vec![(0, 2)]),
        false,
    )
    .unwrap()
}

/// Solvable task with a reachable trap: position 3 has no way out.
/// A second binary variable has to be toggled on as well.
pub fn dead_end_task() -> Task {
    Task::new(
        vec![
            Variable::anonymous("pos", 4),
            Variable::anonymous("flag", 2),
        ],
        vec![
            op("fwd 0 1".into(), vec![(0, 0)], vec![(0, 1)], 1),
            op("fwd 1 2".into(), vec![(0, 1)], vec![(0, 2)], 1),
            op("back 1 0".into(), vec![(0, 1)], vec![(0, 0)], 1),
            op("fall 0 3".into(), vec![(0, 0)], vec![(0, 3)], 1),
            op("set flag".into(), vec![(0, 1), (1, 0)], vec![(1, 1)], 1),
        ],
        State::new(vec![0, 0]),
        pa(vec![(0, 2), (1, 1)]),
        false,
    )
    .unwrap()
}

/// Random task with `vars` variables of `domain` values and `ops` operators.
/// Operators have 0–2 preconditions, 1–2 effects and costs in 0..=3.
pub fn random_task(seed: u64, vars: usize, domain: usize, ops: usize) -> Task {
    assert!(vars >= 1 && domain >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variables = (0..vars)
        .map(|v| Variable::anonymous(format!("v{v}"), domain))
        .collect();
    let pick_pairs = |rng: &mut ChaCha8Rng, n: usize| {
        let mut pairs: Vec<(VarId, Value)> = Vec::new();
        for _ in 0..n {
            let var = rng.random_range(0..vars);
            if pairs.iter().all(|&(v, _)| v != var) {
                pairs.push((var, rng.random_range(0..domain as Value)));
            }
        }
        pairs
    };
    let operators = (0..ops)
        .map(|i| {
            let pre_n = rng.random_range(0..=2);
            let eff_n = rng.random_range(1..=2);
            let pre = pick_pairs(&mut rng, pre_n);
            let eff = pick_pairs(&mut rng, eff_n);
            op(format!("o{i}"), pre, eff, rng.random_range(0..=3))
        })
        .collect();
    let init = (0..vars)
        .map(|_| rng.random_range(0..domain as Value))
        .collect();
    let goal_n = rng.random_range(1..=2.min(vars));
    let goal = pick_pairs(&mut rng, goal_n.max(1));
    Task::new(variables, operators, State::new(init), pa(goal), true).unwrap()
}

/// Breadth-first enumeration of reachable states, stopping after `cap`
/// states. Order is deterministic.
pub fn reachable_states(task: &Task, cap: usize) -> Vec<State> {
    let mut seen: IndexSet<State> = IndexSet::new();
    let mut queue = VecDeque::new();
    seen.insert(task.initial_state().clone());
    queue.push_back(0usize);
    let mut ops = Vec::new();
    while let Some(i) = queue.pop_front() {
        let state = seen[i].clone();
        task.applicable_operators_into(&state, &mut ops);
        for &o in &ops {
            if seen.len() >= cap {
                return seen.into_iter().collect();
            }
            let (idx, fresh) = seen.insert_full(task.apply_unchecked(&state, o));
            if fresh {
                queue.push_back(idx);
            }
        }
    }
    seen.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_tasks_are_well_formed() {
        let tasks = [
            flip_task(),
            chain(10),
            cyclic_counter(4),
            truck_package(),
            logistics(3, 2, 2, 3),
            gripper(2),
            grid_switches(3, 3, 2),
            unsolvable_task(),
            dead_end_task(),
            random_task(7, 4, 3, 12),
        ];
        for t in &tasks {
            assert!(t.is_valid_state(t.initial_state()));
            for s in reachable_states(t, 1000) {
                assert!(t.is_valid_state(&s));
            }
        }
    }

    #[test]
    fn reachable_state_counts() {
        assert_eq!(reachable_states(&chain(10), 100).len(), 10);
        assert_eq!(reachable_states(&flip_task(), 100).len(), 2);
        assert_eq!(reachable_states(&truck_package(), 100).len(), 6);
        // 2 robot positions, per ball 4 places; hands follow from balls
        // but both balls cannot share a hand.
        assert_eq!(reachable_states(&gripper(2), 1000).len(), 2 * (16 - 2));
        assert_eq!(reachable_states(&logistics(3, 2, 2, 1), 100).len(), 100);
    }

    #[test]
    fn random_task_is_seeded() {
        let a = random_task(3, 5, 3, 10);
        let b = random_task(3, 5, 3, 10);
        assert_eq!(a.operators(), b.operators());
        assert_eq!(a.initial_state(), b.initial_state());
    }
}
