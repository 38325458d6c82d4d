use std::sync::Arc;

use crate::cost::{self, INFINITY, MAX_FINITE};
use crate::graphs::{
    backward_goal_distances, CausalGraph, DomainTransitionGraph, DtgDistanceTable,
};
use crate::heuristics::{EvalError, Heuristic, HeuristicValue};
use crate::task::{Task, Value, VarId};

const REFINEMENT_ROUNDS: usize = 3;
const LEVEL_SCALE: u32 = 3;

/// Precomputed per-goal data: refined DTG distances, landmark levels and
/// causal-graph weights.
#[derive(Debug, Clone)]
pub struct WeightedDtgTables {
    pub goal_vars: Vec<VarId>,
    pub goal_values: Vec<Value>,
    /// Unrefined backward distances, per goal.
    pub base: Vec<DtgDistanceTable>,
    /// Refined distances, per goal.
    pub refined: Vec<DtgDistanceTable>,
    /// Landmark level in `0..=3`, per goal.
    pub level: Vec<u32>,
    pub weight: Vec<f64>,
    pub num_deps: Vec<u64>,
    pub max_level: u32,
    /// Number of refinement rounds run before reaching a fixed point or the cap.
    pub rounds: usize,
}

impl WeightedDtgTables {
    pub fn build(task: &Task) -> Self {
        let cg = CausalGraph::build(task);
        let dtgs: Vec<DomainTransitionGraph> = (0..task.num_variables())
            .map(|v| DomainTransitionGraph::build(task, v))
            .collect();
        let cheapest: Vec<u64> = dtgs.iter().map(|d| d.cheapest_changing_edge()).collect();
        let goal_vars: Vec<VarId> = task.goal().iter().map(|(v, _)| v).collect();
        let goal_values: Vec<Value> = task.goal().iter().map(|(_, x)| x).collect();
        let goal_index = |var: VarId| goal_vars.binary_search(&var).ok();

        let base: Vec<DtgDistanceTable> = goal_vars
            .iter()
            .zip(&goal_values)
            .map(|(&v, &x)| backward_goal_distances(&dtgs[v], x, None))
            .collect();

        let mut refined = base.clone();
        let mut rounds = 0;
        while rounds < REFINEMENT_ROUNDS {
            rounds += 1;
            let next: Vec<DtgDistanceTable> = goal_vars
                .iter()
                .zip(&goal_values)
                .map(|(&g, &x)| {
                    let weights: Vec<u64> = dtgs[g]
                        .edges()
                        .iter()
                        .map(|e| {
                            let mut w = e.cost;
                            for (u, required) in task.operator(e.op).precondition.iter() {
                                if u == g {
                                    continue;
                                }
                                let approx = match goal_index(u) {
                                    Some(i) => refined[i].get(required),
                                    None => cheapest[u],
                                };
                                // unknown cost: no contribution, so refinement
                                // never turns a reachable value into a dead end
                                if approx != INFINITY {
                                    w = cost::add(w, approx);
                                }
                            }
                            w
                        })
                        .collect();
                    backward_goal_distances(&dtgs[g], x, Some(&weights))
                })
                .collect();
            let unchanged = next == refined;
            refined = next;
            if unchanged {
                break;
            }
        }

        // longest chain over the causal subgraph induced by goal variables
        let n = goal_vars.len();
        let mut raw = vec![0u32; n];
        for _ in 0..n {
            let mut changed = false;
            for i in 0..n {
                let best = cg
                    .predecessors(goal_vars[i])
                    .iter()
                    .filter_map(|&p| goal_index(p))
                    .map(|j| raw[j] + 1)
                    .max()
                    .unwrap_or(0);
                if best > raw[i] {
                    raw[i] = best;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let raw_max = raw.iter().copied().max().unwrap_or(0);
        let level: Vec<u32> = raw
            .iter()
            .map(|&r| (r * LEVEL_SCALE).checked_div(raw_max).unwrap_or(0))
            .collect();
        let max_level = level.iter().copied().max().unwrap_or(0);

        let weight = goal_vars
            .iter()
            .map(|&g| {
                let changes = dtgs[g].transition_count() as u64;
                cg.predecessors(g).len() as f64 + (changes / 4).min(5) as f64
            })
            .collect();
        let num_deps = goal_vars
            .iter()
            .map(|&g| cg.predecessors(g).len().max(1) as u64)
            .collect();

        Self {
            goal_vars,
            goal_values,
            base,
            refined,
            level,
            weight,
            num_deps,
            max_level,
            rounds,
        }
    }
}

/// Refined-DTG distance heuristic with landmark-level and causal-graph
/// weighting.
pub struct BlindNone3 {
    tables: WeightedDtgTables,
    work: u64,
}

impl BlindNone3 {
    pub fn new(task: &Arc<Task>) -> Self {
        let tables = WeightedDtgTables::build(task);
        let edges: usize = task.operators().iter().map(|o| o.effect.len()).sum();
        let work = (edges * (tables.rounds + 1) * tables.goal_vars.len().max(1)) as u64;
        Self { tables, work }
    }

    pub fn tables(&self) -> &WeightedDtgTables {
        &self.tables
    }

    pub fn compute(&mut self, state: &[Value]) -> u64 {
        let t = &self.tables;
        let mut h = 0f64;
        let mut h_max = 0u64;
        let mut unsat_levels = 0u64;
        for i in 0..t.goal_vars.len() {
            self.work += 1;
            let current = state[t.goal_vars[i]];
            if current == t.goal_values[i] {
                continue;
            }
            let d = t.refined[i].get(current);
            if d == INFINITY {
                return INFINITY;
            }
            let level = t.level[i] as f64;
            let scaled = d as f64 * (1.0 + level);
            h += scaled * (1.0 + t.weight[i] / 4.0) + t.num_deps[i] as f64;
            h_max = h_max.max(d);
            unsat_levels += 1 + t.level[i] as u64;
        }
        let total = h + h_max as f64 + 2.0 * t.max_level as f64 + 2.0 * unsat_levels as f64;
        if total >= MAX_FINITE as f64 {
            MAX_FINITE
        } else {
            total.round() as u64
        }
    }
}

impl Heuristic for BlindNone3 {
    fn name(&self) -> &str {
        "evolved-blind-none-3"
    }

    fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError> {
        Ok(HeuristicValue::from_cost(self.compute(state)))
    }

    fn work(&self) -> u64 {
        self.work
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn one_way_chain() -> Arc<Task> {
        Arc::new(generators::custom(
            &[4],
            &[
                ("a", &[(0, 0)], &[(0, 1)], 1),
                ("b", &[(0, 1)], &[(0, 2)], 1),
                ("c", &[(0, 2)], &[(0, 3)], 1),
            ],
            &[0],
            &[(0, 3)],
        ))
    }

    #[test]
    fn single_goal_closed_form() {
        // d = 3, level 0, weight 0 + min(3/4, 5) = 0, numDeps 1:
        // 3*1*1 + 1 + 3 + 2*0 + 2*(1+0) = 9
        let task = one_way_chain();
        let mut h = BlindNone3::new(&task);
        assert_eq!(h.tables().weight, vec![0.0]);
        assert_eq!(h.tables().max_level, 0);
        assert_eq!(h.compute(&[0]), 9);
        assert_eq!(h.compute(&[3]), 0);
    }

    #[test]
    fn goal_state_keeps_level_constant() {
        // two goal variables in a causal chain: var 0 -> var 1
        let task = Arc::new(generators::custom(
            &[2, 2],
            &[
                ("x", &[(0, 0)], &[(0, 1)], 1),
                ("y", &[(0, 1), (1, 0)], &[(1, 1)], 1),
            ],
            &[0, 0],
            &[(0, 1), (1, 1)],
        ));
        let mut h = BlindNone3::new(&task);
        let t = h.tables().clone();
        assert_eq!(t.level, vec![0, 3]);
        assert_eq!(t.max_level, 3);
        assert_eq!(h.compute(&[1, 1]), 6);
        // var 1 DTG edge y: cost 1 + D(var0, required 1) = 1 + 0
        assert_eq!(t.refined[1].get(0), 1);
        // var 1 unsatisfied only: d=1, level 3, weight 1 + 0, numDeps 1
        // 1*4*(1.25) + 1 + 1 + 6 + 2*4 = 21
        assert_eq!(h.compute(&[1, 0]), 21);
    }

    #[test]
    fn unreachable_goal_value_is_dead_end() {
        let task = Arc::new(generators::unsolvable_task());
        assert_eq!(BlindNone3::new(&task).compute(&[0]), INFINITY);
        let task = Arc::new(generators::dead_end_task());
        let mut h = BlindNone3::new(&task);
        assert_eq!(h.compute(&[3, 0]), INFINITY);
        assert_ne!(h.compute(&[0, 0]), INFINITY);
    }

    #[test]
    fn refinement_never_lowers_distances() {
        for task in [
            generators::logistics(3, 2, 3, 2),
            generators::gripper(3),
            generators::grid_switches(3, 3, 3),
        ] {
            let t = WeightedDtgTables::build(&task);
            assert!(t.rounds <= REFINEMENT_ROUNDS);
            assert!(t.level.iter().all(|&l| l <= 3));
            for (b, r) in t.base.iter().zip(&t.refined) {
                for (x, y) in b.dist.iter().zip(&r.dist) {
                    assert!(y >= x);
                    assert_eq!(*x == INFINITY, *y == INFINITY);
                }
            }
        }
    }

    #[test]
    fn cyclic_goal_dependencies_terminate() {
        let task = Arc::new(generators::custom(
            &[2, 2],
            &[
                ("x", &[(1, 1)], &[(0, 1)], 1),
                ("y", &[(0, 1)], &[(1, 1)], 1),
                ("z", &[], &[(1, 1)], 1),
            ],
            &[0, 0],
            &[(0, 1), (1, 1)],
        ));
        let t = WeightedDtgTables::build(&task);
        assert!(t.level.iter().all(|&l| l <= 3));
        assert_eq!(t.max_level, 3);
    }
}
