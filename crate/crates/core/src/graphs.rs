//! Domain transition graphs, the causal graph, and backward goal distances
//! over DTGs.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use crate::cost::{self, INFINITY};
use crate::task::{OpId, Task, Value, VarId};

/// One DTG edge. `from == None` is a wildcard: the operator has no
/// precondition on the owning variable and can fire from any value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DtgEdge {
    pub from: Option<Value>,
    pub to: Value,
    pub op: OpId,
    pub cost: u64,
}

impl DtgEdge {
    pub fn is_wildcard(&self) -> bool {
        self.from.is_none()
    }

    /// Whether the edge can change the variable's value.
    pub fn is_changing(&self) -> bool {
        self.from != Some(self.to)
    }
}

#[derive(Debug, Clone)]
pub struct DomainTransitionGraph {
    var: VarId,
    domain_size: usize,
    edges: Vec<DtgEdge>,
    /// Edge indices per source value (wildcards excluded).
    outgoing: Vec<Vec<usize>>,
    /// Edge indices per target value, wildcards included.
    incoming: Vec<Vec<usize>>,
    wildcards: Vec<usize>,
}

impl DomainTransitionGraph {
    pub fn build(task: &Task, var: VarId) -> Self {
        let domain_size = task.variables()[var].domain_size();
        let mut edges = Vec::new();
        for (op, operator) in task.operators().iter().enumerate() {
            if let Some(to) = operator.effect.get(var) {
                edges.push(DtgEdge {
                    from: operator.precondition.get(var),
                    to,
                    op,
                    cost: operator.cost,
                });
            }
        }
        let mut outgoing = vec![Vec::new(); domain_size];
        let mut incoming = vec![Vec::new(); domain_size];
        let mut wildcards = Vec::new();
        for (i, e) in edges.iter().enumerate() {
            match e.from {
                Some(from) => outgoing[from as usize].push(i),
                None => wildcards.push(i),
            }
            incoming[e.to as usize].push(i);
        }
        Self {
            var,
            domain_size,
            edges,
            outgoing,
            incoming,
            wildcards,
        }
    }

    pub fn var(&self) -> VarId {
        self.var
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn edges(&self) -> &[DtgEdge] {
        &self.edges
    }

    /// Edges usable from `value`: its own outgoing edges, then wildcards.
    pub fn edges_from(&self, value: Value) -> impl Iterator<Item = (usize, &DtgEdge)> + '_ {
        self.outgoing[value as usize]
            .iter()
            .chain(&self.wildcards)
            .map(move |&i| (i, &self.edges[i]))
    }

    pub fn edges_into(&self, value: Value) -> impl Iterator<Item = (usize, &DtgEdge)> + '_ {
        self.incoming[value as usize]
            .iter()
            .map(move |&i| (i, &self.edges[i]))
    }

    /// Cost of the cheapest value-changing edge, or [`INFINITY`].
    pub fn cheapest_changing_edge(&self) -> u64 {
        self.edges
            .iter()
            .filter(|e| e.is_changing())
            .map(|e| e.cost)
            .min()
            .unwrap_or(INFINITY)
    }

    /// Number of value-changing edges.
    pub fn transition_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_changing()).count()
    }

    pub fn to_dot(&self, task: &Task) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph dtg_{} {{", self.var);
        for value in 0..self.domain_size {
            let label = &task.variables()[self.var].value_names[value];
            let _ = writeln!(out, "  v{value} [label=\"{}\"];", escape(label));
        }
        if !self.wildcards.is_empty() {
            let _ = writeln!(out, "  any [label=\"*\", shape=point];");
        }
        for e in &self.edges {
            let from = e
                .from
                .map_or_else(|| "any".to_string(), |v| format!("v{v}"));
            let _ = writeln!(
                out,
                "  {from} -> v{} [label=\"{} ({})\"];",
                e.to,
                escape(&task.operator(e.op).name),
                e.cost
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Per-variable predecessor and successor sets; no self loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    preds: Vec<Vec<VarId>>,
    succs: Vec<Vec<VarId>>,
}

impl CausalGraph {
    pub fn build(task: &Task) -> Self {
        let n = task.num_variables();
        let mut preds = vec![BTreeSet::new(); n];
        let mut succs = vec![BTreeSet::new(); n];
        for op in task.operators() {
            for (target, _) in op.effect.iter() {
                for (source, _) in op.precondition.iter().chain(op.effect.iter()) {
                    if source != target {
                        preds[target].insert(source);
                        succs[source].insert(target);
                    }
                }
            }
        }
        Self {
            preds: preds.into_iter().map(|s| s.into_iter().collect()).collect(),
            succs: succs.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn num_variables(&self) -> usize {
        self.preds.len()
    }

    pub fn predecessors(&self, var: VarId) -> &[VarId] {
        &self.preds[var]
    }

    pub fn successors(&self, var: VarId) -> &[VarId] {
        &self.succs[var]
    }

    pub fn has_edge(&self, from: VarId, to: VarId) -> bool {
        self.succs[from].binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (VarId, VarId)> + '_ {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(from, ts)| ts.iter().map(move |&to| (from, to)))
    }

    pub fn to_dot(&self, task: &Task) -> String {
        let mut out = String::from("digraph causal_graph {\n");
        for (var, v) in task.variables().iter().enumerate() {
            let _ = writeln!(out, "  x{var} [label=\"{}\"];", escape(&v.name));
        }
        for (from, to) in self.edges() {
            let _ = writeln!(out, "  x{from} -> x{to};");
        }
        out.push_str("}\n");
        out
    }
}

/// Cheapest cost from every value of one variable to a fixed goal value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtgDistanceTable {
    pub var: VarId,
    pub goal_value: Value,
    pub dist: Vec<u64>,
}

impl DtgDistanceTable {
    pub fn get(&self, value: Value) -> u64 {
        self.dist[value as usize]
    }
}

/// Backward Dijkstra from `goal_value`. `weights`, when given, replaces the
/// operator cost of edge `i` with `weights[i]`.
pub fn backward_goal_distances(
    dtg: &DomainTransitionGraph,
    goal_value: Value,
    weights: Option<&[u64]>,
) -> DtgDistanceTable {
    let weight = |i: usize| weights.map_or(dtg.edges[i].cost, |w| w[i]);
    let mut dist = vec![INFINITY; dtg.domain_size];
    let mut done = vec![false; dtg.domain_size];
    let mut heap = BinaryHeap::new();
    dist[goal_value as usize] = 0;
    heap.push(Reverse((0u64, goal_value)));
    while let Some(Reverse((d, value))) = heap.pop() {
        if done[value as usize] {
            continue;
        }
        done[value as usize] = true;
        for (i, e) in dtg.edges_into(value) {
            let nd = cost::add(d, weight(i));
            let mut relax = |from: usize, heap: &mut BinaryHeap<Reverse<(u64, Value)>>| {
                if !done[from] && nd < dist[from] {
                    dist[from] = nd;
                    heap.push(Reverse((nd, from as Value)));
                }
            };
            match e.from {
                Some(from) => relax(from as usize, &mut heap),
                None => (0..dtg.domain_size).for_each(|from| relax(from, &mut heap)),
            }
        }
    }
    DtgDistanceTable {
        var: dtg.var,
        goal_value,
        dist,
    }
}

/// For every value with finite nonzero distance, the operator labeling the
/// first edge of a shortest path toward the goal value. Among shortest paths
/// the ones with fewest edges are preferred (so zero-cost edges cannot form
/// a cycle), then the lowest operator id.
pub fn next_operators(
    dtg: &DomainTransitionGraph,
    table: &DtgDistanceTable,
    weights: Option<&[u64]>,
) -> Vec<Option<OpId>> {
    let weight = |i: usize| weights.map_or(dtg.edges[i].cost, |w| w[i]);
    let tight = |i: usize, e: &DtgEdge, from: Value| {
        e.to != from
            && table.get(from) != INFINITY
            && cost::add(weight(i), table.get(e.to)) == table.get(from)
    };
    // hop counts over tight edges, backward from the goal value
    let mut hops = vec![usize::MAX; dtg.domain_size];
    let mut queue = std::collections::VecDeque::new();
    hops[table.goal_value as usize] = 0;
    queue.push_back(table.goal_value);
    while let Some(value) = queue.pop_front() {
        for (i, e) in dtg.edges_into(value) {
            let sources = match e.from {
                Some(f) => f..f + 1,
                None => 0..dtg.domain_size as Value,
            };
            for from in sources {
                if hops[from as usize] == usize::MAX && tight(i, e, from) {
                    hops[from as usize] = hops[value as usize] + 1;
                    queue.push_back(from);
                }
            }
        }
    }
    (0..dtg.domain_size as Value)
        .map(|value| {
            let d = table.get(value);
            if d == 0 || d == INFINITY {
                return None;
            }
            dtg.edges_from(value)
                .filter(|&(i, e)| {
                    tight(i, e, value) && hops[e.to as usize] + 1 == hops[value as usize]
                })
                .map(|(_, e)| e.op)
                .min()
        })
        .collect()
}
