use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::cost::{self, INFINITY};
use crate::heuristics::relaxation::{FactId, RelaxedTask};
use crate::heuristics::scratch::GenerationScratch;
use crate::heuristics::{EvalError, Heuristic, HeuristicValue};
use crate::task::{Task, Value};

const NO_SUPPORTER: u32 = u32::MAX;
const SEEDED: u32 = u32::MAX - 1;

/// FF with an h_add pass that stops once every goal fact is finalized, and
/// generation-stamped scratch so per-state reset does not touch every fact
/// and operator. Plan operators are marked through a side list that is
/// cleared while their costs are summed. Values equal [`super::super::Ff`].
pub struct FfNone3 {
    rt: RelaxedTask,
    fact_seen: GenerationScratch,
    cost: Vec<u64>,
    supporter: Vec<u32>,
    done: Vec<bool>,
    op_seen: GenerationScratch,
    unsat: Vec<u32>,
    acc: Vec<u64>,
    heap: BinaryHeap<Reverse<(u64, FactId)>>,
    op_marked: Vec<bool>,
    used: Vec<u32>,
    agenda: Vec<FactId>,
    fact_marked: GenerationScratch,
    work: u64,
}

impl FfNone3 {
    pub fn new(task: &Arc<Task>) -> Self {
        let rt = RelaxedTask::new(task);
        let facts = rt.num_facts();
        let ops = rt.num_operators();
        Self {
            fact_seen: GenerationScratch::new(facts),
            cost: vec![INFINITY; facts],
            supporter: vec![NO_SUPPORTER; facts],
            done: vec![false; facts],
            op_seen: GenerationScratch::new(ops),
            unsat: vec![0; ops],
            acc: vec![0; ops],
            heap: BinaryHeap::new(),
            op_marked: vec![false; ops],
            used: Vec::new(),
            agenda: Vec::new(),
            fact_marked: GenerationScratch::new(facts),
            work: (facts + ops) as u64,
            rt,
        }
    }

    #[inline]
    fn touch_fact(&mut self, f: FactId) {
        if !self.fact_seen.set(f as usize) {
            self.cost[f as usize] = INFINITY;
            self.supporter[f as usize] = NO_SUPPORTER;
            self.done[f as usize] = false;
        }
    }

    fn offer(&mut self, op: usize, total: u64) {
        for i in 0..self.rt.eff(op).len() {
            let e = self.rt.eff(op)[i];
            self.touch_fact(e);
            let ei = e as usize;
            if self.done[ei] || self.supporter[ei] == SEEDED {
                continue;
            }
            if total < self.cost[ei] {
                self.cost[ei] = total;
                self.supporter[ei] = op as u32;
                self.heap.push(Reverse((total, e)));
            } else if total == self.cost[ei] && (op as u32) < self.supporter[ei] {
                self.supporter[ei] = op as u32;
            }
        }
    }

    /// Early-stopped forward pass; returns whether all goals were reached.
    fn forward(&mut self, state: &[Value]) -> bool {
        self.fact_seen.next_generation();
        self.op_seen.next_generation();
        self.heap.clear();
        for (var, &value) in state.iter().enumerate() {
            let f = self.rt.fact(var, value);
            self.touch_fact(f);
            self.cost[f as usize] = 0;
            self.supporter[f as usize] = SEEDED;
            self.heap.push(Reverse((0, f)));
        }
        for i in 0..self.rt.no_pre_ops().len() {
            let op = self.rt.no_pre_ops()[i] as usize;
            self.offer(op, self.rt.cost(op));
        }
        let mut remaining = self.rt.goal_facts().len();
        if remaining == 0 {
            return true;
        }
        while let Some(Reverse((c, f))) = self.heap.pop() {
            self.work += 1;
            let fi = f as usize;
            if self.done[fi] {
                continue;
            }
            self.done[fi] = true;
            if self.rt.is_goal_fact(f) {
                remaining -= 1;
                if remaining == 0 {
                    return true;
                }
            }
            for i in 0..self.rt.pre_of(f).len() {
                let op = self.rt.pre_of(f)[i] as usize;
                self.work += 1;
                if !self.op_seen.set(op) {
                    self.unsat[op] = self.rt.pre(op).len() as u32;
                    self.acc[op] = 0;
                }
                self.acc[op] = cost::add(self.acc[op], c);
                self.unsat[op] -= 1;
                if self.unsat[op] == 0 {
                    let total = cost::add(self.rt.cost(op), self.acc[op]);
                    self.offer(op, total);
                }
            }
        }
        false
    }

    #[inline]
    fn supporter_of(&self, f: FactId) -> Option<usize> {
        let s = self.supporter[f as usize];
        (self.fact_seen.is_set(f as usize) && s != SEEDED && s != NO_SUPPORTER)
            .then_some(s as usize)
    }

    pub fn compute(&mut self, state: &[Value]) -> u64 {
        if !self.forward(state) {
            return INFINITY;
        }
        self.fact_marked.next_generation();
        self.agenda.clear();
        for i in 0..self.rt.goal_facts().len() {
            let g = self.rt.goal_facts()[i];
            if !self.fact_marked.set(g as usize) {
                self.agenda.push(g);
            }
        }
        while let Some(f) = self.agenda.pop() {
            self.work += 1;
            let Some(op) = self.supporter_of(f) else {
                continue;
            };
            if self.op_marked[op] {
                continue;
            }
            self.op_marked[op] = true;
            self.used.push(op as u32);
            for i in 0..self.rt.pre(op).len() {
                let p = self.rt.pre(op)[i];
                if !self.fact_marked.set(p as usize) {
                    self.agenda.push(p);
                }
            }
        }
        let mut total = 0u64;
        for op in self.used.drain(..) {
            self.op_marked[op as usize] = false;
            total = cost::add(total, self.rt.cost(op as usize));
        }
        total
    }
}

impl Heuristic for FfNone3 {
    fn name(&self) -> &str {
        "evolved-ff-none-3"
    }

    fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError> {
        Ok(HeuristicValue::from_cost(self.compute(state)))
    }

    fn work(&self) -> u64 {
        self.work
    }
}
