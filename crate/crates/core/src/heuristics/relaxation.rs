//! Delete-relaxation machinery: a generalized Dijkstra over facts computing
//! h_add and h_max, and FF relaxed-plan extraction on top of the h_add pass.
//!
//! Best supporters are fixed when a fact is finalized (popped). Among the
//! achievers discovered before that point, the cheapest wins and ties go to
//! the lowest operator id. Freezing at finalization makes the supporters of
//! every finalized fact independent of how long the pass keeps running
//! afterwards, so a pass that stops once all goals are finalized extracts
//! the same relaxed plan as a full pass.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use super::scratch::GenerationScratch;
use super::{EvalError, Heuristic, HeuristicValue};
use crate::cost::{self, INFINITY};
use crate::task::{OpId, Task, Value, VarId};

pub type FactId = u32;

const NO_SUPPORTER: u32 = u32::MAX;
const SEEDED: u32 = u32::MAX - 1;

/// Fact-level view of a task: facts are (variable, value) pairs numbered
/// densely, operators keep their task ids.
#[derive(Debug)]
pub struct RelaxedTask {
    task: Arc<Task>,
    fact_offset: Vec<u32>,
    fact_var: Vec<VarId>,
    op_pre_start: Vec<u32>,
    op_pre: Vec<FactId>,
    op_eff_start: Vec<u32>,
    op_eff: Vec<FactId>,
    op_cost: Vec<u64>,
    pre_of_start: Vec<u32>,
    pre_of: Vec<u32>,
    no_pre_ops: Vec<u32>,
    goal_facts: Vec<FactId>,
    is_goal_fact: Vec<bool>,
}

impl RelaxedTask {
    pub fn new(task: &Arc<Task>) -> Self {
        let mut fact_offset = Vec::with_capacity(task.num_variables());
        let mut fact_var = Vec::new();
        for (var, v) in task.variables().iter().enumerate() {
            fact_offset.push(fact_var.len() as u32);
            fact_var.extend(std::iter::repeat_n(var, v.domain_size()));
        }
        let num_facts = fact_var.len();
        let fact = |var: VarId, value: Value| fact_offset[var] + value;

        let mut op_pre_start = vec![0];
        let mut op_pre = Vec::new();
        let mut op_eff_start = vec![0];
        let mut op_eff = Vec::new();
        let mut op_cost = Vec::new();
        let mut no_pre_ops = Vec::new();
        let mut pre_count = vec![0u32; num_facts];
        for (id, op) in task.operators().iter().enumerate() {
            for (var, value) in op.precondition.iter() {
                let f = fact(var, value);
                op_pre.push(f);
                pre_count[f as usize] += 1;
            }
            op_pre_start.push(op_pre.len() as u32);
            op_eff.extend(op.effect.iter().map(|(var, value)| fact(var, value)));
            op_eff_start.push(op_eff.len() as u32);
            op_cost.push(op.cost);
            if op.precondition.is_empty() {
                no_pre_ops.push(id as u32);
            }
        }
        let mut pre_of_start = Vec::with_capacity(num_facts + 1);
        let mut acc = 0u32;
        pre_of_start.push(0);
        for &c in &pre_count {
            acc += c;
            pre_of_start.push(acc);
        }
        let mut fill = pre_of_start.clone();
        let mut pre_of = vec![0u32; acc as usize];
        for op in 0..task.num_operators() {
            for &f in &op_pre[op_pre_start[op] as usize..op_pre_start[op + 1] as usize] {
                pre_of[fill[f as usize] as usize] = op as u32;
                fill[f as usize] += 1;
            }
        }
        let goal_facts: Vec<FactId> = task.goal().iter().map(|(v, x)| fact(v, x)).collect();
        let mut is_goal_fact = vec![false; num_facts];
        for &g in &goal_facts {
            is_goal_fact[g as usize] = true;
        }
        Self {
            task: task.clone(),
            fact_offset,
            fact_var,
            op_pre_start,
            op_pre,
            op_eff_start,
            op_eff,
            op_cost,
            pre_of_start,
            pre_of,
            no_pre_ops,
            goal_facts,
            is_goal_fact,
        }
    }

    pub fn task(&self) -> &Arc<Task> {
        &self.task
    }

    pub fn num_facts(&self) -> usize {
        self.fact_var.len()
    }

    pub fn num_operators(&self) -> usize {
        self.op_cost.len()
    }

    #[inline]
    pub fn fact(&self, var: VarId, value: Value) -> FactId {
        self.fact_offset[var] + value
    }

    #[inline]
    pub fn fact_var(&self, fact: FactId) -> VarId {
        self.fact_var[fact as usize]
    }

    pub fn fact_value(&self, fact: FactId) -> Value {
        fact - self.fact_offset[self.fact_var(fact)]
    }

    #[inline]
    pub fn pre(&self, op: usize) -> &[FactId] {
        &self.op_pre[self.op_pre_start[op] as usize..self.op_pre_start[op + 1] as usize]
    }

    #[inline]
    pub fn eff(&self, op: usize) -> &[FactId] {
        &self.op_eff[self.op_eff_start[op] as usize..self.op_eff_start[op + 1] as usize]
    }

    #[inline]
    pub fn cost(&self, op: usize) -> u64 {
        self.op_cost[op]
    }

    /// Operators having `fact` as a precondition.
    #[inline]
    pub fn pre_of(&self, fact: FactId) -> &[u32] {
        let f = fact as usize;
        &self.pre_of[self.pre_of_start[f] as usize..self.pre_of_start[f + 1] as usize]
    }

    pub fn no_pre_ops(&self) -> &[u32] {
        &self.no_pre_ops
    }

    pub fn goal_facts(&self) -> &[FactId] {
        &self.goal_facts
    }

    #[inline]
    pub fn is_goal_fact(&self, fact: FactId) -> bool {
        self.is_goal_fact[fact as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassMode {
    /// Operator cost plus the sum of precondition costs.
    Add,
    /// Operator cost plus the maximum precondition cost.
    Max,
}

/// Result of one pass: the goal total (sum for h_add, max for h_max) or
/// [`INFINITY`] when a goal fact is unreachable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassOutcome {
    pub total: u64,
}

impl PassOutcome {
    pub fn is_dead_end(&self) -> bool {
        self.total == INFINITY
    }
}

/// Both totals from [`RelaxationPass::hadd_hmax`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaddHmax {
    pub h_add: u64,
    pub h_max: u64,
    pub add_fact_costs: Vec<u64>,
    pub max_fact_costs: Vec<u64>,
}

/// Scratch state for the generalized Dijkstra over facts.
#[derive(Debug)]
pub struct RelaxationPass {
    cost: Vec<u64>,
    supporter: Vec<u32>,
    done: Vec<bool>,
    order: Vec<u32>,
    unsat: Vec<u32>,
    acc: Vec<u64>,
    heap: BinaryHeap<Reverse<(u64, FactId)>>,
    finalized: u32,
    work: u64,
}

impl RelaxationPass {
    pub fn new(rt: &RelaxedTask) -> Self {
        Self {
            cost: vec![INFINITY; rt.num_facts()],
            supporter: vec![NO_SUPPORTER; rt.num_facts()],
            done: vec![false; rt.num_facts()],
            order: vec![u32::MAX; rt.num_facts()],
            unsat: vec![0; rt.num_operators()],
            acc: vec![0; rt.num_operators()],
            heap: BinaryHeap::new(),
            finalized: 0,
            work: 0,
        }
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    #[inline]
    fn offer(&mut self, rt: &RelaxedTask, op: usize, op_cost: u64) {
        for &e in rt.eff(op) {
            let ei = e as usize;
            if self.done[ei] || self.supporter[ei] == SEEDED {
                continue;
            }
            if op_cost < self.cost[ei] {
                self.cost[ei] = op_cost;
                self.supporter[ei] = op as u32;
                self.heap.push(Reverse((op_cost, e)));
            } else if op_cost == self.cost[ei] && (op as u32) < self.supporter[ei] {
                self.supporter[ei] = op as u32;
            }
        }
    }

    /// Runs the pass from `state`. With `early_stop`, halts as soon as every
    /// goal fact has been finalized.
    pub fn run(
        &mut self,
        rt: &RelaxedTask,
        state: &[Value],
        mode: PassMode,
        early_stop: bool,
    ) -> PassOutcome {
        self.cost.fill(INFINITY);
        self.supporter.fill(NO_SUPPORTER);
        self.done.fill(false);
        self.order.fill(u32::MAX);
        self.heap.clear();
        self.finalized = 0;
        for op in 0..rt.num_operators() {
            self.unsat[op] = rt.pre(op).len() as u32;
            self.acc[op] = 0;
        }
        self.work += (rt.num_facts() + rt.num_operators()) as u64 / 8;

        for (var, &value) in state.iter().enumerate() {
            let f = rt.fact(var, value);
            self.cost[f as usize] = 0;
            self.supporter[f as usize] = SEEDED;
            self.heap.push(Reverse((0, f)));
        }
        for i in 0..rt.no_pre_ops().len() {
            let op = rt.no_pre_ops()[i] as usize;
            self.offer(rt, op, rt.cost(op));
        }

        let mut unreached_goals = rt.goal_facts().len();
        while let Some(Reverse((c, f))) = self.heap.pop() {
            self.work += 1;
            let fi = f as usize;
            if self.done[fi] {
                continue;
            }
            self.done[fi] = true;
            self.order[fi] = self.finalized;
            self.finalized += 1;
            if rt.is_goal_fact(f) {
                unreached_goals -= 1;
                if early_stop && unreached_goals == 0 {
                    break;
                }
            }
            for i in 0..rt.pre_of(f).len() {
                let op = rt.pre_of(f)[i] as usize;
                self.work += 1;
                self.acc[op] = match mode {
                    PassMode::Add => cost::add(self.acc[op], c),
                    PassMode::Max => self.acc[op].max(c),
                };
                self.unsat[op] -= 1;
                if self.unsat[op] == 0 {
                    let total = cost::add(rt.cost(op), self.acc[op]);
                    self.offer(rt, op, total);
                }
            }
        }

        let mut total = 0u64;
        for &g in rt.goal_facts() {
            let gc = if self.done[g as usize] {
                self.cost[g as usize]
            } else {
                INFINITY
            };
            total = match mode {
                PassMode::Add => cost::add(total, gc),
                PassMode::Max => total.max(gc),
            };
        }
        PassOutcome { total }
    }

    /// Runs an h_add pass and an h_max pass from the same state.
    pub fn hadd_hmax(&mut self, rt: &RelaxedTask, state: &[Value], early_stop: bool) -> HaddHmax {
        let add = self.run(rt, state, PassMode::Add, early_stop);
        let add_fact_costs = self.fact_costs();
        let max = self.run(rt, state, PassMode::Max, early_stop);
        HaddHmax {
            h_add: add.total,
            h_max: max.total,
            add_fact_costs,
            max_fact_costs: self.fact_costs(),
        }
    }

    /// Cost of `fact` after the last pass; [`INFINITY`] if it was not finalized.
    #[inline]
    pub fn fact_cost(&self, fact: FactId) -> u64 {
        if self.done[fact as usize] {
            self.cost[fact as usize]
        } else {
            INFINITY
        }
    }

    pub fn fact_costs(&self) -> Vec<u64> {
        (0..self.cost.len() as FactId)
            .map(|f| self.fact_cost(f))
            .collect()
    }

    /// Best supporter of a finalized fact; `None` for facts of the evaluated
    /// state and for unreached facts.
    #[inline]
    pub fn supporter(&self, fact: FactId) -> Option<OpId> {
        let s = self.supporter[fact as usize];
        if !self.done[fact as usize] || s == SEEDED || s == NO_SUPPORTER {
            None
        } else {
            Some(s as OpId)
        }
    }

    /// Position of `fact` in finalization order.
    #[inline]
    pub fn finalization_index(&self, fact: FactId) -> Option<u32> {
        self.done[fact as usize].then_some(self.order[fact as usize])
    }
}

/// Backward relaxed-plan extraction from the goal facts. Facts are
/// processed in reverse finalization order, so the resulting operator list
/// reversed is executable under delete-free semantics.
#[derive(Debug)]
pub struct PlanExtractor {
    fact_marks: GenerationScratch,
    op_marks: GenerationScratch,
    agenda: BinaryHeap<(u32, FactId)>,
    plan: Vec<OpId>,
}

impl PlanExtractor {
    pub fn new(rt: &RelaxedTask) -> Self {
        Self {
            fact_marks: GenerationScratch::new(rt.num_facts()),
            op_marks: GenerationScratch::new(rt.num_operators()),
            agenda: BinaryHeap::new(),
            plan: Vec::new(),
        }
    }

    /// Operators of the last extracted plan, in extraction order.
    pub fn plan(&self) -> &[OpId] {
        &self.plan
    }

    /// Extracts a relaxed plan after a completed h_add pass and returns its
    /// cost. Returns the number of processed facts as second component.
    pub fn extract(&mut self, rt: &RelaxedTask, pass: &RelaxationPass) -> (u64, u64) {
        self.fact_marks.next_generation();
        self.op_marks.next_generation();
        self.agenda.clear();
        self.plan.clear();
        let mut steps = 0u64;
        for &g in rt.goal_facts() {
            if pass.supporter(g).is_some() && !self.fact_marks.set(g as usize) {
                let idx = pass.finalization_index(g).expect("goal finalized");
                self.agenda.push((idx, g));
            }
        }
        let mut total = 0u64;
        while let Some((_, f)) = self.agenda.pop() {
            steps += 1;
            let op = pass.supporter(f).expect("agenda facts have supporters");
            if self.op_marks.set(op) {
                continue;
            }
            self.plan.push(op);
            total = cost::add(total, rt.cost(op));
            for &p in rt.pre(op) {
                if pass.supporter(p).is_some() && !self.fact_marks.set(p as usize) {
                    let idx = pass.finalization_index(p).expect("precondition finalized");
                    self.agenda.push((idx, p));
                }
            }
        }
        (total, steps)
    }
}

/// Output of [`Ff::relaxed_plan`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxedPlanResult {
    pub h_ff: u64,
    /// Extraction order (goal side first).
    pub plan_ops: Vec<OpId>,
    /// h_add of every goal pair, satisfied goals included (cost 0).
    pub h_add_per_goal: Vec<((VarId, Value), u64)>,
    pub h_add_total: u64,
}

/// The FF heuristic.
pub struct Ff {
    rt: Arc<RelaxedTask>,
    pass: RelaxationPass,
    extractor: PlanExtractor,
    work: u64,
}

impl Ff {
    pub fn new(task: &Arc<Task>) -> Self {
        Self::with_relaxed(Arc::new(RelaxedTask::new(task)))
    }

    pub fn with_relaxed(rt: Arc<RelaxedTask>) -> Self {
        let pass = RelaxationPass::new(&rt);
        let extractor = PlanExtractor::new(&rt);
        let work = (rt.num_facts() + rt.num_operators()) as u64;
        Self {
            rt,
            pass,
            extractor,
            work,
        }
    }

    pub fn relaxed_task(&self) -> &Arc<RelaxedTask> {
        &self.rt
    }

    pub fn pass(&self) -> &RelaxationPass {
        &self.pass
    }

    /// Plan operators from the last successful [`Ff::compute`].
    pub fn plan_ops(&self) -> &[OpId] {
        self.extractor.plan()
    }

    /// h_FF of `state`, or [`INFINITY`] for a relaxed dead end.
    pub fn compute(&mut self, state: &[Value]) -> u64 {
        let before = self.pass.work();
        let outcome = self.pass.run(&self.rt, state, PassMode::Add, false);
        self.work += self.pass.work() - before;
        if outcome.is_dead_end() {
            return INFINITY;
        }
        let (h, steps) = self.extractor.extract(&self.rt, &self.pass);
        self.work += steps;
        h
    }

    /// Full relaxed-plan record, `None` for a relaxed dead end.
    pub fn relaxed_plan(&mut self, state: &[Value]) -> Option<RelaxedPlanResult> {
        let h_ff = self.compute(state);
        if h_ff == INFINITY {
            return None;
        }
        let h_add_per_goal: Vec<_> = self
            .rt
            .goal_facts()
            .iter()
            .map(|&g| {
                (
                    (self.rt.fact_var(g), self.rt.fact_value(g)),
                    self.pass.fact_cost(g),
                )
            })
            .collect();
        let h_add_total = h_add_per_goal
            .iter()
            .fold(0, |acc, &(_, c)| cost::add(acc, c));
        Some(RelaxedPlanResult {
            h_ff,
            plan_ops: self.plan_ops().to_vec(),
            h_add_per_goal,
            h_add_total,
        })
    }
}

impl Heuristic for Ff {
    fn name(&self) -> &str {
        "ff"
    }

    fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError> {
        Ok(HeuristicValue::from_cost(self.compute(state)))
    }

    fn work(&self) -> u64 {
        self.work
    }
}

macro_rules! pass_heuristic {
    ($name:ident, $label:literal, $mode:expr) => {
        pub struct $name {
            rt: RelaxedTask,
            pass: RelaxationPass,
        }

        impl $name {
            pub fn new(task: &Arc<Task>) -> Self {
                let rt = RelaxedTask::new(task);
                let pass = RelaxationPass::new(&rt);
                Self { rt, pass }
            }

            pub fn compute(&mut self, state: &[Value]) -> u64 {
                self.pass.run(&self.rt, state, $mode, false).total
            }
        }

        impl Heuristic for $name {
            fn name(&self) -> &str {
                $label
            }

            fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError> {
                Ok(HeuristicValue::from_cost(self.compute(state)))
            }

            fn work(&self) -> u64 {
                self.pass.work()
            }
        }
    };
}

pass_heuristic!(HAdd, "add", PassMode::Add);
pass_heuristic!(HMax, "hmax", PassMode::Max);

/// Delete-free simulation: applies `ops` in order, accumulating facts, and
/// reports whether every goal holds at the end. Operators whose
/// preconditions are not yet reached make the simulation fail.
pub fn delete_free_reaches_goal(task: &Task, state: &[Value], ops: &[OpId]) -> bool {
    let mut reached: Vec<Vec<bool>> = task
        .variables()
        .iter()
        .map(|v| vec![false; v.domain_size()])
        .collect();
    for (var, &value) in state.iter().enumerate() {
        reached[var][value as usize] = true;
    }
    for &op in ops {
        let operator = task.operator(op);
        if !operator
            .precondition
            .iter()
            .all(|(var, value)| reached[var][value as usize])
        {
            return false;
        }
        for (var, value) in operator.effect.iter() {
            reached[var][value as usize] = true;
        }
    }
    task.goal()
        .iter()
        .all(|(var, value)| reached[var][value as usize])
}
