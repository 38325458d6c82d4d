//! Finite-domain (SAS+) planning tasks: variables, operators, states and
//! the successor semantics used by every search and heuristic in the crate.

mod sas;

use std::fmt;
use std::ops::Deref;

use thiserror::Error;

pub use sas::{parse_sas, parse_sas_file, parse_sas_str, serialize_sas, write_sas, SasError};

/// Index of a variable inside [`Task::variables`].
pub type VarId = usize;
/// Index of a value inside a variable's domain.
pub type Value = u32;
/// Index of an operator inside [`Task::operators`].
pub type OpId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaskError {
    #[error("variable {var} has an empty domain")]
    EmptyDomain { var: VarId },
    #[error("variable {var} out of range ({num_vars} variables)")]
    UnknownVariable { var: VarId, num_vars: usize },
    #[error("value {value} out of range for variable {var} (domain size {domain_size})")]
    ValueOutOfRange {
        var: VarId,
        value: Value,
        domain_size: usize,
    },
    #[error("variable {var} assigned more than once")]
    DuplicateVariable { var: VarId },
    #[error("initial state has {got} entries, expected {expected}")]
    StateLength { got: usize, expected: usize },
    #[error("operator `{name}` has an empty effect")]
    EmptyEffect { name: String },
    #[error("operator {op} is not applicable in the given state")]
    NotApplicable { op: OpId },
    #[error("operator {op} does not exist")]
    UnknownOperator { op: OpId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub value_names: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, value_names: Vec<String>) -> Self {
        Self {
            name: name.into(),
            value_names,
        }
    }

    /// Variable with anonymous value labels `v0..vN`.
    pub fn anonymous(name: impl Into<String>, domain_size: usize) -> Self {
        Self::new(name, (0..domain_size).map(|i| format!("v{i}")).collect())
    }

    pub fn domain_size(&self) -> usize {
        self.value_names.len()
    }
}

/// Assignment to a subset of the variables, sorted by variable id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PartialAssignment {
    pairs: Vec<(VarId, Value)>,
}

impl PartialAssignment {
    pub fn new(mut pairs: Vec<(VarId, Value)>) -> Result<Self, TaskError> {
        pairs.sort_unstable_by_key(|&(var, _)| var);
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(TaskError::DuplicateVariable { var: w[0].0 });
        }
        Ok(Self { pairs })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[(VarId, Value)] {
        &self.pairs
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Value)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, var: VarId) -> Option<Value> {
        self.pairs
            .binary_search_by_key(&var, |&(v, _)| v)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn contains_var(&self, var: VarId) -> bool {
        self.get(var).is_some()
    }

    /// True iff the assignment agrees with `state` on every variable it mentions.
    pub fn holds_in(&self, state: &[Value]) -> bool {
        self.pairs.iter().all(|&(var, value)| state[var] == value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    pub name: String,
    pub precondition: PartialAssignment,
    pub effect: PartialAssignment,
    pub cost: u64,
}

/// Dense total assignment, one value index per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Box<[Value]>);

impl State {
    pub fn new(values: Vec<Value>) -> Self {
        Self(values.into_boxed_slice())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }
}

impl Deref for State {
    type Target = [Value];

    fn deref(&self) -> &[Value] {
        &self.0
    }
}

impl std::borrow::Borrow<[Value]> for State {
    fn borrow(&self) -> &[Value] {
        &self.0
    }
}

impl From<Vec<Value>> for State {
    fn from(values: Vec<Value>) -> Self {
        Self::new(values)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// An immutable SAS+ planning task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    variables: Vec<Variable>,
    operators: Vec<Operator>,
    initial_state: State,
    goal: PartialAssignment,
    metric_uses_costs: bool,
    min_positive_cost: u64,
}

impl Task {
    /// Validates the components and derives `min_positive_cost`.
    pub fn new(
        variables: Vec<Variable>,
        operators: Vec<Operator>,
        initial_state: State,
        goal: PartialAssignment,
        metric_uses_costs: bool,
    ) -> Result<Self, TaskError> {
        for (var, v) in variables.iter().enumerate() {
            if v.domain_size() == 0 {
                return Err(TaskError::EmptyDomain { var });
            }
        }
        let check = |var: VarId, value: Value| -> Result<(), TaskError> {
            let Some(v) = variables.get(var) else {
                return Err(TaskError::UnknownVariable {
                    var,
                    num_vars: variables.len(),
                });
            };
            if value as usize >= v.domain_size() {
                return Err(TaskError::ValueOutOfRange {
                    var,
                    value,
                    domain_size: v.domain_size(),
                });
            }
            Ok(())
        };
        if initial_state.len() != variables.len() {
            return Err(TaskError::StateLength {
                got: initial_state.len(),
                expected: variables.len(),
            });
        }
        for (var, &value) in initial_state.iter().enumerate() {
            check(var, value)?;
        }
        for (var, value) in goal.iter() {
            check(var, value)?;
        }
        for op in &operators {
            if op.effect.is_empty() {
                return Err(TaskError::EmptyEffect {
                    name: op.name.clone(),
                });
            }
            for (var, value) in op.precondition.iter().chain(op.effect.iter()) {
                check(var, value)?;
            }
        }
        let min_positive_cost = operators
            .iter()
            .map(|op| op.cost)
            .filter(|&c| c > 0)
            .min()
            .unwrap_or(1);
        Ok(Self {
            variables,
            operators,
            initial_state,
            goal,
            metric_uses_costs,
            min_positive_cost,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn operator(&self, op: OpId) -> &Operator {
        &self.operators[op]
    }

    pub fn initial_state(&self) -> &State {
        &self.initial_state
    }

    pub fn goal(&self) -> &PartialAssignment {
        &self.goal
    }

    pub fn metric_uses_costs(&self) -> bool {
        self.metric_uses_costs
    }

    /// Smallest strictly positive operator cost, or 1 when there is none.
    pub fn min_positive_cost(&self) -> u64 {
        self.min_positive_cost
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_operators(&self) -> usize {
        self.operators.len()
    }

    pub fn is_goal(&self, state: &[Value]) -> bool {
        self.goal.holds_in(state)
    }

    pub fn is_applicable(&self, state: &[Value], op: OpId) -> bool {
        self.operators[op].precondition.holds_in(state)
    }

    /// Ids of all operators applicable in `state`, ascending.
    pub fn applicable_operators(&self, state: &[Value]) -> Vec<OpId> {
        let mut out = Vec::new();
        self.applicable_operators_into(state, &mut out);
        out
    }

    pub fn applicable_operators_into(&self, state: &[Value], out: &mut Vec<OpId>) {
        out.clear();
        out.extend(
            self.operators
                .iter()
                .enumerate()
                .filter(|(_, op)| op.precondition.holds_in(state))
                .map(|(id, _)| id),
        );
    }

    /// Successor of `state` under `op`; the input is left untouched.
    pub fn apply(&self, state: &[Value], op: OpId) -> Result<State, TaskError> {
        let operator = self
            .operators
            .get(op)
            .ok_or(TaskError::UnknownOperator { op })?;
        if !operator.precondition.holds_in(state) {
            return Err(TaskError::NotApplicable { op });
        }
        Ok(self.apply_unchecked(state, op))
    }

    /// Successor without the applicability check.
    pub fn apply_unchecked(&self, state: &[Value], op: OpId) -> State {
        let mut values = state.to_vec();
        for (var, value) in self.operators[op].effect.iter() {
            values[var] = value;
        }
        State::new(values)
    }

    /// Whether `state` has the right width and every value is in range.
    pub fn is_valid_state(&self, state: &[Value]) -> bool {
        state.len() == self.variables.len()
            && state
                .iter()
                .zip(&self.variables)
                .all(|(&v, var)| (v as usize) < var.domain_size())
    }

    pub fn is_goal_var(&self, var: VarId) -> bool {
        self.goal.contains_var(var)
    }

    /// Sum of operator costs along `plan`.
    pub fn plan_cost(&self, plan: &[OpId]) -> u64 {
        plan.iter().map(|&op| self.operators[op].cost).sum()
    }

    /// Copy of this task with operators permuted as `order` dictates.
    pub fn with_operator_order(&self, order: &[OpId]) -> Self {
        let mut copy = self.clone();
        copy.operators = order.iter().map(|&i| self.operators[i].clone()).collect();
        copy
    }
}
