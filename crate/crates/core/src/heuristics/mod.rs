//! Heuristic interface, baseline estimators, the four evolved heuristics and
//! the expression language used for evolved definitions.

mod baseline;
pub mod evolved;
pub mod expr;
pub mod relaxation;
mod scratch;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::task::{Task, Value};

pub use baseline::{Blind, GoalCount};
pub use relaxation::{
    Ff, HAdd, HMax, PassMode, PassOutcome, RelaxationPass, RelaxedPlanResult, RelaxedTask,
};
pub use scratch::{GenerationScratch, StampedSlots};

/// Goal-distance estimate: a finite cost or a proven dead end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeuristicValue {
    Finite(u64),
    DeadEnd,
}

impl HeuristicValue {
    pub fn is_dead_end(self) -> bool {
        matches!(self, Self::DeadEnd)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::DeadEnd => None,
        }
    }

    /// Maps [`crate::cost::INFINITY`] to `DeadEnd`.
    pub fn from_cost(c: u64) -> Self {
        if c == crate::cost::INFINITY {
            Self::DeadEnd
        } else {
            Self::Finite(c)
        }
    }
}

impl fmt::Display for HeuristicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::DeadEnd => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("heuristic evaluation failed: {0}")]
pub struct EvalError(pub String);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("unknown heuristic `{0}`")]
    Unknown(String),
    #[error("invalid heuristic definition: {0}")]
    Definition(String),
    #[error("heuristic setup failed: {0}")]
    Setup(String),
}

/// A goal-distance estimator bound to one task.
///
/// Instances own their scratch buffers and are not shared while evaluating.
pub trait Heuristic: Send {
    fn name(&self) -> &str;

    fn evaluate(&mut self, state: &[Value]) -> Result<HeuristicValue, EvalError>;

    /// Cumulative count of elementary steps performed so far, setup included.
    /// Drives the deterministic virtual clock.
    fn work(&self) -> u64 {
        0
    }
}

/// Builds a heuristic for a given task (the heuristic's `initialize`).
pub trait HeuristicFactory: Send + Sync {
    fn name(&self) -> String;

    fn build(&self, task: &Arc<Task>) -> Result<Box<dyn Heuristic>, BuildError>;
}

/// The built-in heuristics, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    Blind,
    GoalCount,
    HMax,
    HAdd,
    Ff,
    EvolvedBlindMedium2,
    EvolvedFfNone3,
    EvolvedBlindNone3,
    EvolvedBlindMediumConf,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 9] = [
        Self::Blind,
        Self::GoalCount,
        Self::HMax,
        Self::HAdd,
        Self::Ff,
        Self::EvolvedBlindMedium2,
        Self::EvolvedFfNone3,
        Self::EvolvedBlindNone3,
        Self::EvolvedBlindMediumConf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Blind => "blind",
            Self::GoalCount => "goalcount",
            Self::HMax => "hmax",
            Self::HAdd => "add",
            Self::Ff => "ff",
            Self::EvolvedBlindMedium2 => "evolved-blind-medium-2",
            Self::EvolvedFfNone3 => "evolved-ff-none-3",
            Self::EvolvedBlindNone3 => "evolved-blind-none-3",
            Self::EvolvedBlindMediumConf => "evolved-blind-medium-conf",
        }
    }

    pub fn instantiate(self, task: &Arc<Task>) -> Box<dyn Heuristic> {
        match self {
            Self::Blind => Box::new(Blind::new(task.clone())),
            Self::GoalCount => Box::new(GoalCount::new(task.clone())),
            Self::HMax => Box::new(HMax::new(task)),
            Self::HAdd => Box::new(HAdd::new(task)),
            Self::Ff => Box::new(Ff::new(task)),
            Self::EvolvedBlindMedium2 => Box::new(evolved::BlindMedium2::new(task)),
            Self::EvolvedFfNone3 => Box::new(evolved::FfNone3::new(task)),
            Self::EvolvedBlindNone3 => Box::new(evolved::BlindNone3::new(task)),
            Self::EvolvedBlindMediumConf => Box::new(evolved::BlindMediumConf::new(task)),
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicKind {
    type Err = BuildError;

    fn from_str(s: &str) -> Result<Self, BuildError> {
        let s = s.trim();
        let alias = match s {
            "hadd" => Some(Self::HAdd),
            "h_max" => Some(Self::HMax),
            "h_add" => Some(Self::HAdd),
            "ev-bl-m-2" => Some(Self::EvolvedBlindMedium2),
            "ev-ff-n-3" => Some(Self::EvolvedFfNone3),
            "ev-bl-n-3" => Some(Self::EvolvedBlindNone3),
            "ev-bl-conf" => Some(Self::EvolvedBlindMediumConf),
            _ => None,
        };
        alias
            .or_else(|| Self::ALL.into_iter().find(|k| k.as_str() == s))
            .ok_or_else(|| BuildError::Unknown(s.to_string()))
    }
}

impl HeuristicFactory for HeuristicKind {
    fn name(&self) -> String {
        self.as_str().to_string()
    }

    fn build(&self, task: &Arc<Task>) -> Result<Box<dyn Heuristic>, BuildError> {
        Ok(self.instantiate(task))
    }
}

/// Resolves a heuristic spec: a built-in name, or `file:<path>` pointing at a
/// definition in the expression language.
pub fn resolve(spec: &str) -> Result<Arc<dyn HeuristicFactory>, BuildError> {
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BuildError::Definition(format!("{path}: {e}")))?;
        let def = expr::Definition::parse(&text)?;
        return Ok(Arc::new(def));
    }
    Ok(Arc::new(spec.parse::<HeuristicKind>()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for kind in HeuristicKind::ALL {
            assert_eq!(kind.as_str().parse::<HeuristicKind>().unwrap(), kind);
        }
        assert_eq!(
            "hadd".parse::<HeuristicKind>().unwrap(),
            HeuristicKind::HAdd
        );
        assert!(matches!(
            "lmcut".parse::<HeuristicKind>(),
            Err(BuildError::Unknown(_))
        ));
    }

    #[test]
    fn dead_end_orders_above_finite_values() {
        assert!(HeuristicValue::DeadEnd > HeuristicValue::Finite(u64::MAX - 1));
        assert_eq!(
            HeuristicValue::from_cost(crate::cost::INFINITY),
            HeuristicValue::DeadEnd
        );
        assert_eq!(HeuristicValue::from_cost(4).finite(), Some(4));
    }
}
