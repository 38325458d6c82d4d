//! MAP-Elites archives with adaptive binning, the island model, mutation
//! operators and the evolution loop.

mod archive;
mod evolve;
mod islands;
mod mutator;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::heuristics::expr::Definition;
use crate::heuristics::HeuristicFactory;

pub use archive::{Archive, Placement};
pub use evolve::{
    evolve_loop, read_snapshot, resume_loop, run_smoke_check, write_snapshot, EvolveConfig,
    EvolveError, EvolveResult, IterationOutcome, LogRecord, OutcomeHistogram,
};
pub use islands::{IslandSet, Snapshot};
pub use mutator::{IdentityMutator, Mutator, MutatorError, ParametricMutator};

/// Candidate heuristic payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Genome {
    /// Weights of ff, hadd, goalcount and dtg on top of blind.
    Weights([f64; 4]),
    /// Definition text in the heuristic expression language.
    Source(String),
}

impl Genome {
    pub const BLIND: Genome = Genome::Weights([0.0; 4]);

    /// Seed genome by name: `blind` (all-zero weights) or `ff` (unit FF
    /// weight).
    pub fn seed(name: &str) -> Option<Self> {
        match name {
            "blind" => Some(Self::BLIND),
            "ff" => Some(Self::Weights([1.0, 0.0, 0.0, 0.0])),
            _ => None,
        }
    }

    pub fn definition(&self) -> Result<Definition, String> {
        match self {
            Genome::Weights(w) => {
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(format!("weights must be finite and nonnegative: {w:?}"));
                }
                Ok(Definition::parametric(w))
            }
            Genome::Source(text) => Definition::parse(text).map_err(|e| e.to_string()),
        }
    }

    pub fn factory(&self) -> Result<Arc<dyn HeuristicFactory>, String> {
        Ok(Arc::new(self.definition()?))
    }

    /// Text form, loadable as a heuristic definition file.
    pub fn to_source(&self) -> String {
        match self {
            Genome::Weights(_) => match self.definition() {
                Ok(d) => d.source().to_string(),
                Err(e) => format!("# invalid genome: {e}\n"),
            },
            Genome::Source(s) => s.clone(),
        }
    }
}

/// One candidate heuristic with its evaluation and lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u64,
    pub genome: Genome,
    pub score: f64,
    /// `[evals, speed]`.
    pub features: [f64; 2],
    pub parent: Option<u64>,
    pub island: usize,
    pub born: u64,
    pub repairs: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    #[test]
    fn genome_definitions() {
        let task = Arc::new(generators::flip_task());
        for g in [
            Genome::BLIND,
            Genome::seed("ff").unwrap(),
            Genome::Source("h = hmax + 1".into()),
        ] {
            let mut h = g.factory().unwrap().build(&task).unwrap();
            h.evaluate(&[0]).unwrap();
            let again = Genome::Source(g.to_source());
            assert_eq!(
                again.definition().unwrap().expr,
                g.definition().unwrap().expr
            );
        }
        assert!(Genome::Weights([-1.0, 0.0, 0.0, 0.0]).definition().is_err());
        assert!(Genome::Weights([f64::NAN, 0.0, 0.0, 0.0])
            .definition()
            .is_err());
        assert!(Genome::Source("h = (".into()).definition().is_err());
        assert!(Genome::seed("lama").is_none());
    }
}
