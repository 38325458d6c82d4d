use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::{Outcome, SearchResult};

/// Coarse outcome used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeClass {
    #[serde(rename = "SOLVED")]
    Solved,
    #[serde(rename = "OOT")]
    Oot,
    #[serde(rename = "OOM")]
    Oom,
    #[serde(rename = "OTHER")]
    Other,
}

impl From<Outcome> for OutcomeClass {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Solved => Self::Solved,
            Outcome::OutOfTime => Self::Oot,
            Outcome::OutOfMemory => Self::Oom,
            Outcome::DeadEndFalse | Outcome::Crash | Outcome::Unsolvable => Self::Other,
        }
    }
}

/// One (heuristic, task) cell of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub heuristic: String,
    pub domain: String,
    pub task: String,
    pub class: OutcomeClass,
    pub outcome: Outcome,
    pub wall_time: f64,
    pub evaluations: u64,
    pub expansions: u64,
    pub plan_cost: Option<u64>,
    pub detail: String,
}

impl MatrixRow {
    pub fn from_result(heuristic: &str, domain: &str, task: &str, r: &SearchResult) -> Self {
        Self {
            heuristic: heuristic.into(),
            domain: domain.into(),
            task: task.into(),
            class: r.outcome.into(),
            outcome: r.outcome,
            wall_time: r.wall_time,
            evaluations: r.evaluations,
            expansions: r.expansions,
            plan_cost: r.plan.as_ref().map(|_| r.plan_cost),
            detail: r.detail.clone().unwrap_or_default(),
        }
    }

    pub fn solved(&self) -> bool {
        self.class == OutcomeClass::Solved
    }

    pub fn task_key(&self) -> (String, String) {
        (self.domain.clone(), self.task.clone())
    }
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("matrix is not a full rectangle: {0}")]
    Incomplete(String),
}

/// Per (heuristic, task) outcomes in run order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMatrix {
    pub rows: Vec<MatrixRow>,
}

impl OutcomeMatrix {
    pub fn new(rows: Vec<MatrixRow>) -> Self {
        Self { rows }
    }

    /// Heuristic labels in first-appearance order.
    pub fn heuristics(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.heuristic) {
                out.push(r.heuristic.clone());
            }
        }
        out
    }

    /// `(domain, task)` pairs in first-appearance order.
    pub fn tasks(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let k = r.task_key();
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out
    }

    pub fn get(&self, heuristic: &str, task: &(String, String)) -> Option<&MatrixRow> {
        self.rows
            .iter()
            .find(|r| r.heuristic == heuristic && r.domain == task.0 && r.task == task.1)
    }

    /// Checks that every heuristic has exactly one row per task.
    pub fn validate(&self) -> Result<(), MatrixError> {
        let hs = self.heuristics();
        let ts = self.tasks();
        if self.rows.len() != hs.len() * ts.len() {
            return Err(MatrixError::Incomplete(format!(
                "{} rows for {} heuristics x {} tasks",
                self.rows.len(),
                hs.len(),
                ts.len()
            )));
        }
        for h in &hs {
            for t in &ts {
                if self.get(h, t).is_none() {
                    return Err(MatrixError::Incomplete(format!(
                        "{h} missing {}/{}",
                        t.0, t.1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), MatrixError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "heuristic",
                "domain",
                "task",
                "class",
                "outcome",
                "wall_time",
                "evaluations",
                "expansions",
                "plan_cost",
                "detail",
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv(input: impl Read) -> Result<Self, MatrixError> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r.deserialize().collect::<Result<Vec<MatrixRow>, _>>()?;
        Ok(Self { rows })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn row(h: &str, task: &str, solved: bool, time: f64, evals: u64) -> MatrixRow {
        let outcome = if solved {
            Outcome::Solved
        } else {
            Outcome::OutOfTime
        };
        MatrixRow {
            heuristic: h.into(),
            domain: "d".into(),
            task: task.into(),
            class: outcome.into(),
            outcome,
            wall_time: time,
            evaluations: evals,
            expansions: evals.saturating_sub(1),
            plan_cost: solved.then_some(3),
            detail: String::new(),
        }
    }

    #[test]
    fn classes() {
        assert_eq!(OutcomeClass::from(Outcome::Solved), OutcomeClass::Solved);
        assert_eq!(OutcomeClass::from(Outcome::OutOfTime), OutcomeClass::Oot);
        assert_eq!(OutcomeClass::from(Outcome::OutOfMemory), OutcomeClass::Oom);
        for o in [Outcome::DeadEndFalse, Outcome::Crash, Outcome::Unsolvable] {
            assert_eq!(OutcomeClass::from(o), OutcomeClass::Other);
        }
    }

    #[test]
    fn csv_round_trip_and_rectangle() {
        let m = OutcomeMatrix::new(vec![
            row("ff", "t1", true, 0.5, 10),
            row("ff", "t2", false, 2.0, 99),
            row("blind", "t1", true, 1.25, 40),
            row("blind", "t2", false, 2.0, 500),
        ]);
        m.validate().unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "heuristic,domain,task,class,outcome,wall_time,evaluations,expansions,plan_cost,detail\n"
        ));
        assert!(text.contains("ff,d,t1,SOLVED,SOLVED,0.5,10,9,3,"));
        assert!(text.contains("ff,d,t2,OOT,OUT_OF_TIME,2.0,99,98,,"));
        assert_eq!(OutcomeMatrix::read_csv(&buf[..]).unwrap(), m);
        let mut partial = m.clone();
        partial.rows.pop();
        assert!(partial.validate().is_err());
    }
}
