use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{MatrixError, OutcomeMatrix};

/// Label of the reference heuristic in matrices.
pub const FF_LABEL: &str = "ff";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CactusRow {
    pub heuristic: String,
    pub time: f64,
    pub solved: usize,
}

/// Per heuristic, solve times ascending with the running solved count.
pub fn cactus(m: &OutcomeMatrix) -> Vec<CactusRow> {
    let mut out = Vec::new();
    for h in m.heuristics() {
        let mut times: Vec<f64> = m
            .rows
            .iter()
            .filter(|r| r.heuristic == h && r.solved())
            .map(|r| r.wall_time)
            .collect();
        times.sort_by(f64::total_cmp);
        for (i, t) in times.into_iter().enumerate() {
            out.push(CactusRow {
                heuristic: h.clone(),
                time: t,
                solved: i + 1,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub heuristic: String,
    pub informedness: f64,
    pub speed: f64,
    pub coverage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub rows: Vec<ParetoRow>,
    /// Heuristics dropped for solving fewer than a third of the tasks.
    pub excluded: Vec<String>,
    pub common_tasks: usize,
    pub warning: Option<String>,
}

fn geomean(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp()
}

/// Informedness and speed relative to FF. Heuristics solving fewer than a
/// third of all tasks are left out; the rest are compared on the tasks
/// every one of them solves. Informedness is the geometric mean of
/// `e_ff / e_h`, speed that of `(e_h / t_h) / (e_ff / t_ff)`.
pub fn pareto(m: &OutcomeMatrix) -> Result<ParetoReport, MatrixError> {
    let tasks = m.tasks();
    let n = tasks.len();
    let hs = m.heuristics();
    if !hs.iter().any(|h| h == FF_LABEL) {
        return Err(MatrixError::Incomplete(format!(
            "no `{FF_LABEL}` rows to normalize by"
        )));
    }
    let coverage = |h: &str| {
        m.rows
            .iter()
            .filter(|r| r.heuristic == h && r.solved())
            .count()
    };
    let (kept, excluded): (Vec<String>, Vec<String>) = hs
        .into_iter()
        .partition(|h| h == FF_LABEL || 3 * coverage(h) >= n);
    let common: Vec<&(String, String)> = tasks
        .iter()
        .filter(|t| kept.iter().all(|h| m.get(h, t).is_some_and(|r| r.solved())))
        .collect();
    if common.is_empty() {
        return Ok(ParetoReport {
            rows: Vec::new(),
            excluded,
            common_tasks: 0,
            warning: Some("no task is solved by every remaining heuristic; report is empty".into()),
        });
    }
    let rate = |e: u64, t: f64| e as f64 / t.max(1e-9);
    let rows = kept
        .iter()
        .map(|h| {
            let mut inf = Vec::with_capacity(common.len());
            let mut spd = Vec::with_capacity(common.len());
            for t in &common {
                let ff = m.get(FF_LABEL, t).expect("common task");
                let r = m.get(h, t).expect("common task");
                inf.push(ff.evaluations as f64 / r.evaluations.max(1) as f64);
                spd.push(rate(r.evaluations, r.wall_time) / rate(ff.evaluations, ff.wall_time));
            }
            ParetoRow {
                heuristic: h.clone(),
                informedness: if h == FF_LABEL { 1.0 } else { geomean(&inf) },
                speed: if h == FF_LABEL { 1.0 } else { geomean(&spd) },
                coverage: coverage(h),
            }
        })
        .collect();
    Ok(ParetoReport {
        rows,
        excluded,
        common_tasks: common.len(),
        warning: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub heuristics: Vec<String>,
    /// `|A ∩ B| / |A ∪ B|` over solved sets, 1 when both are empty.
    pub jaccard: Vec<Vec<f64>>,
    /// Share of all tasks solved by the row heuristic but not the column.
    pub domination: Vec<Vec<f64>>,
}

pub fn similarity(m: &OutcomeMatrix) -> SimilarityReport {
    let hs = m.heuristics();
    let n = m.tasks().len();
    let sets: Vec<BTreeSet<(String, String)>> = hs
        .iter()
        .map(|h| {
            m.rows
                .iter()
                .filter(|r| &r.heuristic == h && r.solved())
                .map(|r| r.task_key())
                .collect()
        })
        .collect();
    let k = hs.len();
    let mut jaccard = vec![vec![0.0; k]; k];
    let mut domination = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let inter = sets[i].intersection(&sets[j]).count();
            let union = sets[i].union(&sets[j]).count();
            jaccard[i][j] = if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            };
            domination[i][j] = if n == 0 {
                0.0
            } else {
                sets[i].difference(&sets[j]).count() as f64 / n as f64
            };
        }
    }
    SimilarityReport {
        heuristics: hs,
        jaccard,
        domination,
    }
}

fn write_csv<T: Serialize>(rows: &[T], header: &[&str], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cactus_csv(rows: &[CactusRow], out: impl Write) -> Result<(), csv::Error> {
    write_csv(rows, &["heuristic", "time", "solved"], out)
}

impl ParetoReport {
    pub fn write_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        write_csv(
            &self.rows,
            &["heuristic", "informedness", "speed", "coverage"],
            out,
        )
    }
}

impl SimilarityReport {
    fn write_square(&self, m: &[Vec<f64>], out: impl Write) -> Result<(), csv::Error> {
        let mut header = vec!["heuristic"];
        header.extend(self.heuristics.iter().map(String::as_str));
        let rows: Vec<(&str, &[f64])> = self
            .heuristics
            .iter()
            .map(String::as_str)
            .zip(m.iter().map(Vec::as_slice))
            .collect();
        write_csv(&rows, &header, out)
    }

    pub fn write_jaccard_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        self.write_square(&self.jaccard, out)
    }

    pub fn write_domination_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        self.write_square(&self.domination, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::matrix::tests::row;

    fn csv_text(f: impl FnOnce(&mut Vec<u8>)) -> String {
        let mut buf = Vec::new();
        f(&mut buf);
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn cactus_rows() {
        let m = OutcomeMatrix::new(vec![
            row("a", "t1", true, 5.0, 1),
            row("a", "t2", true, 1.0, 1),
            row("a", "t3", false, 9.0, 1),
            row("b", "t1", false, 9.0, 1),
            row("b", "t2", false, 9.0, 1),
            row("b", "t3", false, 9.0, 1),
        ]);
        let c = cactus(&m);
        let pairs: Vec<(&str, f64, usize)> = c
            .iter()
            .map(|r| (r.heuristic.as_str(), r.time, r.solved))
            .collect();
        assert_eq!(pairs, vec![("a", 1.0, 1), ("a", 5.0, 2)]);
        let text = csv_text(|b| write_cactus_csv(&c, b).unwrap());
        assert_eq!(text, "heuristic,time,solved\na,1.0,1\na,5.0,2\n");
    }

    #[test]
    fn pareto_ff_is_unit_and_half_evals_doubles() {
        let m = OutcomeMatrix::new(vec![
            row("ff", "t1", true, 1.0, 100),
            row("ff", "t2", true, 2.0, 40),
            row("h", "t1", true, 1.0, 50),
            row("h", "t2", true, 4.0, 20),
        ]);
        let p = pareto(&m).unwrap();
        assert_eq!(p.rows[0].informedness, 1.0);
        assert_eq!(p.rows[0].speed, 1.0);
        assert!((p.rows[1].informedness - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pareto_hand_computed() {
        // FF: (e, t) = (100, 1), (200, 4), (50, 0.5)
        // h:          (25, 1),  (400, 2), (50, 2)
        // informedness = (4 * 0.5 * 1)^(1/3) = 2^(1/3)
        // speed ratios: (25/1)/(100/1) = 0.25, (400/2)/(200/4) = 4,
        //               (50/2)/(50/0.5) = 0.25 -> (0.25 * 4 * 0.25)^(1/3)
        let m = OutcomeMatrix::new(vec![
            row("ff", "t1", true, 1.0, 100),
            row("ff", "t2", true, 4.0, 200),
            row("ff", "t3", true, 0.5, 50),
            row("h", "t1", true, 1.0, 25),
            row("h", "t2", true, 2.0, 400),
            row("h", "t3", true, 2.0, 50),
        ]);
        let p = pareto(&m).unwrap();
        assert_eq!(p.common_tasks, 3);
        assert!((p.rows[1].informedness - 2f64.powf(1.0 / 3.0)).abs() < 1e-9);
        assert!((p.rows[1].speed - 0.25f64.powf(1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn pareto_coverage_filter_and_common_tasks() {
        // 6 tasks: "low" solves 1 (< 2 = a third) and is excluded; "mid"
        // solves exactly 2 and stays; common tasks are those all kept
        // heuristics solve.
        let mut rows = Vec::new();
        for t in 1..=6 {
            let name = format!("t{t}");
            rows.push(row("ff", &name, true, 1.0, 10));
            rows.push(row("low", &name, t == 3, 1.0, 10));
            rows.push(row("mid", &name, t <= 2, 1.0, 5));
        }
        let p = pareto(&OutcomeMatrix::new(rows)).unwrap();
        assert_eq!(p.excluded, vec!["low".to_string()]);
        assert_eq!(p.common_tasks, 2);
        assert_eq!(p.rows.len(), 2);
        assert!((p.rows[1].informedness - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pareto_empty_common_set_warns() {
        let m = OutcomeMatrix::new(vec![
            row("ff", "t1", true, 1.0, 10),
            row("ff", "t2", false, 1.0, 10),
            row("h", "t1", false, 1.0, 10),
            row("h", "t2", true, 1.0, 10),
        ]);
        let p = pareto(&m).unwrap();
        assert!(p.rows.is_empty());
        assert!(p.warning.is_some());
        let text = csv_text(|b| p.write_csv(b).unwrap());
        assert_eq!(text, "heuristic,informedness,speed,coverage\n");
        let no_ff = OutcomeMatrix::new(vec![row("h", "t1", true, 1.0, 1)]);
        assert!(pareto(&no_ff).is_err());
    }

    #[test]
    fn similarity_cases() {
        let m = OutcomeMatrix::new(vec![
            row("a", "t1", true, 1.0, 1),
            row("a", "t2", true, 1.0, 1),
            row("a", "t3", false, 1.0, 1),
            row("a", "t4", false, 1.0, 1),
            row("b", "t1", true, 1.0, 1),
            row("b", "t2", false, 1.0, 1),
            row("b", "t3", false, 1.0, 1),
            row("b", "t4", false, 1.0, 1),
            row("c", "t1", false, 1.0, 1),
            row("c", "t2", false, 1.0, 1),
            row("c", "t3", true, 1.0, 1),
            row("c", "t4", false, 1.0, 1),
            row("e", "t1", false, 1.0, 1),
            row("e", "t2", false, 1.0, 1),
            row("e", "t3", false, 1.0, 1),
            row("e", "t4", false, 1.0, 1),
        ]);
        let s = similarity(&m);
        let k = s.heuristics.len();
        for i in 0..k {
            assert_eq!(s.jaccard[i][i], 1.0);
            assert_eq!(s.domination[i][i], 0.0);
            for j in 0..k {
                assert_eq!(s.jaccard[i][j], s.jaccard[j][i]);
            }
        }
        // a ⊃ b
        assert_eq!(s.domination[0][1], 0.25);
        assert_eq!(s.domination[1][0], 0.0);
        assert_eq!(s.jaccard[0][1], 0.5);
        // disjoint
        assert_eq!(s.jaccard[0][2], 0.0);
        // empty vs empty on the diagonal, empty vs nonempty off it
        assert_eq!(s.jaccard[3][3], 1.0);
        assert_eq!(s.jaccard[3][0], 0.0);
        let text = csv_text(|b| s.write_jaccard_csv(b).unwrap());
        assert!(
            text.starts_with("heuristic,a,b,c,e\na,1.0,0.5,0.0,0.0\n"),
            "{text}"
        );
    }
}
