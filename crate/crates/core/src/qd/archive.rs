use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Individual;

/// Where an insertion landed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub cell: (usize, usize),
    pub placed: bool,
    /// Bounds grew and all elites were re-mapped.
    pub rebinned: bool,
    /// Elites lost during this insertion (replaced or squeezed out by
    /// re-binning).
    pub displaced: Vec<u64>,
}

/// MAP-Elites grid over two features. Bin edges are spaced evenly between
/// the lowest and highest values seen so far in each dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    dims: [usize; 2],
    bounds: Option<[(f64, f64); 2]>,
    #[serde(with = "cell_list")]
    cells: BTreeMap<(usize, usize), Individual>,
    log: Vec<(u64, Placement)>,
}

// JSON object keys must be strings, so cells go out as a list of pairs.
mod cell_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    type Cells = BTreeMap<(usize, usize), Individual>;

    pub fn serialize<S: Serializer>(cells: &Cells, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(cells.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Cells, D::Error> {
        let v: Vec<((usize, usize), Individual)> = Vec::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

/// `a` beats `b`: higher score, then lower id.
fn beats(a: &Individual, b: &Individual) -> bool {
    a.score > b.score || (a.score == b.score && a.id < b.id)
}

impl Archive {
    pub fn new(dims: [usize; 2]) -> Self {
        assert!(dims[0] > 0 && dims[1] > 0);
        Self {
            dims,
            bounds: None,
            cells: BTreeMap::new(),
            log: Vec::new(),
        }
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn bounds(&self) -> Option<[(f64, f64); 2]> {
        self.bounds
    }

    /// Every insertion with its placement, in order.
    pub fn insertion_log(&self) -> &[(u64, Placement)] {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Elites in cell order.
    pub fn elites(&self) -> impl Iterator<Item = (&(usize, usize), &Individual)> + '_ {
        self.cells.iter()
    }

    pub fn get(&self, cell: (usize, usize)) -> Option<&Individual> {
        self.cells.get(&cell)
    }

    pub fn contains_id(&self, id: u64) -> bool {
        self.cells.values().any(|e| e.id == id)
    }

    /// Highest score, lowest id on ties.
    pub fn best(&self) -> Option<&Individual> {
        self.cells
            .values()
            .fold(None, |acc: Option<&Individual>, e| match acc {
                Some(b) if !beats(e, b) => Some(b),
                _ => Some(e),
            })
    }

    /// Top `k` elites by score (ties by id), leaving out `exclude`.
    pub fn top(&self, k: usize, exclude: Option<u64>) -> Vec<Individual> {
        let mut all: Vec<&Individual> = self
            .cells
            .values()
            .filter(|e| Some(e.id) != exclude)
            .collect();
        all.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
        all.into_iter().take(k).cloned().collect()
    }

    /// Cell of `features` under the current bounds. Degenerate bounds map
    /// to bin 0.
    pub fn cell_of(&self, features: [f64; 2]) -> (usize, usize) {
        let Some(bounds) = self.bounds else {
            return (0, 0);
        };
        let bin = |d: usize| {
            let (lo, hi) = bounds[d];
            if hi <= lo {
                return 0;
            }
            let x = ((features[d] - lo) / (hi - lo) * self.dims[d] as f64).floor();
            (x.max(0.0) as usize).min(self.dims[d] - 1)
        };
        (bin(0), bin(1))
    }

    fn place(&mut self, ind: Individual, displaced: &mut Vec<u64>) -> ((usize, usize), bool) {
        let cell = self.cell_of(ind.features);
        match self.cells.get(&cell) {
            Some(inc) if !beats(&ind, inc) => {
                displaced.push(ind.id);
                (cell, false)
            }
            _ => {
                if let Some(old) = self.cells.insert(cell, ind) {
                    displaced.push(old.id);
                }
                (cell, true)
            }
        }
    }

    /// Inserts an evaluated individual. Bounds grow to include its features;
    /// if they changed, every elite is re-mapped and cell collisions keep
    /// the higher score. The individual takes its cell only if it beats the
    /// incumbent (a tie keeps the incumbent).
    pub fn insert(&mut self, ind: Individual) -> Placement {
        let f = ind.features;
        let id = ind.id;
        let new_bounds = match self.bounds {
            None => [(f[0], f[0]), (f[1], f[1])],
            Some(b) => [
                (b[0].0.min(f[0]), b[0].1.max(f[0])),
                (b[1].0.min(f[1]), b[1].1.max(f[1])),
            ],
        };
        let rebinned = self.bounds.is_some() && self.bounds != Some(new_bounds);
        self.bounds = Some(new_bounds);
        let mut displaced = Vec::new();
        if rebinned {
            let mut elites: Vec<Individual> =
                std::mem::take(&mut self.cells).into_values().collect();
            elites.sort_by_key(|e| e.id);
            for e in elites {
                self.place(e, &mut displaced);
            }
        }
        let cell = self.cell_of(f);
        let placed = match self.cells.get(&cell) {
            Some(inc) => ind.score > inc.score,
            None => true,
        };
        if placed {
            if let Some(old) = self.cells.insert(cell, ind) {
                displaced.push(old.id);
            }
        }
        let p = Placement {
            cell,
            placed,
            rebinned,
            displaced,
        };
        self.log.push((id, p.clone()));
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qd::Genome;

    pub(crate) fn ind(id: u64, score: f64, evals: f64, speed: f64) -> Individual {
        Individual {
            id,
            genome: Genome::BLIND,
            score,
            features: [evals, speed],
            parent: None,
            island: 0,
            born: 0,
            repairs: 0,
        }
    }

    #[test]
    fn first_insert_degenerate_bounds() {
        let mut a = Archive::new([4, 4]);
        let p = a.insert(ind(0, 0.3, 2.0, 100.0));
        assert_eq!(p.cell, (0, 0));
        assert!(p.placed && !p.rebinned);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn lower_score_same_cell_keeps_incumbent() {
        let mut a = Archive::new([4, 4]);
        a.insert(ind(0, 0.5, 1.0, 1.0));
        let p = a.insert(ind(1, 0.4, 1.0, 1.0));
        assert!(!p.placed);
        assert_eq!(a.get((0, 0)).unwrap().id, 0);
        // equal score: incumbent stays
        let p = a.insert(ind(2, 0.5, 1.0, 1.0));
        assert!(!p.placed);
        let p = a.insert(ind(3, 0.6, 1.0, 1.0));
        assert!(p.placed);
        assert_eq!(p.displaced, vec![0]);
    }

    #[test]
    fn rebinning_collision_keeps_higher_score() {
        // Hand computation. A: evals 1, speed 0; B: evals 1, speed 10.
        // Bounds speed [0, 10], evals [1, 1]: A -> (0, 0), B -> (0, 3).
        // C: evals 1, speed 100 stretches speed to [0, 100]; edges at
        // 25/50/75 put A and B both in (0, 0) and C in (0, 3).
        let mut a = Archive::new([4, 4]);
        a.insert(ind(0, 0.2, 1.0, 0.0));
        let p = a.insert(ind(1, 0.7, 1.0, 10.0));
        assert_eq!(p.cell, (0, 3));
        assert!(p.rebinned);
        let p = a.insert(ind(2, 0.1, 1.0, 100.0));
        assert!(p.rebinned);
        assert_eq!(p.cell, (0, 3));
        assert_eq!(p.displaced, vec![0]);
        assert_eq!(a.get((0, 0)).unwrap().id, 1);
        assert_eq!(a.get((0, 3)).unwrap().id, 2);
        assert_eq!(a.best().unwrap().id, 1);
    }

    #[test]
    fn top_excludes_parent() {
        let mut a = Archive::new([4, 4]);
        a.insert(ind(0, 0.1, 0.0, 0.0));
        a.insert(ind(1, 0.9, 3.0, 3.0));
        a.insert(ind(2, 0.5, 3.0, 0.0));
        a.insert(ind(3, 0.7, 0.0, 3.0));
        let top: Vec<u64> = a.top(3, Some(1)).iter().map(|e| e.id).collect();
        assert_eq!(top, vec![3, 2, 0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn archive_maximum_never_lost(
                pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..10.0, 0.0f64..1000.0), 1..60)
            ) {
                let mut a = Archive::new([4, 4]);
                let mut best = f64::NEG_INFINITY;
                let mut prev_best = f64::NEG_INFINITY;
                let mut seen: Vec<Individual> = Vec::new();
                for (i, (s, e, v)) in pts.into_iter().enumerate() {
                    let x = ind(i as u64, s, e, v);
                    seen.push(x.clone());
                    a.insert(x);
                    best = best.max(s);
                    let got = a.best().unwrap().score;
                    prop_assert_eq!(got, best);
                    prop_assert!(got >= prev_best);
                    prev_best = got;
                    // elites sit in their own cell and beat everything
                    // inserted since the last re-bin that maps there
                    let since = a.insertion_log().iter().rposition(|(_, p)| p.rebinned).unwrap_or(0);
                    let recent: Vec<u64> = a.insertion_log()[since..].iter().map(|(id, _)| *id).collect();
                    for (cell, elite) in a.elites() {
                        prop_assert_eq!(a.cell_of(elite.features), *cell);
                        for y in seen.iter().filter(|y| recent.contains(&y.id)) {
                            if a.cell_of(y.features) == *cell {
                                prop_assert!(y.score <= elite.score);
                            }
                        }
                    }
                }
            }
        }
    }
}
