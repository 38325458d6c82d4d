use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Archive, Individual, Placement};

/// Archives exchanged between islands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandSet {
    islands: Vec<Archive>,
    cursor: usize,
    migration_interval: u64,
    iterations: Vec<u64>,
}

/// Resumable dump of all archives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: u64,
    pub next_id: u64,
    pub islands: IslandSet,
}

impl IslandSet {
    pub fn new(count: usize, dims: [usize; 2], migration_interval: u64) -> Self {
        assert!(count > 0, "need at least one island");
        assert!(migration_interval > 0);
        Self {
            islands: vec![Archive::new(dims); count],
            cursor: 0,
            migration_interval,
            iterations: vec![0; count],
        }
    }

    pub fn len(&self) -> usize {
        self.islands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.islands.iter().all(Archive::is_empty)
    }

    pub fn island(&self, i: usize) -> &Archive {
        &self.islands[i]
    }

    pub fn islands(&self) -> &[Archive] {
        &self.islands
    }

    pub fn insert(&mut self, island: usize, ind: Individual) -> Placement {
        self.islands[island].insert(ind)
    }

    /// Best across all islands.
    pub fn best(&self) -> Option<&Individual> {
        self.islands
            .iter()
            .filter_map(Archive::best)
            .fold(None, |acc: Option<&Individual>, e| match acc {
                Some(b) if !(e.score > b.score || (e.score == b.score && e.id < b.id)) => Some(b),
                _ => Some(e),
            })
    }

    /// Next island in round-robin order (skipping empty ones) and a uniformly
    /// drawn elite from it.
    ///
    /// # Panics
    /// If every island is empty.
    pub fn sample_parent<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (usize, Individual) {
        assert!(!self.is_empty(), "sample_parent on empty islands");
        loop {
            let i = self.cursor;
            self.cursor = (self.cursor + 1) % self.islands.len();
            let arch = &self.islands[i];
            if arch.is_empty() {
                continue;
            }
            let k = rng.random_range(0..arch.len());
            let (_, e) = arch.elites().nth(k).expect("index in range");
            return (i, e.clone());
        }
    }

    /// Counts one finished iteration on `island`; true when its migration
    /// cadence is reached.
    pub fn tick(&mut self, island: usize) -> bool {
        self.iterations[island] += 1;
        self.iterations[island].is_multiple_of(self.migration_interval)
    }

    /// Offers a copy of `from`'s best elite to every other island.
    pub fn migrate(&mut self, from: usize) -> Vec<(usize, Placement)> {
        let Some(best) = self.islands[from].best().cloned() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for i in 0..self.islands.len() {
            if i == from || self.islands[i].contains_id(best.id) {
                continue;
            }
            out.push((i, self.islands[i].insert(best.clone())));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qd::Genome;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ind(id: u64, score: f64, evals: f64, speed: f64) -> Individual {
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
    fn single_elite_always_sampled() {
        let mut s = IslandSet::new(1, [4, 4], 10);
        s.insert(0, ind(7, 0.1, 1.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(s.sample_parent(&mut rng).1.id, 7);
        }
    }

    #[test]
    fn round_robin_sequence() {
        let mut s = IslandSet::new(3, [4, 4], 10);
        for i in 0..3 {
            s.insert(i, ind(i as u64, 0.1, 1.0, 1.0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seq: Vec<usize> = (0..6).map(|_| s.sample_parent(&mut rng).0).collect();
        assert_eq!(seq, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn empty_islands_skipped() {
        let mut s = IslandSet::new(3, [4, 4], 10);
        s.insert(1, ind(0, 0.1, 1.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seq: Vec<usize> = (0..3).map(|_| s.sample_parent(&mut rng).0).collect();
        assert_eq!(seq, vec![1, 1, 1]);
    }

    #[test]
    #[should_panic]
    fn sampling_empty_panics() {
        let mut s = IslandSet::new(2, [4, 4], 10);
        s.sample_parent(&mut ChaCha8Rng::seed_from_u64(0));
    }

    #[test]
    fn parent_sampling_uniform() {
        let mut s = IslandSet::new(1, [4, 4], 10);
        for (i, (e, v)) in [(0.0, 0.0), (0.0, 9.0), (9.0, 0.0), (9.0, 9.0)]
            .iter()
            .enumerate()
        {
            s.insert(0, ind(i as u64, 0.5, *e, *v));
        }
        assert_eq!(s.island(0).len(), 4);
        let n = 10_000;
        let mut counts = [0usize; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..n {
            counts[s.sample_parent(&mut rng).1.id as usize] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        let mut chi2 = 0.0;
        for c in counts {
            let d = c as f64 - n as f64 * 0.25;
            assert!(d.abs() <= 5.0 * sigma, "{counts:?}");
            chi2 += d * d / (n as f64 * 0.25);
        }
        // 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.27, "chi2 {chi2}");
    }

    #[test]
    fn migration_spreads_best() {
        let mut s = IslandSet::new(2, [4, 4], 10);
        s.insert(0, ind(0, 0.9, 1.0, 1.0));
        s.insert(1, ind(1, 0.2, 1.0, 1.0));
        let before: Vec<f64> = (0..2).map(|i| s.island(i).best().unwrap().score).collect();
        let rep = s.migrate(0);
        assert_eq!(rep.len(), 1);
        assert!(rep[0].1.placed);
        assert!(s.island(1).contains_id(0));
        assert!(s.island(0).contains_id(0));
        for (i, b) in before.iter().enumerate().take(2) {
            assert!(s.island(i).best().unwrap().score >= *b);
        }
        let again = s.clone();
        assert!(s.migrate(0).is_empty());
        assert_eq!(s, again);
    }

    #[test]
    fn cadence() {
        let mut s = IslandSet::new(2, [4, 4], 10);
        let fired: Vec<u64> = (1..=25).filter(|_| s.tick(0)).collect();
        assert_eq!(fired.len(), 2);
        assert!(!s.tick(1));
    }
}
