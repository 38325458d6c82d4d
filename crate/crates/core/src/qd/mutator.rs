use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

use super::{Genome, Individual};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct MutatorError(pub String);

/// Source of candidate genomes. All randomness comes from the `rng` the
/// loop hands in, so a run is reproducible from its seed.
pub trait Mutator {
    /// Child of `parent`, optionally drawing on `inspirations`.
    fn propose(
        &mut self,
        parent: &Individual,
        inspirations: &[Individual],
        rng: &mut ChaCha8Rng,
    ) -> Result<Genome, MutatorError>;

    /// Fixed version of a genome that failed its smoke check.
    fn repair(
        &mut self,
        broken: &Genome,
        diagnostic: &str,
        rng: &mut ChaCha8Rng,
    ) -> Result<Genome, MutatorError>;
}

/// Returns the parent unchanged.
#[derive(Debug, Default, Clone)]
pub struct IdentityMutator;

impl Mutator for IdentityMutator {
    fn propose(
        &mut self,
        parent: &Individual,
        _: &[Individual],
        _: &mut ChaCha8Rng,
    ) -> Result<Genome, MutatorError> {
        Ok(parent.genome.clone())
    }

    fn repair(
        &mut self,
        broken: &Genome,
        _: &str,
        _: &mut ChaCha8Rng,
    ) -> Result<Genome, MutatorError> {
        Ok(broken.clone())
    }
}

/// Log-normal perturbation of the weight vector with occasional crossover.
#[derive(Debug, Clone)]
pub struct ParametricMutator {
    step: LogNormal<f64>,
    crossover_rate: f64,
}

impl Default for ParametricMutator {
    fn default() -> Self {
        Self::new(0.5, 0.2)
    }
}

impl ParametricMutator {
    pub fn new(sigma: f64, crossover_rate: f64) -> Self {
        Self {
            step: LogNormal::new(0.0, sigma).expect("sigma must be finite and nonnegative"),
            crossover_rate,
        }
    }

    /// Scales one or two weights by a log-normal factor; zero weights
    /// restart from 1.
    pub fn perturb(&self, w: [f64; 4], rng: &mut ChaCha8Rng) -> [f64; 4] {
        let mut out = w;
        let k = rng.random_range(1..=2);
        let picks = rand::seq::index::sample(rng, 4, k);
        for i in picks {
            let base = if out[i] > 0.0 { out[i] } else { 1.0 };
            out[i] = base * self.step.sample(rng);
        }
        out
    }

    /// Uniform blend per coordinate, inside the bounding box of `a` and `b`.
    pub fn crossover(a: [f64; 4], b: [f64; 4], rng: &mut ChaCha8Rng) -> [f64; 4] {
        std::array::from_fn(|i| {
            let u: f64 = rng.random();
            a[i] + u * (b[i] - a[i])
        })
    }
}

fn weights(g: &Genome) -> Result<[f64; 4], MutatorError> {
    match g {
        Genome::Weights(w) => Ok(*w),
        Genome::Source(_) => Err(MutatorError(
            "parametric mutation needs a weight genome".into(),
        )),
    }
}

impl Mutator for ParametricMutator {
    fn propose(
        &mut self,
        parent: &Individual,
        inspirations: &[Individual],
        rng: &mut ChaCha8Rng,
    ) -> Result<Genome, MutatorError> {
        let w = weights(&parent.genome)?;
        let mates: Vec<[f64; 4]> = inspirations
            .iter()
            .filter_map(|i| weights(&i.genome).ok())
            .collect();
        if !mates.is_empty() && rng.random_bool(self.crossover_rate) {
            let m = mates[rng.random_range(0..mates.len())];
            return Ok(Genome::Weights(Self::crossover(w, m, rng)));
        }
        Ok(Genome::Weights(self.perturb(w, rng)))
    }

    fn repair(
        &mut self,
        broken: &Genome,
        _: &str,
        _: &mut ChaCha8Rng,
    ) -> Result<Genome, MutatorError> {
        let w = weights(broken)?;
        Ok(Genome::Weights(w.map(|x| {
            if x.is_finite() && x > 0.0 {
                x
            } else {
                0.0
            }
        })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn parent(w: [f64; 4]) -> Individual {
        Individual {
            id: 0,
            genome: Genome::Weights(w),
            score: 0.0,
            features: [0.0, 0.0],
            parent: None,
            island: 0,
            born: 0,
            repairs: 0,
        }
    }

    #[test]
    fn blind_child_differs() {
        let mut m = ParametricMutator::default();
        let mut r = rng(1);
        for _ in 0..100 {
            let Genome::Weights(c) = m.propose(&parent([0.0; 4]), &[], &mut r).unwrap() else {
                unreachable!()
            };
            assert!(c.iter().any(|x| *x != 0.0));
            assert!(c.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn crossover_in_bounding_box() {
        let mut r = rng(3);
        let a = [1.0, 0.0, 0.0, 0.0];
        let b = [0.0, 0.0, 1.0, 0.0];
        for _ in 0..200 {
            let c = ParametricMutator::crossover(a, b, &mut r);
            for i in 0..4 {
                assert!(c[i] >= a[i].min(b[i]) && c[i] <= a[i].max(b[i]));
            }
        }
        // forced crossover through propose
        let mut m = ParametricMutator::new(0.5, 1.0);
        let Genome::Weights(c) = m.propose(&parent(a), &[parent(b)], &mut r).unwrap() else {
            unreachable!()
        };
        assert_eq!(c[1], 0.0);
        assert_eq!(c[3], 0.0);
        assert!((0.0..=1.0).contains(&c[0]) && (0.0..=1.0).contains(&c[2]));
    }

    #[test]
    fn median_of_unit_weight_mutations() {
        let m = ParametricMutator::default();
        let mut r = rng(11);
        let mut v: Vec<f64> = (0..1000).map(|_| m.step.sample(&mut r)).collect();
        v.sort_by(f64::total_cmp);
        let med = (v[499] + v[500]) / 2.0;
        assert!((0.8..=1.25).contains(&med), "median {med}");
        // and through perturb on the mutated coordinates
        let mut changed = Vec::new();
        for _ in 0..1000 {
            let c = m.perturb([1.0; 4], &mut r);
            changed.extend(c.iter().copied().filter(|x| *x != 1.0));
        }
        changed.sort_by(f64::total_cmp);
        let med = changed[changed.len() / 2];
        assert!((0.8..=1.25).contains(&med), "median {med}");
    }

    #[test]
    fn deterministic_under_seed() {
        let run = |seed| {
            let mut m = ParametricMutator::default();
            let mut r = rng(seed);
            (0..20)
                .map(|_| {
                    m.propose(&parent([0.5, 0.0, 1.0, 0.0]), &[parent([0.0; 4])], &mut r)
                        .unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn rejects_source_genome() {
        let mut m = ParametricMutator::default();
        let mut r = rng(0);
        let mut p = parent([0.0; 4]);
        p.genome = Genome::Source("h = ff".into());
        assert!(m.propose(&p, &[], &mut r).is_err());
        assert_eq!(
            m.repair(&Genome::Weights([-1.0, f64::NAN, 2.0, 0.0]), "x", &mut r)
                .unwrap(),
            Genome::Weights([0.0, 0.0, 2.0, 0.0])
        );
    }
}
