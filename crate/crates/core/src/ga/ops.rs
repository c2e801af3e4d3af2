//! Variation and selection operators over attribute masks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::AttributeMask;
use crate::error::{Error, Result};

/// Normalised Hamming distance `(1/N) Σ |u_i − v_i|`.
pub fn hamming_distance(u: &AttributeMask, v: &AttributeMask) -> Result<f64> {
    v.check_len(u.len())?;
    if u.is_empty() {
        return Ok(0.0);
    }
    let diff = u.bits().iter().zip(v.bits()).filter(|(a, b)| a != b).count();
    Ok(diff as f64 / u.len() as f64)
}

/// Mean Hamming distance over all unordered pairs.
pub fn population_diversity(pop: &[AttributeMask]) -> Result<f64> {
    if pop.len() < 2 {
        return Err(Error::TooFewIndividuals);
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..pop.len() {
        for j in i + 1..pop.len() {
            sum += hamming_distance(&pop[i], &pop[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverKind {
    /// Swap each gene with probability 0.5.
    #[default]
    Uniform,
    TwoPoint,
}

pub fn crossover(a: &mut AttributeMask, b: &mut AttributeMask, kind: CrossoverKind, rng: &mut impl Rng) {
    let n = a.len().min(b.len());
    match kind {
        CrossoverKind::Uniform => {
            for i in 0..n {
                if rng.random::<f64>() < 0.5 {
                    let tmp = a.bits()[i];
                    a.bits_mut()[i] = b.bits()[i];
                    b.bits_mut()[i] = tmp;
                }
            }
        }
        CrossoverKind::TwoPoint => {
            if n < 2 {
                return;
            }
            let mut p1 = rng.random_range(1..=n);
            let mut p2 = rng.random_range(1..n);
            if p2 >= p1 {
                p2 += 1;
            } else {
                std::mem::swap(&mut p1, &mut p2);
            }
            for i in p1..p2.min(n) {
                let tmp = a.bits()[i];
                a.bits_mut()[i] = b.bits()[i];
                b.bits_mut()[i] = tmp;
            }
        }
    }
}

pub fn flip_bits(m: &mut AttributeMask, per_gene: f64, rng: &mut impl Rng) {
    for bit in m.bits_mut() {
        if rng.random::<f64>() < per_gene {
            *bit = !*bit;
        }
    }
}

/// Index of the fittest of `size` uniformly drawn aspirants (with replacement);
/// ties among the fittest are broken uniformly at random.
pub fn tournament(fitness: &[f64], size: usize, rng: &mut impl Rng) -> usize {
    let aspirants: Vec<usize> = (0..size.max(1)).map(|_| rng.random_range(0..fitness.len())).collect();
    let best = aspirants.iter().map(|&i| fitness[i]).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = aspirants.into_iter().filter(|&i| fitness[i] == best).collect();
    if winners.len() == 1 {
        winners[0]
    } else {
        winners[rng.random_range(0..winners.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use proptest::prelude::*;
    use rand::Rng;

    fn m(bits: &[u8]) -> AttributeMask {
        AttributeMask::from_bits(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn hamming_cases() {
        assert_eq!(hamming_distance(&m(&[1, 0, 1]), &m(&[1, 0, 1])).unwrap(), 0.0);
        assert_eq!(hamming_distance(&m(&[1, 0, 1]), &m(&[0, 1, 0])).unwrap(), 1.0);
        assert_eq!(hamming_distance(&m(&[1, 0, 1, 0]), &m(&[1, 1, 0, 0])).unwrap(), 0.5);
        assert!(matches!(
            hamming_distance(&m(&[1, 0]), &m(&[1, 0, 0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn diversity_cases() {
        assert_eq!(population_diversity(&[m(&[1, 0]), m(&[1, 0]), m(&[1, 0])]).unwrap(), 0.0);
        assert_eq!(population_diversity(&[m(&[1, 0, 1]), m(&[0, 1, 0])]).unwrap(), 1.0);
        assert_eq!(population_diversity(&[m(&[1, 1]), m(&[1, 0]), m(&[0, 1])]).unwrap(), 2.0 / 3.0);
        assert!(matches!(population_diversity(&[m(&[1])]), Err(Error::TooFewIndividuals)));
    }

    #[test]
    fn two_point_swaps_a_contiguous_block() {
        let mut rng = rng_from(2);
        for _ in 0..50 {
            let (mut a, mut b) = (AttributeMask::ones(8), AttributeMask::zeros(8));
            crossover(&mut a, &mut b, CrossoverKind::TwoPoint, &mut rng);
            let changed: Vec<usize> = (0..8).filter(|&i| !a.get(i)).collect();
            assert!(!changed.is_empty());
            assert_eq!(changed.last().unwrap() - changed[0] + 1, changed.len());
            assert!((0..8).all(|i| a.get(i) != b.get(i)));
        }
    }

    proptest! {
        #[test]
        fn tournament_never_picks_a_dominated_aspirant(fit in proptest::collection::vec(0u8..5, 2..30), seed in any::<u64>(), size in 1usize..5) {
            let fitness: Vec<f64> = fit.iter().map(|&f| f as f64).collect();
            let mut a = rng_from(seed);
            let mut b = rng_from(seed);
            let picked = tournament(&fitness, size, &mut a);
            let aspirants: Vec<usize> = (0..size).map(|_| b.random_range(0..fitness.len())).collect();
            let max = aspirants.iter().map(|&i| fitness[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(aspirants.contains(&picked));
            prop_assert_eq!(fitness[picked], max);
        }

        #[test]
        fn diversity_is_bounded(bits in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 6), 2..8)) {
            let pop: Vec<AttributeMask> = bits.into_iter().map(AttributeMask::from_bits).collect();
            let d = population_diversity(&pop).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            let identical = pop.iter().all(|p| p == &pop[0]);
            prop_assert_eq!(d == 0.0, identical);
        }

        #[test]
        fn uniform_crossover_preserves_gene_multiset(a in proptest::collection::vec(any::<bool>(), 10), b in proptest::collection::vec(any::<bool>(), 10), seed in any::<u64>()) {
            let (mut x, mut y) = (AttributeMask::from_bits(a.clone()), AttributeMask::from_bits(b.clone()));
            crossover(&mut x, &mut y, CrossoverKind::Uniform, &mut rng_from(seed));
            for i in 0..10 {
                let before = [a[i], b[i]];
                let after = [x.get(i), y.get(i)];
                prop_assert!(after == before || after == [before[1], before[0]]);
            }
        }
    }
}
