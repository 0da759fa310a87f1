//! Seeded random instances for the measure identities: pair measures,
//! pairwise-additive partitions, and subset tables obeying the three-set sum
//! rule built without reference to the pair extension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::nullspace;
use crate::num::Rational;
use crate::qm::{pair_index, PairMeasure};
use crate::scenario::Outcome;

fn small_rational(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(-6..=6), rng.gen_range(1..=4))
}

/// Pair measure with small random rational singleton and pair values.
pub fn random_pair_measure(rng: &mut impl Rng, n: usize) -> PairMeasure {
    let sing = (0..n).map(|_| small_rational(rng)).collect();
    let pair = (0..n * n.saturating_sub(1) / 2).map(|_| small_rational(rng)).collect();
    PairMeasure::new(sing, pair).expect("sizes agree")
}

fn outcome_of_mask(mask: u64) -> Outcome {
    Outcome::new((0..64).filter(|i| mask >> i & 1 == 1))
}

/// Every ordered triple of pairwise disjoint subsets of `0..n`, one per
/// assignment of each element to the first, second, third or no set.
pub fn disjoint_triples(n: usize) -> impl Iterator<Item = (Outcome, Outcome, Outcome)> {
    assert!(n <= 12, "4^{n} triples");
    (0u64..1 << (2 * n)).map(move |code| {
        let mut m = [0u64; 4];
        for i in 0..n {
            m[(code >> (2 * i) & 3) as usize] |= 1 << i;
        }
        (outcome_of_mask(m[1]), outcome_of_mask(m[2]), outcome_of_mask(m[3]))
    })
}

/// A measure, a set `X` and a partition of `X` whose blocks are pairwise
/// additive by construction.
#[derive(Clone, Debug)]
pub struct PartitionInstance {
    pub measure: PairMeasure,
    pub set: Outcome,
    pub blocks: Vec<Outcome>,
}

impl PartitionInstance {
    /// `μ(A) + μ(B) = μ(A ∪ B)` for every two blocks.
    pub fn pairwise_additive(&self) -> Result<bool> {
        for (k, a) in self.blocks.iter().enumerate() {
            for b in &self.blocks[k + 1..] {
                if &self.measure.mu(a)? + &self.measure.mu(b)? != self.measure.mu(&a.union(b))? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `μ(X) = Σ μ(A)` over the blocks.
    pub fn jointly_additive(&self) -> Result<bool> {
        let mut sum = Rational::zero();
        for a in &self.blocks {
            sum = &sum + &self.measure.mu(a)?;
        }
        Ok(sum == self.measure.mu(&self.set)?)
    }
}

/// Random instance on at most `max_n` elements. The partition is made
/// pairwise additive by shifting one interference term per block pair so
/// that the cross-block terms sum to zero.
pub fn partition_instance(seed: u64, max_n: usize) -> PartitionInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_n.max(2));
    let base = random_pair_measure(&mut rng, n);
    let members: Vec<usize> = loop {
        let m: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
        if m.len() >= 2 {
            break m;
        }
    };
    let k = rng.gen_range(2..=members.len());
    let mut label: Vec<usize> = (0..members.len()).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
    // shuffle so the forced representatives are not always the first members
    for i in (1..label.len()).rev() {
        label.swap(i, rng.gen_range(0..=i));
    }
    let blocks: Vec<Vec<usize>> =
        (0..k).map(|b| members.iter().zip(&label).filter(|(_, l)| **l == b).map(|(x, _)| *x).collect()).collect();
    let mut q = base.interference_terms();
    for a in 0..k {
        for b in a + 1..k {
            let mut sum = Rational::zero();
            for &i in &blocks[a] {
                for &j in &blocks[b] {
                    sum = &sum + &q[pair_index(n, i, j)];
                }
            }
            let t = pair_index(n, blocks[a][0], blocks[b][0]);
            q[t] = &q[t] - &sum;
        }
    }
    let measure = PairMeasure::from_interference(base.sing().to_vec(), q).expect("sizes agree");
    PartitionInstance {
        measure,
        set: Outcome::new(members.iter().copied()),
        blocks: blocks.into_iter().map(Outcome::new).collect(),
    }
}

/// Basis of all subset tables on `0..n` (indexed by bit mask) with
/// `μ(∅) = 0` that satisfy the sum rule on every disjoint triple.
pub fn sum_rule_space(n: usize) -> Vec<Vec<Rational>> {
    let width = 1usize << n;
    let mut rows = Vec::new();
    let mut empty = vec![Rational::zero(); width];
    empty[0] = Rational::one();
    rows.push(empty);
    let mask = |o: &Outcome| o.members().fold(0usize, |m, i| m | 1 << i);
    for (a, b, c) in disjoint_triples(n) {
        let (a, b, c) = (mask(&a), mask(&b), mask(&c));
        let mut row = vec![Rational::zero(); width];
        for (m, s) in [(a, 1), (b, 1), (c, 1), (a | b, -1), (b | c, -1), (c | a, -1), (a | b | c, 1)] {
            row[m] = &row[m] + &Rational::from_integer(s);
        }
        if row.iter().any(|v| !v.is_zero()) {
            rows.push(row);
        }
    }
    nullspace(&rows, width)
}

/// Random integer combination of a basis from [`sum_rule_space`].
pub fn random_sum_rule_table(basis: &[Vec<Rational>], rng: &mut impl Rng) -> Vec<Rational> {
    let width = basis.first().map_or(1, Vec::len);
    let mut t = vec![Rational::zero(); width];
    for v in basis {
        let c = Rational::from_integer(rng.gen_range(-9..=9));
        for (x, y) in t.iter_mut().zip(v) {
            *x = &*x + &(&c * y);
        }
    }
    t
}

/// Singleton and pair values of a subset table indexed by bit mask.
pub fn restriction(table: &[Rational], n: usize) -> PairMeasure {
    let sing = (0..n).map(|i| table[1 << i].clone()).collect();
    let mut pair = vec![Rational::zero(); n * n.saturating_sub(1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            pair[pair_index(n, i, j)] = table[(1 << i) | (1 << j)].clone();
        }
    }
    PairMeasure::new(sing, pair).expect("sizes agree")
}
