//! Maximal clique enumeration (Bron–Kerbosch with Tomita pivoting) on
//! exclusivity graphs.

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::num::Scalar;
use crate::scenario::ExclusivityGraph;

pub const DEFAULT_CLIQUE_CAP: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueSet {
    /// Sorted vertex lists, in lexicographic order.
    pub cliques: Vec<Vec<usize>>,
}

impl CliqueSet {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.cliques.iter()
    }
}

pub fn maximal_cliques(g: &ExclusivityGraph) -> Result<CliqueSet> {
    maximal_cliques_capped(g, DEFAULT_CLIQUE_CAP)
}

pub fn maximal_cliques_capped(g: &ExclusivityGraph, cap: usize) -> Result<CliqueSet> {
    let n = g.vertex_count();
    let mut out = Vec::new();
    let mut r = Vec::new();
    expand(g, &mut r, Bitset::full(n), Bitset::new(n), cap, &mut out)?;
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    Ok(CliqueSet { cliques: out })
}

fn expand(
    g: &ExclusivityGraph,
    r: &mut Vec<usize>,
    p: Bitset,
    x: Bitset,
    cap: usize,
    out: &mut Vec<Vec<usize>>,
) -> Result<()> {
    if p.is_empty() {
        if x.is_empty() {
            if out.len() >= cap {
                return Err(Error::Resource(format!("more than {cap} maximal cliques")));
            }
            out.push(r.clone());
        }
        return Ok(());
    }
    // pivot maximising |P ∩ N(u)| over P ∪ X
    let mut pivot = usize::MAX;
    let mut best = 0;
    for u in p.iter().chain(x.iter()) {
        let k = p.intersection_count(g.neighbours(u));
        if pivot == usize::MAX || k > best {
            pivot = u;
            best = k;
        }
    }
    let candidates = p.and_not(g.neighbours(pivot));
    let (mut p, mut x) = (p, x);
    for v in candidates.iter() {
        let nv = g.neighbours(v);
        r.push(v);
        expand(g, r, p.and(nv), x.and(nv), cap, out)?;
        r.pop();
        p.remove(v);
        x.insert(v);
    }
    Ok(())
}

/// Default node budget of [`max_weight_clique`].
pub const DEFAULT_NODE_LIMIT: u64 = 2_000_000_000;

/// Heaviest clique under nonnegative vertex weights, by branch and bound with
/// greedy colouring bounds. With a `floor`, returns the first clique found
/// whose weight exceeds it (or `None` when there is none); without one,
/// returns a maximum-weight clique.
pub fn max_weight_clique<T: Scalar>(
    g: &ExclusivityGraph,
    weights: &[T],
    floor: Option<&T>,
    node_limit: u64,
) -> Result<Option<(Vec<usize>, T)>> {
    // heavier vertices first; nonpositive weights never help
    let mut order: Vec<usize> = (0..g.vertex_count()).filter(|&v| weights[v].is_positive()).collect();
    order.sort_by(|&a, &b| weights[b].compare(&weights[a]).then(a.cmp(&b)));
    let n = order.len();
    let adj: Vec<Bitset> = order
        .iter()
        .map(|&u| Bitset::from_indices(n, (0..n).filter(|&j| g.adjacent(u, order[j]))))
        .collect();
    let w: Vec<T> = order.iter().map(|&v| weights[v].clone()).collect();
    let mut search = WeightedSearch {
        adj: &adj,
        w: &w,
        best: floor.cloned(),
        best_set: None,
        stop_early: floor.is_some(),
        nodes: 0,
        node_limit,
    };
    let mut cur = Vec::new();
    search.expand(Bitset::full(n), &mut cur, T::zero())?;
    Ok(search.best_set.map(|set| {
        let mut vs: Vec<usize> = set.iter().map(|&i| order[i]).collect();
        vs.sort_unstable();
        let total = vs.iter().fold(T::zero(), |a, &v| a.add(&weights[v]));
        (vs, total)
    }))
}

struct WeightedSearch<'a, T: Scalar> {
    adj: &'a [Bitset],
    w: &'a [T],
    best: Option<T>,
    best_set: Option<Vec<usize>>,
    stop_early: bool,
    nodes: u64,
    node_limit: u64,
}

impl<T: Scalar> WeightedSearch<'_, T> {
    fn beats(&self, x: &T) -> bool {
        match &self.best {
            None => true,
            Some(b) => x.compare(b) == std::cmp::Ordering::Greater,
        }
    }

    /// Colouring bound with weight splitting: a vertex's weight is spread
    /// over the classes it fits in, up to each class's capacity. Vertices are
    /// returned by the last class they use, with the summed capacity of the
    /// classes up to it.
    fn split_colouring(&self, p: &Bitset) -> (Vec<usize>, Vec<T>) {
        let mut classes: Vec<(Bitset, T)> = Vec::new();
        let mut last: Vec<(usize, usize)> = Vec::with_capacity(p.count());
        for v in p.iter() {
            let mut rest = self.w[v].clone();
            let mut used = None;
            for (k, (members, cap)) in classes.iter_mut().enumerate() {
                if members.intersects(&self.adj[v]) {
                    continue;
                }
                members.insert(v);
                used = Some(k);
                rest = rest.sub(cap);
                if !rest.is_positive() {
                    break;
                }
            }
            if rest.is_positive() {
                let mut members = Bitset::new(p.capacity());
                members.insert(v);
                classes.push((members, rest));
                used = Some(classes.len() - 1);
            }
            last.push((used.unwrap_or(0), v));
        }
        let mut prefix = Vec::with_capacity(classes.len());
        let mut acc = T::zero();
        for (_, cap) in &classes {
            acc = acc.add(cap);
            prefix.push(acc.clone());
        }
        last.sort_by_key(|&(k, _)| k);
        let bound = last.iter().map(|&(k, _)| prefix[k].clone()).collect();
        (last.into_iter().map(|(_, v)| v).collect(), bound)
    }

    /// Returns true once the search may stop.
    fn expand(&mut self, mut p: Bitset, cur: &mut Vec<usize>, cur_w: T) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return Err(Error::Resource(format!("clique search exceeded {} nodes", self.node_limit)));
        }
        if p.is_empty() {
            if self.beats(&cur_w) {
                self.best = Some(cur_w);
                self.best_set = Some(cur.clone());
                return Ok(self.stop_early);
            }
            return Ok(false);
        }
        let (verts, bound) = self.split_colouring(&p);
        for i in (0..verts.len()).rev() {
            if !self.beats(&cur_w.add(&bound[i])) {
                return Ok(false);
            }
            let v = verts[i];
            cur.push(v);
            let done = self.expand(p.and(&self.adj[v]), cur, cur_w.add(&self.w[v]))?;
            cur.pop();
            if done {
                return Ok(true);
            }
            p.remove(v);
        }
        Ok(false)
    }
}

/// Largest second factor handled by [`max_weight_clique_conormal`].
pub const CONORMAL_FACTOR_LIMIT: usize = 20;

/// Maximal independent sets of `g`, or `None` when there are more than `cap`.
pub fn independent_sets(g: &ExclusivityGraph, cap: usize) -> Result<Option<CliqueSet>> {
    let n = g.vertex_count();
    let adjacency = (0..n)
        .map(|u| Bitset::from_indices(n, (0..n).filter(|&v| v != u && !g.adjacent(u, v))))
        .collect();
    let complement = ExclusivityGraph::from_adjacency(g.mode, g.vertices.clone(), adjacency);
    match maximal_cliques_capped(&complement, cap) {
        Ok(sets) => Ok(Some(sets)),
        Err(Error::Resource(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Weighted fractional clique number: `max Σ w_v x_v` over `x >= 0` with
/// `Σ_{v∈I} x_v <= 1` on every maximal independent set `I`. By duality this
/// is also the cheapest fractional cover of `w` by independent sets.
pub fn fractional_clique_number<T: Scalar>(sets: &CliqueSet, w: &[T]) -> Result<T> {
    let mut lp = LinearProgram::<T>::nonnegative(w.len());
    lp.objective = w.to_vec();
    for set in sets.iter() {
        lp.add_inequality(set.iter().map(|&v| (v, T::one())).collect(), T::one());
    }
    let res = lp::solve(&lp)?;
    match (res.status, res.objective_value) {
        (LpStatus::Optimal, Some(v)) => Ok(v),
        (st, _) => Err(Error::Verification(format!("fractional clique program reported {st:?}"))),
    }
}

/// Heaviest clique of the co-normal product `G1 * G2` (pairs adjacent when
/// either coordinate is) under product weights `p(a)·q(b)`.
///
/// A clique is a choice of a `G2`-clique `K_a` per vertex `a` of `G1` such
/// that `K_a ∪ K_b` is a clique whenever `a ≠ b` are non-adjacent. The search
/// assigns `G1` vertices in order of weight and bounds each unassigned vertex
/// by the heaviest clique left in its allowed set, read from a table over all
/// subsets of `G2`. Floor semantics as in [`max_weight_clique`].
pub fn max_weight_clique_conormal<T: Scalar>(
    g1: &ExclusivityGraph,
    p: &[T],
    g2: &ExclusivityGraph,
    q: &[T],
    floor: Option<&T>,
    ceiling: Option<&T>,
    node_limit: u64,
) -> Result<Option<(Vec<(usize, usize)>, T)>> {
    if let (Some(f), Some(c)) = (floor, ceiling) {
        if c.compare(f) != std::cmp::Ordering::Greater {
            return Ok(None);
        }
    }
    let vs2: Vec<usize> = (0..g2.vertex_count()).filter(|&b| q[b].is_positive()).collect();
    let m = vs2.len();
    if m > CONORMAL_FACTOR_LIMIT {
        return Err(Error::Resource(format!("second factor has {m} weighted vertices, above {CONORMAL_FACTOR_LIMIT}")));
    }
    let nb2: Vec<u32> = vs2
        .iter()
        .map(|&u| (0..m).filter(|&j| g2.adjacent(u, vs2[j])).fold(0u32, |acc, j| acc | 1 << j))
        .collect();
    let qw: Vec<T> = vs2.iter().map(|&b| q[b].clone()).collect();
    // best[S] = heaviest clique inside S
    let mut best = vec![T::zero(); 1 << m];
    for set in 1usize..1 << m {
        let v = set.trailing_zeros() as usize;
        let without = &best[set & !(1 << v)];
        let with = qw[v].add(&best[set & nb2[v] as usize]);
        best[set] = if with.compare(without) == std::cmp::Ordering::Greater { with } else { without.clone() };
    }
    // all cliques of G2 with their weights and common neighbourhoods, heaviest first
    let mut cliques: Vec<(u32, T, u32)> = Vec::new();
    let full = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    fn grow<T: Scalar>(set: u32, w: T, cand: u32, common: u32, nb: &[u32], qw: &[T], out: &mut Vec<(u32, T, u32)>) {
        out.push((set, w.clone(), common));
        let mut c = cand;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            grow(set | 1 << v, w.add(&qw[v]), c & nb[v], common & nb[v], nb, qw, out);
        }
    }
    grow(0, T::zero(), full, full, &nb2, &qw, &mut cliques);
    cliques.sort_by(|a, b| b.1.compare(&a.1).then(a.0.cmp(&b.0)));

    let mut vs1: Vec<usize> = (0..g1.vertex_count()).filter(|&a| p[a].is_positive()).collect();
    vs1.sort_by(|&a, &b| p[b].compare(&p[a]).then(a.cmp(&b)));
    let n = vs1.len();
    let non_adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && !g1.adjacent(vs1[i], vs1[j])).collect())
        .collect();
    let pw: Vec<T> = vs1.iter().map(|&a| p[a].clone()).collect();
    let mut search = ConormalSearch {
        pw: &pw,
        best: &best,
        cliques: &cliques,
        non_adj: &non_adj,
        record: floor.cloned(),
        record_set: None,
        stop_early: floor.is_some(),
        ceiling,
        nodes: 0,
        node_limit,
    };
    let mut allowed = vec![full; n];
    let mut assignment = vec![0u32; n];
    let mut open: Vec<usize> = (0..n).collect();
    search.assign(&mut open, &mut allowed, &mut assignment, T::zero())?;
    Ok(search.record_set.map(|asg| {
        let mut pairs = Vec::new();
        for (i, &k) in asg.iter().enumerate() {
            let mut k = k;
            while k != 0 {
                let j = k.trailing_zeros() as usize;
                k &= k - 1;
                pairs.push((vs1[i], vs2[j]));
            }
        }
        pairs.sort_unstable();
        let total = pairs.iter().fold(T::zero(), |acc, &(a, b)| acc.add(&p[a].mul(&q[b])));
        (pairs, total)
    }))
}

struct ConormalSearch<'a, T: Scalar> {
    pw: &'a [T],
    best: &'a [T],
    cliques: &'a [(u32, T, u32)],
    non_adj: &'a [Vec<usize>],
    record: Option<T>,
    record_set: Option<Vec<u32>>,
    stop_early: bool,
    /// Known upper bound on the optimum; reaching it ends the search.
    ceiling: Option<&'a T>,
    nodes: u64,
    node_limit: u64,
}

impl<T: Scalar> ConormalSearch<'_, T> {
    fn beats(&self, x: &T) -> bool {
        match &self.record {
            None => true,
            Some(r) => x.compare(r) == std::cmp::Ordering::Greater,
        }
    }

    fn term(&self, j: usize, allowed: &[u32]) -> T {
        self.pw[j].mul(&self.best[allowed[j] as usize])
    }

    /// Assigns open variables in order of weight.
    fn assign(&mut self, open: &mut Vec<usize>, allowed: &mut [u32], assignment: &mut [u32], cur: T) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return Err(Error::Resource(format!("clique search exceeded {} nodes", self.node_limit)));
        }
        if open.is_empty() {
            if self.beats(&cur) {
                let optimal = self.ceiling.is_some_and(|c| cur.compare(c) != std::cmp::Ordering::Less);
                self.record = Some(cur);
                self.record_set = Some(assignment.to_vec());
                return Ok(self.stop_early || optimal);
            }
            return Ok(false);
        }
        let mut total = T::zero();
        let mut pick = 0;
        let mut pick_term: Option<T> = None;
        for (k, &j) in open.iter().enumerate() {
            let t = self.term(j, allowed);
            total = total.add(&t);
            if j < open[pick] || pick_term.is_none() {
                pick = k;
                pick_term = Some(t);
            }
        }
        if !self.beats(&cur.add(&total)) {
            return Ok(false);
        }
        let i = open.remove(pick);
        let rest_bound = total.sub(&pick_term.unwrap_or_else(T::zero));
        let mask = allowed[i];
        let mut done = false;
        for (set, w, common) in self.cliques {
            if set & !mask != 0 {
                continue;
            }
            let gain = self.pw[i].mul(w);
            // the cheap bound ignores how this choice shrinks the open sets
            if !self.beats(&cur.add(&gain).add(&rest_bound)) {
                // cliques are sorted by weight, so no later one can do better
                break;
            }
            let saved: Vec<u32> = self.non_adj[i].iter().map(|&j| allowed[j]).collect();
            for &j in &self.non_adj[i] {
                allowed[j] &= common;
            }
            assignment[i] = *set;
            done = self.assign(open, allowed, assignment, cur.add(&gain))?;
            for (&j, s) in self.non_adj[i].iter().zip(saved) {
                allowed[j] = s;
            }
            assignment[i] = 0;
            if done {
                break;
            }
        }
        open.insert(pick, i);
        Ok(done)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ExclusivityMode, Outcome};

    fn graph(n: usize, edges: &[(usize, usize)]) -> ExclusivityGraph {
        let mut adj = vec![Bitset::new(n); n];
        for &(a, b) in edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        ExclusivityGraph::from_adjacency(ExclusivityMode::Strict, (0..n).map(|i| Outcome::new([i])).collect(), adj)
    }

    fn brute(g: &ExclusivityGraph) -> Vec<Vec<usize>> {
        let n = g.vertex_count();
        let mut out = Vec::new();
        for mask in 1u32..1 << n {
            let vs: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if !g.is_clique(&vs) {
                continue;
            }
            let maximal = (0..n).all(|u| mask >> u & 1 == 1 || !vs.iter().all(|&v| g.adjacent(u, v)));
            if maximal {
                out.push(vs);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn five_cycle() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let c = maximal_cliques(&g).unwrap();
        assert_eq!(c.cliques, vec![vec![0, 1], vec![0, 4], vec![1, 2], vec![2, 3], vec![3, 4]]);
    }

    #[test]
    fn complete_and_empty() {
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(maximal_cliques(&k4).unwrap().cliques, vec![vec![0, 1, 2, 3]]);
        let e = graph(3, &[]);
        assert_eq!(maximal_cliques(&e).unwrap().len(), 3);
    }

    #[test]
    fn cap_is_an_error() {
        let e = graph(3, &[]);
        assert!(matches!(maximal_cliques_capped(&e, 2), Err(Error::Resource(_))));
    }

    #[test]
    fn matches_brute_force() {
        let mut state = 0x2545f4914f6cdd1du64;
        for _ in 0..60 {
            let n = 1 + (state % 11) as usize;
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    if state % 3 != 0 {
                        edges.push((a, b));
                    }
                }
            }
            let g = graph(n, &edges);
            assert_eq!(maximal_cliques(&g).unwrap().cliques, brute(&g));
        }
    }

    #[test]
    fn weighted_matches_enumeration() {
        use crate::num::Rational;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..80 {
            let n = 1 + (next() % 14) as usize;
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if next() % 4 != 0 {
                        edges.push((a, b));
                    }
                }
            }
            let g = graph(n, &edges);
            let w: Vec<Rational> = (0..n).map(|_| Rational::new((next() % 7) as i64, 1 + (next() % 5) as i64)).collect();
            let sum = |c: &Vec<usize>| c.iter().map(|&v| w[v].clone()).sum::<Rational>();
            let best = maximal_cliques(&g).unwrap().iter().map(sum).max().unwrap();
            let got = max_weight_clique(&g, &w, None, u64::MAX).unwrap();
            match got {
                Some((c, total)) => {
                    assert!(g.is_clique(&c));
                    assert_eq!(total, best);
                    assert_eq!(sum(&c), total);
                }
                None => assert!(best.is_zero()),
            }
            let floor = &best - &Rational::new(1, 100);
            let hit = max_weight_clique(&g, &w, Some(&floor), u64::MAX).unwrap();
            assert_eq!(hit.is_some(), best.is_positive());
            assert!(max_weight_clique(&g, &w, Some(&best), u64::MAX).unwrap().is_none());
        }
    }

    #[test]
    fn conormal_matches_generic() {
        use crate::num::Rational;
        let mut state = 0x51afd7ed558ccd2du64;
        fn step(state: &mut u64) -> u64 {
            *state ^= *state << 13;
            *state ^= *state >> 7;
            *state ^= *state << 17;
            *state
        }
        for _ in 0..40 {
            let make = |n: usize, state: &mut u64| {
                let mut edges = Vec::new();
                for a in 0..n {
                    for b in a + 1..n {
                        if step(state) % 2 == 0 {
                            edges.push((a, b));
                        }
                    }
                }
                edges
            };
            let (n1, n2) = (1 + (step(&mut state) % 6) as usize, 1 + (step(&mut state) % 6) as usize);
            let (e1, e2) = (make(n1, &mut state), make(n2, &mut state));
            let (g1, g2) = (graph(n1, &e1), graph(n2, &e2));
            let p: Vec<Rational> = (0..n1).map(|_| Rational::new((step(&mut state) % 5) as i64, 4)).collect();
            let q: Vec<Rational> = (0..n2).map(|_| Rational::new((step(&mut state) % 5) as i64, 3)).collect();
            let mut prod = Vec::new();
            for x in 0..n1 * n2 {
                for y in x + 1..n1 * n2 {
                    let (a, b, c, d) = (x / n2, x % n2, y / n2, y % n2);
                    if g1.adjacent(a, c) || g2.adjacent(b, d) {
                        prod.push((x, y));
                    }
                }
            }
            let g = graph(n1 * n2, &prod);
            let w: Vec<Rational> = (0..n1 * n2).map(|x| &p[x / n2] * &q[x % n2]).collect();
            let want = max_weight_clique(&g, &w, None, u64::MAX).unwrap().map(|r| r.1);
            let got = max_weight_clique_conormal(&g1, &p, &g2, &q, None, None, u64::MAX).unwrap();
            assert_eq!(got.as_ref().map(|r| r.1.clone()), want);
            if let Some((pairs, _)) = got {
                let vs: Vec<usize> = pairs.iter().map(|&(a, b)| a * n2 + b).collect();
                assert!(g.is_clique(&vs));
            }
        }
    }

    #[test]
    fn fractional_clique_number_of_five_cycle() {
        use crate::num::Rational;
        let c5 = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let sets = independent_sets(&c5, 100).unwrap().unwrap();
        assert_eq!(sets.len(), 5);
        let w = vec![Rational::one(); 5];
        assert_eq!(fractional_clique_number(&sets, &w).unwrap(), Rational::new(5, 2));
        // one heavy vertex: its two edges cannot both be used at full weight
        let w = vec![Rational::from_integer(3), Rational::one(), Rational::one(), Rational::one(), Rational::one()];
        assert_eq!(fractional_clique_number(&sets, &w).unwrap(), Rational::from_integer(4));
    }

    #[test]
    fn product_ceiling_does_not_change_the_optimum() {
        use crate::num::Rational;
        let c5 = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let sets = independent_sets(&c5, 100).unwrap().unwrap();
        let p: Vec<Rational> = (1..=5).map(|k| Rational::new(k, 10)).collect();
        let q = vec![Rational::new(1, 2); 5];
        let ceiling = fractional_clique_number(&sets, &p).unwrap() * fractional_clique_number(&sets, &q).unwrap();
        let plain = max_weight_clique_conormal(&c5, &p, &c5, &q, None, None, u64::MAX).unwrap().unwrap();
        let capped = max_weight_clique_conormal(&c5, &p, &c5, &q, None, Some(&ceiling), u64::MAX).unwrap().unwrap();
        assert_eq!(plain.1, capped.1);
        assert!(plain.1 <= ceiling);
    }
}
