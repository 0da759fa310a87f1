//! Joint quantum measures: set functions on all subsets of the sample space
//! that match the experimental probabilities on every coarse outcome, are
//! nonnegative, and satisfy the three-set sum rule
//! `μ(A)+μ(B)+μ(C)−μ(A∪B)−μ(B∪C)−μ(C∪A)+μ(A∪B∪C) = 0`.
//!
//! Such a measure is fixed by its singleton and pair values:
//! `μ(A) = Σ_{i∈A} μ{i} + Σ_{{i,j}⊆A} q_ij` with `q_ij = μ{i,j} − μ{i} − μ{j}`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::colgen::{Column, Master, Status, Var};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::linalg::solve_square;
use crate::lp::{DualSolution, FarkasCertificate, LinearProgram, LpStatus, Simplex};
use crate::num::{Rational, Scalar};
use crate::probability::{LinearFunctional, ProbabilityFunction};
use crate::scenario::{coarse_outcomes, Outcome, Scenario};

/// Largest sample space for exhaustive separation.
pub const EXHAUSTIVE_LIMIT: usize = 26;

/// Index of the unordered pair `{i, j}`, `i < j`, in row-major triangular order.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Singleton and pair values of a measure.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMeasure<T: Scalar = Rational> {
    n: usize,
    sing: Vec<T>,
    pair: Vec<T>,
}

impl<T: Scalar> PairMeasure<T> {
    pub fn new(sing: Vec<T>, pair: Vec<T>) -> Result<Self> {
        let n = sing.len();
        if pair.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::DimensionMismatch(format!("{} pair values for {n} elements", pair.len())));
        }
        Ok(PairMeasure { n, sing, pair })
    }

    /// From singleton values and interference terms `q_ij`.
    pub fn from_interference(sing: Vec<T>, q: Vec<T>) -> Result<Self> {
        let n = sing.len();
        if q.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::DimensionMismatch(format!("{} interference terms for {n} elements", q.len())));
        }
        let mut pair = q;
        for i in 0..n {
            for j in i + 1..n {
                let k = pair_index(n, i, j);
                pair[k] = pair[k].add(&sing[i]).add(&sing[j]);
            }
        }
        Ok(PairMeasure { n, sing, pair })
    }

    /// The classical measure with the given point weights.
    pub fn additive(sing: Vec<T>) -> Self {
        let n = sing.len();
        let q = vec![T::zero(); n * n.saturating_sub(1) / 2];
        PairMeasure::from_interference(sing, q).expect("sizes agree")
    }

    pub fn element_count(&self) -> usize {
        self.n
    }

    pub fn sing(&self) -> &[T] {
        &self.sing
    }

    pub fn pairs(&self) -> &[T] {
        &self.pair
    }

    pub fn pair(&self, i: usize, j: usize) -> &T {
        &self.pair[pair_index(self.n, i, j)]
    }

    pub fn interference(&self, i: usize, j: usize) -> T {
        self.pair(i, j).sub(&self.sing[i]).sub(&self.sing[j])
    }

    /// All `q_ij` in pair order.
    pub fn interference_terms(&self) -> Vec<T> {
        let mut q = Vec::with_capacity(self.pair.len());
        for i in 0..self.n {
            for j in i + 1..self.n {
                q.push(self.interference(i, j));
            }
        }
        q
    }

    pub fn mu(&self, a: &Outcome) -> Result<T> {
        if let Some(x) = a.max_element() {
            if x >= self.n {
                return Err(Error::OutOfRange(format!("element {x} of {}", self.n)));
            }
        }
        let m: Vec<usize> = a.members().collect();
        let mut v = T::zero();
        for (k, &i) in m.iter().enumerate() {
            v = v.add(&self.sing[i]);
            for &j in &m[k + 1..] {
                v = v.add(&self.interference(i, j));
            }
        }
        Ok(v)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> PairMeasure<U> {
        PairMeasure { n: self.n, sing: self.sing.iter().map(&f).collect(), pair: self.pair.iter().map(&f).collect() }
    }
}

pub fn mu_eval<T: Scalar>(pm: &PairMeasure<T>, a: &Outcome) -> Result<T> {
    pm.mu(a)
}

/// Left-hand side of the three-set sum rule for pairwise disjoint `a, b, c`.
pub fn sorkin_residual<T: Scalar>(
    mu: impl Fn(&Outcome) -> Result<T>,
    a: &Outcome,
    b: &Outcome,
    c: &Outcome,
) -> Result<T> {
    if !a.is_disjoint(b) || !b.is_disjoint(c) || !a.is_disjoint(c) {
        return Err(Error::Incompatible("sum rule needs pairwise disjoint sets".into()));
    }
    let ab = a.union(b);
    let bc = b.union(c);
    let ca = c.union(a);
    let abc = ab.union(c);
    Ok(mu(a)?.add(&mu(b)?).add(&mu(c)?).sub(&mu(&ab)?).sub(&mu(&bc)?).sub(&mu(&ca)?).add(&mu(&abc)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Exhaustive,
    BranchAndBound,
    Heuristic,
}

impl Regime {
    pub fn is_exact(self) -> bool {
        self != Regime::Heuristic
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Exhaustive => "exhaustive",
            Regime::BranchAndBound => "branch_and_bound",
            Regime::Heuristic => "heuristic",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Regime::Exhaustive),
            "branch_and_bound" | "branch-and-bound" | "bnb" => Ok(Regime::BranchAndBound),
            "heuristic" => Ok(Regime::Heuristic),
            _ => Err(Error::Parse(format!("unknown separation regime {s:?}"))),
        }
    }
}

/// Arithmetic needed by the subset minimisers.
trait Val: Clone {
    fn zero() -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn less(&self, o: &Self) -> bool;
    fn neg_part(&self) -> Self {
        if self.less(&Self::zero()) {
            self.clone()
        } else {
            Self::zero()
        }
    }
}

impl Val for i128 {
    fn zero() -> Self {
        0
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn less(&self, o: &Self) -> bool {
        self < o
    }
}

#[derive(Clone)]
struct Sv<T>(T);

impl<T: Scalar> Val for Sv<T> {
    fn zero() -> Self {
        Sv(T::zero())
    }
    fn plus(&self, o: &Self) -> Self {
        Sv(self.0.add(&o.0))
    }
    fn minus(&self, o: &Self) -> Self {
        Sv(self.0.sub(&o.0))
    }
    fn less(&self, o: &Self) -> bool {
        self.0.sub(&o.0).is_negative()
    }
}

/// Set function `f(A) = Σ g_i + Σ_{i<j} q_ij` over subsets of `0..n`.
struct Quadratic<V> {
    n: usize,
    g: Vec<V>,
    /// Dense symmetric, zero diagonal.
    q: Vec<Vec<V>>,
}

impl<V: Val> Quadratic<V> {
    /// Up to `k` subsets of negative value, most negative first.
    fn exhaustive_top(&self, k: usize) -> Vec<(u64, V)> {
        let n = self.n;
        let mut mask = 0u64;
        let mut h = self.g.clone();
        let mut cur = V::zero();
        let mut top: Vec<(u64, V)> = Vec::with_capacity(k + 1);
        for step in 1u64..1u64 << n {
            let v = step.trailing_zeros() as usize;
            let bit = 1u64 << v;
            let leaving = mask & bit != 0;
            if leaving {
                cur = cur.minus(&h[v]);
            } else {
                cur = cur.plus(&h[v]);
            }
            mask ^= bit;
            for (w, hw) in h.iter_mut().enumerate() {
                if w != v {
                    *hw = if leaving { hw.minus(&self.q[v][w]) } else { hw.plus(&self.q[v][w]) };
                }
            }
            if cur.less(&V::zero()) && (top.len() < k || cur.less(&top[top.len() - 1].1)) {
                let at = top.iter().position(|(_, t)| cur.less(t)).unwrap_or(top.len());
                top.insert(at, (mask, cur.clone()));
                top.truncate(k);
            }
        }
        top
    }

    fn exhaustive(&self) -> (Vec<bool>, V) {
        let n = self.n;
        let mut inside = vec![false; n];
        let mut h = self.g.clone();
        let mut cur = V::zero();
        let mut best = V::zero();
        let mut best_set = vec![false; n];
        for k in 1u64..1u64 << n {
            let v = k.trailing_zeros() as usize;
            if inside[v] {
                cur = cur.minus(&h[v]);
                inside[v] = false;
                for (w, hw) in h.iter_mut().enumerate() {
                    if w != v {
                        *hw = hw.minus(&self.q[v][w]);
                    }
                }
            } else {
                cur = cur.plus(&h[v]);
                inside[v] = true;
                for (w, hw) in h.iter_mut().enumerate() {
                    if w != v {
                        *hw = hw.plus(&self.q[v][w]);
                    }
                }
            }
            if cur.less(&best) {
                best = cur.clone();
                best_set.clone_from(&inside);
            }
        }
        (best_set, best)
    }

    fn branch_and_bound(&self) -> (Vec<bool>, V) {
        struct Ctx<'a, V> {
            f: &'a Quadratic<V>,
            best: V,
            best_set: Vec<bool>,
            inside: Vec<bool>,
        }
        fn go<V: Val>(ctx: &mut Ctx<'_, V>, depth: usize, cur: V, h: &[V]) {
            let n = ctx.f.n;
            if cur.less(&ctx.best) {
                ctx.best = cur.clone();
                ctx.best_set.clone_from(&ctx.inside);
            }
            if depth == n {
                return;
            }
            // each undecided v adds at most h_v plus its negative couplings to later ones
            let mut bound = cur.clone();
            for v in depth..n {
                let mut t = h[v].clone();
                for w in v + 1..n {
                    t = t.plus(&ctx.f.q[v][w].neg_part());
                }
                bound = bound.plus(&t.neg_part());
            }
            if !bound.less(&ctx.best) {
                return;
            }
            let v = depth;
            let mut with_h = h.to_vec();
            for (w, hw) in with_h.iter_mut().enumerate().skip(depth + 1) {
                *hw = hw.plus(&ctx.f.q[v][w]);
            }
            let include_first = h[v].less(&V::zero());
            for take in [include_first, !include_first] {
                if take {
                    ctx.inside[v] = true;
                    go(ctx, depth + 1, cur.plus(&h[v]), &with_h);
                    ctx.inside[v] = false;
                } else {
                    go(ctx, depth + 1, cur.clone(), h);
                }
            }
        }
        let mut ctx = Ctx { f: self, best: V::zero(), best_set: vec![false; self.n], inside: vec![false; self.n] };
        go(&mut ctx, 0, V::zero(), &self.g);
        (ctx.best_set, ctx.best)
    }

    fn local_search(&self, seed: u64, restarts: usize) -> (Vec<bool>, V) {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = V::zero();
        let mut best_set = vec![false; n];
        for _ in 0..restarts {
            let mut inside: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let mut h = self.g.clone();
            let mut cur = V::zero();
            for v in 0..n {
                if inside[v] {
                    cur = cur.plus(&h[v]);
                    for (w, hw) in h.iter_mut().enumerate() {
                        if w != v {
                            *hw = hw.plus(&self.q[v][w]);
                        }
                    }
                }
            }
            loop {
                // flipping v changes f by h_v (in) or −h_v (out)
                let mut step: Option<(usize, V)> = None;
                for v in 0..n {
                    let d = if inside[v] { V::zero().minus(&h[v]) } else { h[v].clone() };
                    if d.less(&V::zero()) && step.as_ref().is_none_or(|(_, s)| d.less(s)) {
                        step = Some((v, d));
                    }
                }
                let Some((v, d)) = step else { break };
                cur = cur.plus(&d);
                let sign_in = !inside[v];
                inside[v] = sign_in;
                for (w, hw) in h.iter_mut().enumerate() {
                    if w != v {
                        *hw = if sign_in { hw.plus(&self.q[v][w]) } else { hw.minus(&self.q[v][w]) };
                    }
                }
            }
            if cur.less(&best) {
                best = cur;
                best_set = inside;
            }
        }
        (best_set, best)
    }

    fn run(&self, regime: Regime) -> (Vec<bool>, V) {
        match regime {
            Regime::Exhaustive => self.exhaustive(),
            Regime::BranchAndBound => self.branch_and_bound(),
            Regime::Heuristic => self.local_search(0x5eed, 64),
        }
    }
}

fn quadratic_of<T: Scalar>(pm: &PairMeasure<T>) -> Quadratic<Sv<T>> {
    let n = pm.n;
    let mut q = vec![vec![Sv(T::zero()); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = pm.interference(i, j);
            q[i][j] = Sv(v.clone());
            q[j][i] = Sv(v);
        }
    }
    Quadratic { n, g: pm.sing.iter().cloned().map(Sv).collect(), q }
}

impl Val for BigInt {
    fn zero() -> Self {
        <BigInt as Zero>::zero()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn less(&self, o: &Self) -> bool {
        self < o
    }
}

/// The set function in the cheapest arithmetic that represents it exactly:
/// machine integers after clearing denominators when every partial sum
/// fits, big integers otherwise, and the scalar type itself for floats.
enum Form<T> {
    Small(Quadratic<i128>),
    Big(Quadratic<BigInt>),
    Plain(Quadratic<Sv<T>>),
}

fn form_of<T: Scalar>(pm: &PairMeasure<T>) -> Form<T> {
    let n = pm.n;
    let exact = || -> Option<(Vec<Rational>, Vec<Rational>)> {
        let sing = pm.sing.iter().map(|v| v.as_rational()).collect::<Option<Vec<_>>>()?;
        let q = pm.interference_terms().iter().map(|v| v.as_rational()).collect::<Option<Vec<_>>>()?;
        Some((sing, q))
    };
    let Some((sing, q)) = exact() else {
        return Form::Plain(quadratic_of(pm));
    };
    let d = Rational::common_denominator(sing.iter().chain(&q));
    let int = |r: &Rational| r.numer() * (&d / r.denom());
    let g: Vec<BigInt> = sing.iter().map(int).collect();
    let mut dense = vec![vec![<BigInt as Zero>::zero(); n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let v = int(&q[k]);
            dense[i][j] = v.clone();
            dense[j][i] = v;
            k += 1;
        }
    }
    let big = Quadratic { n, g, q: dense };
    // every partial sum is bounded by the sum of absolute values
    let room = BigInt::from(1u128 << 120);
    let total: BigInt = big.g.iter().map(|v| v.abs()).sum::<BigInt>()
        + big.q.iter().flatten().map(|v| v.abs()).sum::<BigInt>();
    if total < room {
        let to = |v: &BigInt| v.to_i128().expect("bounded");
        Form::Small(Quadratic {
            n,
            g: big.g.iter().map(to).collect(),
            q: big.q.iter().map(|r| r.iter().map(to).collect()).collect(),
        })
    } else {
        Form::Big(big)
    }
}

impl<T: Scalar> Form<T> {
    /// Minimising subset when its value is negative.
    fn negative_min(&self, regime: Regime) -> Option<Vec<bool>> {
        match self {
            Form::Small(f) => {
                let (set, v) = f.run(regime);
                (v < 0).then_some(set)
            }
            Form::Big(f) => {
                let (set, v) = f.run(regime);
                v.is_negative().then_some(set)
            }
            Form::Plain(f) => {
                let (set, v) = f.run(regime);
                v.0.is_negative().then_some(set)
            }
        }
    }

    fn top(&self, k: usize) -> Vec<u64> {
        match self {
            Form::Small(f) => f.exhaustive_top(k).into_iter().map(|(m, _)| m).collect(),
            Form::Big(f) => f.exhaustive_top(k).into_iter().map(|(m, _)| m).collect(),
            Form::Plain(f) => f.exhaustive_top(k).into_iter().map(|(m, _)| m).collect(),
        }
    }
}

fn check_regime(n: usize, regime: Regime, limits: &Limits) -> Result<()> {
    match regime {
        Regime::Exhaustive if n > EXHAUSTIVE_LIMIT => {
            Err(Error::Resource(format!("exhaustive separation over {n} elements exceeds {EXHAUSTIVE_LIMIT}")))
        }
        Regime::BranchAndBound if n > limits.qm_exact.max(EXHAUSTIVE_LIMIT) => Err(Error::Resource(format!(
            "exact separation over {n} elements exceeds {}",
            limits.qm_exact
        ))),
        _ => Ok(()),
    }
}

/// Subset of most negative measure, with its value; `None` when every subset
/// has nonnegative measure (as far as the regime can tell).
pub fn separation_oracle<T: Scalar>(
    pm: &PairMeasure<T>,
    regime: Regime,
    limits: &Limits,
) -> Result<Option<(Outcome, T)>> {
    check_regime(pm.n, regime, limits)?;
    match form_of(pm).negative_min(regime) {
        None => Ok(None),
        Some(set) => {
            let a = Outcome::new((0..pm.n).filter(|&i| set[i]));
            let v = pm.mu(&a)?;
            Ok(Some((a, v)))
        }
    }
}

/// Up to `k` violated subsets, most negative first. Only the exhaustive
/// regime returns more than one.
pub fn separation_cuts<T: Scalar>(
    pm: &PairMeasure<T>,
    regime: Regime,
    limits: &Limits,
    k: usize,
) -> Result<Vec<(Outcome, T)>> {
    if regime != Regime::Exhaustive || k <= 1 {
        return Ok(separation_oracle(pm, regime, limits)?.into_iter().collect());
    }
    check_regime(pm.n, regime, limits)?;
    form_of(pm)
        .top(k)
        .into_iter()
        .map(|m| {
            let a = Outcome::new((0..pm.n).filter(|&i| m >> i & 1 == 1));
            let v = pm.mu(&a)?;
            Ok((a, v))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QmStatus {
    Feasible,
    Infeasible,
    HeuristicallyFeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QmMethod {
    /// Nonnegativity on all subsets, found lazily by exhaustive search.
    Enumerate,
    /// Row generation with branch-and-bound (or heuristic) separation.
    Rowgen,
}

impl FromStr for QmMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumerate" => Ok(QmMethod::Enumerate),
            "rowgen" => Ok(QmMethod::Rowgen),
            _ => Err(Error::Parse(format!("unknown method {s:?}"))),
        }
    }
}

/// What a row of the measure program says.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QmRow {
    /// `μ(A) = P(A)` for a fine-grained outcome.
    Value { outcome: Outcome },
    /// `μ(A) = 1` for the whole space.
    Normalization,
    /// Interference of two cells of one measurement vanishes.
    Interference { measurement: usize, cells: (usize, usize) },
    /// `μ(A) >= 0`.
    Nonnegative { subset: Outcome },
}

#[derive(Clone, Debug)]
pub struct QmResult {
    pub status: QmStatus,
    pub witness: Option<PairMeasure>,
    pub certificate: Option<FarkasCertificate>,
    pub unverified_note: Option<String>,
    pub regime: Regime,
    pub rounds: usize,
    /// Rows of `program`, equalities first, then inequalities.
    pub rows: Vec<QmRow>,
    pub program: LinearProgram,
}

/// Variables: `μ{i}` (nonnegative) then `q_ij` (free) in pair order.
fn measure_row(n: usize, a: &Outcome) -> Vec<(usize, Rational)> {
    let m: Vec<usize> = a.members().collect();
    let mut row = Vec::with_capacity(m.len() * (m.len() + 1) / 2);
    for (k, &i) in m.iter().enumerate() {
        row.push((i, Rational::one()));
        for &j in &m[k + 1..] {
            row.push((n + pair_index(n, i, j), Rational::one()));
        }
    }
    row
}

fn measure_from(n: usize, x: &[Rational]) -> PairMeasure {
    PairMeasure::from_interference(x[..n].to_vec(), x[n..].to_vec()).expect("sizes agree")
}

fn negate(row: Vec<(usize, Rational)>) -> Vec<(usize, Rational)> {
    row.into_iter().map(|(j, v)| (j, -v)).collect()
}

/// Base program shared by the feasibility and optimisation problems:
/// equalities in `lp`, plus a pool of subsets whose nonnegativity may be
/// imposed.
struct MeasureProgram {
    n: usize,
    lp: LinearProgram,
    eq_rows: Vec<QmRow>,
    seen: HashSet<Vec<(usize, Rational)>>,
    pool: Vec<Outcome>,
    in_pool: HashSet<Outcome>,
}

impl MeasureProgram {
    fn new(n: usize) -> Self {
        let mut lp = LinearProgram::new(n + n * n.saturating_sub(1) / 2);
        for i in 0..n {
            lp.set_lower_bound(i, Some(Rational::zero()));
        }
        MeasureProgram { n, lp, eq_rows: Vec::new(), seen: HashSet::new(), pool: Vec::new(), in_pool: HashSet::new() }
    }

    fn equality(&mut self, row: Vec<(usize, Rational)>, rhs: Rational, what: QmRow) {
        let mut key = row.clone();
        key.push((usize::MAX, rhs.clone()));
        if self.seen.insert(key) {
            self.lp.add_equality(row, rhs);
            self.eq_rows.push(what);
        }
    }

    fn interference_rows(&mut self, s: &Scenario) {
        let n = self.n;
        for (m, meas) in s.measurements().iter().enumerate() {
            let cells = meas.cells();
            for a in 0..cells.len() {
                for b in a + 1..cells.len() {
                    let mut row: Vec<(usize, Rational)> = Vec::new();
                    for i in cells[a].members() {
                        for j in cells[b].members() {
                            row.push((n + pair_index(n, i, j), Rational::one()));
                        }
                    }
                    row.sort_by_key(|(j, _)| *j);
                    self.equality(row, Rational::zero(), QmRow::Interference { measurement: m, cells: (a, b) });
                }
            }
        }
    }

    /// Adds `a` to the pool; returns whether it is new.
    fn nonnegative(&mut self, a: Outcome) -> bool {
        if a.is_empty() || !self.in_pool.insert(a.clone()) {
            return false;
        }
        self.pool.push(a);
        true
    }
}

/// Checks a measure against a table: every coarse outcome of every
/// measurement, and nonnegativity under `regime`.
pub fn verify_measure(
    pm: &PairMeasure,
    p: &ProbabilityFunction,
    regime: Regime,
    limits: &Limits,
) -> Result<()> {
    let s = p.scenario();
    if pm.element_count() != s.element_count() {
        return Err(Error::DimensionMismatch("measure and scenario sizes differ".into()));
    }
    for (m, meas) in s.measurements().iter().enumerate() {
        for a in coarse_outcomes(meas, limits.coarse_cells)? {
            let want = p.coarse_value(m, &a)?;
            if pm.mu(&a)? != want {
                return Err(Error::Verification(format!("μ({}) differs from P on measurement {}", s.describe(&a), m + 1)));
            }
        }
    }
    if let Some((a, v)) = separation_oracle(pm, regime, limits)? {
        return Err(Error::Verification(format!("μ({a}) = {v} is negative")));
    }
    Ok(())
}

fn rowgen_regime(n: usize, method: QmMethod, limits: &Limits) -> Result<Regime> {
    match method {
        QmMethod::Enumerate => {
            if n > limits.qm_enumerate.min(EXHAUSTIVE_LIMIT) {
                return Err(Error::Resource(format!(
                    "{n} elements exceed the enumeration cap {}",
                    limits.qm_enumerate
                )));
            }
            Ok(Regime::Exhaustive)
        }
        QmMethod::Rowgen => Ok(if n <= limits.qm_exact { Regime::BranchAndBound } else { Regime::Heuristic }),
    }
}

/// Violated subsets added per separation round.
const CUTS_PER_ROUND: usize = 24;

/// Slack below which a pool row counts as binding at the float optimum.
const BINDING_SLACK: f64 = 1e-7;

/// Scale of the random right-hand side perturbation of the float dual.
const PERTURB: f64 = 1e-7;

/// Pivot budget of one float solve.
const FLOAT_PIVOTS: usize = 200_000;

enum Solved {
    Infeasible(FarkasCertificate),
    Optimal(Vec<Rational>),
}

struct RowGen {
    solved: Solved,
    program: LinearProgram,
    /// Row meanings of `program`, equalities first.
    rows: Vec<QmRow>,
    rounds: usize,
    cuts: usize,
}

/// Dual variable carried by a column of the float master.
#[derive(Clone, Copy, Debug)]
enum DualVar {
    /// Positive and negative parts of an equality multiplier.
    Plus(usize),
    Minus(usize),
    /// Multiplier of a lower bound.
    Bound(usize),
    /// Multiplier of the nonnegativity of a pool subset.
    Subset(usize),
}

/// Outcome of certifying the final float basis exactly.
enum Crossover {
    Certified(RowGen),
    /// The exact point violates these pool subsets.
    Cuts(Vec<Outcome>),
    Failed,
}

impl MeasureProgram {
    /// Program with every pool subset as an inequality `−μ(A) <= 0`.
    fn full_program(&self) -> LinearProgram {
        let mut lp = self.lp.clone();
        for a in &self.pool {
            lp.add_inequality(negate(measure_row(self.n, a)), Rational::zero());
        }
        lp
    }

    fn all_rows(&self) -> Vec<QmRow> {
        self.row_meanings(&(0..self.pool.len()).collect::<Vec<_>>())
    }

    fn dual_column(&self, v: DualVar) -> (Vec<(usize, Rational)>, Rational) {
        match v {
            DualVar::Plus(k) => {
                let c = &self.lp.equalities[k];
                (c.coeffs.clone(), c.rhs.clone())
            }
            DualVar::Minus(k) => {
                let c = &self.lp.equalities[k];
                (negate(c.coeffs.clone()), -c.rhs.clone())
            }
            DualVar::Bound(j) => (vec![(j, -Rational::one())], Rational::zero()),
            DualVar::Subset(p) => (negate(measure_row(self.n, &self.pool[p])), Rational::zero()),
        }
    }

    fn push_column(&self, master: &mut Master, vars: &mut Vec<DualVar>, v: DualVar) {
        let (entries, cost) = self.dual_column(v);
        master.add_column(Column { entries: entries.iter().map(|(i, x)| (*i, x.to_f64())).collect(), cost: cost.to_f64() });
        vars.push(v);
    }

    /// Exact basis matrix, column `k` being basic variable `k`.
    fn exact_basis(&self, master: &Master, vars: &[DualVar]) -> (Vec<Vec<Rational>>, Vec<Rational>) {
        let m = self.lp.variable_count;
        let mut cols = vec![vec![Rational::zero(); m]; m];
        let mut costs = vec![Rational::zero(); m];
        for (k, b) in master.basis().iter().enumerate() {
            match b {
                Var::Artificial(i) => cols[k][*i] = Rational::one(),
                Var::Column(j) => {
                    let (entries, cost) = self.dual_column(vars[*j]);
                    for (i, x) in entries {
                        cols[k][i] = &cols[k][i] + &x;
                    }
                    costs[k] = cost;
                }
            }
        }
        (cols, costs)
    }

    /// Gathers dual values per basic column into multiplier vectors over
    /// the full program.
    fn multipliers_of(&self, master: &Master, vars: &[DualVar], w: &[Rational]) -> Option<FarkasCertificate> {
        let mut eq = vec![Rational::zero(); self.lp.equalities.len()];
        let mut ins = vec![Rational::zero(); self.pool.len()];
        let mut bounds = vec![Rational::zero(); self.lp.variable_count];
        for (b, v) in master.basis().iter().zip(w) {
            match b {
                Var::Artificial(_) => {
                    if !v.is_zero() {
                        return None;
                    }
                }
                Var::Column(j) => match vars[*j] {
                    DualVar::Plus(k) => eq[k] = &eq[k] + v,
                    DualVar::Minus(k) => eq[k] = &eq[k] - v,
                    DualVar::Bound(i) => bounds[i] = &bounds[i] + v,
                    DualVar::Subset(p) => ins[p] = &ins[p] + v,
                },
            }
        }
        Some(FarkasCertificate { equalities: eq, inequalities: ins, bounds })
    }

    /// Re-derives the float optimum exactly from its basis: the primal point
    /// from the basic costs, the dual from the objective, both checked.
    fn crossover(&self, master: &Master, vars: &[DualVar], regime: Regime, limits: &Limits) -> Result<Crossover> {
        let (cols, costs) = self.exact_basis(master, vars);
        let m = cols.len();
        let rows: Vec<Vec<Rational>> = (0..m).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        let Some(w) = solve_square(&rows, &self.lp.objective) else {
            return Ok(Crossover::Failed);
        };
        if w.iter().zip(master.basis()).any(|(v, b)| v.is_negative() && matches!(b, Var::Column(_))) {
            return Ok(Crossover::Failed);
        }
        let Some(x) = solve_square(&cols, &costs) else {
            return Ok(Crossover::Failed);
        };
        let Some(mult) = self.multipliers_of(master, vars, &w) else {
            return Ok(Crossover::Failed);
        };
        let program = self.full_program();
        if !program.is_feasible(&x) {
            let pm = measure_from(self.n, &x);
            let bad: Vec<Outcome> =
                self.pool.iter().filter(|a| pm.mu(a).map_or(false, |v| v.is_negative())).cloned().collect();
            return Ok(if bad.is_empty() { Crossover::Failed } else { Crossover::Cuts(bad) });
        }
        let pm = measure_from(self.n, &x);
        let cuts = separation_cuts(&pm, regime, limits, CUTS_PER_ROUND)?;
        if !cuts.is_empty() {
            return Ok(Crossover::Cuts(cuts.into_iter().map(|(a, _)| a).collect()));
        }
        let dual = DualSolution { equalities: mult.equalities, inequalities: mult.inequalities, bounds: mult.bounds };
        if !dual.is_feasible(&program) || dual.value(&program) != program.objective_value(&x) {
            return Ok(Crossover::Failed);
        }
        let rows = self.all_rows();
        Ok(Crossover::Certified(RowGen { solved: Solved::Optimal(x), program, rows, rounds: 0, cuts: 0 }))
    }

    /// Exact Farkas certificate from an unbounded ray of the float dual.
    fn ray_certificate(&self, master: &Master, vars: &[DualVar], entering: usize) -> Option<RowGen> {
        let (cols, _) = self.exact_basis(master, vars);
        let m = cols.len();
        let rows: Vec<Vec<Rational>> = (0..m).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        let (entries, _) = self.dual_column(vars[entering]);
        let mut a = vec![Rational::zero(); m];
        for (i, v) in entries {
            a[i] = &a[i] + &v;
        }
        let u = solve_square(&rows, &a)?;
        let w: Vec<Rational> = u.iter().map(|v| -v.clone()).collect();
        let mut cert = self.multipliers_of(master, vars, &w)?;
        let one = Rational::one();
        match vars[entering] {
            DualVar::Plus(k) => cert.equalities[k] = &cert.equalities[k] + &one,
            DualVar::Minus(k) => cert.equalities[k] = &cert.equalities[k] - &one,
            DualVar::Bound(i) => cert.bounds[i] = &cert.bounds[i] + &one,
            DualVar::Subset(p) => cert.inequalities[p] = &cert.inequalities[p] + &one,
        }
        let program = self.full_program();
        cert.verify(&program).then(|| RowGen {
            solved: Solved::Infeasible(cert),
            program,
            rows: self.all_rows(),
            rounds: 0,
            cuts: 0,
        })
    }

    /// Column generation on the dual in floating point, with each candidate
    /// answer certified exactly. `Ok(None)` means the float guide gave up;
    /// the pool keeps every subset it found. Also returns the last float
    /// primal point.
    fn dual_guided(&mut self, regime: Regime, limits: &Limits) -> Result<(Option<RowGen>, Option<Vec<f64>>)> {
        let n = self.n;
        // The dual is heavily degenerate. Shifting the right-hand side by a
        // small positive combination of subset columns breaks the ties and
        // keeps it feasible whenever the unshifted one is; the exact
        // crossover works with the true objective.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut rhs: Vec<f64> = self.lp.objective.iter().map(Rational::to_f64).collect();
        for a in &self.pool {
            let w = PERTURB * (0.5 + rng.gen::<f64>());
            for (j, v) in measure_row(n, a) {
                rhs[j] -= w * v.to_f64();
            }
        }
        let mut master = Master::new(rhs);
        let mut vars = Vec::new();
        for k in 0..self.lp.equalities.len() {
            self.push_column(&mut master, &mut vars, DualVar::Plus(k));
            self.push_column(&mut master, &mut vars, DualVar::Minus(k));
        }
        for j in 0..n {
            self.push_column(&mut master, &mut vars, DualVar::Bound(j));
        }
        for p in 0..self.pool.len() {
            self.push_column(&mut master, &mut vars, DualVar::Subset(p));
        }
        let mut cuts = 0;
        let mut last = None;
        for round in 0..limits.rowgen_rounds {
            let status = master.solve(FLOAT_PIVOTS);
            let fresh = match status {
                Status::Optimal | Status::Infeasible => {
                    let pi = master.multipliers();
                    let pm = PairMeasure::from_interference(pi[..n].to_vec(), pi[n..].to_vec()).expect("sizes agree");
                    if status == Status::Optimal {
                        last = Some(pi.clone());
                    }
                    let mut found: Vec<Outcome> =
                        separation_cuts(&pm, regime, limits, CUTS_PER_ROUND)?.into_iter().map(|(a, _)| a).collect();
                    if found.iter().all(|a| self.in_pool.contains(a)) && status == Status::Optimal {
                        found = match self.crossover(&master, &vars, regime, limits)? {
                            Crossover::Certified(mut run) => {
                                run.rounds = round + 1;
                                run.cuts = cuts;
                                return Ok((Some(run), last));
                            }
                            Crossover::Cuts(list) => list,
                            Crossover::Failed => return Ok((None, last)),
                        };
                    }
                    found
                }
                Status::Unbounded { entering, .. } => {
                    let run = self.ray_certificate(&master, &vars, entering).map(|mut run| {
                        run.rounds = round + 1;
                        run.cuts = cuts;
                        run
                    });
                    return Ok((run, last));
                }
                Status::IterationLimit => return Ok((None, last)),
            };
            let mut added = false;
            for a in fresh {
                if self.nonnegative(a) {
                    self.push_column(&mut master, &mut vars, DualVar::Subset(self.pool.len() - 1));
                    cuts += 1;
                    added = true;
                }
            }
            if !added {
                return Ok((None, last));
            }
        }
        Ok((None, last))
    }

    /// Row generation: the float-guided dual first, then exact simplex over
    /// the pool rows binding at the last float point. The exact program is a
    /// relaxation, so a point it returns that passes exact separation is
    /// optimal for the full problem.
    fn row_generation(&mut self, regime: Regime, limits: &Limits) -> Result<RowGen> {
        let n = self.n;
        let (run, guess) = self.dual_guided(regime, limits)?;
        if let Some(run) = run {
            return Ok(run);
        }
        let mut active: Vec<bool> = match &guess {
            Some(x) => {
                let pm = PairMeasure::from_interference(x[..n].to_vec(), x[n..].to_vec()).expect("sizes agree");
                self.pool.iter().map(|a| pm.mu(a).map_or(true, |v| v <= BINDING_SLACK)).collect()
            }
            None => vec![true; self.pool.len()],
        };
        let mut order: Vec<usize> = Vec::new();
        let build = |mp: &MeasureProgram, active: &[bool], order: &mut Vec<usize>| -> Result<Simplex<Rational>> {
            let mut lp = mp.lp.clone();
            order.clear();
            for (k, a) in mp.pool.iter().enumerate() {
                if active[k] {
                    lp.add_inequality(negate(measure_row(n, a)), Rational::zero());
                    order.push(k);
                }
            }
            Simplex::new(lp)
        };
        let mut simplex = build(self, &active, &mut order)?;
        let mut cuts = 0;
        for round in 0..limits.rowgen_rounds {
            let res = simplex.solve()?;
            let x = match res.status {
                LpStatus::Infeasible => {
                    let cert = res.certificate.ok_or_else(|| Error::Verification("missing certificate".into()))?;
                    let program = simplex.program().clone();
                    if !cert.verify(&program) {
                        return Err(Error::Verification("certificate does not verify".into()));
                    }
                    let rows = self.row_meanings(&order);
                    return Ok(RowGen { solved: Solved::Infeasible(cert), program, rows, rounds: round + 1, cuts });
                }
                LpStatus::Unbounded => {
                    if active.iter().all(|&b| b) {
                        return Err(Error::Verification("measure program reported unbounded".into()));
                    }
                    active.iter_mut().for_each(|b| *b = true);
                    simplex = build(self, &active, &mut order)?;
                    continue;
                }
                LpStatus::Optimal => res.primal.ok_or_else(|| Error::Verification("missing witness".into()))?,
            };
            let pm = measure_from(n, &x);
            let mut added = false;
            for k in 0..self.pool.len() {
                if !active[k] && pm.mu(&self.pool[k])?.is_negative() {
                    active[k] = true;
                    simplex.add_inequality(negate(measure_row(n, &self.pool[k])), Rational::zero())?;
                    order.push(k);
                    added = true;
                }
            }
            if !added {
                for (a, _) in separation_cuts(&pm, regime, limits, CUTS_PER_ROUND)? {
                    if self.nonnegative(a.clone()) {
                        active.push(true);
                        simplex.add_inequality(negate(measure_row(n, &a)), Rational::zero())?;
                        order.push(self.pool.len() - 1);
                        cuts += 1;
                        added = true;
                    }
                }
            }
            if !added {
                let program = simplex.program().clone();
                let rows = self.row_meanings(&order);
                return Ok(RowGen { solved: Solved::Optimal(x), program, rows, rounds: round + 1, cuts });
            }
        }
        Err(Error::Resource(format!("row generation did not converge in {} rounds", limits.rowgen_rounds)))
    }

    fn row_meanings(&self, order: &[usize]) -> Vec<QmRow> {
        let ins = order.iter().map(|&k| QmRow::Nonnegative { subset: self.pool[k].clone() });
        self.eq_rows.iter().cloned().chain(ins).collect()
    }
}

/// Existence of a joint quantum measure reproducing `p`.
pub fn qm_feasible(p: &ProbabilityFunction, method: QmMethod, limits: &Limits) -> Result<QmResult> {
    p.ensure_valid()?;
    let s = p.scenario();
    let n = s.element_count();
    let regime = rowgen_regime(n, method, limits)?;
    let mut mp = MeasureProgram::new(n);
    for (id, o) in s.outcomes().iter().enumerate() {
        let row = measure_row(n, o);
        mp.equality(row, p.value(id).clone(), QmRow::Value { outcome: o.clone() });
    }
    mp.interference_rows(s);
    if n <= limits.qm_enumerate {
        for i in 0..n {
            for j in i + 1..n {
                mp.nonnegative(Outcome::new([i, j]));
            }
        }
    }
    let run = mp.row_generation(regime, limits)?;
    let rows = run.rows;
    match run.solved {
        Solved::Infeasible(cert) => Ok(QmResult {
            status: QmStatus::Infeasible,
            witness: None,
            certificate: Some(cert),
            unverified_note: None,
            regime,
            rounds: run.rounds,
            rows,
            program: run.program,
        }),
        Solved::Optimal(x) => {
            let pm = measure_from(n, &x);
            verify_measure(&pm, p, regime, limits)?;
            let heuristic = !regime.is_exact();
            Ok(QmResult {
                status: if heuristic { QmStatus::HeuristicallyFeasible } else { QmStatus::Feasible },
                witness: Some(pm),
                certificate: None,
                unverified_note: heuristic
                    .then(|| format!("nonnegativity checked by {regime} separation only ({n} elements)")),
                regime,
                rounds: run.rounds,
                rows,
                program: run.program,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct QmOptimum {
    pub value: Rational,
    pub table: ProbabilityFunction,
    pub measure: PairMeasure,
    pub rounds: usize,
    pub cuts: usize,
}

/// Maximum of `f` over tables admitting a joint quantum measure.
pub fn qm_optimize(s: Arc<Scenario>, f: &LinearFunctional, limits: &Limits) -> Result<QmOptimum> {
    let n = s.element_count();
    let regime = rowgen_regime(n, QmMethod::Enumerate, limits)?;
    let mut mp = MeasureProgram::new(n);
    let all = Outcome::new(0..n);
    mp.equality(measure_row(n, &all), Rational::one(), QmRow::Normalization);
    mp.interference_rows(&s);
    for o in s.outcomes() {
        mp.nonnegative(o.clone());
    }
    for i in 0..n {
        for j in i + 1..n {
            mp.nonnegative(Outcome::new([i, j]));
        }
    }
    for (id, c) in f.resolve(&s)? {
        for (j, v) in measure_row(n, s.outcome(id)) {
            mp.lp.objective[j] = &mp.lp.objective[j] + &(&v * &c);
        }
    }
    let run = mp.row_generation(regime, limits)?;
    let x = match run.solved {
        Solved::Optimal(x) => x,
        Solved::Infeasible(_) => return Err(Error::Verification("measure program reported infeasible".into())),
    };
    let pm = measure_from(n, &x);
    let values = s.outcomes().iter().map(|o| pm.mu(o)).collect::<Result<Vec<_>>>()?;
    let table = ProbabilityFunction::new(s.clone(), values)?.with_name(format!("measure optimum of {}", f.name));
    table.ensure_valid()?;
    verify_measure(&pm, &table, regime, limits)?;
    let value = f.evaluate(&table)?;
    Ok(QmOptimum { value, table, measure: pm, rounds: run.rounds, cuts: run.cuts })
}

/// Optimal vertex for a seeded random integer objective over fine outcomes.
pub fn sample_qm_vertex(s: Arc<Scenario>, seed: u64, limits: &Limits) -> Result<(ProbabilityFunction, PairMeasure)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = s
        .outcomes()
        .iter()
        .map(|o| (o.clone(), Rational::from_integer(rng.gen_range(-5..=5))))
        .collect();
    let f = LinearFunctional { name: format!("random objective {seed}"), terms, constant: Rational::zero() };
    let opt = qm_optimize(s, &f, limits)?;
    Ok((opt.table, opt.measure))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn pair_indices_are_dense() {
        let n = 6;
        let mut seen = vec![false; n * (n - 1) / 2];
        for i in 0..n {
            for j in i + 1..n {
                let k = pair_index(n, i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(pair_index(n, j, i), k);
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn three_point_measure() {
        let pm = PairMeasure::new(vec![r(1, 5); 3], vec![r(1, 2), r(2, 5), r(2, 5)]).unwrap();
        assert_eq!(pm.mu(&Outcome::new([0, 1, 2])).unwrap(), r(7, 10));
        assert_eq!(pm.mu(&Outcome::new([1])).unwrap(), r(1, 5));
        assert_eq!(pm.mu(&Outcome::empty()).unwrap(), Rational::zero());
        let mu = |a: &Outcome| pm.mu(a);
        let res = sorkin_residual(mu, &Outcome::new([0]), &Outcome::new([1]), &Outcome::new([2])).unwrap();
        assert!(res.is_zero());
        assert!(sorkin_residual(mu, &Outcome::new([0]), &Outcome::new([0, 1]), &Outcome::new([2])).is_err());
    }

    #[test]
    fn third_order_table_has_residual_one() {
        let mu = |a: &Outcome| Ok(if a.len() == 3 { Rational::one() } else { Rational::zero() });
        let res = sorkin_residual(mu, &Outcome::new([0]), &Outcome::new([1]), &Outcome::new([2])).unwrap();
        assert_eq!(res, Rational::one());
        let e = Outcome::empty();
        assert!(sorkin_residual(mu, &e, &e, &e).unwrap().is_zero());
    }

    #[test]
    fn additive_measure_is_sum() {
        let pm = PairMeasure::additive(vec![r(1, 2), r(1, 3), r(1, 7)]);
        assert_eq!(pm.mu(&Outcome::new([0, 2])).unwrap(), r(9, 14));
        assert_eq!(separation_oracle(&pm, Regime::Exhaustive, &Limits::default()).unwrap(), None);
    }

    #[test]
    fn two_point_separation() {
        let pm = PairMeasure::from_interference(vec![r(1, 1), r(1, 1)], vec![r(-3, 1)]).unwrap();
        for regime in [Regime::Exhaustive, Regime::BranchAndBound, Regime::Heuristic] {
            let (a, v) = separation_oracle(&pm, regime, &Limits::default()).unwrap().unwrap();
            assert_eq!(a, Outcome::new([0, 1]));
            assert_eq!(v, r(-1, 1));
        }
        let f = pm.map(|v| v.to_f64());
        assert_eq!(separation_oracle(&f, Regime::Exhaustive, &Limits::default()).unwrap().unwrap().0, Outcome::new([0, 1]));
    }

    #[test]
    fn regime_size_mismatch() {
        let pm = PairMeasure::additive(vec![Rational::one(); 27]);
        assert!(matches!(
            separation_oracle(&pm, Regime::Exhaustive, &Limits::default()),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn bnb_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = 12;
            let sing = (0..n).map(|_| r(rng.gen_range(-3..=6), rng.gen_range(1..=4))).collect();
            let q = (0..n * (n - 1) / 2).map(|_| r(rng.gen_range(-5..=3), rng.gen_range(1..=3))).collect();
            let pm = PairMeasure::from_interference(sing, q).unwrap();
            let l = Limits::default();
            let a = separation_oracle(&pm, Regime::Exhaustive, &l).unwrap().map(|x| x.1);
            let b = separation_oracle(&pm, Regime::BranchAndBound, &l).unwrap().map(|x| x.1);
            assert_eq!(a, b);
        }
    }
}
