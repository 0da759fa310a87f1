//! Dense dictionary simplex with exact or floating-point arithmetic.
//!
//! Programs are stated as
//!
//! ```text
//! maximize    c·x
//! subject to  a_i·x  = b_i     (equalities)
//!             a_k·x <= b_k     (inequalities)
//!             x_j   >= l_j     (for variables that have a lower bound)
//! ```
//!
//! Variables without a lower bound are free. The solver keeps a Tucker
//! dictionary (basic variables written in terms of the nonbasic ones), pivots
//! free variables into the basis once and equality slacks out of it once, then
//! restores primal feasibility with a dual simplex on the zero objective and
//! finishes with a primal simplex. Entering variables follow the largest
//! reduced cost; after a streak of degenerate pivots the rule falls back to
//! Bland's lowest-index rule until progress resumes, which rules out cycling
//! while keeping every run deterministic.
//!
//! Every optimal answer carries a dual solution, every infeasible answer a
//! Farkas certificate, every unbounded answer a ray, and all of them are
//! re-checked against the original program before being returned.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{Rational, Scalar};

/// Sparse row `Σ coeffs[k].1 · x[coeffs[k].0]` together with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T = Rational> {
    pub coeffs: Vec<(usize, T)>,
    pub rhs: T,
}

impl<T: Scalar> Constraint<T> {
    pub fn new(coeffs: Vec<(usize, T)>, rhs: T) -> Self {
        Constraint { coeffs, rhs }
    }

    /// Row value `a·x`.
    pub fn lhs(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (j, a) in &self.coeffs {
            acc.add_assign(&a.mul(&x[*j]));
        }
        acc
    }

    fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Constraint<U> {
        Constraint {
            coeffs: self.coeffs.iter().map(|(j, a)| (*j, f(a))).collect(),
            rhs: f(&self.rhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T = Rational> {
    pub variable_count: usize,
    /// Maximised.
    pub objective: Vec<T>,
    pub equalities: Vec<Constraint<T>>,
    /// `row·x <= rhs`.
    pub inequalities: Vec<Constraint<T>>,
    /// `None` means the variable is free.
    pub lower_bounds: Vec<Option<T>>,
}

/// Arithmetic used by [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Rational,
    Float,
}

impl<T: Scalar> LinearProgram<T> {
    /// Program over `n` free variables with a zero objective.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            variable_count: n,
            objective: vec![T::zero(); n],
            equalities: Vec::new(),
            inequalities: Vec::new(),
            lower_bounds: vec![None; n],
        }
    }

    /// Program over `n` variables constrained to be nonnegative.
    pub fn nonnegative(n: usize) -> Self {
        let mut lp = Self::new(n);
        lp.lower_bounds = vec![Some(T::zero()); n];
        lp
    }

    pub fn add_equality(&mut self, coeffs: Vec<(usize, T)>, rhs: T) {
        self.equalities.push(Constraint::new(coeffs, rhs));
    }

    pub fn add_inequality(&mut self, coeffs: Vec<(usize, T)>, rhs: T) {
        self.inequalities.push(Constraint::new(coeffs, rhs));
    }

    pub fn set_lower_bound(&mut self, j: usize, l: Option<T>) {
        self.lower_bounds[j] = l;
    }

    /// Converts every coefficient with `f`, e.g. to run an exact program in floats.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> LinearProgram<U> {
        LinearProgram {
            variable_count: self.variable_count,
            objective: self.objective.iter().map(f).collect(),
            equalities: self.equalities.iter().map(|c| c.map(f)).collect(),
            inequalities: self.inequalities.iter().map(|c| c.map(f)).collect(),
            lower_bounds: self.lower_bounds.iter().map(|l| l.as_ref().map(f)).collect(),
        }
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let n = self.variable_count;
        if self.objective.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "objective has {} entries for {n} variables",
                self.objective.len()
            )));
        }
        if self.lower_bounds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} lower bounds for {n} variables",
                self.lower_bounds.len()
            )));
        }
        for (kind, rows) in [("equality", &self.equalities), ("inequality", &self.inequalities)] {
            for (i, row) in rows.iter().enumerate() {
                if let Some((j, _)) = row.coeffs.iter().find(|(j, _)| *j >= n) {
                    return Err(Error::DimensionMismatch(format!(
                        "{kind} {i} references variable {j} of {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (c, v) in self.objective.iter().zip(x) {
            acc.add_assign(&c.mul(v));
        }
        acc
    }

    /// Independent feasibility check of a point (exact, or within tolerance).
    pub fn is_feasible(&self, x: &[T]) -> bool {
        if x.len() != self.variable_count {
            return false;
        }
        self.equalities.iter().all(|c| c.lhs(x).sub(&c.rhs).is_zero())
            && self.inequalities.iter().all(|c| !c.lhs(x).sub(&c.rhs).is_positive())
            && self
                .lower_bounds
                .iter()
                .zip(x)
                .all(|(l, v)| l.as_ref().map_or(true, |l| !v.sub(l).is_negative()))
    }

    /// `Σ y_i a_i` over all equality and inequality rows.
    fn combine_rows(&self, y_eq: &[T], y_in: &[T]) -> Vec<T> {
        let mut acc = vec![T::zero(); self.variable_count];
        for (row, y) in self.equalities.iter().zip(y_eq).chain(self.inequalities.iter().zip(y_in)) {
            if y.is_zero() {
                continue;
            }
            for (j, a) in &row.coeffs {
                acc[*j].add_assign(&a.mul(y));
            }
        }
        acc
    }

    fn combine_rhs(&self, y_eq: &[T], y_in: &[T]) -> T {
        let mut acc = T::zero();
        for (row, y) in self.equalities.iter().zip(y_eq).chain(self.inequalities.iter().zip(y_in)) {
            acc.add_assign(&row.rhs.mul(y));
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Multipliers proving infeasibility: the combination
/// `Σ y_eq·a + Σ y_in·a − Σ z_j e_j` is the zero row while
/// `Σ y_eq·b + Σ y_in·b − Σ z_j l_j < 0`, with `y_in, z >= 0`.
/// Bound multipliers `z_j` belong to the constraints `−x_j <= −l_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate<T = Rational> {
    pub equalities: Vec<T>,
    pub inequalities: Vec<T>,
    pub bounds: Vec<T>,
}

impl<T: Scalar> FarkasCertificate<T> {
    /// Right-hand side of the combined contradiction `0 <= value`.
    pub fn value(&self, lp: &LinearProgram<T>) -> T {
        let mut v = lp.combine_rhs(&self.equalities, &self.inequalities);
        for (z, l) in self.bounds.iter().zip(&lp.lower_bounds) {
            if let Some(l) = l {
                v = v.sub(&z.mul(l));
            }
        }
        v
    }

    pub fn verify(&self, lp: &LinearProgram<T>) -> bool {
        if self.equalities.len() != lp.equalities.len()
            || self.inequalities.len() != lp.inequalities.len()
            || self.bounds.len() != lp.variable_count
        {
            return false;
        }
        if self.inequalities.iter().any(|y| y.is_negative()) {
            return false;
        }
        for (z, l) in self.bounds.iter().zip(&lp.lower_bounds) {
            if z.is_negative() || (l.is_none() && !z.is_zero()) {
                return false;
            }
        }
        let mut row = lp.combine_rows(&self.equalities, &self.inequalities);
        for (r, z) in row.iter_mut().zip(&self.bounds) {
            *r = r.sub(z);
        }
        row.iter().all(|v| v.is_zero()) && self.value(lp).is_negative()
    }
}

/// Dual solution: `A^T y − z = c` with `y_in, z >= 0` and `z_j = 0` on free
/// variables; its value `b·y − Σ z_j l_j` bounds every feasible objective.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution<T = Rational> {
    pub equalities: Vec<T>,
    pub inequalities: Vec<T>,
    pub bounds: Vec<T>,
}

impl<T: Scalar> DualSolution<T> {
    pub fn value(&self, lp: &LinearProgram<T>) -> T {
        FarkasCertificate {
            equalities: self.equalities.clone(),
            inequalities: self.inequalities.clone(),
            bounds: self.bounds.clone(),
        }
        .value(lp)
    }

    pub fn is_feasible(&self, lp: &LinearProgram<T>) -> bool {
        if self.inequalities.iter().any(|y| y.is_negative()) {
            return false;
        }
        for (z, l) in self.bounds.iter().zip(&lp.lower_bounds) {
            if z.is_negative() || (l.is_none() && !z.is_zero()) {
                return false;
            }
        }
        let row = lp.combine_rows(&self.equalities, &self.inequalities);
        row.iter()
            .zip(&self.bounds)
            .zip(&lp.objective)
            .all(|((r, z), c)| r.sub(z).sub(c).is_zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult<T = Rational> {
    pub status: LpStatus,
    pub primal: Option<Vec<T>>,
    pub objective_value: Option<T>,
    pub dual: Option<DualSolution<T>>,
    pub certificate: Option<FarkasCertificate<T>>,
    /// Direction of unbounded growth; `primal` then holds a feasible start.
    pub ray: Option<Vec<T>>,
    pub pivots: usize,
}

impl<T: Scalar> LpResult<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `lp` in the arithmetic of `T`.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpResult<T>> {
    Simplex::new(lp.clone())?.solve()
}

/// Solves an exact program either exactly or in `f64`, returning `f64` values
/// in both cases for uniform reporting.
pub fn solve_in_mode(lp: &LinearProgram<Rational>, mode: Mode) -> Result<LpResult<f64>> {
    match mode {
        Mode::Float => solve(&lp.map(|r| r.to_f64())),
        Mode::Rational => {
            let r = solve(lp)?;
            let f = |v: &Vec<Rational>| v.iter().map(|x| x.to_f64()).collect::<Vec<_>>();
            Ok(LpResult {
                status: r.status,
                primal: r.primal.as_ref().map(f),
                objective_value: r.objective_value.as_ref().map(|v| v.to_f64()),
                dual: r.dual.map(|d| DualSolution {
                    equalities: f(&d.equalities),
                    inequalities: f(&d.inequalities),
                    bounds: f(&d.bounds),
                }),
                certificate: r.certificate.map(|d| FarkasCertificate {
                    equalities: f(&d.equalities),
                    inequalities: f(&d.inequalities),
                    bounds: f(&d.bounds),
                }),
                ray: r.ray.as_ref().map(f),
                pivots: r.pivots,
            })
        }
    }
}

/// Feasibility of the constraint set alone (objective ignored).
pub fn feasibility<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpResult<T>> {
    let mut zero = lp.clone();
    zero.objective = vec![T::zero(); lp.variable_count];
    solve(&zero)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Free,
    Nonneg,
    /// Slack of an equality row; pinned at zero once nonbasic.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Row(usize),
    Col(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Fresh,
    Optimal,
    Done,
}

/// Number of consecutive degenerate pivots tolerated before Bland's rule.
const DEGENERATE_STREAK: usize = 20;

/// Simplex solver that supports appending inequality rows after a solve
/// and re-optimising with the dual simplex from the previous basis.
pub struct Simplex<T: Scalar> {
    lp: LinearProgram<T>,
    n: usize,
    /// Lower-bound shift per structural (zero for free variables).
    shift: Vec<T>,
    kinds: Vec<Kind>,
    pos: Vec<Pos>,
    rows: Vec<Vec<T>>,
    beta: Vec<T>,
    basic: Vec<usize>,
    cols: Vec<usize>,
    obj: Vec<T>,
    z0: T,
    pivots: usize,
    iteration_limit: usize,
    state: State,
    last: Option<LpResult<T>>,
}

enum Outcome {
    Feasible,
    /// Row whose dictionary identity proves infeasibility.
    InfeasibleRow(usize),
    Optimal,
    Unbounded(usize),
    FreeUnbounded(usize),
}

impl<T: Scalar> Simplex<T> {
    pub fn new(lp: LinearProgram<T>) -> Result<Self> {
        lp.check_dimensions()?;
        let n = lp.variable_count;
        let mut s = Simplex {
            n,
            shift: vec![T::zero(); n],
            kinds: Vec::new(),
            pos: Vec::new(),
            rows: Vec::new(),
            beta: Vec::new(),
            basic: Vec::new(),
            cols: Vec::new(),
            obj: Vec::new(),
            z0: T::zero(),
            pivots: 0,
            iteration_limit: 0,
            state: State::Fresh,
            last: None,
            lp,
        };
        s.build();
        Ok(s)
    }

    pub fn program(&self) -> &LinearProgram<T> {
        &self.lp
    }

    fn build(&mut self) {
        let n = self.n;
        let lp = &self.lp;
        self.shift = lp
            .lower_bounds
            .iter()
            .map(|l| l.clone().unwrap_or_else(T::zero))
            .collect();
        self.kinds = lp
            .lower_bounds
            .iter()
            .map(|l| if l.is_some() { Kind::Nonneg } else { Kind::Free })
            .collect();
        self.pos = (0..n).map(Pos::Col).collect();
        self.cols = (0..n).collect();
        self.rows.clear();
        self.beta.clear();
        self.basic.clear();
        self.obj = lp.objective.clone();
        self.z0 = lp.objective_value(&self.shift);
        self.pivots = 0;
        let eqs = lp.equalities.clone();
        let ins = lp.inequalities.clone();
        for c in &eqs {
            self.push_row(c, Kind::Fixed);
        }
        for c in &ins {
            self.push_row(c, Kind::Nonneg);
        }
        self.state = State::Fresh;
        self.last = None;
    }

    /// Appends the slack row `s = b − a·x` expressed in the current dictionary.
    fn push_row(&mut self, c: &Constraint<T>, kind: Kind) {
        let ncols = self.cols.len();
        let mut row = vec![T::zero(); ncols];
        let mut beta = c.rhs.sub(&c.lhs(&self.shift));
        for (j, a) in &c.coeffs {
            if a.is_zero() {
                continue;
            }
            match self.pos[*j] {
                Pos::Col(col) => row[col] = row[col].sub(a),
                Pos::Row(r) => {
                    beta.sub_mul_assign(a, &self.beta[r]);
                    for (k, v) in self.rows[r].iter().enumerate() {
                        if !v.is_zero() {
                            row[k].sub_mul_assign(a, v);
                        }
                    }
                }
            }
        }
        let var = self.kinds.len();
        self.kinds.push(kind);
        self.pos.push(Pos::Row(self.rows.len()));
        self.basic.push(var);
        self.rows.push(row);
        self.beta.push(beta);
    }

    /// Adds `a·x <= b`. The next [`Simplex::solve`] re-optimises from the
    /// current basis when it was optimal.
    pub fn add_inequality(&mut self, coeffs: Vec<(usize, T)>, rhs: T) -> Result<()> {
        let c = Constraint::new(coeffs, rhs);
        if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= self.n) {
            return Err(Error::DimensionMismatch(format!("variable {j} of {}", self.n)));
        }
        self.lp.inequalities.push(c.clone());
        match self.state {
            State::Optimal => self.push_row(&c, Kind::Nonneg),
            State::Fresh => self.push_row(&c, Kind::Nonneg),
            State::Done => {
                if let Some(last) = &mut self.last {
                    if last.status == LpStatus::Infeasible {
                        // adding a row keeps the program infeasible
                        if let Some(cert) = &mut last.certificate {
                            cert.inequalities.push(T::zero());
                        }
                        return Ok(());
                    }
                }
                self.build();
            }
        }
        Ok(())
    }

    fn pivot(&mut self, l: usize, e: usize) {
        self.pivots += 1;
        let piv = self.rows[l][e].clone();
        let inv = T::one().div(&piv);
        let neg_inv = inv.neg();
        let ncols = self.cols.len();
        {
            let row = &mut self.rows[l];
            for (j, v) in row.iter_mut().enumerate() {
                if j != e && !v.is_zero() {
                    *v = v.mul(&neg_inv);
                }
            }
            row[e] = inv.clone();
        }
        self.beta[l] = self.beta[l].mul(&neg_inv);
        let nz: Vec<usize> = (0..ncols).filter(|&j| j != e && !self.rows[l][j].is_zero()).collect();
        let prow = std::mem::take(&mut self.rows[l]);
        let pbeta = self.beta[l].clone();
        for r in 0..self.rows.len() {
            if r == l {
                continue;
            }
            let f = self.rows[r][e].clone();
            if f.is_zero() {
                continue;
            }
            let nf = f.neg();
            let row = &mut self.rows[r];
            for &j in &nz {
                row[j].sub_mul_assign(&nf, &prow[j]);
            }
            row[e] = f.mul(&inv);
            self.beta[r].sub_mul_assign(&nf, &pbeta);
        }
        let f = self.obj[e].clone();
        if !f.is_zero() {
            let nf = f.neg();
            for &j in &nz {
                self.obj[j].sub_mul_assign(&nf, &prow[j]);
            }
            self.obj[e] = f.mul(&inv);
            self.z0.sub_mul_assign(&nf, &pbeta);
        }
        self.rows[l] = prow;
        let leaving = self.basic[l];
        let entering = self.cols[e];
        self.basic[l] = entering;
        self.cols[e] = leaving;
        self.pos[entering] = Pos::Row(l);
        self.pos[leaving] = Pos::Col(e);
    }

    fn tick(&mut self) -> Result<()> {
        if self.pivots > self.iteration_limit {
            return Err(Error::Resource(format!(
                "simplex iteration limit {} exceeded",
                self.iteration_limit
            )));
        }
        Ok(())
    }

    /// Picks the row for bringing column `c` into the basis during the
    /// structural phases: lowest variable id exactly, largest magnitude in floats.
    fn structural_row(&self, c: usize, allow: impl Fn(Kind) -> bool, prefer: Option<Kind>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for r in 0..self.rows.len() {
            let k = self.kinds[self.basic[r]];
            if !allow(k) || self.rows[r][c].is_zero() {
                continue;
            }
            best = match best {
                None => Some(r),
                Some(b) => {
                    let kb = self.kinds[self.basic[b]];
                    let better = if prefer.is_some() && (Some(k) == prefer) != (Some(kb) == prefer) {
                        Some(k) == prefer
                    } else if T::EXACT {
                        self.basic[r] < self.basic[b]
                    } else {
                        self.rows[r][c].to_f64().abs() > self.rows[b][c].to_f64().abs()
                    };
                    if better {
                        Some(r)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    /// Brings free structurals into the basis and equality slacks out of it.
    fn structural_phase(&mut self) -> Result<Option<Outcome>> {
        for j in 0..self.n {
            if self.kinds[j] != Kind::Free {
                continue;
            }
            if let Pos::Col(c) = self.pos[j] {
                if let Some(r) = self.structural_row(c, |k| k != Kind::Free, Some(Kind::Fixed)) {
                    self.pivot(r, c);
                    self.tick()?;
                }
            }
        }
        let mut r = 0;
        while r < self.rows.len() {
            if self.kinds[self.basic[r]] == Kind::Fixed {
                let mut best: Option<usize> = None;
                for c in 0..self.cols.len() {
                    if self.kinds[self.cols[c]] != Kind::Nonneg || self.rows[r][c].is_zero() {
                        continue;
                    }
                    best = match best {
                        None => Some(c),
                        Some(b) => {
                            let better = if T::EXACT {
                                self.cols[c] < self.cols[b]
                            } else {
                                self.rows[r][c].to_f64().abs() > self.rows[r][b].to_f64().abs()
                            };
                            Some(if better { c } else { b })
                        }
                    };
                }
                match best {
                    Some(c) => {
                        self.pivot(r, c);
                        self.tick()?;
                    }
                    None => {
                        if !self.beta[r].is_zero() {
                            return Ok(Some(Outcome::InfeasibleRow(r)));
                        }
                        // redundant equality: the row is identically zero
                    }
                }
            }
            r += 1;
        }
        Ok(None)
    }

    fn constrained(&self, r: usize) -> bool {
        self.kinds[self.basic[r]] == Kind::Nonneg
    }

    /// Dual simplex. With `use_objective = false` the objective row is treated
    /// as zero (feasibility search with the dual Bland rule).
    fn dual_simplex(&mut self, use_objective: bool) -> Result<Outcome> {
        let mut streak = 0usize;
        loop {
            let bland = !use_objective || streak >= DEGENERATE_STREAK;
            let mut leave: Option<usize> = None;
            for r in 0..self.rows.len() {
                if !self.constrained(r) || !self.beta[r].is_negative() {
                    continue;
                }
                leave = match leave {
                    None => Some(r),
                    Some(b) => {
                        let better = if bland {
                            self.basic[r] < self.basic[b]
                        } else {
                            match self.beta[r].compare(&self.beta[b]) {
                                std::cmp::Ordering::Less => true,
                                std::cmp::Ordering::Equal => self.basic[r] < self.basic[b],
                                std::cmp::Ordering::Greater => false,
                            }
                        };
                        Some(if better { r } else { b })
                    }
                };
            }
            let Some(l) = leave else {
                return Ok(Outcome::Feasible);
            };
            let mut enter: Option<(usize, T)> = None;
            for c in 0..self.cols.len() {
                if self.kinds[self.cols[c]] != Kind::Nonneg || !self.rows[l][c].is_positive() {
                    continue;
                }
                let ratio = if use_objective {
                    self.obj[c].div(&self.rows[l][c])
                } else {
                    T::zero()
                };
                enter = match enter {
                    None => Some((c, ratio)),
                    Some((b, br)) => {
                        let better = match ratio.compare(&br) {
                            std::cmp::Ordering::Greater => true,
                            std::cmp::Ordering::Equal => {
                                if bland || T::EXACT {
                                    self.cols[c] < self.cols[b]
                                } else {
                                    self.rows[l][c].to_f64() > self.rows[l][b].to_f64()
                                }
                            }
                            std::cmp::Ordering::Less => false,
                        };
                        Some(if better { (c, ratio) } else { (b, br) })
                    }
                };
            }
            let Some((e, ratio)) = enter else {
                return Ok(Outcome::InfeasibleRow(l));
            };
            if ratio.is_zero() {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(l, e);
            self.tick()?;
        }
    }

    fn primal_simplex(&mut self) -> Result<Outcome> {
        for c in 0..self.cols.len() {
            let v = self.cols[c];
            if self.kinds[v] == Kind::Free && !self.obj[c].is_zero() {
                return Ok(Outcome::FreeUnbounded(c));
            }
        }
        let mut streak = 0usize;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            let mut enter: Option<usize> = None;
            for c in 0..self.cols.len() {
                if self.kinds[self.cols[c]] != Kind::Nonneg || !self.obj[c].is_positive() {
                    continue;
                }
                enter = match enter {
                    None => Some(c),
                    Some(b) => {
                        let better = if bland {
                            self.cols[c] < self.cols[b]
                        } else {
                            match self.obj[c].compare(&self.obj[b]) {
                                std::cmp::Ordering::Greater => true,
                                std::cmp::Ordering::Equal => self.cols[c] < self.cols[b],
                                std::cmp::Ordering::Less => false,
                            }
                        };
                        Some(if better { c } else { b })
                    }
                };
            }
            let Some(e) = enter else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                if !self.constrained(r) || !self.rows[r][e].is_negative() {
                    continue;
                }
                let ratio = self.beta[r].div(&self.rows[r][e].neg());
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((b, br)) => {
                        let better = match ratio.compare(&br) {
                            std::cmp::Ordering::Less => true,
                            std::cmp::Ordering::Equal => {
                                if T::EXACT || bland {
                                    self.basic[r] < self.basic[b]
                                } else {
                                    self.rows[r][e].to_f64() < self.rows[b][e].to_f64()
                                }
                            }
                            std::cmp::Ordering::Greater => false,
                        };
                        Some(if better { (r, ratio) } else { (b, br) })
                    }
                };
            }
            let Some((l, ratio)) = leave else {
                return Ok(Outcome::Unbounded(e));
            };
            if ratio.is_zero() {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(l, e);
            self.tick()?;
        }
    }

    fn value_of(&self, var: usize) -> T {
        match self.pos[var] {
            Pos::Row(r) => self.beta[r].clone(),
            Pos::Col(_) => T::zero(),
        }
    }

    fn primal_point(&self) -> Vec<T> {
        (0..self.n).map(|j| self.value_of(j).add(&self.shift[j])).collect()
    }

    /// Splits per-variable multipliers into equality, inequality and bound parts.
    fn split_multipliers(&self, per_var: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let neq = self.lp.equalities.len();
        let bounds: Vec<T> = (0..self.n)
            .map(|j| if self.kinds[j] == Kind::Nonneg { per_var[j].clone() } else { T::zero() })
            .collect();
        let eq = per_var[self.n..self.n + neq].to_vec();
        let ins = per_var[self.n + neq..].to_vec();
        (eq, ins, bounds)
    }

    fn row_certificate(&self, l: usize) -> FarkasCertificate<T> {
        let mut per_var = vec![T::zero(); self.kinds.len()];
        per_var[self.basic[l]] = T::one();
        for (c, a) in self.rows[l].iter().enumerate() {
            if !a.is_zero() {
                per_var[self.cols[c]] = a.neg();
            }
        }
        if self.beta[l].is_positive() {
            // equality rows only: flip the sign of the combination
            for v in per_var.iter_mut() {
                *v = v.neg();
            }
        }
        let (eq, ins, bounds) = self.split_multipliers(&per_var);
        FarkasCertificate { equalities: eq, inequalities: ins, bounds }
    }

    fn dual_solution(&self) -> DualSolution<T> {
        let mut per_var = vec![T::zero(); self.kinds.len()];
        for (c, d) in self.obj.iter().enumerate() {
            let v = self.cols[c];
            if v < self.n && self.kinds[v] == Kind::Free {
                continue;
            }
            per_var[v] = d.neg();
        }
        let (eq, ins, bounds) = self.split_multipliers(&per_var);
        DualSolution { equalities: eq, inequalities: ins, bounds }
    }

    fn ray(&self, e: usize, sign_neg: bool) -> Vec<T> {
        let mut dir = vec![T::zero(); self.n];
        for (j, d) in dir.iter_mut().enumerate() {
            *d = match self.pos[j] {
                Pos::Col(c) if c == e => T::one(),
                Pos::Col(_) => T::zero(),
                Pos::Row(r) => self.rows[r][e].clone(),
            };
            if sign_neg {
                *d = d.neg();
            }
        }
        dir
    }

    fn finish_infeasible(&mut self, l: usize) -> Result<LpResult<T>> {
        let cert = self.row_certificate(l);
        if !cert.verify(&self.lp) {
            return Err(Error::Verification("Farkas certificate does not verify".into()));
        }
        self.state = State::Done;
        Ok(LpResult {
            status: LpStatus::Infeasible,
            primal: None,
            objective_value: None,
            dual: None,
            certificate: Some(cert),
            ray: None,
            pivots: self.pivots,
        })
    }

    fn verify_ray(&self, ray: &[T]) -> bool {
        let lp = &self.lp;
        lp.equalities.iter().all(|c| c.lhs(ray).is_zero())
            && lp.inequalities.iter().all(|c| !c.lhs(ray).is_positive())
            && lp
                .lower_bounds
                .iter()
                .zip(ray)
                .all(|(l, r)| l.is_none() || !r.is_negative())
            && lp.objective_value(ray).is_positive()
    }

    /// Runs (or resumes) the solve and verifies the answer independently.
    pub fn solve(&mut self) -> Result<LpResult<T>> {
        if self.state == State::Done {
            if let Some(last) = &self.last {
                return Ok(last.clone());
            }
        }
        self.iteration_limit = self.pivots + 50_000 + 50 * (self.rows.len() + self.cols.len());
        if self.state == State::Fresh {
            if let Some(Outcome::InfeasibleRow(l)) = self.structural_phase()? {
                let res = self.finish_infeasible(l)?;
                self.last = Some(res.clone());
                return Ok(res);
            }
            if let Outcome::InfeasibleRow(l) = self.dual_simplex(false)? {
                let res = self.finish_infeasible(l)?;
                self.last = Some(res.clone());
                return Ok(res);
            }
        } else if let Outcome::InfeasibleRow(l) = self.dual_simplex(true)? {
            let res = self.finish_infeasible(l)?;
            self.last = Some(res.clone());
            return Ok(res);
        }
        let res = match self.primal_simplex()? {
            Outcome::Optimal => {
                let x = self.primal_point();
                if !self.lp.is_feasible(&x) {
                    return Err(Error::Verification("primal witness violates a constraint".into()));
                }
                let dual = self.dual_solution();
                let value = self.lp.objective_value(&x);
                if !dual.is_feasible(&self.lp) || !dual.value(&self.lp).sub(&value).is_zero() {
                    return Err(Error::Verification("dual witness does not match the optimum".into()));
                }
                self.state = State::Optimal;
                LpResult {
                    status: LpStatus::Optimal,
                    primal: Some(x),
                    objective_value: Some(value),
                    dual: Some(dual),
                    certificate: None,
                    ray: None,
                    pivots: self.pivots,
                }
            }
            Outcome::Unbounded(e) => self.unbounded_result(e, false)?,
            Outcome::FreeUnbounded(c) => {
                let neg = self.obj[c].is_negative();
                self.unbounded_result(c, neg)?
            }
            Outcome::Feasible | Outcome::InfeasibleRow(_) => unreachable!("primal simplex outcome"),
        };
        self.last = Some(res.clone());
        Ok(res)
    }

    fn unbounded_result(&mut self, e: usize, neg: bool) -> Result<LpResult<T>> {
        let x = self.primal_point();
        let ray = self.ray(e, neg);
        if !self.lp.is_feasible(&x) || !self.verify_ray(&ray) {
            return Err(Error::Verification("unbounded ray does not verify".into()));
        }
        self.state = State::Done;
        Ok(LpResult {
            status: LpStatus::Unbounded,
            primal: Some(x),
            objective_value: None,
            dual: None,
            certificate: None,
            ray: Some(ray),
            pivots: self.pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn i(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn bounded_single_variable() {
        let mut lp = LinearProgram::<Rational>::nonnegative(1);
        lp.objective = vec![i(1)];
        lp.add_inequality(vec![(0, i(1))], i(1));
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.primal.unwrap(), vec![i(1)]);
        assert_eq!(r.objective_value.unwrap(), i(1));
    }

    #[test]
    fn contradictory_pair_gives_unit_certificate() {
        let mut lp = LinearProgram::<Rational>::new(1);
        lp.add_inequality(vec![(0, i(1))], i(0));
        lp.add_inequality(vec![(0, i(-1))], i(-1));
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        let cert = r.certificate.unwrap();
        assert_eq!(cert.inequalities, vec![i(1), i(1)]);
        assert_eq!(cert.value(&lp), i(-1));
        assert!(cert.verify(&lp));
    }

    #[test]
    fn degenerate_ties_terminate() {
        let mut lp = LinearProgram::<Rational>::nonnegative(2);
        lp.objective = vec![i(1), i(1)];
        lp.add_inequality(vec![(0, i(1)), (1, i(1))], i(1));
        let r = solve(&lp).unwrap();
        assert_eq!(r.objective_value.unwrap(), i(1));
    }

    #[test]
    fn feasibility_examples() {
        let mut lp = LinearProgram::<Rational>::new(1);
        lp.add_equality(vec![(0, i(1))], q("1/3"));
        assert_eq!(feasibility(&lp).unwrap().primal.unwrap(), vec![q("1/3")]);

        let empty = LinearProgram::<Rational>::new(3);
        let r = feasibility(&empty).unwrap();
        assert_eq!(r.primal.unwrap(), vec![i(0); 3]);

        let mut lp = LinearProgram::<Rational>::new(1);
        lp.add_inequality(vec![(0, i(-1))], i(-2));
        lp.add_inequality(vec![(0, i(1))], i(1));
        let r = feasibility(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(r.certificate.unwrap().verify(&lp));
    }

    #[test]
    fn unbounded_reports_ray() {
        let mut lp = LinearProgram::<Rational>::nonnegative(2);
        lp.objective = vec![i(1), i(0)];
        lp.add_inequality(vec![(0, i(-1)), (1, i(1))], i(1));
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        let ray = r.ray.unwrap();
        assert!(ray[0].is_positive());

        let mut free = LinearProgram::<Rational>::new(2);
        free.objective = vec![i(0), i(-3)];
        let r = solve(&free).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        assert_eq!(r.ray.unwrap(), vec![i(0), i(-1)]);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut lp = LinearProgram::<Rational>::new(2);
        lp.add_equality(vec![(0, i(1)), (1, i(1))], i(1));
        lp.add_equality(vec![(0, i(2)), (1, i(2))], i(3));
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(r.certificate.unwrap().verify(&lp));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::<Rational>::nonnegative(2);
        lp.objective = vec![i(2), i(1)];
        lp.add_equality(vec![(0, i(1)), (1, i(1))], i(1));
        lp.add_equality(vec![(0, i(3)), (1, i(3))], i(3));
        let r = solve(&lp).unwrap();
        assert_eq!(r.objective_value.unwrap(), i(2));
    }

    #[test]
    fn lower_bounds_shift() {
        // max -x - y with x >= 2, y >= -1/2, x + y >= 3  -> 3 at ... value -3
        let mut lp = LinearProgram::<Rational>::new(2);
        lp.objective = vec![i(-1), i(-1)];
        lp.set_lower_bound(0, Some(i(2)));
        lp.set_lower_bound(1, Some(q("-1/2")));
        lp.add_inequality(vec![(0, i(-1)), (1, i(-1))], i(-3));
        let r = solve(&lp).unwrap();
        assert_eq!(r.objective_value.unwrap(), i(-3));
        let d = r.dual.unwrap();
        assert_eq!(d.value(&lp), i(-3));
    }

    #[test]
    fn incremental_rows_match_cold_solve() {
        let mut lp = LinearProgram::<Rational>::nonnegative(3);
        lp.objective = vec![i(3), i(2), i(4)];
        lp.add_inequality(vec![(0, i(1)), (1, i(1)), (2, i(2))], i(4));
        let mut s = Simplex::new(lp.clone()).unwrap();
        let first = s.solve().unwrap();
        assert_eq!(first.objective_value.unwrap(), i(12));
        s.add_inequality(vec![(0, i(1))], i(1)).unwrap();
        s.add_inequality(vec![(2, i(3)), (1, i(1))], i(2)).unwrap();
        let warm = s.solve().unwrap();
        lp.add_inequality(vec![(0, i(1))], i(1));
        lp.add_inequality(vec![(2, i(3)), (1, i(1))], i(2));
        let cold = solve(&lp).unwrap();
        assert_eq!(warm.objective_value, cold.objective_value);
        assert_eq!(warm.status, cold.status);
    }

    #[test]
    fn float_mode_agrees() {
        let mut lp = LinearProgram::<Rational>::nonnegative(2);
        lp.objective = vec![i(1), i(2)];
        lp.add_inequality(vec![(0, i(1)), (1, i(3))], i(3));
        lp.add_inequality(vec![(0, i(1)), (1, i(1))], i(2));
        let r = solve_in_mode(&lp, Mode::Float).unwrap();
        let e = solve_in_mode(&lp, Mode::Rational).unwrap();
        assert!((r.objective_value.unwrap() - e.objective_value.unwrap()).abs() < 1e-9);
        assert!((e.objective_value.unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let mut lp = LinearProgram::<Rational>::new(1);
        lp.add_inequality(vec![(3, i(1))], i(0));
        assert!(matches!(solve(&lp), Err(Error::DimensionMismatch(_))));
    }
}
