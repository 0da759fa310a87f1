//! Floating-point revised simplex for `min c·z` subject to `Σ z_j a_j = b`,
//! `z >= 0`, with columns added on demand. It only guides the search: every
//! answer built from it is re-derived in exact arithmetic from the final basis.

/// Pricing and feasibility tolerance.
const TOL: f64 = 1e-9;
/// Smallest pivot accepted in the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// Pivots between full re-inversions of the basis.
const REINVERT: usize = 60;
/// Degenerate pivots before switching to Bland's rule.
const STALL: usize = 40;

#[derive(Clone, Debug)]
pub struct Column {
    pub entries: Vec<(usize, f64)>,
    pub cost: f64,
}

/// A basic variable: one of the user columns, or the artificial of a row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    Column(usize),
    Artificial(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Optimal,
    /// No feasible point among the current columns.
    Infeasible,
    /// Column `entering` can grow without bound; `direction` holds the rates
    /// of change of the basic variables.
    Unbounded { entering: usize, direction: Vec<f64> },
    IterationLimit,
}

pub struct Master {
    m: usize,
    rhs: Vec<f64>,
    columns: Vec<Column>,
    art_sign: Vec<f64>,
    basis: Vec<Var>,
    in_basis: Vec<bool>,
    /// Row-major inverse of the basis matrix.
    binv: Vec<f64>,
    xb: Vec<f64>,
    phase_one: bool,
    since_reinvert: usize,
    pub pivots: usize,
}

impl Master {
    pub fn new(rhs: Vec<f64>) -> Self {
        let m = rhs.len();
        let art_sign: Vec<f64> = rhs.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = art_sign[i];
        }
        let xb = rhs.iter().map(|v| v.abs()).collect();
        Master {
            m,
            rhs,
            columns: Vec::new(),
            art_sign,
            basis: (0..m).map(Var::Artificial).collect(),
            in_basis: Vec::new(),
            binv,
            xb,
            phase_one: true,
            since_reinvert: 0,
            pivots: 0,
        }
    }

    pub fn add_column(&mut self, c: Column) -> usize {
        self.columns.push(c);
        self.in_basis.push(false);
        self.columns.len() - 1
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn basis(&self) -> &[Var] {
        &self.basis
    }

    pub fn basic_values(&self) -> &[f64] {
        &self.xb
    }

    fn cost(&self, v: Var) -> f64 {
        match (v, self.phase_one) {
            (Var::Artificial(_), true) => 1.0,
            (Var::Artificial(_), false) => 0.0,
            (Var::Column(_), true) => 0.0,
            (Var::Column(j), false) => self.columns[j].cost,
        }
    }

    fn dense(&self, v: Var) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        match v {
            Var::Artificial(i) => a[i] = self.art_sign[i],
            Var::Column(j) => {
                for &(i, x) in &self.columns[j].entries {
                    a[i] += x;
                }
            }
        }
        a
    }

    /// Simplex multipliers `c_B B^{-1}` of the current phase.
    pub fn multipliers(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (k, v) in self.basis.iter().enumerate() {
            let c = self.cost(*v);
            if c != 0.0 {
                for (i, p) in pi.iter_mut().enumerate() {
                    *p += c * self.binv[k * m + i];
                }
            }
        }
        pi
    }

    /// `B^{-1} a`.
    fn ftran(&self, a: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|k| (0..m).map(|i| self.binv[k * m + i] * a[i]).sum()).collect()
    }

    /// Rebuilds the inverse from scratch by Gauss-Jordan with partial pivoting.
    fn reinvert(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (k, v) in self.basis.iter().enumerate() {
            for (i, x) in self.dense(*v).into_iter().enumerate() {
                a[i * m + k] = x;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m).max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs())).expect("rows");
            if a[p * m + c].abs() < 1e-12 {
                return false;
            }
            if p != c {
                for j in 0..m {
                    a.swap(p * m + j, c * m + j);
                    inv.swap(p * m + j, c * m + j);
                }
            }
            let d = a[c * m + c];
            for j in 0..m {
                a[c * m + j] /= d;
                inv[c * m + j] /= d;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for j in 0..m {
                            a[r * m + j] -= f * a[c * m + j];
                            inv[r * m + j] -= f * inv[c * m + j];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.xb = self.ftran(&self.rhs);
        for v in self.xb.iter_mut() {
            if *v < 0.0 && *v > -TOL {
                *v = 0.0;
            }
        }
        self.since_reinvert = 0;
        true
    }

    fn pivot(&mut self, r: usize, q: usize, u: &[f64]) {
        let m = self.m;
        let t = self.xb[r] / u[r];
        for (k, x) in self.xb.iter_mut().enumerate() {
            *x -= t * u[k];
        }
        self.xb[r] = t;
        let ur = u[r];
        for i in 0..m {
            self.binv[r * m + i] /= ur;
        }
        for k in 0..m {
            if k != r && u[k] != 0.0 {
                let f = u[k];
                for i in 0..m {
                    self.binv[k * m + i] -= f * self.binv[r * m + i];
                }
            }
        }
        if let Var::Column(j) = self.basis[r] {
            self.in_basis[j] = false;
        }
        self.basis[r] = Var::Column(q);
        self.in_basis[q] = true;
        self.pivots += 1;
        self.since_reinvert += 1;
    }

    fn phase_objective(&self) -> f64 {
        self.basis.iter().zip(&self.xb).map(|(v, x)| self.cost(*v) * x).sum()
    }

    /// Runs the simplex over the current columns.
    pub fn solve(&mut self, max_pivots: usize) -> Status {
        let limit = self.pivots + max_pivots;
        loop {
            let status = self.run_phase(limit);
            if status != Status::Optimal {
                return status;
            }
            if !self.phase_one {
                return Status::Optimal;
            }
            if self.phase_objective() > 1e-7 {
                return Status::Infeasible;
            }
            self.drive_out_artificials();
            self.phase_one = false;
        }
    }

    pub fn in_phase_one(&self) -> bool {
        self.phase_one
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !matches!(self.basis[r], Var::Artificial(_)) {
                continue;
            }
            for q in 0..self.columns.len() {
                if self.in_basis[q] {
                    continue;
                }
                let u = self.ftran(&self.dense(Var::Column(q)));
                if u[r].abs() > 1e-7 {
                    self.pivot(r, q, &u);
                    break;
                }
            }
        }
    }

    fn run_phase(&mut self, limit: usize) -> Status {
        let mut stall = 0usize;
        loop {
            if self.since_reinvert >= REINVERT && !self.reinvert() {
                return Status::IterationLimit;
            }
            if self.pivots >= limit {
                return Status::IterationLimit;
            }
            let pi = self.multipliers();
            let bland = stall >= STALL;
            let mut enter: Option<(usize, f64)> = None;
            for (j, c) in self.columns.iter().enumerate() {
                if self.in_basis[j] {
                    continue;
                }
                let base = if self.phase_one { 0.0 } else { c.cost };
                let d = base - c.entries.iter().map(|&(i, x)| pi[i] * x).sum::<f64>();
                if d < -TOL {
                    let better = match enter {
                        None => true,
                        Some((_, bd)) => !bland && d < bd,
                    };
                    if better {
                        enter = Some((j, d));
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((q, _)) = enter else {
                return Status::Optimal;
            };
            let u = self.ftran(&self.dense(Var::Column(q)));
            let mut leave: Option<(usize, f64)> = None;
            for (k, &uk) in u.iter().enumerate() {
                if uk <= PIVOT_TOL {
                    continue;
                }
                let t = self.xb[k].max(0.0) / uk;
                leave = match leave {
                    None => Some((k, t)),
                    Some((b, bt)) => {
                        let better = if t < bt - 1e-12 {
                            true
                        } else if t <= bt + 1e-12 {
                            if bland {
                                self.var_key(k) < self.var_key(b)
                            } else {
                                uk > u[b]
                            }
                        } else {
                            false
                        };
                        Some(if better { (k, t) } else { (b, bt) })
                    }
                };
            }
            let Some((r, t)) = leave else {
                return Status::Unbounded { entering: q, direction: u.iter().map(|v| -v).collect() };
            };
            if t <= 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            self.pivot(r, q, &u);
        }
    }

    fn var_key(&self, k: usize) -> (usize, usize) {
        match self.basis[k] {
            Var::Artificial(i) => (0, i),
            Var::Column(j) => (1, j),
        }
    }

    /// Current value of every column variable.
    pub fn value_of_columns(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.columns.len()];
        for (v, x) in self.basis.iter().zip(&self.xb) {
            if let Var::Column(j) = v {
                z[*j] = *x;
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(entries: &[(usize, f64)], cost: f64) -> Column {
        Column { entries: entries.to_vec(), cost }
    }

    #[test]
    fn small_transport() {
        // min z0 + 2 z1 + 3 z2  s.t.  z0 + z2 = 1,  z1 + z2 = 1
        let mut m = Master::new(vec![1.0, 1.0]);
        m.add_column(col(&[(0, 1.0)], 1.0));
        m.add_column(col(&[(1, 1.0)], 2.0));
        m.add_column(col(&[(0, 1.0), (1, 1.0)], 2.5));
        assert_eq!(m.solve(1000), Status::Optimal);
        let z = m.value_of_columns();
        assert!((z[2] - 1.0).abs() < 1e-9);
        assert!(z[0].abs() < 1e-9 && z[1].abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut m = Master::new(vec![1.0]);
        m.add_column(col(&[(0, -1.0)], 0.0));
        assert_eq!(m.solve(100), Status::Infeasible);

        let mut m = Master::new(vec![1.0]);
        m.add_column(col(&[(0, 1.0)], 1.0));
        m.add_column(col(&[(0, 1.0)], -1.0));
        m.add_column(col(&[(0, -1.0)], -1.0));
        assert!(matches!(m.solve(100), Status::Unbounded { .. }));
    }

    #[test]
    fn columns_added_later() {
        let mut m = Master::new(vec![2.0]);
        m.add_column(col(&[(0, 1.0)], 5.0));
        assert_eq!(m.solve(100), Status::Optimal);
        let pi = m.multipliers();
        assert!((pi[0] - 5.0).abs() < 1e-9);
        m.add_column(col(&[(0, 2.0)], 1.0));
        assert_eq!(m.solve(100), Status::Optimal);
        assert!((m.value_of_columns()[1] - 1.0).abs() < 1e-9);
    }
}
