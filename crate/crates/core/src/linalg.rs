//! Exact square solves by fraction-free elimination, with a floating-point
//! pass to pick a full-rank subset of rows.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::num::Rational;

/// Indices of a maximal linearly independent subset of `rows`, scanning in
/// order and keeping a row when it is independent of those already kept
/// (partial-pivoting elimination in floating point).
pub fn independent_rows(rows: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let Some(width) = rows.first().map(Vec::len) else {
        return Vec::new();
    };
    // reduced copies of kept rows, each with its pivot column
    let mut basis: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut kept = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        if basis.len() == width {
            break;
        }
        let mut r = row.clone();
        for (p, b) in &basis {
            let f = r[*p];
            if f != 0.0 {
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= f * y;
                }
            }
        }
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let (p, &v) = r
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("nonempty row");
        if v.abs() <= tol * scale {
            continue;
        }
        for x in r.iter_mut() {
            *x /= v;
        }
        for (_, b) in basis.iter_mut() {
            let f = b[p];
            if f != 0.0 {
                for (x, y) in b.iter_mut().zip(&r) {
                    *x -= f * y;
                }
            }
        }
        basis.push((p, r));
        kept.push(k);
    }
    kept
}

/// Clears denominators of one row, returning integer coefficients and rhs.
fn integer_row(row: &[Rational], rhs: &Rational) -> Vec<BigInt> {
    let d = Rational::common_denominator(row.iter().chain(std::iter::once(rhs)));
    row.iter()
        .chain(std::iter::once(rhs))
        .map(|v| v.numer() * (&d / v.denom()))
        .collect()
}

/// Unique solution of the square system `a x = b`, or `None` when singular.
pub fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut m: Vec<Vec<BigInt>> = a.iter().zip(b).map(|(r, v)| integer_row(r, v)).collect();
    // Bareiss: every division below is exact
    let mut prev = BigInt::one();
    for k in 0..n {
        let p = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, p);
        let (top, rest) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        let pk = pivot_row[k].clone();
        for row in rest.iter_mut() {
            let f = row[k].clone();
            for j in k + 1..=n {
                let v = &pk * &row[j] - &f * &pivot_row[j];
                row[j] = if prev.is_one() { v } else { v.div_floor(&prev) };
            }
            row[k] = BigInt::zero();
        }
        prev = pk;
    }
    // back substitution over rationals
    let mut x = vec![Rational::zero(); n];
    for k in (0..n).rev() {
        let mut acc = Rational::from_big_int(m[k][n].clone());
        for j in k + 1..n {
            if !m[k][j].is_zero() {
                acc = &acc - &(&Rational::from_big_int(m[k][j].clone()) * &x[j]);
            }
        }
        let d = &m[k][k];
        x[k] = &acc / &Rational::from_big_int(d.clone());
    }
    Some(x)
}

/// Basis of `{x : a x = 0}` by exact reduction to row echelon form.
pub fn nullspace(a: &[Vec<Rational>], width: usize) -> Vec<Vec<Rational>> {
    // reduced rows keyed by pivot column
    let mut pivots: Vec<(usize, Vec<Rational>)> = Vec::new();
    for row in a {
        let mut r = row.clone();
        for (p, b) in &pivots {
            if !r[*p].is_zero() {
                let f = r[*p].clone();
                for (x, y) in r.iter_mut().zip(b) {
                    if !y.is_zero() {
                        *x = &*x - &(&f * y);
                    }
                }
            }
        }
        let Some(p) = r.iter().position(|v| !v.is_zero()) else {
            continue;
        };
        let d = r[p].clone();
        for x in r.iter_mut() {
            *x = &*x / &d;
        }
        for (_, b) in pivots.iter_mut() {
            if !b[p].is_zero() {
                let f = b[p].clone();
                for (x, y) in b.iter_mut().zip(&r) {
                    if !y.is_zero() {
                        *x = &*x - &(&f * y);
                    }
                }
            }
        }
        pivots.push((p, r));
        if pivots.len() == width {
            break;
        }
    }
    let is_pivot: Vec<bool> = (0..width).map(|j| pivots.iter().any(|(p, _)| *p == j)).collect();
    (0..width)
        .filter(|&j| !is_pivot[j])
        .map(|free| {
            let mut v = vec![Rational::zero(); width];
            v[free] = Rational::one();
            for (p, b) in &pivots {
                v[*p] = -b[free].clone();
            }
            v
        })
        .collect()
}
