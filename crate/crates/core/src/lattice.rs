//! Integer linear systems `A x = b` solved through a column Hermite form.
//!
//! Unimodular column operations bring `A` to lower echelon form `H = A V`.
//! Forward substitution on `H y = b` either fails (no integer solution) or
//! yields `y`, and then `x = V y`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Matrix = Vec<Vec<BigInt>>;

/// Echelon form `H = A V` with `V` unimodular.
#[derive(Debug, Clone)]
pub struct ColumnHermite {
    pub h: Matrix,
    pub v: Matrix,
    /// `(row, column)` of each pivot; pivot columns are `0..pivots.len()`.
    pub pivots: Vec<(usize, usize)>,
}

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

/// Replace columns `p`, `q` of `m` by `(a p + b q, c p + d q)`.
fn combine_columns(m: &mut Matrix, p: usize, q: usize, a: &BigInt, b: &BigInt, c: &BigInt, d: &BigInt) {
    for row in m.iter_mut() {
        let (x, y) = (row[p].clone(), row[q].clone());
        row[p] = a * &x + b * &y;
        row[q] = c * &x + d * &y;
    }
}

fn negate_column(m: &mut Matrix, p: usize) {
    for row in m.iter_mut() {
        row[p] = -row[p].clone();
    }
}

pub fn column_hermite(a: &Matrix, cols: usize) -> ColumnHermite {
    let mut h = a.clone();
    let mut v = identity(cols);
    let mut pivots = Vec::new();
    let mut next = 0;
    for r in 0..h.len() {
        if next == cols {
            break;
        }
        for j in next + 1..cols {
            if h[r][j].is_zero() {
                continue;
            }
            let (x, y) = (h[r][next].clone(), h[r][j].clone());
            let e = x.extended_gcd(&y);
            let (g, s, t) = (e.gcd, e.x, e.y);
            let (xg, yg) = (&x / &g, &y / &g);
            // det [[s, -yg], [t, xg]] = s xg + t yg = 1
            let neg_yg = -yg;
            combine_columns(&mut h, next, j, &s, &t, &neg_yg, &xg);
            combine_columns(&mut v, next, j, &s, &t, &neg_yg, &xg);
            debug_assert!(h[r][j].is_zero());
        }
        if !h[r][next].is_zero() {
            if h[r][next].is_negative() {
                negate_column(&mut h, next);
                negate_column(&mut v, next);
            }
            pivots.push((r, next));
            next += 1;
        }
    }
    ColumnHermite { h, v, pivots }
}

/// An integer solution of `a x = b`, if one exists.
pub fn solve(a: &Matrix, cols: usize, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(a.len(), b.len());
    let form = column_hermite(a, cols);
    let mut y = vec![BigInt::zero(); cols];
    let mut pivot_iter = form.pivots.iter().peekable();
    let mut solved = 0;
    for (r, row) in form.h.iter().enumerate() {
        let partial: BigInt = (0..solved).map(|j| &row[j] * &y[j]).sum();
        let residual = &b[r] - partial;
        match pivot_iter.peek() {
            Some(&&(pr, pc)) if pr == r => {
                let (q, rem) = residual.div_rem(&row[pc]);
                if !rem.is_zero() {
                    return None;
                }
                y[pc] = q;
                solved += 1;
                pivot_iter.next();
            }
            _ => {
                if !residual.is_zero() {
                    return None;
                }
            }
        }
    }
    Some(
        form.v
            .iter()
            .map(|vrow| vrow.iter().zip(&y).map(|(a, b)| a * b).sum())
            .collect(),
    )
}

pub fn mat_vec(a: &Matrix, x: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}
