//! Exact linear algebra over the rationals and over prime fields.
//!
//! Small dense matrices only; the rank computations here back the rank
//! and regularization modules, where matrices are at most a few dozen
//! rows wide.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::poly::pow_mod;

pub type RatMat = Vec<Vec<BigRational>>;

pub fn from_int_rows(rows: &[Vec<BigInt>]) -> RatMat {
    rows.iter()
        .map(|r| r.iter().map(|c| BigRational::from_integer(c.clone())).collect())
        .collect()
}

/// Reduced row echelon form in place; returns the pivot columns
/// (leftmost-pivot elimination, canonical output).
pub fn rref(m: &mut RatMat) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(pr) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, pr);
        let inv = m[row][col].recip();
        for c in col..cols {
            let v = &m[row][c] * &inv;
            m[row][c] = v;
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..cols {
                    let v = &m[r][c] - &factor * &m[row][c];
                    m[r][c] = v;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    pivots
}

pub fn rank(m: &RatMat) -> usize {
    let mut c = m.clone();
    rref(&mut c).len()
}

/// A basis of the right kernel (null space) of `m`.
pub fn kernel(m: &RatMat) -> Vec<Vec<BigRational>> {
    if m.is_empty() {
        return vec![];
    }
    let cols = m[0].len();
    let mut c = m.clone();
    let pivots = rref(&mut c);
    let free: Vec<usize> = (0..cols).filter(|j| !pivots.contains(j)).collect();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v = vec![BigRational::zero(); cols];
        v[f] = BigRational::one();
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = -c[i][f].clone();
        }
        basis.push(v);
    }
    basis
}

/// Indices of a maximal linearly independent subset of the given rows,
/// scanning left to right (first occurrence kept).
pub fn independent_subset(rows: &[Vec<BigRational>]) -> Vec<usize> {
    let mut kept: Vec<Vec<BigRational>> = Vec::new();
    let mut idx = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut m: RatMat = kept.clone();
        m.push(r.clone());
        if rank(&m) > kept.len() {
            kept.push(r.clone());
            idx.push(i);
        }
    }
    idx
}

/// Coefficients `c` with `sum_i c_i basis[i] = target`, if the target
/// lies in the span (free coordinates set to zero).
pub fn solve_combination(
    basis: &[Vec<BigRational>],
    target: &[BigRational],
) -> Option<Vec<BigRational>> {
    let k = basis.len();
    let dim = target.len();
    let mut m: RatMat = (0..dim)
        .map(|d| {
            let mut row: Vec<BigRational> = basis.iter().map(|b| b[d].clone()).collect();
            row.push(target[d].clone());
            row
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.contains(&k) {
        return None;
    }
    let mut c = vec![BigRational::zero(); k];
    for (i, &pc) in pivots.iter().enumerate() {
        c[pc] = m[i][k].clone();
    }
    Some(c)
}

/// Rank of an integer matrix reduced mod p.
pub fn rank_mod(rows: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x % p).collect())
        .collect();
    let nrows = m.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = m[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pr) = (rank..nrows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pr);
        let inv = pow_mod(m[rank][col], p - 2, p);
        for c in col..ncols {
            m[rank][c] = mulp(m[rank][c], inv, p);
        }
        for r in 0..nrows {
            if r != rank && m[r][col] != 0 {
                let f = m[r][col];
                for c in col..ncols {
                    let sub = mulp(f, m[rank][c], p);
                    m[r][c] = (m[r][c] + p - sub) % p;
                }
            }
        }
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank
}

#[inline]
fn mulp(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}
