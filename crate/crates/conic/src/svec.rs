//! Symmetric-matrix vectorization.
//!
//! A symmetric `s x s` matrix is stored as its lower triangle in column-major
//! order with off-diagonal entries multiplied by `sqrt(2)`, so that the
//! Euclidean inner product of two vectors equals the trace inner product of
//! the matrices they represent.

use nalgebra::DMatrix;
use std::f64::consts::SQRT_2;

pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Position of entry `(i, j)` (either triangle) inside the vectorization.
pub fn svec_index(side: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    c * side - c * c.saturating_sub(1) / 2 + (r - c)
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let side = m.nrows();
    let mut out = Vec::with_capacity(svec_len(side));
    for j in 0..side {
        out.push(m[(j, j)]);
        for i in (j + 1)..side {
            out.push(SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}

pub fn smat(v: &[f64], side: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(side, side);
    let mut k = 0;
    for j in 0..side {
        m[(j, j)] = v[k];
        k += 1;
        for i in (j + 1)..side {
            let val = v[k] / SQRT_2;
            m[(i, j)] = val;
            m[(j, i)] = val;
            k += 1;
        }
    }
    m
}

/// Coefficient to place at `svec_index(side, i, j)` so that the linear form
/// `coef . svec(X)` picks up `c * (X_ij + X_ji)` for `i != j`, or `c * X_ii`.
pub fn entry_coefficient(i: usize, j: usize, c: f64) -> f64 {
    if i == j {
        c
    } else {
        SQRT_2 * c
    }
}

/// Vectorized coefficient of the linear form `X -> trace(C X)`.
pub fn trace_form(c: &DMatrix<f64>) -> Vec<f64> {
    svec(c)
}
