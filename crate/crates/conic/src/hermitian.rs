//! Complex Hermitian matrices through their real symmetric embedding
//!
//! ```text
//! W = A + iB   <->   [[A, -B], [B, A]]
//! ```
//!
//! `W` is PSD iff the embedding is, and `tr(W V) = tr(embed(W) embed(V)) / 2`
//! for Hermitian `W`, `V`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::ConicError;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest `|W - W^H|` entry accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

pub fn embed_hermitian(w: &CMatrix) -> Result<DMatrix<f64>, ConicError> {
    let k = w.nrows();
    if w.ncols() != k {
        return Err(ConicError::DimensionMismatch {
            expected: k,
            got: w.ncols(),
        });
    }
    let scale = w.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let skew = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| (w[(i, j)] - w[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    if skew > HERMITIAN_TOL * scale {
        return Err(ConicError::NotHermitian(skew));
    }
    let mut out = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let z = w[(i, j)];
            out[(i, j)] = z.re;
            out[(i + k, j + k)] = z.re;
            out[(i + k, j)] = z.im;
            out[(i, j + k)] = -z.im;
        }
    }
    Ok(out)
}

/// Inverse of [`embed_hermitian`], averaging the redundant blocks so any
/// symmetric `2K x 2K` matrix maps to the nearest Hermitian one.
pub fn extract_hermitian(x: &DMatrix<f64>) -> Result<CMatrix, ConicError> {
    let n = x.nrows();
    if n % 2 != 0 || x.ncols() != n {
        return Err(ConicError::DimensionMismatch {
            expected: n + n % 2,
            got: x.ncols(),
        });
    }
    let k = n / 2;
    let mut w = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let re = 0.5 * (x[(i, j)] + x[(i + k, j + k)]);
            let im = 0.5 * (x[(i + k, j)] - x[(i, j + k)]);
            w[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok((&w + w.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Dominant eigenpair `(lambda, v)` with `|v| = 1` and the phase fixed so the
/// largest-magnitude component is real and nonnegative.
pub fn principal_eigvec(w: &CMatrix) -> Result<(f64, CVector), ConicError> {
    let k = w.nrows();
    let eig = SymmetricEigen::new(embed_hermitian(w)?);
    let idx = eig.eigenvalues.imax();
    let col = eig.eigenvectors.column(idx);
    let mut v = CVector::from_fn(k, |i, _| Complex64::new(col[i], col[i + k]));
    let nrm = v.norm();
    if nrm > 0.0 {
        v /= Complex64::new(nrm, 0.0);
    }
    let big = v.iter().enumerate().fold((0, 0.0), |acc, (i, z)| {
        if z.norm() > acc.1 {
            (i, z.norm())
        } else {
            acc
        }
    });
    if big.1 > 0.0 {
        let phase = v[big.0] / Complex64::new(big.1, 0.0);
        v /= phase;
        v[big.0] = Complex64::new(v[big.0].norm(), 0.0);
    }
    Ok((eig.eigenvalues[idx], v))
}

/// Eigenvalues of a Hermitian matrix in descending order. Each value appears
/// twice in the embedding, so every other one is kept.
pub fn hermitian_eigenvalues(w: &CMatrix) -> Result<Vec<f64>, ConicError> {
    let eig = SymmetricEigen::new(embed_hermitian(w)?);
    let mut all: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    all.sort_by(|a, b| b.total_cmp(a));
    Ok(all.into_iter().step_by(2).collect())
}

/// Number of eigenvalues above `rel_tol * lambda_max`.
pub fn numeric_rank(w: &CMatrix, rel_tol: f64) -> Result<usize, ConicError> {
    let ev = hermitian_eigenvalues(w)?;
    let top = ev.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(ev.iter().filter(|&&l| l > rel_tol * top).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn embedding_round_trips() {
        let w = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, -1.0), c(0.5, 1.0), c(3.0, 0.0)]);
        let x = embed_hermitian(&w).unwrap();
        assert_eq!(x, x.transpose());
        let back = extract_hermitian(&x).unwrap();
        assert!((back - w).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let w = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(embed_hermitian(&w), Err(ConicError::NotHermitian(_))));
    }

    #[test]
    fn rank_one_outer_product() {
        let v = CVector::from_vec(vec![c(1.0, 1.0), c(0.0, -2.0), c(0.5, 0.0)]);
        let w = &v * v.adjoint();
        assert_eq!(numeric_rank(&w, 1e-6).unwrap(), 1);
        let (lam, u) = principal_eigvec(&w).unwrap();
        assert!((lam - v.norm_squared()).abs() < 1e-12);
        // u is v up to phase
        let proj = (u.adjoint() * &v)[0].norm();
        assert!((proj - v.norm()).abs() < 1e-12);
        assert!(u[1].im.abs() < 1e-14 && u[1].re > 0.0);
    }
}
