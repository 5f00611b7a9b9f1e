//! Per-block cone arithmetic: Jordan products, Nesterov-Todd scaling and
//! step-length computation.
//!
//! Rotated cones are handled in Lorentz coordinates (`t >= |x|`) by the
//! solver, so the kernels below only see nonnegative orthants, Lorentz
//! cones and PSD blocks.
//!
//! Scaling convention: for primal `x` and dual `s` in the interior, `P` maps
//! `s` and `Q = P^{-T}` maps `x` to the same scaled point `lambda`. The
//! normal-equation weight is `H = P^T P`, which satisfies `H s = x`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::svec::{smat, svec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    NonNeg,
    Soc,
    Psd(usize),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub kind: Kind,
    pub start: usize,
    pub len: usize,
}

impl Block {
    pub fn degree(&self) -> usize {
        match self.kind {
            Kind::NonNeg => self.len,
            Kind::Soc => 1,
            Kind::Psd(side) => side,
        }
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Writes the identity element of the block.
pub(crate) fn unit(kind: Kind, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    match kind {
        Kind::NonNeg => out.iter_mut().for_each(|v| *v = 1.0),
        Kind::Soc => out[0] = 1.0,
        Kind::Psd(side) => {
            let mut k = 0;
            for j in 0..side {
                out[k] = 1.0;
                k += side - j;
            }
        }
    }
}

/// Jordan product `u o v`.
pub(crate) fn jordan(kind: Kind, u: &[f64], v: &[f64], out: &mut [f64]) {
    match kind {
        Kind::NonNeg => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        Kind::Soc => {
            out[0] = dot(u, v);
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
        Kind::Psd(side) => {
            let a = smat(u, side);
            let b = smat(v, side);
            let p = &a * &b;
            let sym = (&p + p.transpose()) * 0.5;
            out.copy_from_slice(&svec(&sym));
        }
    }
}

/// Largest `alpha` such that `x + alpha d` stays in the closed cone, for `x`
/// in the interior. Returns `f64::INFINITY` when the ray never leaves.
pub(crate) fn max_step(kind: Kind, x: &[f64], d: &[f64]) -> f64 {
    match kind {
        Kind::NonNeg => x
            .iter()
            .zip(d)
            .filter(|(_, &di)| di < 0.0)
            .map(|(&xi, &di)| -xi / di)
            .fold(f64::INFINITY, f64::min),
        Kind::Soc => {
            // f(a) = (x0 + a d0)^2 - |x1 + a d1|^2 = c + 2 b a + q a^2
            let c = x[0] * x[0] - dot(&x[1..], &x[1..]);
            let b = x[0] * d[0] - dot(&x[1..], &d[1..]);
            let q = d[0] * d[0] - dot(&d[1..], &d[1..]);
            let disc = b * b - q * c;
            if q < 0.0 || (b < 0.0 && disc >= 0.0) {
                let root = c / (-b + disc.max(0.0).sqrt());
                if root > 0.0 {
                    root
                } else {
                    0.0
                }
            } else {
                f64::INFINITY
            }
        }
        Kind::Psd(side) => {
            let xm = smat(x, side);
            let Some(chol) = xm.cholesky() else {
                return 0.0;
            };
            let l = chol.l();
            // L^{-1} D L^{-T}
            let dm = smat(d, side);
            let Some(t) = l.solve_lower_triangular(&dm) else {
                return 0.0;
            };
            let Some(m) = l.solve_lower_triangular(&t.transpose()) else {
                return 0.0;
            };
            let m = (&m + m.transpose()) * 0.5;
            let lo = m.symmetric_eigenvalues().min();
            if lo < 0.0 {
                -1.0 / lo
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Nesterov-Todd scaling of one block at an interior primal-dual pair.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    NonNeg {
        p: Vec<f64>,
    },
    Soc {
        beta: f64,
        w: Vec<f64>,
    },
    Psd {
        side: usize,
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        g: DMatrix<f64>,
    },
}

/// NT scaling data together with the scaled point `lambda`.
#[derive(Debug, Clone)]
pub(crate) struct BlockScaling {
    pub kind: Kind,
    pub scaling: Scaling,
    pub lambda: Vec<f64>,
    /// Eigenvalues of `lambda` for PSD blocks (it is diagonal there).
    pub lambda_diag: Vec<f64>,
}

impl BlockScaling {
    pub fn new(kind: Kind, x: &[f64], s: &[f64]) -> Option<Self> {
        match kind {
            Kind::NonNeg => {
                if x.iter().chain(s).any(|&v| v <= 0.0 || !v.is_finite()) {
                    return None;
                }
                let p: Vec<f64> = x.iter().zip(s).map(|(a, b)| (a / b).sqrt()).collect();
                let lambda = x.iter().zip(s).map(|(a, b)| (a * b).sqrt()).collect();
                Some(Self {
                    kind,
                    scaling: Scaling::NonNeg { p },
                    lambda,
                    lambda_diag: Vec::new(),
                })
            }
            Kind::Soc => {
                // factored form avoids cancellation near the boundary
                let jx = soc_det(x);
                let js = soc_det(s);
                if !(jx > 0.0 && js > 0.0 && x[0] > 0.0 && s[0] > 0.0) {
                    return None;
                }
                let a = jx.sqrt();
                let b = js.sqrt();
                let xb: Vec<f64> = x.iter().map(|v| v / a).collect();
                let sb: Vec<f64> = s.iter().map(|v| v / b).collect();
                let gamma = ((1.0 + dot(&xb, &sb)) * 0.5).sqrt();
                let mut w = vec![0.0; x.len()];
                w[0] = (xb[0] + sb[0]) / (2.0 * gamma);
                for i in 1..x.len() {
                    w[i] = (xb[i] - sb[i]) / (2.0 * gamma);
                }
                let beta = (a / b).sqrt();
                let mut out = Self {
                    kind,
                    scaling: Scaling::Soc { beta, w },
                    lambda: vec![0.0; x.len()],
                    lambda_diag: Vec::new(),
                };
                let mut lam = vec![0.0; x.len()];
                out.apply_p(s, &mut lam);
                out.lambda = lam;
                Some(out)
            }
            Kind::Psd(side) => {
                let xm = smat(x, side);
                let sm = smat(s, side);
                let lx = xm.cholesky()?.l();
                let ls = sm.cholesky()?.l();
                let m = ls.transpose() * &lx;
                let svd = m.try_svd(true, true, f64::EPSILON, 200)?;
                let v = svd.v_t?.transpose();
                let sigma = svd.singular_values;
                if sigma.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
                    return None;
                }
                let mut r = &lx * &v;
                let mut rinv_rows = v.transpose() * lx.clone().try_inverse()?;
                for k in 0..side {
                    let f = sigma[k].sqrt();
                    r.column_mut(k).scale_mut(1.0 / f);
                    rinv_rows.row_mut(k).scale_mut(f);
                }
                let g = &r * r.transpose();
                let lambda_diag: Vec<f64> = sigma.iter().copied().collect();
                let lambda = svec(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
                    lambda_diag.clone(),
                )));
                Some(Self {
                    kind,
                    scaling: Scaling::Psd {
                        side,
                        r,
                        rinv: rinv_rows,
                        g,
                    },
                    lambda,
                    lambda_diag,
                })
            }
        }
    }

    /// `P u` (dual space to scaled space).
    pub fn apply_p(&self, u: &[f64], out: &mut [f64]) {
        match &self.scaling {
            Scaling::NonNeg { p } => {
                for i in 0..u.len() {
                    out[i] = p[i] * u[i];
                }
            }
            Scaling::Soc { beta, w } => {
                hyperbolic(w, u, out);
                out.iter_mut().for_each(|v| *v *= beta);
            }
            Scaling::Psd { side, r, .. } => {
                let um = smat(u, *side);
                out.copy_from_slice(&svec(&(r.transpose() * um * r)));
            }
        }
    }

    /// `P^{-1} u`.
    pub fn apply_p_inv(&self, u: &[f64], out: &mut [f64]) {
        match &self.scaling {
            Scaling::NonNeg { p } => {
                for i in 0..u.len() {
                    out[i] = u[i] / p[i];
                }
            }
            Scaling::Soc { beta, w } => {
                hyperbolic_inv(w, u, out);
                out.iter_mut().for_each(|v| *v /= beta);
            }
            Scaling::Psd { side, rinv, .. } => {
                let um = smat(u, *side);
                out.copy_from_slice(&svec(&(rinv.transpose() * um * rinv)));
            }
        }
    }

    /// `Q u = P^{-T} u` (primal space to scaled space).
    pub fn apply_q(&self, u: &[f64], out: &mut [f64]) {
        match &self.scaling {
            Scaling::NonNeg { .. } | Scaling::Soc { .. } => self.apply_p_inv(u, out),
            Scaling::Psd { side, rinv, .. } => {
                let um = smat(u, *side);
                out.copy_from_slice(&svec(&(rinv * um * rinv.transpose())));
            }
        }
    }

    /// `H u = P^T P u`.
    pub fn apply_h(&self, u: &[f64], out: &mut [f64]) {
        match &self.scaling {
            Scaling::NonNeg { p } => {
                for i in 0..u.len() {
                    out[i] = p[i] * p[i] * u[i];
                }
            }
            Scaling::Soc { beta, w } => {
                let mut tmp = vec![0.0; u.len()];
                hyperbolic(w, u, &mut tmp);
                hyperbolic(w, &tmp, out);
                let b2 = beta * beta;
                out.iter_mut().for_each(|v| *v *= b2);
            }
            Scaling::Psd { side, g, .. } => {
                let um = smat(u, *side);
                out.copy_from_slice(&svec(&(g * um * g)));
            }
        }
    }

    /// `lambda o lambda`.
    pub fn lambda_sq(&self, out: &mut [f64]) {
        jordan(self.kind, &self.lambda, &self.lambda, out);
    }

    /// Solves `lambda o u = r` for `u`.
    pub fn lambda_div(&self, r: &[f64], out: &mut [f64]) {
        let l = &self.lambda;
        match self.kind {
            Kind::NonNeg => {
                for i in 0..r.len() {
                    out[i] = r[i] / l[i];
                }
            }
            Kind::Soc => {
                let det = l[0] * l[0] - dot(&l[1..], &l[1..]);
                let u0 = (l[0] * r[0] - dot(&l[1..], &r[1..])) / det;
                out[0] = u0;
                for i in 1..r.len() {
                    out[i] = (r[i] - u0 * l[i]) / l[0];
                }
            }
            Kind::Psd(side) => {
                let rm = smat(r, side);
                let d = &self.lambda_diag;
                let mut um = DMatrix::zeros(side, side);
                for j in 0..side {
                    for i in 0..side {
                        um[(i, j)] = 2.0 * rm[(i, j)] / (d[i] + d[j]);
                    }
                }
                out.copy_from_slice(&svec(&um));
            }
        }
    }

    /// Largest step keeping `lambda + alpha d` in the cone.
    pub fn max_step_scaled(&self, d: &[f64]) -> f64 {
        match self.kind {
            Kind::Psd(side) => {
                let dm = smat(d, side);
                let inv_sqrt: Vec<f64> = self.lambda_diag.iter().map(|v| 1.0 / v.sqrt()).collect();
                let mut m = DMatrix::zeros(side, side);
                for j in 0..side {
                    for i in 0..side {
                        m[(i, j)] = inv_sqrt[i] * dm[(i, j)] * inv_sqrt[j];
                    }
                }
                let lo = SymmetricEigen::new(m).eigenvalues.min();
                if lo < 0.0 {
                    -1.0 / lo
                } else {
                    f64::INFINITY
                }
            }
            kind => max_step(kind, &self.lambda, d),
        }
    }
}

/// `Wbar u` for the hyperbolic NT matrix built from `w` with `w^T J w = 1`.
fn hyperbolic(w: &[f64], u: &[f64], out: &mut [f64]) {
    let d = dot(&w[1..], &u[1..]);
    out[0] = w[0] * u[0] + d;
    let coef = u[0] + d / (1.0 + w[0]);
    for i in 1..u.len() {
        out[i] = u[i] + coef * w[i];
    }
}

/// `Wbar^{-1} u = J Wbar J u`.
fn hyperbolic_inv(w: &[f64], u: &[f64], out: &mut [f64]) {
    let d = dot(&w[1..], &u[1..]);
    out[0] = w[0] * u[0] - d;
    let coef = -u[0] + d / (1.0 + w[0]);
    for i in 1..u.len() {
        out[i] = u[i] + coef * w[i];
    }
}

/// `x0^2 - |x1|^2` for a second-order cone point.
pub(crate) fn soc_det(x: &[f64]) -> f64 {
    let r = dot(&x[1..], &x[1..]).sqrt();
    (x[0] - r) * (x[0] + r)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
