//! Fixed and structured transmit beamformers.
//!
//! Every returned weight has unit norm and is rotated so that the direct
//! gain `h_ii^T w_i` is real and nonnegative.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{CVector, ChannelSet};
use crate::error::{BeamError, Result};
use crate::model::{constraint_slacks, LinkGains, Residuals, SystemConfig};

pub type CMatrix = DMatrix<Complex64>;

/// Relative singular-value cutoff for the interference pseudo-inverse.
const PINV_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    Zf,
    Mrt,
    Rzf,
    MrtZf,
    Optimal,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Zf => "ZF",
            Scheme::Mrt => "MRT",
            Scheme::Rzf => "RZF",
            Scheme::MrtZf => "MRT_ZF",
            Scheme::Optimal => "OPTIMAL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightAux {
    Rzf { eta: f64 },
    MrtZf { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    pub w: Vec<CVector>,
    pub scheme: Scheme,
    pub aux: Option<WeightAux>,
}

/// Mixing coefficients of `sqrt(x_i) r_mrt + sqrt(y_i) r_zf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrtZfCoefficients {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl MrtZfCoefficients {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.x.len() != k || self.y.len() != k {
            return Err(BeamError::Dimension {
                expected: k,
                got: self.x.len().min(self.y.len()),
            });
        }
        for (i, (&x, &y)) in self.x.iter().zip(&self.y).enumerate() {
            if !(x >= 0.0 && y >= 0.0 && x + y > 0.0) {
                return Err(BeamError::Domain(format!("invalid mixing coefficients for user {i}")));
            }
        }
        Ok(())
    }
}

/// `h^T w` (plain transpose, not conjugate).
pub fn bilinear(h: &CVector, w: &CVector) -> Complex64 {
    h.iter().zip(w.iter()).map(|(a, b)| a * b).sum()
}

pub(crate) fn normalize_with_phase(h_ii: &CVector, v: CVector, what: &str) -> Result<CVector> {
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(BeamError::DegenerateChannel(format!("{what} direction vanishes")));
    }
    let mut w = v / Complex64::new(n, 0.0);
    let g = bilinear(h_ii, &w);
    if g.norm() > 0.0 {
        w *= g.conj() / g.norm();
    }
    Ok(w)
}

/// Orthogonal projector onto the span of the conjugated cross channels
/// `h_{j,i}`, `j != i` (i.e. `F_i = H_i^+ H_i`).
pub fn interference_projector(ch: &ChannelSet, i: usize) -> Result<CMatrix> {
    let k = ch.k();
    if k == 1 {
        return Ok(CMatrix::zeros(1, 1));
    }
    let rows: Vec<usize> = (0..k).filter(|&j| j != i).collect();
    let h = CMatrix::from_fn(rows.len(), k, |r, c| ch.h(rows[r], i)[c]);
    let svd = h.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&r| svd.singular_values[r] > PINV_CUTOFF * smax)
        .collect();
    if keep.len() < rows.len() || smax == 0.0 {
        return Err(BeamError::DegenerateChannel(format!(
            "interference matrix of user {i} is rank deficient"
        )));
    }
    let mut f = CMatrix::zeros(k, k);
    for &r in &keep {
        let row = v_t.row(r);
        f += row.adjoint() * row;
    }
    Ok(f)
}

/// Unnormalized ZF directions `(I - F_i) h*_ii`.
pub fn zf_directions(ch: &ChannelSet) -> Result<Vec<CVector>> {
    (0..ch.k())
        .map(|i| {
            let f = interference_projector(ch, i)?;
            let hc = ch.h(i, i).conjugate();
            Ok(&hc - f * &hc)
        })
        .collect()
}

pub fn zf_weights(ch: &ChannelSet) -> Result<BeamformerWeights> {
    let w = zf_directions(ch)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| normalize_with_phase(ch.h(i, i), r, "zero-forcing"))
        .collect::<Result<_>>()?;
    Ok(BeamformerWeights {
        w,
        scheme: Scheme::Zf,
        aux: None,
    })
}

pub fn mrt_weights(ch: &ChannelSet) -> Result<BeamformerWeights> {
    let w = (0..ch.k())
        .map(|i| normalize_with_phase(ch.h(i, i), ch.h(i, i).conjugate(), "direct channel"))
        .collect::<Result<_>>()?;
    Ok(BeamformerWeights {
        w,
        scheme: Scheme::Mrt,
        aux: None,
    })
}

/// `w_i ~ (G_i G_i^H + eta I)^{-1} h*_ii` with `G_i = [h_{1,i}, ..., h_{K,i}]^T`.
pub fn rzf_weights(ch: &ChannelSet, eta: f64) -> Result<BeamformerWeights> {
    if !(eta > 0.0) {
        return Err(BeamError::Domain("regularization must be positive".into()));
    }
    let k = ch.k();
    let w = (0..k)
        .map(|i| {
            let g = CMatrix::from_fn(k, k, |r, c| ch.h(r, i)[c]);
            let m = &g * g.adjoint() + CMatrix::identity(k, k) * Complex64::new(eta, 0.0);
            let v = m
                .lu()
                .solve(&ch.h(i, i).conjugate())
                .ok_or_else(|| BeamError::DegenerateChannel("singular regularized matrix".into()))?;
            normalize_with_phase(ch.h(i, i), v, "regularized")
        })
        .collect::<Result<_>>()?;
    Ok(BeamformerWeights {
        w,
        scheme: Scheme::Rzf,
        aux: Some(WeightAux::Rzf { eta }),
    })
}

/// Unnormalized `sqrt(x_i) h*_ii + sqrt(y_i) (I - F_i) h*_ii`.
pub fn mrt_zf_directions(ch: &ChannelSet, coeffs: &MrtZfCoefficients) -> Result<Vec<CVector>> {
    coeffs.validate(ch.k())?;
    let zf = zf_directions(ch)?;
    Ok(zf
        .into_iter()
        .enumerate()
        .map(|(i, r_zf)| {
            let r_mrt = ch.h(i, i).conjugate();
            r_mrt * Complex64::new(coeffs.x[i].sqrt(), 0.0) + r_zf * Complex64::new(coeffs.y[i].sqrt(), 0.0)
        })
        .collect())
}

pub fn mrt_zf_weights(ch: &ChannelSet, coeffs: &MrtZfCoefficients) -> Result<BeamformerWeights> {
    let w = mrt_zf_directions(ch, coeffs)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| normalize_with_phase(ch.h(i, i), v, "MRT-ZF"))
        .collect::<Result<_>>()?;
    Ok(BeamformerWeights {
        w,
        scheme: Scheme::MrtZf,
        aux: Some(WeightAux::MrtZf {
            x: coeffs.x.clone(),
            y: coeffs.y.clone(),
        }),
    })
}

pub fn link_gains(ch: &ChannelSet, weights: &BeamformerWeights) -> Result<LinkGains> {
    let k = ch.k();
    if weights.w.len() != k {
        return Err(BeamError::Dimension {
            expected: k,
            got: weights.w.len(),
        });
    }
    if let Some(w) = weights.w.iter().find(|w| w.len() != k) {
        return Err(BeamError::Dimension {
            expected: k,
            got: w.len(),
        });
    }
    LinkGains::new(DMatrix::from_fn(k, k, |i, j| {
        bilinear(ch.h(i, j), &weights.w[j]).norm_sqr()
    }))
}

/// Constraint slacks of `(P, rho)` under the given weights.
pub fn verify_solution(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    weights: &BeamformerWeights,
    p: &[f64],
    rho: &[f64],
) -> Result<Residuals> {
    constraint_slacks(cfg, &link_gains(ch, weights)?, p, rho)
}
