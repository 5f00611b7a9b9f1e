//! Hybrid MRT-ZF beamforming.
//!
//! For `v_i = sqrt(x_i) h*_ii + sqrt(y_i) (I - F_i) h*_ii` the transmit power
//! and all link gains are linear in `(x, y, s)` with `s_i = sqrt(x_i y_i)`:
//!
//! ```text
//! |v_i|^2          = x_i Q_ii + y_i q_i + 2 s_i q_i
//! |h_ii^T v_i|^2   = x_i Q_ii^2 + y_i q_i^2 + 2 s_i Q_ii q_i
//! |h_ij^T v_j|^2   = x_j Q_ij^2                      (i != j)
//! ```
//!
//! with `Q_ij = |h_ij^T h*_jj|` and `q_i = h_ii^T (I - F_i) h*_ii`. Relaxing
//! `s_i = sqrt(x_i y_i)` to `s_i^2 <= x_i y_i` gives an SOCP; its mixing
//! ratios are then re-optimized as fixed weights, falling back to ZF.
//!
//! The SOCP is posed in the power-like variables `x' = x Q_ii`, `y' = y q_i`
//! and `s' = s sqrt(Q_ii q_i)`, which keeps `s'^2 <= x' y'` and makes every
//! coefficient a gain, so it is normalized exactly like the fixed-weight
//! program.

use conic::{solve_conic, ConicProblem, ProblemBuilder};
use nalgebra::DMatrix;
use std::f64::consts::SQRT_2;
use std::ops::Range;

use crate::beamform::{bilinear, mrt_zf_weights, zf_directions, BeamformerWeights, MrtZfCoefficients};
use crate::channel::ChannelSet;
use crate::error::Result;
use crate::model::{OutcomeStatus, SolveOutcome, SystemConfig};

use super::{gain_normalizer, outcome_status, solve_fixed_weight, solve_zf_closed_form, solver_options, timed};

#[derive(Debug, Clone, PartialEq)]
pub struct MrtZfTerms {
    /// `Q_ij = |h_ij^T h*_jj|`
    pub q_cross: DMatrix<f64>,
    /// `q_i = h_ii^T (I - F_i) h*_ii`
    pub q_zf: Vec<f64>,
}

pub fn mrt_zf_terms(ch: &ChannelSet) -> Result<MrtZfTerms> {
    let k = ch.k();
    let zf = zf_directions(ch)?;
    let q_cross = DMatrix::from_fn(k, k, |i, j| bilinear(ch.h(i, j), &ch.h(j, j).conjugate()).norm());
    let q_zf = (0..k).map(|i| bilinear(ch.h(i, i), &zf[i]).re.max(0.0)).collect();
    Ok(MrtZfTerms { q_cross, q_zf })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrtZfStage {
    /// Fixed-weight re-solve of the relaxation's mixing ratios succeeded.
    Refined,
    /// The re-solve failed and ZF weights were used instead.
    ZfFallback,
}

#[derive(Debug, Clone)]
pub struct MrtZfSolution {
    pub outcome: SolveOutcome,
    pub weights: BeamformerWeights,
    pub coefficients: Option<MrtZfCoefficients>,
    pub stage: MrtZfStage,
    /// Relaxation optimum in mW.
    pub relaxed_objective: Option<f64>,
}

pub(crate) struct MrtZfRelaxation {
    pub problem: ConicProblem,
    pub power_unit: f64,
    xy: Vec<Range<usize>>,
    q_mrt: Vec<f64>,
    q_zf: Vec<f64>,
}

/// Relaxed MRT-ZF SOCP in normalized units.
pub fn build_mrt_zf_relaxation(cfg: &SystemConfig, terms: &MrtZfTerms) -> ConicProblem {
    relaxation(cfg, terms).problem
}

pub(crate) fn relaxation(cfg: &SystemConfig, terms: &MrtZfTerms) -> MrtZfRelaxation {
    let k = cfg.k;
    // MRT direction at unit power has direct gain Q_ii
    let direct: Vec<f64> = (0..k).map(|i| terms.q_cross[(i, i)]).collect();
    let g0 = gain_normalizer(cfg, &direct);
    let qd = |i: usize| terms.q_cross[(i, i)];
    // gains per unit of x'_j, y'_j, s'_j (normalized)
    let gx = |i: usize, j: usize| {
        let q = terms.q_cross[(i, j)];
        if qd(j) > 0.0 {
            q * q / qd(j) / g0
        } else {
            0.0
        }
    };
    let gy = |i: usize| terms.q_zf[i] / g0;
    let gs = |i: usize| 2.0 * (qd(i) * terms.q_zf[i]).sqrt() / g0;
    // power per unit of s'_i
    let ps = |i: usize| {
        if qd(i) > 0.0 {
            2.0 * (terms.q_zf[i] / qd(i)).sqrt()
        } else {
            0.0
        }
    };
    let sc2 = cfg.sigma_c2 / cfg.sigma2;

    let mut b = ProblemBuilder::new();
    // (x'_i, y'_i, u_i) with 2 x' y' >= u^2 = 2 s'^2
    let xy: Vec<Range<usize>> = (0..k).map(|_| b.rotated_soc(3)).collect();
    let s = b.nonneg(k);
    for i in 0..k {
        b.equality(&[(xy[i].start + 2, 1.0), (s.start + i, -SQRT_2)], 0.0);
    }
    let direct = |i: usize| -> Vec<(usize, f64)> {
        vec![(xy[i].start, gx(i, i)), (xy[i].start + 1, gy(i)), (s.start + i, gs(i))]
    };
    let power = |i: usize| -> Vec<(usize, f64)> {
        vec![(xy[i].start, 1.0), (xy[i].start + 1, 1.0), (s.start + i, ps(i))]
    };
    for i in 0..k {
        let gam = cfg.gamma[i];
        let lam = cfg.eh_threshold(i) / cfg.sigma2;
        let zc = b.rotated_soc(3);
        let rc = b.rotated_soc(3);
        let (z, r, pr, rb) = (zc.start, zc.start + 1, rc.start, rc.start + 1);
        b.equality(&[(zc.start + 2, 1.0)], (2.0 * gam * sc2).sqrt());
        b.equality(&[(rc.start + 2, 1.0)], (2.0 * lam).sqrt());
        b.equality(&[(r, 1.0), (rb, 1.0)], 1.0);
        // P^r_i - direct_i - sum_{j != i} x'_j Q_ij^2 / Q_jj = sigma2
        let mut row: Vec<(usize, f64)> = direct(i).into_iter().map(|(j, c)| (j, -c)).collect();
        for j in (0..k).filter(|&j| j != i) {
            row.push((xy[j].start, -gx(i, j)));
        }
        row.push((pr, 1.0));
        b.equality(&row, 1.0);
        // z_i + gamma P^r_i - (1 + gamma) direct_i = 0
        let mut row: Vec<(usize, f64)> = direct(i).into_iter().map(|(j, c)| (j, -(1.0 + gam) * c)).collect();
        row.push((z, 1.0));
        row.push((pr, gam));
        b.equality(&row, 0.0);
    }
    for i in 0..k {
        for (j, c) in power(i) {
            b.add_cost(j, c);
        }
    }
    let unit = cfg.sigma2 / g0;
    if let Some(caps) = &cfg.p_max {
        let cs = b.nonneg(k);
        for i in 0..k {
            let mut row = power(i);
            row.push((cs.start + i, 1.0));
            b.equality(&row, caps[i] / unit);
        }
    }
    MrtZfRelaxation {
        problem: b.build(),
        power_unit: unit,
        xy,
        q_mrt: direct_q(terms),
        q_zf: terms.q_zf.clone(),
    }
}

fn direct_q(terms: &MrtZfTerms) -> Vec<f64> {
    (0..terms.q_zf.len()).map(|i| terms.q_cross[(i, i)]).collect()
}

impl MrtZfRelaxation {
    /// Mixing coefficients `(x, y)` from a solver point; only their ratio
    /// matters once the weights are normalized.
    fn coefficients(&self, x: &[f64]) -> MrtZfCoefficients {
        let undo = |v: f64, q: f64| if q > 0.0 { v.max(0.0) / q } else { 0.0 };
        MrtZfCoefficients {
            x: self.xy.iter().zip(&self.q_mrt).map(|(r, &q)| undo(x[r.start], q)).collect(),
            y: self.xy.iter().zip(&self.q_zf).map(|(r, &q)| undo(x[r.start + 1], q)).collect(),
        }
    }
}

/// Two-stage MRT-ZF: relaxed SOCP for the mixing ratios, fixed-weight
/// re-solve, then ZF if the re-solve is infeasible. Always returns a
/// feasible outcome unless the numerics fail.
pub fn solve_mrt_zf(cfg: &SystemConfig, ch: &ChannelSet) -> Result<MrtZfSolution> {
    cfg.validate()?;
    let (res, secs) = timed(|| -> Result<MrtZfSolution> {
        let terms = mrt_zf_terms(ch)?;
        let relax = relaxation(cfg, &terms);
        let sol = solve_conic(&relax.problem, &solver_options())?;
        if outcome_status(&sol) == OutcomeStatus::Optimal {
            let coeffs = relax.coefficients(&sol.x);
            if coeffs.validate(cfg.k).is_ok() {
                if let Ok(weights) = mrt_zf_weights(ch, &coeffs) {
                    let out = solve_fixed_weight(cfg, ch, &weights)?;
                    if out.feasible {
                        return Ok(MrtZfSolution {
                            outcome: out,
                            weights,
                            coefficients: Some(coeffs),
                            stage: MrtZfStage::Refined,
                            relaxed_objective: Some(sol.primal_objective * relax.power_unit),
                        });
                    }
                }
            }
        }
        let zf = solve_zf_closed_form(cfg, ch)?;
        Ok(MrtZfSolution {
            outcome: zf.outcome,
            weights: zf.weights,
            coefficients: None,
            stage: MrtZfStage::ZfFallback,
            relaxed_objective: (outcome_status(&sol) == OutcomeStatus::Optimal)
                .then(|| sol.primal_objective * relax.power_unit),
        })
    });
    let mut out = res?;
    out.outcome.wall_time = secs;
    Ok(out)
}
