//! Semidefinite relaxation and rank-one extraction.
//!
//! Each `W_i = v_i v_i^H` enters through its real embedding `X_i`; since
//! `trace(C embed(M)) = 2 Re trace(C M)`, every linear form uses half the
//! embedded coefficient matrix. `X_i` is left unstructured: the relaxation
//! is invariant under the embedding's rotation symmetry, so averaging the
//! blocks of an optimal `X_i` yields an optimal Hermitian `W_i`.

use std::ops::Range;

use conic::hermitian::{embed_hermitian, extract_hermitian, numeric_rank, principal_eigvec, CMatrix};
use conic::svec::{smat, trace_form};
use conic::{solve_conic, ConicProblem, ProblemBuilder};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::beamform::{link_gains, normalize_with_phase, BeamformerWeights, Scheme};
use crate::channel::ChannelSet;
use crate::error::Result;
use crate::model::{OutcomeStatus, SolveOutcome, SystemConfig};

use super::fixed::settle;
use super::{gain_normalizer, outcome_status, solve_fixed_weight, solve_zf_closed_form, solver_options, timed, RANK_TOL};

/// SDP in normalized units with its variable layout.
#[derive(Debug, Clone)]
pub struct SdpProgram {
    pub problem: ConicProblem,
    /// mW per normalized power unit.
    pub power_unit: f64,
    /// svec block of each `X_i`.
    pub blocks: Vec<Range<usize>>,
    pub rho: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// `W_i` in mW.
    pub w: Vec<CMatrix>,
    pub rho: Vec<f64>,
    /// Relaxation optimum `sum trace(W_i)` in mW; NaN unless optimal.
    pub objective: f64,
    pub ranks: Vec<usize>,
    pub status: OutcomeStatus,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimalPath {
    /// Principal eigenvectors were re-optimized as fixed weights.
    Resolved,
    /// The re-solve failed; every `W_i` was rank one and its
    /// eigen-decomposition was used directly.
    RankOnePassthrough,
    /// The re-solve was infeasible; ZF was used instead.
    ZfFallback,
}

#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub outcome: SolveOutcome,
    pub weights: Option<BeamformerWeights>,
    pub sdp: SdpSolution,
    /// `None` when the relaxation itself was not solved to optimality.
    pub path: Option<OptimalPath>,
}

/// `L(X) = trace(M W)` for `M = h* h^T`, as a coefficient vector over svec(X).
fn gain_form(h: &crate::channel::CVector, scale: f64) -> Vec<f64> {
    let hc = h.conjugate();
    let m = &hc * h.transpose() * Complex64::new(scale, 0.0);
    let e = embed_hermitian(&m).expect("outer product is Hermitian");
    trace_form(&(e * 0.5))
}

pub fn build_sdp(cfg: &SystemConfig, ch: &ChannelSet) -> SdpProgram {
    let k = cfg.k;
    let direct: Vec<f64> = (0..k).map(|i| ch.h(i, i).norm_squared()).collect();
    let g0 = gain_normalizer(cfg, &direct);
    let unit = cfg.sigma2 / g0;
    let sc2 = cfg.sigma_c2 / cfg.sigma2;

    let mut b = ProblemBuilder::new();
    let blocks: Vec<Range<usize>> = (0..k).map(|_| b.psd(2 * k)).collect();
    let trace = trace_form(&(DMatrix::identity(2 * k, 2 * k) * 0.5));
    let mut rho = Vec::with_capacity(k);
    for i in 0..k {
        let gam = cfg.gamma[i];
        let lam = cfg.eh_threshold(i) / cfg.sigma2;
        let forms: Vec<Vec<f64>> = (0..k).map(|j| gain_form(ch.h(i, j), 1.0 / g0)).collect();
        let tc = b.rotated_soc(3);
        let rc = b.rotated_soc(3);
        let (t, r, pr, rb) = (tc.start, tc.start + 1, rc.start, rc.start + 1);
        rho.push(r);
        b.equality(&[(tc.start + 2, 1.0)], (2.0 * sc2).sqrt());
        b.equality(&[(rc.start + 2, 1.0)], (2.0 * lam).sqrt());
        b.equality(&[(r, 1.0), (rb, 1.0)], 1.0);
        // t_i = L_ii / gamma - sum_{j != i} L_ij - sigma2
        let mut row = vec![(t, 1.0)];
        // P^r_i = sum_j L_ij + sigma2
        let mut prow = vec![(pr, 1.0)];
        for (j, form) in forms.iter().enumerate() {
            let c = if j == i { -1.0 / gam } else { 1.0 };
            for (q, &v) in form.iter().enumerate() {
                row.push((blocks[j].start + q, c * v));
                prow.push((blocks[j].start + q, -v));
            }
        }
        b.equality(&row, -1.0);
        b.equality(&prow, 1.0);
    }
    for blk in &blocks {
        for (q, &v) in trace.iter().enumerate() {
            b.set_cost(blk.start + q, v);
        }
    }
    if let Some(caps) = &cfg.p_max {
        let slack = b.nonneg(k);
        for i in 0..k {
            let mut row: Vec<(usize, f64)> = trace.iter().enumerate().map(|(q, &v)| (blocks[i].start + q, v)).collect();
            row.push((slack.start + i, 1.0));
            b.equality(&row, caps[i] / unit);
        }
    }
    SdpProgram {
        problem: b.build(),
        power_unit: unit,
        blocks,
        rho,
    }
}

pub fn solve_sdp(cfg: &SystemConfig, ch: &ChannelSet) -> Result<SdpSolution> {
    cfg.validate()?;
    let (res, secs) = timed(|| -> Result<SdpSolution> {
        let prog = build_sdp(cfg, ch);
        let sol = solve_conic(&prog.problem, &solver_options())?;
        let status = outcome_status(&sol);
        if status != OutcomeStatus::Optimal {
            return Ok(SdpSolution {
                w: Vec::new(),
                rho: vec![f64::NAN; cfg.k],
                objective: f64::NAN,
                ranks: Vec::new(),
                status,
                wall_time: 0.0,
            });
        }
        let side = 2 * cfg.k;
        let w = prog
            .blocks
            .iter()
            .map(|blk| {
                let x = smat(&sol.x[blk.clone()], side);
                extract_hermitian(&x).map(|m| m * Complex64::new(prog.power_unit, 0.0))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let ranks = w.iter().map(|m| numeric_rank(m, RANK_TOL)).collect::<std::result::Result<_, _>>()?;
        Ok(SdpSolution {
            w,
            rho: prog.rho.iter().map(|&j| sol.x[j].clamp(0.0, 1.0)).collect(),
            objective: sol.primal_objective * prog.power_unit,
            ranks,
            status,
            wall_time: 0.0,
        })
    });
    let mut out = res?;
    out.wall_time = secs;
    Ok(out)
}

/// Relaxation, eigenvector extraction, and fixed-weight repair when needed.
pub fn solve_optimal(cfg: &SystemConfig, ch: &ChannelSet) -> Result<OptimalSolution> {
    let (res, secs) = timed(|| -> Result<OptimalSolution> {
        let sdp = solve_sdp(cfg, ch)?;
        if sdp.status != OutcomeStatus::Optimal {
            return Ok(OptimalSolution {
                outcome: SolveOutcome::failed(cfg.k, sdp.status),
                weights: None,
                sdp,
                path: None,
            });
        }
        let mut p = Vec::with_capacity(cfg.k);
        let mut w = Vec::with_capacity(cfg.k);
        for (i, wi) in sdp.w.iter().enumerate() {
            let (_, v) = principal_eigvec(wi)?;
            w.push(normalize_with_phase(ch.h(i, i), v, "principal eigenvector")?);
            p.push(wi.trace().re.max(0.0));
        }
        let weights = BeamformerWeights {
            w,
            scheme: Scheme::Optimal,
            aux: None,
        };
        // Re-optimizing (P, rho) for the extracted directions removes the
        // relaxation's termination error from the returned point.
        let out = solve_fixed_weight(cfg, ch, &weights)?;
        if out.feasible {
            return Ok(OptimalSolution {
                outcome: out,
                weights: Some(weights),
                sdp,
                path: Some(OptimalPath::Resolved),
            });
        }
        if sdp.ranks.iter().all(|&r| r == 1) {
            let g = link_gains(ch, &weights)?;
            let (p, rho) = settle(cfg, &g, &p, &sdp.rho);
            let out = SolveOutcome::evaluate(cfg, &g, p, rho)?;
            if out.feasible {
                return Ok(OptimalSolution {
                    outcome: out,
                    weights: Some(weights),
                    sdp,
                    path: Some(OptimalPath::RankOnePassthrough),
                });
            }
        }
        let zf = solve_zf_closed_form(cfg, ch)?;
        Ok(OptimalSolution {
            outcome: zf.outcome,
            weights: Some(zf.weights),
            sdp,
            path: Some(OptimalPath::ZfFallback),
        })
    });
    let mut out = res?;
    out.outcome.wall_time = secs;
    Ok(out)
}
