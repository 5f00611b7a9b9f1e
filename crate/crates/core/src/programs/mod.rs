//! Solution pipelines for the power-minimization problem.
//!
//! Cone programs are posed in normalized units: every constraint is divided
//! by the noise power, and powers are measured in multiples of the mean
//! interference-free optimum (the zero-forcing closed form evaluated on the
//! direct gains). Optima are then O(1) to O(K), which keeps the homogeneous
//! embedding well scaled across the dBm ranges of the experiments and makes
//! the pipelines exactly covariant under a common rescaling of noise and
//! harvesting thresholds.

mod fixed;
mod mrt_zf;
mod oracle;
mod sdp;
mod zf;

pub use fixed::{
    build_fixed_weight_socp, build_fixed_rho_lp, solve_fixed_gains, solve_fixed_rho, solve_fixed_weight,
    solve_lp_rho_half, FixedWeightSocp,
};
pub use mrt_zf::{build_mrt_zf_relaxation, mrt_zf_terms, solve_mrt_zf, MrtZfSolution, MrtZfStage, MrtZfTerms};
pub use oracle::{oracle_fixed_weight, ORACLE_GRID, ORACLE_P_HI};
pub use sdp::{build_sdp, solve_optimal, solve_sdp, OptimalPath, OptimalSolution, SdpProgram, SdpSolution};
pub use zf::{zf_closed_form, solve_zf_closed_form, ClosedFormIntermediates, ZfSolution};

use std::time::Instant;

use conic::{ConicSolution, SolveStatus, SolverOptions};

use crate::model::{OutcomeStatus, SystemConfig};

/// Numeric-rank threshold relative to the largest eigenvalue.
pub const RANK_TOL: f64 = 1e-6;

/// Gain normalizer `g0` for direct gains `direct`: gains are divided by
/// `g0`, and one normalized power unit is `sigma2 / g0` mW.
pub(crate) fn gain_normalizer(cfg: &SystemConfig, direct: &[f64]) -> f64 {
    let (p, _, _) = zf_closed_form(cfg, direct);
    let usable: Vec<f64> = p.into_iter().filter(|v| v.is_finite() && *v > 0.0).collect();
    if usable.is_empty() {
        return 1.0;
    }
    cfg.sigma2 * usable.len() as f64 / usable.iter().sum::<f64>()
}

pub(crate) fn solver_options() -> SolverOptions {
    SolverOptions::default()
}

/// Reduced-accuracy optima count as optimal: every decoded point is checked
/// against the original constraints before it is reported feasible.
pub(crate) fn outcome_status(sol: &ConicSolution) -> OutcomeStatus {
    match sol.status {
        SolveStatus::Optimal | SolveStatus::AlmostOptimal => OutcomeStatus::Optimal,
        SolveStatus::PrimalInfeasible => OutcomeStatus::Infeasible,
        _ => OutcomeStatus::NumericalFailure,
    }
}

pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}
