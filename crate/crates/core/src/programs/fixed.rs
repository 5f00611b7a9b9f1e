//! Power allocation and splitting for fixed beamformers.
//!
//! With link gains fixed, the SINR constraint rearranges to
//! `z_i rho_i >= gamma_i sigmaC2` where `z_i = (1 + gamma_i) G_ii P_i -
//! gamma_i P^r_i`, and harvesting to `(1 - rho_i) P^r_i >= lambda_i`: two
//! hyperbolic constraints per user over affine expressions in `P`.

use std::ops::Range;

use conic::{solve_conic, ConicProblem, ConicSolution, ProblemBuilder};

use crate::beamform::{link_gains, mrt_weights, BeamformerWeights};
use crate::channel::ChannelSet;
use crate::error::Result;
use crate::model::{LinkGains, OutcomeStatus, SolveOutcome, SystemConfig};

use super::oracle::scale_along;
use super::{gain_normalizer, outcome_status, solver_options, timed};

/// Fixed-weight SOCP in normalized units together with its variable layout.
#[derive(Debug, Clone)]
pub struct FixedWeightSocp {
    pub problem: ConicProblem,
    /// mW per normalized power unit.
    pub power_unit: f64,
    p: Range<usize>,
    rho: Vec<usize>,
}

impl FixedWeightSocp {
    /// Power (mW) and splitting ratios at a solver point.
    pub fn decode(&self, sol: &ConicSolution) -> (Vec<f64>, Vec<f64>) {
        let p = sol.x[self.p.clone()].iter().map(|v| v.max(0.0) * self.power_unit).collect();
        let rho = self.rho.iter().map(|&j| sol.x[j].clamp(0.0, 1.0)).collect();
        (p, rho)
    }

    /// Optimal total power in mW.
    pub fn objective_mw(&self, sol: &ConicSolution) -> f64 {
        sol.primal_objective * self.power_unit
    }
}

fn gain_scale(cfg: &SystemConfig, g: &LinkGains) -> f64 {
    let direct: Vec<f64> = (0..g.k()).map(|i| g.get(i, i)).collect();
    gain_normalizer(cfg, &direct)
}

pub fn build_fixed_weight_socp(cfg: &SystemConfig, g: &LinkGains) -> FixedWeightSocp {
    let k = cfg.k;
    let g0 = gain_scale(cfg, g);
    let unit = cfg.sigma2 / g0;
    let gn = |i: usize, j: usize| g.get(i, j) / g0;
    let sc2 = cfg.sigma_c2 / cfg.sigma2;

    let mut b = ProblemBuilder::new();
    let p = b.nonneg(k);
    let mut rho = Vec::with_capacity(k);
    for i in 0..k {
        let gam = cfg.gamma[i];
        let lam = cfg.eh_threshold(i) / cfg.sigma2;
        // (z, rho, e): 2 z rho >= e^2 = 2 gamma sigmaC2
        let zc = b.rotated_soc(3);
        // (P^r, rho_bar, e'): 2 P^r rho_bar >= 2 lambda
        let rc = b.rotated_soc(3);
        let (z, r, pr, rb) = (zc.start, zc.start + 1, rc.start, rc.start + 1);
        rho.push(r);
        b.equality(&[(zc.start + 2, 1.0)], (2.0 * gam * sc2).sqrt());
        b.equality(&[(rc.start + 2, 1.0)], (2.0 * lam).sqrt());
        b.equality(&[(r, 1.0), (rb, 1.0)], 1.0);
        // P^r_i - sum_j G_ij P_j = sigma2
        let mut row: Vec<(usize, f64)> = (0..k).map(|j| (p.start + j, -gn(i, j))).collect();
        row.push((pr, 1.0));
        b.equality(&row, 1.0);
        // z_i + gamma P^r_i - (1 + gamma) G_ii P_i = 0
        b.equality(&[(z, 1.0), (pr, gam), (p.start + i, -(1.0 + gam) * gn(i, i))], 0.0);
    }
    for j in p.clone() {
        b.set_cost(j, 1.0);
    }
    if let Some(caps) = &cfg.p_max {
        let slack = b.nonneg(k);
        for i in 0..k {
            b.equality(&[(p.start + i, 1.0), (slack.start + i, 1.0)], caps[i] / unit);
        }
    }
    FixedWeightSocp {
        problem: b.build(),
        power_unit: unit,
        p,
        rho,
    }
}

/// Moves a solver point onto the feasible set: keeps the direction of `P`,
/// takes the least feasible scale along it, and picks `rho` in the implied
/// interval. Interior-point iterates can sit just outside the feasible set,
/// and at high SINR targets the binding rows cancel large terms, so a fixed
/// relative nudge is not enough.
pub(super) fn settle(cfg: &SystemConfig, g: &LinkGains, p: &[f64], rho_hint: &[f64]) -> (Vec<f64>, Vec<f64>) {
    scale_along(cfg, g, p, rho_hint).unwrap_or_else(|| (p.to_vec(), rho_hint.to_vec()))
}

/// Optimal `(P, rho)` for the given link gains.
pub fn solve_fixed_gains(cfg: &SystemConfig, g: &LinkGains) -> Result<SolveOutcome> {
    cfg.validate()?;
    let (res, secs) = timed(|| -> Result<SolveOutcome> {
        let socp = build_fixed_weight_socp(cfg, g);
        let sol = solve_conic(&socp.problem, &solver_options())?;
        match outcome_status(&sol) {
            OutcomeStatus::Optimal => {
                let (p, rho) = socp.decode(&sol);
                let (p, rho) = settle(cfg, g, &p, &rho);
                let mut out = SolveOutcome::evaluate(cfg, g, p, rho)?;
                if !out.feasible {
                    out.status = OutcomeStatus::NumericalFailure;
                }
                Ok(out)
            }
            status => Ok(SolveOutcome::failed(cfg.k, status)),
        }
    });
    Ok(res?.with_time(secs))
}

pub fn solve_fixed_weight(cfg: &SystemConfig, ch: &ChannelSet, weights: &BeamformerWeights) -> Result<SolveOutcome> {
    let (g, secs) = timed(|| link_gains(ch, weights));
    let out = solve_fixed_gains(cfg, &g?)?;
    let t = out.wall_time + secs;
    Ok(out.with_time(t))
}

/// Linear program for power only, with every splitting ratio fixed to `rho`.
pub fn build_fixed_rho_lp(cfg: &SystemConfig, g: &LinkGains, rho: f64) -> FixedWeightSocp {
    let k = cfg.k;
    let g0 = gain_scale(cfg, g);
    let unit = cfg.sigma2 / g0;
    let gn = |i: usize, j: usize| g.get(i, j) / g0;
    let sc2 = cfg.sigma_c2 / cfg.sigma2;

    let mut b = ProblemBuilder::new();
    let p = b.nonneg(k);
    let slack = b.nonneg(2 * k);
    for i in 0..k {
        let gam = cfg.gamma[i];
        let lam = cfg.eh_threshold(i) / cfg.sigma2;
        // rho G_ii P_i - gamma rho sum_{j != i} G_ij P_j - s = gamma (rho sigma2 + sigmaC2)
        let mut row: Vec<(usize, f64)> = (0..k)
            .map(|j| {
                let c = if j == i { rho * gn(i, i) } else { -gam * rho * gn(i, j) };
                (p.start + j, c)
            })
            .collect();
        row.push((slack.start + i, -1.0));
        b.equality(&row, gam * (rho + sc2));
        // (1 - rho)(sum_j G_ij P_j + sigma2) - s' = lambda
        let mut row: Vec<(usize, f64)> = (0..k).map(|j| (p.start + j, (1.0 - rho) * gn(i, j))).collect();
        row.push((slack.start + k + i, -1.0));
        b.equality(&row, lam - (1.0 - rho));
    }
    for j in p.clone() {
        b.set_cost(j, 1.0);
    }
    if let Some(caps) = &cfg.p_max {
        let cs = b.nonneg(k);
        for i in 0..k {
            b.equality(&[(p.start + i, 1.0), (cs.start + i, 1.0)], caps[i] / unit);
        }
    }
    FixedWeightSocp {
        problem: b.build(),
        power_unit: unit,
        p,
        rho: Vec::new(),
    }
}

/// Least feasible multiple of `p` when every ratio is fixed at `rho`; each
/// constraint is then linear in the scale.
fn scale_fixed_rho(cfg: &SystemConfig, g: &LinkGains, p: &[f64], rho: f64) -> Option<Vec<f64>> {
    let mut t = 0.0f64;
    for i in 0..cfg.k {
        let gam = cfg.gamma[i];
        let b: f64 = (0..cfg.k).map(|j| g.get(i, j) * p[j]).sum();
        let sinr = rho * ((1.0 + gam) * g.get(i, i) * p[i] - gam * b);
        let harvest = (1.0 - rho) * b;
        if !(sinr > 0.0 && harvest > 0.0) {
            return None;
        }
        t = t
            .max(gam * (rho * cfg.sigma2 + cfg.sigma_c2) / sinr)
            .max((cfg.eh_threshold(i) - (1.0 - rho) * cfg.sigma2) / harvest);
    }
    let t = t * (1.0 + 1e-12);
    if let Some(caps) = &cfg.p_max {
        if p.iter().zip(caps).any(|(v, c)| v * t > *c) {
            return None;
        }
    }
    Some(p.iter().map(|v| v * t).collect())
}

pub fn solve_fixed_rho(cfg: &SystemConfig, g: &LinkGains, rho: f64) -> Result<SolveOutcome> {
    cfg.validate()?;
    let (res, secs) = timed(|| -> Result<SolveOutcome> {
        let lp = build_fixed_rho_lp(cfg, g, rho);
        let sol = solve_conic(&lp.problem, &solver_options())?;
        match outcome_status(&sol) {
            OutcomeStatus::Optimal => {
                let (p, _) = lp.decode(&sol);
                let p = scale_fixed_rho(cfg, g, &p, rho).unwrap_or(p);
                let mut out = SolveOutcome::evaluate(cfg, g, p, vec![rho; cfg.k])?;
                if !out.feasible {
                    out.status = OutcomeStatus::NumericalFailure;
                }
                Ok(out)
            }
            status => Ok(SolveOutcome::failed(cfg.k, status)),
        }
    });
    Ok(res?.with_time(secs))
}

/// MRT weights with every splitting ratio fixed at one half.
pub fn solve_lp_rho_half(cfg: &SystemConfig, ch: &ChannelSet) -> Result<SolveOutcome> {
    let g = link_gains(ch, &mrt_weights(ch)?)?;
    solve_fixed_rho(cfg, &g, 0.5)
}
