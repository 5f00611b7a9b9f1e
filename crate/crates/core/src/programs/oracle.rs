//! Brute-force reference solver for fixed link gains, `K <= 3`.
//!
//! Writing `P = T u` with `u` on the unit simplex, user `i` admits a
//! splitting ratio iff `gamma sigmaC2 / (T a_i - gamma sigma2) <= 1 - lambda
//! / (T b_i + sigma2)` where `b_i = (G u)_i` and `a_i = (1 + gamma) G_ii u_i -
//! gamma b_i`. Clearing denominators leaves a quadratic in `T`, so the least
//! total power along a ray is the largest of the per-user roots. That
//! function is quasiconvex in `u`, which is searched by a dense grid
//! followed by golden-section refinement. No cone solver is involved.

use crate::error::{BeamError, Result};
use crate::model::{LinkGains, OutcomeStatus, SolveOutcome, SystemConfig};

use super::timed;

/// Grid points per simplex coordinate.
pub const ORACLE_GRID: usize = 400;
/// Largest total power (mW) the oracle considers when no caps are set.
pub const ORACLE_P_HI: f64 = 1e9;

const GOLDEN_TOL: f64 = 1e-12;
const INNER_GRID: usize = 40;

struct Ray<'a> {
    cfg: &'a SystemConfig,
    g: &'a LinkGains,
}

impl Ray<'_> {
    /// Least `T` making `T u` feasible, `inf` if none.
    fn t_min(&self, u: &[f64]) -> f64 {
        let cfg = self.cfg;
        let (s2, sc2) = (cfg.sigma2, cfg.sigma_c2);
        let mut t = 0.0f64;
        for i in 0..cfg.k {
            let gam = cfg.gamma[i];
            let lam = cfg.eh_threshold(i);
            let b: f64 = (0..cfg.k).map(|j| self.g.get(i, j) * u[j]).sum();
            let a = (1.0 + gam) * self.g.get(i, i) * u[i] - gam * b;
            if !(a > 0.0) {
                return f64::INFINITY;
            }
            let qa = a * b;
            let qb = a * (s2 - lam) - gam * s2 * b - gam * sc2 * b;
            let qc = -gam * s2 * (s2 - lam) - gam * sc2 * s2;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return f64::INFINITY;
            }
            let sq = disc.sqrt();
            let root = if qb < 0.0 {
                (-qb + sq) / (2.0 * qa)
            } else {
                2.0 * qc / (-qb - sq)
            };
            t = t.max(root);
        }
        match &cfg.p_max {
            Some(caps) if u.iter().zip(caps).any(|(ui, c)| t * ui > *c) => f64::INFINITY,
            _ => t,
        }
    }

    /// Feasible interval of `rho_i` at `P`.
    fn rho_bounds(&self, p: &[f64], i: usize) -> (f64, f64) {
        let cfg = self.cfg;
        let pr: f64 = (0..cfg.k).map(|j| self.g.get(i, j) * p[j]).sum::<f64>() + cfg.sigma2;
        let z = (1.0 + cfg.gamma[i]) * self.g.get(i, i) * p[i] - cfg.gamma[i] * pr;
        (cfg.gamma[i] * cfg.sigma_c2 / z, 1.0 - cfg.eh_threshold(i) / pr)
    }
}

/// Least total power along direction `u` (any positive scale) together with
/// splitting ratios inside their feasible intervals, nearest `rho_hint`.
/// `None` when no multiple of `u` is feasible.
pub(super) fn scale_along(cfg: &SystemConfig, g: &LinkGains, u: &[f64], rho_hint: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let total: f64 = u.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let u: Vec<f64> = u.iter().map(|v| v / total).collect();
    let ray = Ray { cfg, g };
    let t = ray.t_min(&u);
    if !t.is_finite() {
        return None;
    }
    let p: Vec<f64> = u.iter().map(|ui| ui * t * (1.0 + 1e-12)).collect();
    let rho = (0..cfg.k)
        .map(|i| {
            let (lo, hi) = ray.rho_bounds(&p, i);
            rho_hint[i].clamp(lo, hi.max(lo))
        })
        .collect();
    Some((p, rho))
}

/// Minimizes a unimodal function on `[lo, hi]`, returning `(x, f(x))`.
fn golden(mut lo: f64, mut hi: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid scan of `(0, 1)` followed by golden refinement around the best cell.
fn line_search(n: usize, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let pts: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
    let mut best = (pts[0], f(pts[0]));
    let mut at = 0;
    for (k, &x) in pts.iter().enumerate().skip(1) {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            at = k;
        }
    }
    if !best.1.is_finite() {
        return best;
    }
    let lo = if at == 0 { 0.0 } else { pts[at - 1] };
    let hi = if at + 1 == n { 1.0 } else { pts[at + 1] };
    let refined = golden(lo, hi, f);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}

/// Minimum total power for fixed link gains, found without a cone solver.
///
/// `grid` is the number of points per simplex coordinate (see
/// [`ORACLE_GRID`]). The result is `Infeasible` when no direction reaches
/// feasibility below the caps, or below [`ORACLE_P_HI`] without caps.
pub fn oracle_fixed_weight(cfg: &SystemConfig, g: &LinkGains, grid: usize) -> Result<SolveOutcome> {
    cfg.validate()?;
    if cfg.k > 3 {
        return Err(BeamError::InvalidConfig(format!("oracle supports K <= 3, got {}", cfg.k)));
    }
    if g.k() != cfg.k {
        return Err(BeamError::Dimension {
            expected: cfg.k,
            got: g.k(),
        });
    }
    let grid = grid.max(2);
    let (res, secs) = timed(|| -> Result<SolveOutcome> {
        let ray = Ray { cfg, g };
        // best point seen anywhere, since golden search only sees samples
        let mut best = (f64::INFINITY, vec![1.0; cfg.k]);
        let mut eval = |u: Vec<f64>| -> f64 {
            let t = ray.t_min(&u);
            if t < best.0 {
                best = (t, u);
            }
            t
        };
        match cfg.k {
            1 => {
                eval(vec![1.0]);
            }
            2 => {
                line_search(grid, &mut |t| eval(vec![t, 1.0 - t]));
            }
            _ => {
                let split = |t1: f64, s: f64| vec![t1, (1.0 - t1) * s, (1.0 - t1) * (1.0 - s)];
                let mut coarse = (f64::INFINITY, 0.5);
                for a in 0..grid {
                    let t1 = (a as f64 + 0.5) / grid as f64;
                    for c in 0..grid {
                        let s = (c as f64 + 0.5) / grid as f64;
                        let v = eval(split(t1, s));
                        if v < coarse.0 {
                            coarse = (v, t1);
                        }
                    }
                }
                if coarse.0.is_finite() {
                    let h = 1.0 / grid as f64;
                    let (lo, hi) = ((coarse.1 - h).max(0.0), (coarse.1 + h).min(1.0));
                    golden(lo, hi, &mut |t1| line_search(INNER_GRID, &mut |s| eval(split(t1, s))).1);
                }
            }
        }
        let (t, u) = best;
        let p_hi = cfg.p_max.as_ref().map_or(ORACLE_P_HI, |c| c.iter().sum());
        if !(t.is_finite() && t <= p_hi) {
            return Ok(SolveOutcome::failed(cfg.k, OutcomeStatus::Infeasible));
        }
        // the binding user sits exactly on its root; step off it by a hair
        let p: Vec<f64> = u.iter().map(|ui| ui * t * (1.0 + 1e-12)).collect();
        let rho = (0..cfg.k)
            .map(|i| {
                let (lo, hi) = ray.rho_bounds(&p, i);
                0.5 * (lo + hi)
            })
            .collect();
        SolveOutcome::evaluate(cfg, g, p, rho)
    });
    Ok(res?.with_time(secs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::programs::zf_closed_form;

    #[test]
    fn single_user_reference_point() {
        let cfg = SystemConfig::symmetric(1, 10.0, -30.0, 5.0);
        let g = LinkGains::from_rows(1, &[1.0]).unwrap();
        let out = oracle_fixed_weight(&cfg, &g, ORACLE_GRID).unwrap();
        assert!(out.feasible);
        assert!((out.total_power - 2.59127e-3).abs() < 1e-8);
    }

    #[test]
    fn diagonal_three_users() {
        let cfg = SystemConfig::symmetric(3, 20.0, -20.0, 5.0);
        let d = [0.7, 1.3, 2.0];
        let g = LinkGains::from_rows(3, &[d[0], 0.0, 0.0, 0.0, d[1], 0.0, 0.0, 0.0, d[2]]).unwrap();
        let out = oracle_fixed_weight(&cfg, &g, 100).unwrap();
        let (p, _, _) = zf_closed_form(&cfg, &d);
        let want: f64 = p.iter().sum();
        assert!((out.total_power - want).abs() <= 1e-6 * want, "{} vs {want}", out.total_power);
    }

    #[test]
    fn rejects_large_k() {
        let cfg = SystemConfig::symmetric(4, 10.0, -30.0, 5.0);
        let g = LinkGains::from_rows(4, &[1.0; 16]).unwrap();
        assert!(oracle_fixed_weight(&cfg, &g, 10).is_err());
    }

    #[test]
    fn strong_interference() {
        let cfg = SystemConfig::symmetric(2, 10.0, -30.0, 5.0);
        let g = LinkGains::from_rows(2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(oracle_fixed_weight(&cfg, &g, 50).unwrap().status, OutcomeStatus::Infeasible);
    }
}
