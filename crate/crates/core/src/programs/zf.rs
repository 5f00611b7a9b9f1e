use serde::{Deserialize, Serialize};

use crate::beamform::{link_gains, zf_weights, BeamformerWeights};
use crate::channel::ChannelSet;
use crate::error::Result;
use crate::model::{LinkGains, OutcomeStatus, SolveOutcome, SystemConfig};

use super::timed;

/// Quantities behind the zero-forcing closed form.
///
/// With `x_i = G_ii P_i + sigma2` both constraints bind at the optimum,
/// which leaves the quadratic `x^2 - (alpha + beta + lambda) x + alpha lambda
/// = 0`; `x2` is its larger root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormIntermediates {
    /// `(gamma_i + 1) sigma2`
    pub alpha: Vec<f64>,
    /// `gamma_i sigmaC2`
    pub beta: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub discriminant: Vec<f64>,
    /// Optimal `x_i`, equal to `x2`.
    pub x_star: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ZfSolution {
    pub outcome: SolveOutcome,
    pub weights: BeamformerWeights,
    pub intermediates: ClosedFormIntermediates,
}

/// Closed-form optimum for interference-free links with direct gains
/// `direct[i]`. Returns `(P, rho, intermediates)`.
pub fn zf_closed_form(cfg: &SystemConfig, direct: &[f64]) -> (Vec<f64>, Vec<f64>, ClosedFormIntermediates) {
    let k = direct.len();
    let mut im = ClosedFormIntermediates {
        alpha: Vec::with_capacity(k),
        beta: Vec::with_capacity(k),
        x1: Vec::with_capacity(k),
        x2: Vec::with_capacity(k),
        discriminant: Vec::with_capacity(k),
        x_star: Vec::with_capacity(k),
    };
    let mut p = Vec::with_capacity(k);
    let mut rho = Vec::with_capacity(k);
    for (i, &g) in direct.iter().enumerate() {
        let lam = cfg.eh_threshold(i);
        let alpha = (cfg.gamma[i] + 1.0) * cfg.sigma2;
        let beta = cfg.gamma[i] * cfg.sigma_c2;
        let sum = alpha + beta + lam;
        let disc = sum * sum - 4.0 * alpha * lam;
        let x2 = 0.5 * (sum + disc.sqrt());
        // product of the roots is alpha * lambda
        let x1 = alpha * lam / x2;
        p.push((x2 - cfg.sigma2) / g);
        rho.push(1.0 - lam / x2);
        im.alpha.push(alpha);
        im.beta.push(beta);
        im.x1.push(x1);
        im.x2.push(x2);
        im.discriminant.push(disc);
        im.x_star.push(x2);
    }
    (p, rho, im)
}

/// Optimal power and splitting for zero-forcing weights.
pub fn solve_zf_closed_form(cfg: &SystemConfig, ch: &ChannelSet) -> Result<ZfSolution> {
    let (res, secs) = timed(|| -> Result<_> {
        let weights = zf_weights(ch)?;
        let g = link_gains(ch, &weights)?;
        let direct: Vec<f64> = (0..cfg.k).map(|i| g.get(i, i)).collect();
        let (p, rho, im) = zf_closed_form(cfg, &direct);
        let outcome = finish(cfg, &g, p, rho)?;
        Ok((outcome, weights, im))
    });
    let (outcome, weights, intermediates) = res?;
    Ok(ZfSolution {
        outcome: outcome.with_time(secs),
        weights,
        intermediates,
    })
}

fn finish(cfg: &SystemConfig, g: &LinkGains, p: Vec<f64>, rho: Vec<f64>) -> Result<SolveOutcome> {
    let capped = cfg
        .p_max
        .as_ref()
        .is_some_and(|m| m.iter().zip(&p).any(|(cap, pi)| pi > cap));
    let mut out = SolveOutcome::evaluate(cfg, g, p, rho)?;
    if capped {
        out.status = OutcomeStatus::Infeasible;
        out.feasible = false;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_point() {
        let cfg = SystemConfig::symmetric(1, 10.0, -30.0, 5.0);
        let (p, rho, im) = zf_closed_form(&cfg, &[1.0]);
        assert!((p[0] - 2.59127e-3).abs() < 1e-8, "{}", p[0]);
        assert!((rho[0] - 0.62843).abs() < 1e-5, "{}", rho[0]);
        let alt = im.beta[0] / (im.x2[0] - im.alpha[0]);
        assert!((alt - rho[0]).abs() <= 1e-10 * rho[0]);
    }

    #[test]
    fn vanishing_harvest_threshold() {
        let mut cfg = SystemConfig::symmetric(1, 10.0, -30.0, 5.0);
        cfg.lambda = vec![1e-12];
        let (p, rho, _) = zf_closed_form(&cfg, &[1.0]);
        assert!((p[0] - 2e-3).abs() < 1e-9);
        assert!(rho[0] < 1.0 && rho[0] > 1.0 - 1e-6);
    }
}
