//! System parameters, unit conversions and constraint evaluation.
//!
//! All powers are linear milliwatts; dB quantities appear only in
//! [`ConfigFile`] and the `*_db*` helpers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BeamError, Result};

/// Antenna and conversion noise used throughout the experiments, in dBm.
pub const DEFAULT_NOISE_DBM: f64 = -40.0;
/// Variance of each direct-link channel coefficient.
pub const DEFAULT_DIRECT_VARIANCE: f64 = 1e-5;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> Result<f64> {
    if mw > 0.0 && mw.is_finite() {
        Ok(10.0 * mw.log10())
    } else {
        Err(BeamError::Domain(format!("cannot express {mw} mW in dBm")))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(10.0 * x.log10())
    } else {
        Err(BeamError::Domain(format!("cannot express {x} in dB")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Users, and antennas per transmitter.
    pub k: usize,
    /// Antenna noise power.
    pub sigma2: f64,
    /// Baseband conversion noise power.
    pub sigma_c2: f64,
    /// Linear SINR thresholds.
    pub gamma: Vec<f64>,
    /// Harvesting thresholds.
    pub lambda: Vec<f64>,
    /// Conversion efficiencies; only used when `eh_includes_zeta` is set.
    pub zeta: Vec<f64>,
    /// Ratio of direct to cross channel variance.
    pub delta: f64,
    pub direct_variance: f64,
    pub p_max: Option<Vec<f64>>,
    /// Apply `zeta_i (1 - rho_i) P^r_i >= lambda_i` instead of dropping `zeta`.
    #[serde(default)]
    pub eh_includes_zeta: bool,
}

impl SystemConfig {
    /// Equal thresholds for every user, -40 dBm noise, unit efficiency.
    pub fn symmetric(k: usize, gamma_db: f64, lambda_dbm: f64, delta: f64) -> Self {
        Self {
            k,
            sigma2: dbm_to_mw(DEFAULT_NOISE_DBM),
            sigma_c2: dbm_to_mw(DEFAULT_NOISE_DBM),
            gamma: vec![db_to_linear(gamma_db); k],
            lambda: vec![dbm_to_mw(lambda_dbm); k],
            zeta: vec![1.0; k],
            delta,
            direct_variance: DEFAULT_DIRECT_VARIANCE,
            p_max: None,
            eh_includes_zeta: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BeamError::InvalidConfig(m));
        if self.k == 0 {
            return bad("K must be positive".into());
        }
        for (name, v) in [("gamma", &self.gamma), ("lambda", &self.lambda), ("zeta", &self.zeta)] {
            if v.len() != self.k {
                return bad(format!("{name} has {} entries for K = {}", v.len(), self.k));
            }
        }
        if !(self.sigma2 > 0.0 && self.sigma_c2 > 0.0) {
            return bad("noise powers must be positive".into());
        }
        if self.gamma.iter().chain(&self.lambda).any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("thresholds must be positive and finite".into());
        }
        if self.zeta.iter().any(|&z| !(z > 0.0 && z <= 1.0)) {
            return bad("efficiencies must lie in (0, 1]".into());
        }
        if !(self.delta > 0.0) || !(self.direct_variance > 0.0) {
            return bad("delta and direct_variance must be positive".into());
        }
        if let Some(p) = &self.p_max {
            if p.len() != self.k || p.iter().any(|&v| !(v > 0.0)) {
                return bad("p_max needs K positive entries".into());
            }
        }
        Ok(())
    }

    /// Right-hand side of the harvesting constraint `(1 - rho_i) P^r_i >= .`.
    pub fn eh_threshold(&self, i: usize) -> f64 {
        if self.eh_includes_zeta {
            self.lambda[i] / self.zeta[i]
        } else {
            self.lambda[i]
        }
    }

    pub fn cross_variance(&self) -> f64 {
        self.direct_variance / self.delta
    }

    /// Same thresholds (taken from user 0) for a different user count.
    pub fn with_users(&self, k: usize) -> Self {
        let mut c = self.clone();
        c.k = k;
        c.gamma = vec![self.gamma[0]; k];
        c.lambda = vec![self.lambda[0]; k];
        c.zeta = vec![self.zeta[0]; k];
        c.p_max = self.p_max.as_ref().map(|p| vec![p[0]; k]);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScalarOrList {
    fn expand(&self, k: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            Self::Scalar(v) => Ok(vec![*v; k]),
            Self::List(v) if v.len() == k => Ok(v.clone()),
            Self::List(v) => Err(BeamError::InvalidConfig(format!(
                "{name} lists {} values for K = {k}",
                v.len()
            ))),
        }
    }
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_DBM
}
fn default_delta() -> f64 {
    5.0
}
fn default_variance() -> f64 {
    DEFAULT_DIRECT_VARIANCE
}

/// On-disk configuration, with thresholds and noise in dB units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "default_noise")]
    pub sigma2_dbm: f64,
    #[serde(rename = "sigmaC2_dbm", default = "default_noise")]
    pub sigma_c2_dbm: f64,
    pub gamma_db: ScalarOrList,
    pub lambda_dbm: ScalarOrList,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_variance")]
    pub direct_variance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max_dbm: Option<ScalarOrList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ScalarOrList>,
    #[serde(default)]
    pub eh_includes_zeta: bool,
}

impl ConfigFile {
    pub fn to_config(&self) -> Result<SystemConfig> {
        let k = self.k;
        let cfg = SystemConfig {
            k,
            sigma2: dbm_to_mw(self.sigma2_dbm),
            sigma_c2: dbm_to_mw(self.sigma_c2_dbm),
            gamma: self.gamma_db.expand(k, "gamma_db")?.into_iter().map(db_to_linear).collect(),
            lambda: self.lambda_dbm.expand(k, "lambda_dbm")?.into_iter().map(dbm_to_mw).collect(),
            zeta: match &self.zeta {
                Some(z) => z.expand(k, "zeta")?,
                None => vec![1.0; k],
            },
            delta: self.delta,
            direct_variance: self.direct_variance,
            p_max: match &self.p_max_dbm {
                Some(p) => Some(p.expand(k, "p_max_dbm")?.into_iter().map(dbm_to_mw).collect()),
                None => None,
            },
            eh_includes_zeta: self.eh_includes_zeta,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads a JSON config; returns the system parameters and the channel seed.
pub fn load_config(path: &Path) -> Result<(SystemConfig, u64)> {
    let text = std::fs::read_to_string(path)?;
    let file: ConfigFile = serde_json::from_str(&text)?;
    Ok((file.to_config()?, file.seed))
}

/// `G[i][j] = |h_ij^T w_j|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    pub g: nalgebra::DMatrix<f64>,
}

impl LinkGains {
    pub fn new(g: nalgebra::DMatrix<f64>) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(BeamError::Dimension {
                expected: g.nrows(),
                got: g.ncols(),
            });
        }
        if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(BeamError::Domain("link gains must be finite and nonnegative".into()));
        }
        Ok(Self { g })
    }

    pub fn from_rows(k: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != k * k {
            return Err(BeamError::Dimension {
                expected: k * k,
                got: rows.len(),
            });
        }
        Self::new(nalgebra::DMatrix::from_row_slice(k, k, rows))
    }

    pub fn k(&self) -> usize {
        self.g.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[(i, j)]
    }

    pub fn is_diagonal(&self) -> bool {
        let k = self.k();
        (0..k).all(|i| (0..k).all(|j| i == j || self.g[(i, j)] == 0.0))
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(BeamError::Dimension { expected, got })
    }
}

/// `P^r_i = sum_j G_ij P_j + sigma2`.
pub fn received_power(g: &LinkGains, p: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    check_len(g.k(), p.len())?;
    Ok((0..g.k())
        .map(|i| (0..g.k()).map(|j| g.get(i, j) * p[j]).sum::<f64>() + sigma2)
        .collect())
}

pub fn sinr(g: &LinkGains, p: &[f64], rho: &[f64], cfg: &SystemConfig) -> Result<Vec<f64>> {
    check_len(g.k(), p.len())?;
    check_len(g.k(), rho.len())?;
    if let Some(i) = rho.iter().position(|&r| r <= 0.0) {
        return Err(BeamError::Domain(format!("rho_{i} must be positive")));
    }
    Ok(sinr_unchecked(g, p, rho, cfg))
}

fn sinr_unchecked(g: &LinkGains, p: &[f64], rho: &[f64], cfg: &SystemConfig) -> Vec<f64> {
    let k = g.k();
    (0..k)
        .map(|i| {
            let interference: f64 = (0..k).filter(|&j| j != i).map(|j| g.get(i, j) * p[j]).sum();
            let signal = rho[i] * g.get(i, i) * p[i];
            if signal == 0.0 {
                0.0
            } else {
                signal / (rho[i] * (cfg.sigma2 + interference) + cfg.sigma_c2)
            }
        })
        .collect()
}

/// Feasibility tolerances: `abs` for mW-scale slacks, `rel` for SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-7, rel: 1e-6 }
    }
}

/// Signed constraint slacks; nonnegative means satisfied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `Gamma_i - gamma_i`
    pub sinr: Vec<f64>,
    /// `(1 - rho_i) P^r_i - lambda_i`
    pub eh: Vec<f64>,
    /// `P_i`
    pub power: Vec<f64>,
    /// `rho_i`
    pub rho_low: Vec<f64>,
    /// `1 - rho_i`
    pub rho_high: Vec<f64>,
    /// `P^max_i - P_i`, empty without caps.
    pub cap: Vec<f64>,
}

impl Residuals {
    pub fn is_feasible(&self, cfg: &SystemConfig, tol: Tolerance) -> bool {
        !self.sinr.is_empty()
            && self.sinr.iter().zip(&cfg.gamma).all(|(s, g)| *s >= -tol.rel * g)
            && self
                .eh
                .iter()
                .chain(&self.power)
                .chain(&self.rho_low)
                .chain(&self.rho_high)
                .chain(&self.cap)
                .all(|s| *s >= -tol.abs)
    }

    /// Most negative slack with SINR slacks taken relative to `gamma`.
    pub fn worst(&self, cfg: &SystemConfig) -> f64 {
        self.sinr
            .iter()
            .zip(&cfg.gamma)
            .map(|(s, g)| s / g)
            .chain(self.eh.iter().copied())
            .chain(self.power.iter().copied())
            .chain(self.rho_low.iter().copied())
            .chain(self.rho_high.iter().copied())
            .chain(self.cap.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates every constraint of the power-minimization problem.
pub fn constraint_slacks(cfg: &SystemConfig, g: &LinkGains, p: &[f64], rho: &[f64]) -> Result<Residuals> {
    check_len(cfg.k, g.k())?;
    check_len(cfg.k, p.len())?;
    check_len(cfg.k, rho.len())?;
    let pr = received_power(g, p, cfg.sigma2)?;
    let gam = sinr_unchecked(g, p, rho, cfg);
    Ok(Residuals {
        sinr: gam.iter().zip(&cfg.gamma).map(|(a, b)| a - b).collect(),
        eh: (0..cfg.k)
            .map(|i| (1.0 - rho[i]) * pr[i] - cfg.eh_threshold(i))
            .collect(),
        power: p.to_vec(),
        rho_low: rho.to_vec(),
        rho_high: rho.iter().map(|r| 1.0 - r).collect(),
        cap: match &cfg.p_max {
            Some(m) => m.iter().zip(p).map(|(a, b)| a - b).collect(),
            None => Vec::new(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub p: Vec<f64>,
    pub rho: Vec<f64>,
    pub total_power: f64,
    pub feasible: bool,
    pub status: OutcomeStatus,
    pub residuals: Residuals,
    pub wall_time: f64,
}

impl SolveOutcome {
    /// Outcome for a candidate point, marked feasible iff it verifies.
    pub fn evaluate(cfg: &SystemConfig, g: &LinkGains, p: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let residuals = constraint_slacks(cfg, g, &p, &rho)?;
        let feasible = residuals.is_feasible(cfg, Tolerance::default());
        Ok(Self {
            total_power: p.iter().sum(),
            p,
            rho,
            feasible,
            status: OutcomeStatus::Optimal,
            residuals,
            wall_time: 0.0,
        })
    }

    pub fn failed(k: usize, status: OutcomeStatus) -> Self {
        Self {
            p: vec![f64::NAN; k],
            rho: vec![f64::NAN; k],
            total_power: f64::NAN,
            feasible: false,
            status,
            residuals: Residuals::default(),
            wall_time: 0.0,
        }
    }

    pub fn with_time(mut self, seconds: f64) -> Self {
        self.wall_time = seconds;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn dbm_examples() {
        assert!(close(dbm_to_mw(-40.0), 1e-4, 1e-12));
        assert!(close(dbm_to_mw(0.0), 1.0, 1e-12));
        assert!(close(dbm_to_mw(-30.0), 1e-3, 1e-12));
        assert!(mw_to_dbm(0.0).is_err());
        assert!(mw_to_dbm(-1.0).is_err());
    }

    #[test]
    fn received_power_examples() {
        let id = LinkGains::from_rows(2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let pr = received_power(&id, &[1.0, 1.0], 1e-4).unwrap();
        assert!(close(pr[0], 1.0001, 1e-14) && close(pr[1], 1.0001, 1e-14));
        assert_eq!(received_power(&id, &[0.0, 0.0], 1e-4).unwrap(), vec![1e-4, 1e-4]);
        let g = LinkGains::from_rows(2, &[1.0, 0.5, 0.25, 1.0]).unwrap();
        let pr = received_power(&g, &[2.0, 4.0], 1e-4).unwrap();
        assert!(close(pr[0], 4.0001, 1e-14) && close(pr[1], 4.5001, 1e-14));
        assert!(received_power(&g, &[1.0], 1e-4).is_err());
    }

    #[test]
    fn sinr_examples() {
        let mut cfg = SystemConfig::symmetric(1, 10.0, -30.0, 5.0);
        let one = LinkGains::from_rows(1, &[1.0]).unwrap();
        assert!(close(sinr(&one, &[1.0], &[1.0], &cfg).unwrap()[0], 5000.0, 1e-12));
        assert_eq!(sinr(&one, &[0.0], &[1.0], &cfg).unwrap()[0], 0.0);
        assert!(sinr(&one, &[1.0], &[0.0], &cfg).is_err());
        cfg = cfg.with_users(2);
        let id = LinkGains::from_rows(2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let s = sinr(&id, &[1.0, 1.0], &[0.5, 0.5], &cfg).unwrap();
        assert!(close(s[0], 0.5 / (0.5e-4 + 1e-4), 1e-12));
    }

    #[test]
    fn zero_power_violates_harvesting() {
        let cfg = SystemConfig::symmetric(2, 10.0, -30.0, 5.0);
        let g = LinkGains::from_rows(2, &[1.0, 0.1, 0.1, 1.0]).unwrap();
        let r = constraint_slacks(&cfg, &g, &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!(r.eh.iter().all(|&e| e < 0.0));
        assert!(!r.is_feasible(&cfg, Tolerance::default()));
    }

    #[test]
    fn config_file_expands_scalars() {
        let f: ConfigFile = serde_json::from_str(
            r#"{"K": 3, "gamma_db": 10, "lambda_dbm": [-30, -20, -10], "p_max_dbm": 30}"#,
        )
        .unwrap();
        let cfg = f.to_config().unwrap();
        assert_eq!(cfg.gamma, vec![10.0; 3]);
        assert!(close(cfg.lambda[2], 0.1, 1e-12));
        assert!(close(cfg.p_max.unwrap()[1], 1e3, 1e-12));
        assert_eq!(cfg.delta, 5.0);
        let bad: ConfigFile = serde_json::from_str(r#"{"K": 2, "gamma_db": [1], "lambda_dbm": 0}"#).unwrap();
        assert!(bad.to_config().is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = SystemConfig::symmetric(2, 10.0, -30.0, 5.0);
        assert!(cfg.validate().is_ok());
        cfg.zeta[0] = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = SystemConfig::symmetric(2, 10.0, -30.0, 5.0);
        cfg.sigma2 = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zeta_flag_scales_threshold() {
        let mut cfg = SystemConfig::symmetric(1, 10.0, -30.0, 5.0);
        cfg.zeta = vec![0.5];
        assert_eq!(cfg.eh_threshold(0), cfg.lambda[0]);
        cfg.eh_includes_zeta = true;
        assert!(close(cfg.eh_threshold(0), 2.0 * cfg.lambda[0], 1e-15));
    }
}
