//! Monte-Carlo campaigns: sweeps of one parameter over random channel draws,
//! solved by every requested scheme, with per-instance records and
//! per-point summaries.
//!
//! Every `(point, instance)` pair is an independent task. Records are merged
//! by key, so results do not depend on the number of workers.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamform::{mrt_weights, rzf_weights, BeamformerWeights};
use crate::channel::{generate_channels, ChannelSet};
use crate::error::{BeamError, Result};
use crate::model::{db_to_linear, dbm_to_mw, OutcomeStatus, SolveOutcome, SystemConfig};
use crate::programs::{
    solve_fixed_weight, solve_lp_rho_half, solve_mrt_zf, solve_optimal, solve_zf_closed_form, MrtZfStage, OptimalPath,
};

/// Regularization used for RZF in campaigns.
pub const RZF_ETA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CampaignScheme {
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "MRT")]
    Mrt,
    #[serde(rename = "RZF")]
    Rzf,
    #[serde(rename = "MRT_ZF")]
    MrtZf,
    #[serde(rename = "OPTIMAL")]
    Optimal,
    #[serde(rename = "LP_RHO_HALF")]
    LpRhoHalf,
}

impl CampaignScheme {
    pub const ALL: [CampaignScheme; 6] = [
        CampaignScheme::Zf,
        CampaignScheme::Mrt,
        CampaignScheme::Rzf,
        CampaignScheme::MrtZf,
        CampaignScheme::Optimal,
        CampaignScheme::LpRhoHalf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CampaignScheme::Zf => "ZF",
            CampaignScheme::Mrt => "MRT",
            CampaignScheme::Rzf => "RZF",
            CampaignScheme::MrtZf => "MRT_ZF",
            CampaignScheme::Optimal => "OPTIMAL",
            CampaignScheme::LpRhoHalf => "LP_RHO_HALF",
        }
    }
}

impl fmt::Display for CampaignScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CampaignScheme {
    type Err = BeamError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| BeamError::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    GammaDb,
    LambdaDbm,
    Delta,
    K,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::GammaDb => "gamma_db",
            Axis::LambdaDbm => "lambda_dbm",
            Axis::Delta => "delta",
            Axis::K => "K",
        }
    }

    /// `template` with this parameter set to `value`.
    pub fn apply(self, template: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = template.clone();
        match self {
            Axis::GammaDb => cfg.gamma = vec![db_to_linear(value); cfg.k],
            Axis::LambdaDbm => cfg.lambda = vec![dbm_to_mw(value); cfg.k],
            Axis::Delta => cfg.delta = value,
            Axis::K => cfg = template.with_users(value as usize),
        }
        cfg
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub template: SystemConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub instances_per_point: usize,
    pub schemes: Vec<CampaignScheme>,
    pub base_seed: u64,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BeamError::InvalidConfig(m.into()));
        if self.instances_per_point == 0 {
            return bad("instances_per_point must be at least 1");
        }
        if self.values.is_empty() {
            return bad("no axis values");
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("axis values must be strictly increasing");
        }
        if self.schemes.is_empty() {
            return bad("no schemes");
        }
        if self.axis == Axis::K && self.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
            return bad("K values must be positive integers");
        }
        for &v in &self.values {
            self.config_at(v).validate()?;
        }
        Ok(())
    }

    pub fn config_at(&self, value: f64) -> SystemConfig {
        self.axis.apply(&self.template, value)
    }

    /// Seed of instance `instance` at point `point`.
    ///
    /// Axes that only rescale the channel law (thresholds and `delta`) reuse
    /// the same draws at every point, so curves along them compare identical
    /// channels; a `K` sweep draws afresh per user count.
    pub fn seed_for(&self, point: usize, instance: usize) -> u64 {
        let key = match self.axis {
            Axis::K => self.values[point] as u64,
            _ => 0,
        };
        instance_seed(self.base_seed, key, instance as u64)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic hash of `(base_seed, point, instance)`.
pub fn instance_seed(base_seed: u64, point: u64, instance: u64) -> u64 {
    splitmix(splitmix(splitmix(base_seed) ^ point) ^ instance)
}

/// One scheme on one channel draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub point: usize,
    pub axis_value: f64,
    pub instance: usize,
    pub seed: u64,
    pub scheme: CampaignScheme,
    pub status: OutcomeStatus,
    pub feasible: bool,
    #[serde(rename = "total_power_mW")]
    pub total_power_mw: Option<f64>,
    /// SDP relaxation value (mW); optimal scheme only.
    #[serde(rename = "bound_mW")]
    pub bound_mw: Option<f64>,
    /// Every relaxation block was rank one; optimal scheme only.
    pub rank_one: Option<bool>,
    /// MRT-ZF or optimal pipeline ended on ZF weights.
    pub fallback: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub point: usize,
    pub axis_value: f64,
    pub scheme: CampaignScheme,
    pub n: usize,
    pub infeasible_count: usize,
    pub failure_count: usize,
    pub n_feasible: usize,
    #[serde(rename = "mean_total_power_mW")]
    pub mean_total_power_mw: Option<f64>,
    #[serde(rename = "stderr_power_mW")]
    pub stderr_power_mw: Option<f64>,
    pub mean_ratio_to_optimal: Option<f64>,
    pub stderr_ratio: Option<f64>,
    /// Instances feasible for both this scheme and the optimum.
    pub n_ratio: usize,
    pub mean_wall_time_s: f64,
    pub stderr_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub spec: CampaignSpec,
    pub summaries: Vec<SchemeSummary>,
    pub records: Vec<InstanceRecord>,
}

impl CampaignResult {
    pub fn summary(&self, point: usize, scheme: CampaignScheme) -> Option<&SchemeSummary> {
        self.summaries.iter().find(|s| s.point == point && s.scheme == scheme)
    }
}

/// Full result of one scheme on one channel draw.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub outcome: SolveOutcome,
    /// Weights actually used; absent when the pipeline failed before
    /// producing any.
    pub weights: Option<BeamformerWeights>,
    /// SDP relaxation value (mW); optimal scheme only.
    pub bound_mw: Option<f64>,
    pub rank_one: Option<bool>,
    pub fallback: bool,
}

impl SchemeOutcome {
    fn plain(outcome: SolveOutcome, weights: Option<BeamformerWeights>) -> Self {
        Self {
            outcome,
            weights,
            bound_mw: None,
            rank_one: None,
            fallback: false,
        }
    }
}

/// Runs one scheme's pipeline.
pub fn solve_scheme(cfg: &SystemConfig, ch: &ChannelSet, scheme: CampaignScheme) -> Result<SchemeOutcome> {
    let fixed = |w: BeamformerWeights| -> Result<SchemeOutcome> {
        let out = solve_fixed_weight(cfg, ch, &w)?;
        Ok(SchemeOutcome::plain(out, Some(w)))
    };
    match scheme {
        CampaignScheme::Zf => solve_zf_closed_form(cfg, ch).map(|z| SchemeOutcome::plain(z.outcome, Some(z.weights))),
        CampaignScheme::Mrt => fixed(mrt_weights(ch)?),
        CampaignScheme::Rzf => fixed(rzf_weights(ch, RZF_ETA)?),
        CampaignScheme::LpRhoHalf => {
            let out = solve_lp_rho_half(cfg, ch)?;
            Ok(SchemeOutcome::plain(out, Some(mrt_weights(ch)?)))
        }
        CampaignScheme::MrtZf => solve_mrt_zf(cfg, ch).map(|m| SchemeOutcome {
            fallback: m.stage == MrtZfStage::ZfFallback,
            ..SchemeOutcome::plain(m.outcome, Some(m.weights))
        }),
        CampaignScheme::Optimal => solve_optimal(cfg, ch).map(|o| SchemeOutcome {
            bound_mw: o.sdp.objective.is_finite().then_some(o.sdp.objective),
            rank_one: (!o.sdp.ranks.is_empty()).then(|| o.sdp.ranks.iter().all(|&r| r == 1)),
            fallback: o.path == Some(OptimalPath::ZfFallback),
            ..SchemeOutcome::plain(o.outcome, o.weights)
        }),
    }
}

/// Solves one channel draw with every scheme of `spec`. Errors become
/// `NumericalFailure` records.
pub fn run_instance(spec: &CampaignSpec, point: usize, instance: usize) -> Vec<InstanceRecord> {
    let value = spec.values[point];
    let cfg = spec.config_at(value);
    let seed = spec.seed_for(point, instance);
    let ch = generate_channels(&cfg, seed);
    spec.schemes
        .iter()
        .map(|&scheme| {
            let base = InstanceRecord {
                point,
                axis_value: value,
                instance,
                seed,
                scheme,
                status: OutcomeStatus::NumericalFailure,
                feasible: false,
                total_power_mw: None,
                bound_mw: None,
                rank_one: None,
                fallback: false,
                wall_time_s: 0.0,
            };
            match solve_scheme(&cfg, &ch, scheme) {
                Ok(r) => InstanceRecord {
                    status: r.outcome.status,
                    feasible: r.outcome.feasible,
                    total_power_mw: r.outcome.feasible.then_some(r.outcome.total_power),
                    bound_mw: r.bound_mw,
                    rank_one: r.rank_one,
                    fallback: r.fallback,
                    wall_time_s: r.outcome.wall_time,
                    ..base
                },
                Err(_) => base,
            }
        })
        .collect()
}

fn tasks(spec: &CampaignSpec) -> Vec<(usize, usize)> {
    (0..spec.values.len())
        .flat_map(|p| (0..spec.instances_per_point).map(move |t| (p, t)))
        .collect()
}

fn assemble(spec: &CampaignSpec, mut records: Vec<InstanceRecord>) -> CampaignResult {
    records.sort_by_key(|r| (r.point, r.instance, r.scheme));
    CampaignResult {
        spec: spec.clone(),
        summaries: summarize(spec, &records),
        records,
    }
}

/// Runs every task on the calling thread.
pub fn run_campaign_sequential(spec: &CampaignSpec) -> Result<CampaignResult> {
    spec.validate()?;
    let records = tasks(spec).into_iter().flat_map(|(p, t)| run_instance(spec, p, t)).collect();
    Ok(assemble(spec, records))
}

/// Runs tasks on the global rayon pool when the `parallel` feature is on.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        spec.validate()?;
        let records = tasks(spec)
            .into_par_iter()
            .flat_map_iter(|(p, t)| run_instance(spec, p, t))
            .collect();
        Ok(assemble(spec, records))
    }
    #[cfg(not(feature = "parallel"))]
    run_campaign_sequential(spec)
}

/// [`run_campaign`] on a dedicated pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn run_campaign_with_threads(spec: &CampaignSpec, threads: usize) -> Result<CampaignResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| BeamError::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_campaign(spec))
}

/// `(mean, standard error)`; the error is 0 for fewer than two samples.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Per-(point, scheme) aggregates of `records`.
pub fn summarize(spec: &CampaignSpec, records: &[InstanceRecord]) -> Vec<SchemeSummary> {
    let mut out = Vec::new();
    for (point, &value) in spec.values.iter().enumerate() {
        let at: Vec<&InstanceRecord> = records.iter().filter(|r| r.point == point).collect();
        let optimum = |instance: usize| {
            at.iter()
                .find(|r| r.instance == instance && r.scheme == CampaignScheme::Optimal)
                .and_then(|r| r.total_power_mw)
        };
        for &scheme in &spec.schemes {
            let rs: Vec<&&InstanceRecord> = at.iter().filter(|r| r.scheme == scheme).collect();
            let powers: Vec<f64> = rs.iter().filter_map(|r| r.total_power_mw).collect();
            let ratios: Vec<f64> = rs
                .iter()
                .filter_map(|r| Some(r.total_power_mw? / optimum(r.instance)?))
                .collect();
            let times: Vec<f64> = rs.iter().map(|r| r.wall_time_s).collect();
            let power = mean_stderr(&powers);
            let ratio = mean_stderr(&ratios);
            let time = mean_stderr(&times).unwrap_or((0.0, 0.0));
            out.push(SchemeSummary {
                point,
                axis_value: value,
                scheme,
                n: rs.len(),
                infeasible_count: rs.iter().filter(|r| r.status == OutcomeStatus::Infeasible).count(),
                failure_count: rs.iter().filter(|r| r.status == OutcomeStatus::NumericalFailure).count(),
                n_feasible: powers.len(),
                mean_total_power_mw: power.map(|p| p.0),
                stderr_power_mw: power.map(|p| p.1),
                mean_ratio_to_optimal: ratio.map(|r| r.0),
                stderr_ratio: ratio.map(|r| r.1),
                n_ratio: ratios.len(),
                mean_wall_time_s: time.0,
                stderr_wall_time_s: time.1,
            });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// presets

/// Parameters shared by the preset experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub instances: usize,
    pub base_seed: u64,
    pub delta: f64,
}

impl Default for Preset {
    fn default() -> Self {
        Self {
            instances: 100,
            base_seed: 42,
            delta: 5.0,
        }
    }
}

/// One row block of the optimality/infeasibility table: a `lambda` sweep at
/// fixed `K` and `gamma`, with every scheme.
pub fn table1_spec(k: usize, gamma_db: f64, lambdas_dbm: &[f64], preset: &Preset) -> CampaignSpec {
    let mut lambdas = lambdas_dbm.to_vec();
    lambdas.sort_by(f64::total_cmp);
    CampaignSpec {
        template: SystemConfig::symmetric(k, gamma_db, lambdas[0], preset.delta),
        axis: Axis::LambdaDbm,
        values: lambdas,
        instances_per_point: preset.instances,
        schemes: CampaignScheme::ALL.to_vec(),
        base_seed: preset.base_seed,
    }
}

/// Table row in long format: one line per configuration and scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    #[serde(rename = "K")]
    pub k: usize,
    pub gamma_db: f64,
    pub lambda_dbm: f64,
    pub delta: f64,
    pub n: usize,
    pub scheme: CampaignScheme,
    pub infeasible: usize,
    pub failures: usize,
    pub n_feasible: usize,
    pub mean_ratio_to_optimal: Option<f64>,
    pub stderr_ratio: Option<f64>,
    pub n_ratio: usize,
    #[serde(rename = "mean_power_mW")]
    pub mean_power_mw: Option<f64>,
    pub mean_time_s: f64,
}

pub fn table1_rows(result: &CampaignResult) -> Vec<Table1Row> {
    result
        .summaries
        .iter()
        .map(|s| {
            let cfg = result.spec.config_at(s.axis_value);
            Table1Row {
                k: cfg.k,
                gamma_db: round6(crate::model::linear_to_db(cfg.gamma[0]).unwrap_or(f64::NAN)),
                lambda_dbm: round6(crate::model::mw_to_dbm(cfg.lambda[0]).unwrap_or(f64::NAN)),
                delta: cfg.delta,
                n: s.n,
                scheme: s.scheme,
                infeasible: s.infeasible_count,
                failures: s.failure_count,
                n_feasible: s.n_feasible,
                mean_ratio_to_optimal: s.mean_ratio_to_optimal,
                stderr_ratio: s.stderr_ratio,
                n_ratio: s.n_ratio,
                mean_power_mw: s.mean_total_power_mw,
                mean_time_s: s.mean_wall_time_s,
            }
        })
        .collect()
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Figure analogues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Optimal power versus harvesting threshold, per `K`.
    PowerVsLambda,
    /// Optimal power versus SINR target, per `K`.
    PowerVsGamma,
    /// Optimal power versus direct-to-cross variance ratio, per `K`.
    PowerVsDelta,
    /// ZF-to-optimal power ratio versus SINR target, per `lambda`.
    ZfRatio,
}

impl Figure {
    /// Numbering used on the command line.
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            3 => Ok(Figure::PowerVsLambda),
            4 => Ok(Figure::PowerVsGamma),
            5 => Ok(Figure::PowerVsDelta),
            7 => Ok(Figure::ZfRatio),
            _ => Err(BeamError::InvalidConfig(format!("no figure {n}; expected 3, 4, 5 or 7"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Figure::PowerVsLambda => 3,
            Figure::PowerVsGamma => 4,
            Figure::PowerVsDelta => 5,
            Figure::ZfRatio => 7,
        }
    }

    /// Whether curves are also reported relative to their maximum.
    pub fn normalized(self) -> bool {
        self != Figure::ZfRatio
    }

    /// Campaigns making up the figure, each labeled with its series name.
    pub fn specs(self, preset: &Preset) -> Vec<(String, CampaignSpec)> {
        let d = preset.delta;
        let mk = |series: String, template: SystemConfig, axis, values: Vec<f64>, schemes: Vec<CampaignScheme>| {
            (
                series,
                CampaignSpec {
                    template,
                    axis,
                    values,
                    instances_per_point: preset.instances,
                    schemes,
                    base_seed: preset.base_seed,
                },
            )
        };
        let opt = || vec![CampaignScheme::Optimal];
        match self {
            Figure::PowerVsLambda => [2, 4, 8]
                .iter()
                .map(|&k| {
                    mk(
                        format!("K={k}"),
                        SystemConfig::symmetric(k, 20.0, -40.0, d),
                        Axis::LambdaDbm,
                        vec![-40.0, -35.0, -30.0, -25.0, -20.0, -15.0, -10.0],
                        opt(),
                    )
                })
                .collect(),
            Figure::PowerVsGamma => [2, 4, 8]
                .iter()
                .map(|&k| {
                    mk(
                        format!("K={k}"),
                        SystemConfig::symmetric(k, 0.0, -30.0, d),
                        Axis::GammaDb,
                        vec![0.0, 5.0, 10.0, 15.0, 20.0],
                        opt(),
                    )
                })
                .collect(),
            Figure::PowerVsDelta => [2, 4, 8]
                .iter()
                .map(|&k| {
                    mk(
                        format!("K={k}"),
                        SystemConfig::symmetric(k, 20.0, -30.0, 2.0),
                        Axis::Delta,
                        vec![2.0, 5.0, 10.0, 20.0],
                        opt(),
                    )
                })
                .collect(),
            Figure::ZfRatio => [-40.0, -30.0, -20.0, -10.0]
                .iter()
                .map(|&l| {
                    mk(
                        format!("lambda={l}"),
                        SystemConfig::symmetric(8, 0.0, l, d),
                        Axis::GammaDb,
                        vec![0.0, 5.0, 10.0, 15.0, 20.0],
                        vec![CampaignScheme::Zf, CampaignScheme::Optimal],
                    )
                })
                .collect(),
        }
    }
}

/// A point of a figure curve: power (mW), ratio, or time (s) depending on
/// the figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub axis_value: f64,
    pub scheme: CampaignScheme,
    #[serde(rename = "mean_power_mW_or_ratio_or_time")]
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub n_feasible: usize,
    /// `value` over the largest value of its series.
    pub normalized: Option<f64>,
    pub series: String,
}

/// Curve points of one campaign of `fig`.
pub fn figure_rows(fig: Figure, series: &str, result: &CampaignResult) -> Vec<FigureRow> {
    let mut rows: Vec<FigureRow> = result
        .summaries
        .iter()
        .filter_map(|s| match fig {
            Figure::ZfRatio => (s.scheme == CampaignScheme::Zf).then(|| FigureRow {
                axis_value: s.axis_value,
                scheme: s.scheme,
                value: s.mean_ratio_to_optimal,
                stderr: s.stderr_ratio,
                n_feasible: s.n_ratio,
                normalized: None,
                series: series.to_string(),
            }),
            _ => Some(FigureRow {
                axis_value: s.axis_value,
                scheme: s.scheme,
                value: s.mean_total_power_mw,
                stderr: s.stderr_power_mw,
                n_feasible: s.n_feasible,
                normalized: None,
                series: series.to_string(),
            }),
        })
        .collect();
    if fig.normalized() {
        for scheme in CampaignScheme::ALL {
            let peak = rows
                .iter()
                .filter(|r| r.scheme == scheme)
                .filter_map(|r| r.value)
                .fold(f64::NEG_INFINITY, f64::max);
            if peak > 0.0 {
                for r in rows.iter_mut().filter(|r| r.scheme == scheme) {
                    r.normalized = r.value.map(|v| v / peak);
                }
            }
        }
    }
    rows
}

/// Mean solve time of one scheme at one user count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub scheme: CampaignScheme,
    pub mean_time_s: f64,
    pub stderr: f64,
    pub n: usize,
}

impl TimingRow {
    /// Same data under the figure schema, with `K` as the axis.
    pub fn as_figure_row(&self) -> FigureRow {
        FigureRow {
            axis_value: self.k as f64,
            scheme: self.scheme,
            value: Some(self.mean_time_s),
            stderr: Some(self.stderr),
            n_feasible: self.n,
            normalized: None,
            series: "timing".into(),
        }
    }
}

/// Wall time of ZF, MRT-ZF and the SDP pipeline per `K`. Solves run one
/// after another on the calling thread, after an untimed warm-up.
pub fn bench_timing(ks: &[usize], template: &SystemConfig, instances: usize, base_seed: u64) -> Result<Vec<TimingRow>> {
    let schemes = [CampaignScheme::Zf, CampaignScheme::MrtZf, CampaignScheme::Optimal];
    let mut rows = Vec::new();
    for &k in ks {
        let spec = CampaignSpec {
            template: template.with_users(k),
            axis: Axis::K,
            values: vec![k as f64],
            instances_per_point: instances.max(1),
            schemes: schemes.to_vec(),
            base_seed,
        };
        spec.validate()?;
        // warm caches and allocator
        run_instance(&spec, 0, 0);
        let records: Vec<InstanceRecord> = (0..spec.instances_per_point).flat_map(|t| run_instance(&spec, 0, t)).collect();
        for scheme in schemes {
            let times: Vec<f64> = records.iter().filter(|r| r.scheme == scheme).map(|r| r.wall_time_s).collect();
            let (mean, stderr) = mean_stderr(&times).unwrap_or((f64::NAN, 0.0));
            rows.push(TimingRow {
                k,
                scheme,
                mean_time_s: mean,
                stderr,
                n: times.len(),
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows with their header even when `rows` is empty.
pub fn write_csv_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(BeamError::from)).collect()
}

pub const FIGURE_HEADER: [&str; 7] = [
    "axis_value",
    "scheme",
    "mean_power_mW_or_ratio_or_time",
    "stderr",
    "n_feasible",
    "normalized",
    "series",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_round_trip() {
        for s in CampaignScheme::ALL {
            assert_eq!(s.to_string().parse::<CampaignScheme>().unwrap(), s);
        }
        assert_eq!("mrt-zf".parse::<CampaignScheme>().unwrap(), CampaignScheme::MrtZf);
        assert!("SVD".parse::<CampaignScheme>().is_err());
    }

    #[test]
    fn seeds_differ_by_instance_and_key() {
        let a = instance_seed(1, 0, 0);
        assert_ne!(a, instance_seed(1, 0, 1));
        assert_ne!(a, instance_seed(1, 1, 0));
        assert_ne!(a, instance_seed(2, 0, 0));
        assert_eq!(a, instance_seed(1, 0, 0));
    }

    #[test]
    fn spec_validation() {
        let mut spec = table1_spec(2, 10.0, &[-30.0, -20.0], &Preset::default());
        assert!(spec.validate().is_ok());
        spec.values = vec![-20.0, -30.0];
        assert!(spec.validate().is_err());
        spec.values = vec![-30.0];
        spec.instances_per_point = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn mean_stderr_small_samples() {
        assert_eq!(mean_stderr(&[]), None);
        assert_eq!(mean_stderr(&[2.0]), Some((2.0, 0.0)));
        let (m, s) = mean_stderr(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn axis_application() {
        let t = SystemConfig::symmetric(2, 10.0, -30.0, 5.0);
        assert!((Axis::GammaDb.apply(&t, 20.0).gamma[1] - 100.0).abs() < 1e-12);
        assert_eq!(Axis::K.apply(&t, 4.0).k, 4);
        assert_eq!(Axis::Delta.apply(&t, 20.0).delta, 20.0);
    }
}
