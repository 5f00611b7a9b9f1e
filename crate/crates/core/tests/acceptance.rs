//! Acceptance report: one PASS/FAIL line per criterion, plus INFO lines.
//!
//! Runs as a plain binary so the report is printed as it is produced. A
//! failing criterion is reported, not asserted; set `ACCEPTANCE_STRICT=1` to
//! turn any FAIL into a non-zero exit.

use std::collections::HashMap;
use std::time::Instant;

use conic::corpus::{analytic_corpus, check_infeasibility_certificate, check_optimal_exit, infeasible_corpus};
use conic::{solve_conic, SolverOptions};
use swipt_beam::beamform::{link_gains, mrt_weights};
use swipt_beam::campaign::{
    bench_timing, run_campaign, solve_scheme, table1_spec, Axis, CampaignResult, CampaignScheme, CampaignSpec, Preset,
};
use swipt_beam::model::{received_power, sinr};
use swipt_beam::programs::{oracle_fixed_weight, solve_fixed_weight, solve_zf_closed_form, ORACLE_GRID};
use swipt_beam::{generate_channels, LinkGains, OutcomeStatus, SystemConfig};

const SEED: u64 = 20_240_601;
const GAMMAS: [f64; 2] = [20.0, 10.0];
const LAMBDAS: [f64; 4] = [-40.0, -30.0, -20.0, -10.0];

struct Report {
    failed: usize,
    total: usize,
}

impl Report {
    fn check(&mut self, name: &str, run: impl FnOnce() -> (bool, String)) {
        let t = Instant::now();
        let (ok, detail) = run();
        self.total += 1;
        if !ok {
            self.failed += 1;
        }
        println!(
            "{} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
}

fn info(name: &str, detail: String) {
    println!("INFO {name}: {detail}");
}

fn closed_form_vs_oracle() -> (bool, String) {
    let t = Instant::now();
    let mut worst_obj = 0.0f64;
    let mut worst_bind = 0.0f64;
    let mut bad = 0;
    for n in 0..100u64 {
        let i = n as usize;
        let k = [2, 3][i % 2];
        let gamma = GAMMAS[(i / 2) % 2];
        let lambda = [-40.0, -20.0][(i / 4) % 2];
        let cfg = SystemConfig::symmetric(k, gamma, lambda, 5.0);
        let ch = generate_channels(&cfg, SEED + n);
        let zf = solve_zf_closed_form(&cfg, &ch).expect("zf");
        let g = link_gains(&ch, &zf.weights).expect("gains");
        let diag: Vec<f64> = (0..k * k).map(|q| if q / k == q % k { g.get(q / k, q % k) } else { 0.0 }).collect();
        let gd = LinkGains::from_rows(k, &diag).expect("diag");
        let oracle = oracle_fixed_weight(&cfg, &gd, ORACLE_GRID).expect("oracle");
        if !(zf.outcome.feasible && oracle.feasible) {
            bad += 1;
            continue;
        }
        worst_obj = worst_obj.max((zf.outcome.total_power - oracle.total_power).abs() / oracle.total_power);
        let s = sinr(&g, &zf.outcome.p, &zf.outcome.rho, &cfg).expect("sinr");
        let pr = received_power(&g, &zf.outcome.p, cfg.sigma2).expect("pr");
        for u in 0..k {
            worst_bind = worst_bind
                .max((s[u] / cfg.gamma[u] - 1.0).abs())
                .max(((1.0 - zf.outcome.rho[u]) * pr[u] / cfg.eh_threshold(u) - 1.0).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (
        bad == 0 && worst_obj <= 1e-5 && worst_bind <= 1e-8 && secs < 5.0,
        format!("100 instances, max rel objective gap {worst_obj:.2e} (<= 1e-5), max binding slack {worst_bind:.2e} (<= 1e-8), {bad} infeasible, {secs:.2}s (< 5s)"),
    )
}

fn zf_always_feasible() -> (bool, String) {
    let mut infeasible = 0;
    for n in 0..1000u64 {
        let i = n as usize;
        let k = [2, 4, 8][i % 3];
        let cfg = SystemConfig::symmetric(k, GAMMAS[(i / 3) % 2], LAMBDAS[(i / 6) % 4], 5.0);
        let ch = generate_channels(&cfg, SEED + n);
        match solve_zf_closed_form(&cfg, &ch) {
            Ok(z) if z.outcome.feasible => {}
            _ => infeasible += 1,
        }
    }
    (infeasible == 0, format!("{infeasible} infeasible of 1000 (K in {{2,4,8}})"))
}

fn socp_vs_oracle() -> (bool, String) {
    let cfg = SystemConfig::symmetric(2, 10.0, -30.0, 5.0);
    let (mut disagree, mut worst, mut feasible) = (0, 0.0f64, 0);
    for n in 0..50u64 {
        let ch = generate_channels(&cfg, SEED + n);
        let w = mrt_weights(&ch).expect("mrt");
        let g = link_gains(&ch, &w).expect("gains");
        let socp = solve_fixed_weight(&cfg, &ch, &w).expect("socp");
        let oracle = oracle_fixed_weight(&cfg, &g, ORACLE_GRID).expect("oracle");
        let socp_verdict = match socp.status {
            OutcomeStatus::Optimal if socp.feasible => Some(true),
            OutcomeStatus::Infeasible => Some(false),
            _ => None,
        };
        if socp_verdict != Some(oracle.feasible) {
            disagree += 1;
            continue;
        }
        if oracle.feasible {
            feasible += 1;
            worst = worst.max((socp.total_power - oracle.total_power).abs() / oracle.total_power);
        }
    }
    (
        disagree == 0 && worst <= 1e-3,
        format!("50 instances (K=2, 10 dB, -30 dBm), {feasible} feasible, {disagree} verdict disagreements, max rel gap {worst:.2e} (<= 1e-3)"),
    )
}

fn lower_bound(table: &[CampaignResult]) -> (bool, String) {
    let (mut instances, mut violations, mut missing) = (0, 0, 0);
    let mut worst = f64::INFINITY;
    for res in table {
        let mut by_instance: HashMap<(usize, usize), Vec<_>> = HashMap::new();
        for r in &res.records {
            by_instance.entry((r.point, r.instance)).or_default().push(r);
        }
        for recs in by_instance.values() {
            instances += 1;
            let Some(bound) = recs.iter().find(|r| r.scheme == CampaignScheme::Optimal).and_then(|r| r.bound_mw) else {
                missing += 1;
                continue;
            };
            for r in recs {
                if let Some(p) = r.total_power_mw {
                    let slack = (p - bound) / bound;
                    worst = worst.min(slack);
                    if slack < -1e-6 {
                        violations += 1;
                    }
                }
            }
        }
    }
    (
        violations == 0 && missing == 0 && instances >= 500,
        format!("{instances} instances over 24 configurations, {violations} violations, {missing} unsolved relaxations, min rel slack {worst:.2e} (>= -1e-6)"),
    )
}

fn rank_fraction(k: usize, per_config: usize) -> (usize, usize) {
    let mut specs = Vec::new();
    for g in GAMMAS {
        let mut spec = table1_spec(k, g, &LAMBDAS, &Preset {
            instances: per_config,
            base_seed: SEED ^ k as u64,
            delta: 5.0,
        });
        spec.schemes = vec![CampaignScheme::Optimal];
        specs.push(spec);
    }
    let (mut ones, mut total) = (0, 0);
    for spec in specs {
        let res = run_campaign(&spec).expect("campaign");
        for r in &res.records {
            total += 1;
            if r.rank_one == Some(true) {
                ones += 1;
            }
        }
    }
    (ones, total)
}

fn rank_one(table: &[CampaignResult]) -> (bool, String) {
    let mut parts = Vec::new();
    let mut ok = true;
    for k in [2, 3] {
        let (ones, total) = rank_fraction(k, 63);
        ok &= total >= 500 && ones as f64 >= 0.99 * total as f64;
        parts.push(format!("K={k}: {ones}/{total}"));
    }
    for k in [4, 8] {
        let (mut ones, mut total) = (0, 0);
        for res in table.iter().filter(|r| r.spec.template.k == k) {
            for r in res.records.iter().filter(|r| r.scheme == CampaignScheme::Optimal) {
                total += 1;
                ones += (r.rank_one == Some(true)) as usize;
            }
        }
        ok &= total > 0 && ones as f64 >= 0.99 * total as f64;
        parts.push(format!("K={k}: {ones}/{total}"));
    }
    (ok, format!("rank-one solves {} (>= 99% each)", parts.join(", ")))
}

fn table(k: usize, gamma: f64, delta: f64, n: usize) -> CampaignResult {
    let preset = Preset {
        instances: n,
        base_seed: SEED,
        delta,
    };
    run_campaign(&table1_spec(k, gamma, &LAMBDAS, &preset)).expect("campaign")
}

fn row(res: &CampaignResult, lambda: f64, scheme: CampaignScheme) -> &swipt_beam::campaign::SchemeSummary {
    let p = res.spec.values.iter().position(|&v| v == lambda).expect("lambda");
    res.summary(p, scheme).expect("summary")
}

fn table_statistics(table: &[CampaignResult]) -> (bool, String) {
    let find = |k: usize, g: f64| {
        table
            .iter()
            .find(|r| r.spec.template.k == k && (r.spec.template.gamma[0] - 10f64.powf(g / 10.0)).abs() < 1e-9)
            .expect("configuration")
    };
    let k2g20 = find(2, 20.0);
    let k2g10 = find(2, 10.0);
    let mrt_a = row(k2g20, -30.0, CampaignScheme::Mrt).infeasible_count;
    let a1 = (55..=85).contains(&mrt_a);
    let mut a2 = true;
    let mut e = true;
    let mut d = true;
    for res in table {
        for p in 0..res.spec.values.len() {
            let mrt = res.summary(p, CampaignScheme::Mrt).unwrap();
            let rzf = res.summary(p, CampaignScheme::Rzf).unwrap();
            let lp = res.summary(p, CampaignScheme::LpRhoHalf).unwrap();
            a2 &= rzf.infeasible_count >= mrt.infeasible_count;
            e &= lp.infeasible_count == mrt.infeasible_count;
            if res.spec.template.k == 4 && res.spec.template.gamma[0] > 50.0 {
                d &= mrt.infeasible_count == mrt.n;
            }
        }
    }
    let mrt_b = row(k2g10, -30.0, CampaignScheme::Mrt).infeasible_count;
    let b = mrt_b <= 5;
    let ratio_c = row(k2g20, -30.0, CampaignScheme::MrtZf).mean_ratio_to_optimal.unwrap_or(f64::INFINITY);
    let c = ratio_c <= 1.05;
    let mark = |x: bool| if x { "ok" } else { "FAIL" };
    let failures: usize = table
        .iter()
        .flat_map(|r| r.summaries.iter())
        .map(|s| s.failure_count)
        .sum();
    (
        a1 && a2 && b && c && d && e,
        format!(
            "delta=5, n=100: (a) MRT infeasible {mrt_a}% in [55,85] {}; RZF >= MRT on every row {}; (b) K=2 10 dB MRT infeasible {mrt_b}% <= 5 {}; (c) MRT-ZF/Opt {ratio_c:.4} <= 1.05 {}; (d) K=4 20 dB MRT 100% {}; (e) LP_rho = MRT counts {}; {failures} numerical failures",
            mark(a1),
            mark(a2),
            mark(b),
            mark(c),
            mark(d),
            mark(e)
        ),
    )
}

fn sweep(template: SystemConfig, axis: Axis, values: &[f64], schemes: Vec<CampaignScheme>, n: usize) -> CampaignResult {
    run_campaign(&CampaignSpec {
        template,
        axis,
        values: values.to_vec(),
        instances_per_point: n,
        schemes,
        base_seed: SEED,
    })
    .expect("campaign")
}

fn means(res: &CampaignResult, scheme: CampaignScheme, ratio: bool) -> Vec<f64> {
    (0..res.spec.values.len())
        .map(|p| {
            let s = res.summary(p, scheme).unwrap();
            let v = if ratio { s.mean_ratio_to_optimal } else { s.mean_total_power_mw };
            v.unwrap_or(f64::NAN)
        })
        .collect()
}

fn fmt_series(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn monotonicity() -> (bool, String) {
    let opt = || vec![CampaignScheme::Optimal];
    let delta = means(
        &sweep(SystemConfig::symmetric(4, 20.0, -30.0, 2.0), Axis::Delta, &[2.0, 5.0, 10.0, 20.0], opt(), 200),
        CampaignScheme::Optimal,
        false,
    );
    let gamma = means(
        &sweep(SystemConfig::symmetric(4, 5.0, -30.0, 5.0), Axis::GammaDb, &[5.0, 10.0, 15.0, 20.0], opt(), 200),
        CampaignScheme::Optimal,
        false,
    );
    let lambda = means(
        &sweep(SystemConfig::symmetric(4, 20.0, -40.0, 5.0), Axis::LambdaDbm, &LAMBDAS, opt(), 200),
        CampaignScheme::Optimal,
        false,
    );
    let dec = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let inc = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    // flat through -30 dBm (within 5%), then rising above the flat level
    let flat = lambda[1] <= lambda[0] * 1.05;
    let rising = lambda[3] > lambda[1] * 1.05;
    (
        dec(&delta) && inc(&gamma) && inc(&lambda) && flat && rising,
        format!(
            "K=4, 200/point; delta {{2,5,10,20}}: [{}]; gamma {{5..20}}: [{}]; lambda {{-40..-10}}: [{}]; flat to -30 dBm {flat}, rising after {rising}",
            fmt_series(&delta),
            fmt_series(&gamma),
            fmt_series(&lambda)
        ),
    )
}

fn interference_exploitation() -> (bool, String) {
    let res = sweep(
        SystemConfig::symmetric(8, 0.0, -20.0, 5.0),
        Axis::GammaDb,
        &[0.0, 5.0, 10.0, 15.0, 20.0],
        vec![CampaignScheme::Zf, CampaignScheme::Optimal],
        100,
    );
    let r = means(&res, CampaignScheme::Zf, true);
    let dec = r.windows(2).all(|w| w[1] < w[0]);
    (
        dec && r[0] > 5.0,
        format!("K=8, -20 dBm, 100/point: ZF/Opt over gamma {{0,5,10,15,20}} = [{}]; decreasing {dec}; > 5 at 0 dB {}", fmt_series(&r), r[0] > 5.0),
    )
}

fn timing() -> (bool, String) {
    let template = SystemConfig::symmetric(2, 10.0, -30.0, 5.0);
    let rows = bench_timing(&[4, 8, 12], &template, 20, SEED).expect("bench");
    let t = |k: usize, s: CampaignScheme| rows.iter().find(|r| r.k == k && r.scheme == s).unwrap().mean_time_s;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [4, 8, 12] {
        let (z, m, o) = (t(k, CampaignScheme::Zf), t(k, CampaignScheme::MrtZf), t(k, CampaignScheme::Optimal));
        ok &= z < m && m < o;
        parts.push(format!("K={k}: {z:.2e} < {m:.2e} < {o:.2e}"));
    }
    let ratio = t(12, CampaignScheme::Optimal) / t(12, CampaignScheme::MrtZf);
    ok &= ratio >= 10.0;
    (ok, format!("mean seconds ZF < MRT-ZF < SDP: {}; SDP/MRT-ZF at K=12 = {ratio:.1} (>= 10)", parts.join("; ")))
}

fn solver_suite() -> (bool, String) {
    let opts = SolverOptions::default();
    let mut problems = Vec::new();
    let corpus = analytic_corpus();
    for (name, p, want) in &corpus {
        let sol = solve_conic(p, &opts).expect("valid");
        let err = (sol.primal_objective - want).abs();
        if let Err(e) = check_optimal_exit(p, &sol, &opts) {
            problems.push(format!("{name}: {e}"));
        } else if err > 1e-7 * want.abs().max(1.0) {
            problems.push(format!("{name}: error {err:e}"));
        }
    }
    let infeasible = infeasible_corpus();
    for (name, p) in &infeasible {
        let sol = solve_conic(p, &opts).expect("valid");
        if let Err(e) = check_infeasibility_certificate(p, &sol) {
            problems.push(format!("{name}: {e}"));
        }
    }
    (
        problems.is_empty(),
        format!(
            "{} analytic problems to 1e-7 with exit invariants, {} infeasibility certificates; issues: [{}]",
            corpus.len(),
            infeasible.len(),
            problems.join("; ")
        ),
    )
}

fn scaling_covariance() -> (bool, String) {
    let base = SystemConfig::symmetric(3, 10.0, -30.0, 5.0);
    let (mut mismatched, mut compared, mut ok) = (0, 0, true);
    let mut parts = Vec::new();
    for scheme in CampaignScheme::ALL {
        let (mut worst_p, mut worst_rho) = (0.0f64, 0.0f64);
        for c in [0.1, 10.0] {
            let mut scaled = base.clone();
            scaled.sigma2 *= c;
            scaled.sigma_c2 *= c;
            scaled.lambda.iter_mut().for_each(|l| *l *= c);
            for n in 0..20u64 {
                let ch = generate_channels(&base, SEED + n);
                let a = solve_scheme(&base, &ch, scheme).expect("base").outcome;
                let b = solve_scheme(&scaled, &ch, scheme).expect("scaled").outcome;
                if a.status != b.status || a.feasible != b.feasible {
                    mismatched += 1;
                    continue;
                }
                if !a.feasible {
                    continue;
                }
                compared += 1;
                for i in 0..base.k {
                    worst_p = worst_p.max((b.p[i] - c * a.p[i]).abs() / (c * a.p[i]));
                    worst_rho = worst_rho.max((b.rho[i] - a.rho[i]).abs());
                }
            }
        }
        ok &= worst_p <= 1e-6 && worst_rho <= 1e-8;
        parts.push(format!("{} P {worst_p:.1e} rho {worst_rho:.1e}", scheme.name()));
    }
    (
        ok && mismatched == 0,
        format!(
            "c in {{0.1, 10}}, 20 instances: {compared} feasible pairs, {mismatched} status mismatches; max rel P error / rho change (<= 1e-6 / 1e-8): {}",
            parts.join(", ")
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut report = Report { failed: 0, total: 0 };
    println!("acceptance report");

    report.check("closed-form ZF matches brute-force oracle", closed_form_vs_oracle);
    report.check("ZF closed form always feasible", zf_always_feasible);
    report.check("fixed-weight SOCP matches oracle (K=2, MRT)", socp_vs_oracle);

    let table_runs: Vec<CampaignResult> = [2, 4, 8]
        .iter()
        .flat_map(|&k| GAMMAS.iter().map(move |&g| table(k, g, 5.0, 100)))
        .collect();

    report.check("SDP value lower-bounds every feasible scheme", || lower_bound(&table_runs));
    report.check("relaxation returns rank-one solutions", || rank_one(&table_runs));
    report.check("table statistics", || table_statistics(&table_runs));
    report.check("monotone parameter sweeps", monotonicity);
    report.check("interference exploitation trend", interference_exploitation);
    report.check("timing ordering", timing);
    report.check("conic solver suite", solver_suite);
    report.check("scaling covariance", scaling_covariance);

    for g in GAMMAS {
        let res = table(2, g, 20.0, 100);
        let mrt = row(&res, -30.0, CampaignScheme::Mrt).infeasible_count;
        let lp = row(&res, -30.0, CampaignScheme::LpRhoHalf).infeasible_count;
        let ratio = |s| row(&res, -30.0, s).mean_ratio_to_optimal.unwrap_or(f64::NAN);
        info(
            &format!("K=2, {g} dB, -30 dBm at delta=20"),
            format!(
                "MRT infeasible {mrt}%, LP_rho {lp}%, ratios to optimal: MRT {:.4}, LP_rho {:.4}, ZF {:.4}, RZF {:.4}, MRT-ZF {:.4}",
                ratio(CampaignScheme::Mrt),
                ratio(CampaignScheme::LpRhoHalf),
                ratio(CampaignScheme::Zf),
                ratio(CampaignScheme::Rzf),
                ratio(CampaignScheme::MrtZf)
            ),
        );
    }

    println!(
        "{} of {} criteria passed in {:.0}s",
        report.total - report.failed,
        report.total,
        start.elapsed().as_secs_f64()
    );
    if report.failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
