use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use swipt_beam::campaign::{
    bench_timing, figure_rows, run_campaign, solve_scheme, table1_rows, table1_spec, write_csv, write_csv_with_header,
    CampaignResult, CampaignScheme, CampaignSpec, Figure, FigureRow, Preset, FIGURE_HEADER,
};
use swipt_beam::model::load_config;
use swipt_beam::{generate_channels, SystemConfig};

#[derive(Parser, Debug)]
#[command(name = "swipt-beam", version, about = "Beamforming and power-splitting experiments for SWIPT interference channels")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Infeasibility and optimality-ratio table over K, gamma and lambda.
    Table1(Table1Args),
    /// Curves of one figure (3, 4, 5 or 7).
    Fig(FigArgs),
    /// Wall time of ZF, MRT-ZF and the SDP pipeline versus K.
    Bench(BenchArgs),
    /// Solve one instance and print (P, rho, w) as JSON.
    Solve(SolveArgs),
}

#[derive(Args, Debug)]
struct CampaignArgs {
    /// Instances per configuration.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Direct-to-cross channel variance ratio.
    #[arg(long, default_value_t = 5.0)]
    delta: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[arg(long = "K", value_delimiter = ',', default_value = "2,4,8")]
    k: Vec<usize>,
    #[arg(long = "gamma-db", value_delimiter = ',', allow_hyphen_values = true, default_value = "10,20")]
    gamma_db: Vec<f64>,
    #[arg(long = "lambda-dbm", value_delimiter = ',', allow_hyphen_values = true, default_value = "-40,-30,-20,-10")]
    lambda_dbm: Vec<f64>,
    #[command(flatten)]
    run: CampaignArgs,
}

#[derive(Args, Debug)]
struct FigArgs {
    #[arg(long, value_parser = ["3", "4", "5", "7"])]
    which: String,
    #[command(flatten)]
    run: CampaignArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// User counts: a list `2,4,8` or an inclusive range `2..24`, optionally
    /// with a step `2..24:2`.
    #[arg(long = "K", default_value = "2..24:2")]
    k: String,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "gamma-db", default_value_t = 10.0, allow_hyphen_values = true)]
    gamma_db: f64,
    #[arg(long = "lambda-dbm", default_value_t = -30.0, allow_hyphen_values = true)]
    lambda_dbm: f64,
    #[arg(long, default_value_t = 5.0)]
    delta: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// zf, mrt, rzf, mrt_zf, optimal or lp_rho_half.
    #[arg(long, default_value = "optimal")]
    scheme: CampaignScheme,
}

fn parse_ks(s: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, step.trim().parse::<usize>()?),
            None => (rest, 1),
        };
        let (lo, hi): (usize, usize) = (lo.trim().parse()?, hi.trim_start_matches('=').trim().parse()?);
        if step == 0 || lo > hi {
            bail!("bad range {s:?}");
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',').map(|v| v.trim().parse::<usize>()).collect::<Result<_, _>>()?
    };
    if ks.iter().any(|&k| k < 1) {
        bail!("K must be at least 1");
    }
    Ok(ks)
}

fn run(spec: &CampaignSpec, threads: usize) -> Result<CampaignResult> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        return Ok(swipt_beam::campaign::run_campaign_with_threads(spec, threads)?);
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(run_campaign(spec)?)
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out.join("records")).with_context(|| format!("creating {}", out.display()))
}

fn table1(a: Table1Args) -> Result<()> {
    prepare(&a.run.out)?;
    let preset = Preset {
        instances: a.run.n,
        base_seed: a.run.seed,
        delta: a.run.delta,
    };
    let mut rows = Vec::new();
    for &k in &a.k {
        for &g in &a.gamma_db {
            let spec = table1_spec(k, g, &a.lambda_dbm, &preset);
            let res = run(&spec, a.run.threads)?;
            write_csv(&a.run.out.join(format!("records/table1_K{k}_gamma{g}.csv")), &res.records)?;
            eprintln!("K={k} gamma={g} dB: {} records", res.records.len());
            rows.extend(table1_rows(&res));
        }
    }
    let path = a.run.out.join("table1.csv");
    write_csv(&path, &rows)?;
    println!("{}", path.display());
    Ok(())
}

fn fig(a: FigArgs) -> Result<()> {
    prepare(&a.run.out)?;
    let fig = Figure::from_number(a.which.parse()?)?;
    let preset = Preset {
        instances: a.run.n,
        base_seed: a.run.seed,
        delta: a.run.delta,
    };
    let n = fig.number();
    let mut rows: Vec<FigureRow> = Vec::new();
    for (series, spec) in fig.specs(&preset) {
        let res = run(&spec, a.run.threads)?;
        let tag: String = series.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '-').collect();
        write_csv(&a.run.out.join(format!("records/fig{n}_{tag}.csv")), &res.records)?;
        rows.extend(figure_rows(fig, &series, &res));
    }
    let path = a.run.out.join(format!("fig{n}.csv"));
    write_csv_with_header(&path, &FIGURE_HEADER, &rows)?;
    println!("{}", path.display());
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    fs::create_dir_all(&a.out)?;
    let ks = parse_ks(&a.k)?;
    let template = SystemConfig::symmetric(ks[0], a.gamma_db, a.lambda_dbm, a.delta);
    let timing = bench_timing(&ks, &template, a.n, a.seed)?;
    for t in &timing {
        eprintln!("K={:>2} {:<8} {:.3e} s", t.k, t.scheme.name(), t.mean_time_s);
    }
    write_csv(&a.out.join("timing.csv"), &timing)?;
    let rows: Vec<FigureRow> = timing.iter().map(|t| t.as_figure_row()).collect();
    let path = a.out.join("fig8.csv");
    write_csv_with_header(&path, &FIGURE_HEADER, &rows)?;
    println!("{}", path.display());
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let (cfg, seed) = load_config(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let ch = generate_channels(&cfg, seed);
    let s = solve_scheme(&cfg, &ch, a.scheme)?;
    let w = s.weights.as_ref().map(|w| {
        w.w.iter()
            .map(|v| v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    });
    let o = &s.outcome;
    let doc = json!({
        "scheme": a.scheme,
        "seed": seed,
        "status": o.status,
        "feasible": o.feasible,
        "total_power_mW": o.total_power,
        "P_mW": o.p,
        "rho": o.rho,
        "w": w,
        "bound_mW": s.bound_mw,
        "rank_one": s.rank_one,
        "fallback": s.fallback,
        "residuals": o.residuals,
        "wall_time_s": o.wall_time,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Table1(a) => table1(a),
        Cmd::Fig(a) => fig(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Solve(a) => solve(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_ranges() {
        assert_eq!(parse_ks("2..6").unwrap(), vec![2, 3, 4, 5, 6]);
        assert_eq!(parse_ks("2..=6:2").unwrap(), vec![2, 4, 6]);
        assert_eq!(parse_ks("2,4, 8").unwrap(), vec![2, 4, 8]);
        assert!(parse_ks("6..2").is_err());
        assert!(parse_ks("0,2").is_err());
        assert!(parse_ks("x").is_err());
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
