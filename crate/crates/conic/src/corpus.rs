//! Reference problems with known optima or known infeasibility, and checks
//! of the invariants every solver exit must satisfy.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::svec::{smat, svec_index, trace_form};
use crate::{Cone, ConicProblem, ConicSolution, ProblemBuilder, SolveStatus, SolverOptions};

/// LP with a planted primal-dual pair satisfying strict complementarity.
pub fn planted_lp(seed: u64, n: usize, m: usize) -> (ConicProblem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut s = vec![0.0; n];
    for j in 0..n {
        if j < m || rng.gen_bool(0.3) {
            x[j] = rng.gen_range(0.5..2.0);
        } else {
            s[j] = rng.gen_range(0.5..2.0);
        }
    }
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut b = ProblemBuilder::new();
    let v = b.nonneg(n);
    for j in 0..n {
        let c: f64 = (0..m).map(|i| a[i][j] * y[i]).sum::<f64>() + s[j];
        b.set_cost(v.start + j, c);
    }
    for row in &a {
        let rhs: f64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
        let coeffs: Vec<(usize, f64)> = row.iter().enumerate().map(|(j, &c)| (v.start + j, c)).collect();
        b.equality(&coeffs, rhs);
    }
    let p = b.build();
    let opt = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    (p, opt)
}

/// min c.z over the ball |z| <= r, written as 2 (r^2/2) (1) >= |z|^2.
pub fn ball_problem(seed: u64, d: usize) -> (ConicProblem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: f64 = rng.gen_range(0.1..10.0);
    let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let mut b = ProblemBuilder::new();
    let k = b.rotated_soc(d + 2);
    b.equality(&[(k.start, 1.0)], r * r / 2.0);
    b.equality(&[(k.start + 1, 1.0)], 1.0);
    for (i, ci) in c.iter().enumerate() {
        b.set_cost(k.start + 2 + i, *ci);
    }
    let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    (b.build(), -r * cn)
}

/// min tr(C X) s.t. tr X = 1, X psd  ->  smallest eigenvalue of C.
pub fn min_eig_problem(seed: u64, side: usize) -> (ConicProblem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(side, side, |_, _| rng.gen_range(-1.0..1.0));
    let c = &g + g.transpose();
    let mut b = ProblemBuilder::new();
    let x = b.psd(side);
    for (k, v) in trace_form(&c).into_iter().enumerate() {
        b.set_cost(x.start + k, v);
    }
    let coeffs: Vec<(usize, f64)> = trace_form(&DMatrix::identity(side, side))
        .into_iter()
        .enumerate()
        .map(|(k, v)| (x.start + k, v))
        .collect();
    b.equality(&coeffs, 1.0);
    let lmin = SymmetricEigen::new(c).eigenvalues.min();
    (b.build(), lmin)
}

/// All three cone kinds coupled: min u + x with x >= 0, x + z = 3,
/// 2 u (1) >= z^2, and a psd block pinning diag(x, 1). The optimum is at
/// z = 1: 1/2 + 2.
pub fn mixed_problem() -> (ConicProblem, f64) {
    let mut b = ProblemBuilder::new();
    let x = b.scalar();
    let k = b.rotated_soc(3);
    let w = b.psd(2);
    b.set_cost(x, 1.0);
    b.set_cost(k.start, 1.0);
    b.equality(&[(x, 1.0), (k.start + 2, 1.0)], 3.0);
    b.equality(&[(k.start + 1, 1.0)], 1.0);
    b.equality(&[(w.start + svec_index(2, 0, 0), 1.0), (x, -1.0)], 0.0);
    b.equality(&[(w.start + svec_index(2, 1, 1), 1.0)], 1.0);
    b.equality(&[(w.start + svec_index(2, 1, 0), 1.0)], 0.0);
    (b.build(), 2.5)
}

/// Named problems with their optimal values.
pub fn analytic_corpus() -> Vec<(String, ConicProblem, f64)> {
    let mut corpus = Vec::new();
    for seed in 0..20u64 {
        let i = seed as usize;
        let (p, o) = planted_lp(seed, 6 + i % 10, 2 + i % 4);
        corpus.push((format!("lp{seed}"), p, o));
        let (p, o) = ball_problem(seed, 1 + i % 6);
        corpus.push((format!("ball{seed}"), p, o));
        let (p, o) = min_eig_problem(seed, 1 + i % 7);
        corpus.push((format!("eig{seed}"), p, o));
    }
    let (p, o) = mixed_problem();
    corpus.push(("mixed".into(), p, o));
    corpus
}

/// Named primal-infeasible problems.
pub fn infeasible_corpus() -> Vec<(String, ConicProblem)> {
    let mut out = Vec::new();

    let mut b = ProblemBuilder::new();
    let x = b.scalar();
    b.set_cost(x, 1.0);
    b.equality(&[(x, 1.0)], -1.0);
    out.push(("negative_fixed_point".to_string(), b.build()));

    // u = -1 is outside any rotated cone
    let mut b = ProblemBuilder::new();
    let k = b.rotated_soc(3);
    b.set_cost(k.start + 1, 1.0);
    b.equality(&[(k.start, 1.0)], -1.0);
    b.equality(&[(k.start + 2, 1.0)], 1.0);
    out.push(("rotated_cone".to_string(), b.build()));

    // 2 u v >= 1 with u, v <= 0.4
    let mut b = ProblemBuilder::new();
    let k = b.rotated_soc(3);
    let sl = b.nonneg(2);
    b.set_cost(k.start, 1.0);
    b.equality(&[(k.start + 2, 1.0)], 1.0);
    b.equality(&[(k.start, 1.0), (sl.start, 1.0)], 0.4);
    b.equality(&[(k.start + 1, 1.0), (sl.start + 1, 1.0)], 0.4);
    out.push(("hyperbolic_pair".to_string(), b.build()));

    // trace X = -1
    let mut b = ProblemBuilder::new();
    let w = b.psd(3);
    let coeffs: Vec<(usize, f64)> = trace_form(&DMatrix::identity(3, 3))
        .into_iter()
        .enumerate()
        .map(|(k, v)| (w.start + k, v))
        .collect();
    b.equality(&coeffs, -1.0);
    out.push(("psd_trace".to_string(), b.build()));

    // x1 + x2 = 1 and x1 + x2 = 2
    let mut b = ProblemBuilder::new();
    let x = b.nonneg(2);
    b.set_cost(x.start, 1.0);
    b.equality(&[(x.start, 1.0), (x.start + 1, 1.0)], 1.0);
    b.equality(&[(x.start, 1.0), (x.start + 1, 1.0)], 2.0);
    out.push(("lp_system".to_string(), b.build()));

    out
}

fn in_cone(cone: &Cone, x: &[f64], tol: f64) -> bool {
    match *cone {
        Cone::NonNeg(_) => x.iter().all(|&v| v >= -tol),
        Cone::RotatedSoc(_) => {
            let zz: f64 = x[2..].iter().map(|v| v * v).sum();
            x[0] >= -tol && x[1] >= -tol && 2.0 * x[0] * x[1] - zz >= -tol
        }
        Cone::Psd(side) => SymmetricEigen::new(smat(x, side)).eigenvalues.min() >= -tol,
    }
}

/// Invariants of an `Optimal` exit: small residuals, weak duality,
/// block-wise complementarity, and cone membership of `x` and `s`.
pub fn check_optimal_exit(p: &ConicProblem, sol: &ConicSolution, opts: &SolverOptions) -> Result<(), String> {
    if sol.status != SolveStatus::Optimal {
        return Err(format!("status {:?}", sol.status));
    }
    let bn = p.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if sol.primal_residual > opts.feas_tol * (1.0 + bn) {
        return Err(format!("primal residual {:e}", sol.primal_residual));
    }
    let scale = sol.primal_objective.abs().max(1.0);
    if sol.primal_objective < sol.dual_objective - 1e-7 * scale {
        return Err(format!("weak duality: {} < {}", sol.primal_objective, sol.dual_objective));
    }
    for (cone, r) in p.cones.iter().zip(p.block_ranges()) {
        let ip: f64 = sol.x[r.clone()].iter().zip(&sol.s[r.clone()]).map(|(a, b)| a * b).sum();
        if ip > opts.gap_tol * scale {
            return Err(format!("block complementarity {ip:e}"));
        }
        let tol = opts.feas_tol * 10.0 * sol.x[r.clone()].iter().fold(1.0f64, |a, v| a.max(v.abs())) * scale;
        if !in_cone(cone, &sol.x[r.clone()], tol) || !in_cone(cone, &sol.s[r], tol) {
            return Err("iterate outside its cone".into());
        }
    }
    Ok(())
}

/// A `PrimalInfeasible` exit must carry `y` with `b.y = 1` and `-A^T y` in
/// the (self-dual) cone.
pub fn check_infeasibility_certificate(p: &ConicProblem, sol: &ConicSolution) -> Result<(), String> {
    if sol.status != SolveStatus::PrimalInfeasible {
        return Err(format!("status {:?}", sol.status));
    }
    let y = sol.certificate.as_ref().ok_or("no certificate")?;
    let by: f64 = p.b.iter().zip(y).map(|(a, b)| a * b).sum();
    if (by - 1.0).abs() > 1e-9 {
        return Err(format!("b.y = {by}"));
    }
    let mut aty = vec![0.0; p.n_vars()];
    for &(i, j, v) in &p.a {
        aty[j] -= v * y[i];
    }
    for (cone, r) in p.cones.iter().zip(p.block_ranges()) {
        if !in_cone(cone, &aty[r], 1e-7) {
            return Err("-A^T y outside the dual cone".into());
        }
    }
    Ok(())
}
