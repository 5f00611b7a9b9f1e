use conic::corpus::{
    analytic_corpus, ball_problem, check_infeasibility_certificate, check_optimal_exit, infeasible_corpus,
    min_eig_problem, mixed_problem, planted_lp,
};
use conic::svec::{smat, svec_index, svec_len, trace_form};
use conic::{solve_conic, Cone, ConicProblem, ConicSolution, ProblemBuilder, SolveStatus, SolverOptions};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn solve(p: &ConicProblem) -> ConicSolution {
    solve_conic(p, &SolverOptions::default()).expect("valid problem")
}

fn assert_close(got: f64, want: f64, tol: f64) {
    let err = (got - want).abs();
    assert!(
        err <= tol * want.abs().max(1.0),
        "got {got}, want {want} (err {err:e})"
    );
}

fn check_optimal(p: &ConicProblem, sol: &ConicSolution) {
    if let Err(e) = check_optimal_exit(p, sol, &SolverOptions::default()) {
        panic!("{e}: {sol:?}");
    }
}

#[test]
fn fixed_point_lp() {
    let mut b = ProblemBuilder::new();
    let x = b.scalar();
    b.set_cost(x, 1.0);
    b.equality(&[(x, 1.0)], 1.0);
    let p = b.build();
    let sol = solve(&p);
    check_optimal(&p, &sol);
    assert_close(sol.primal_objective, 1.0, 1e-7);
}

#[test]
fn norm_squared_epigraph() {
    // 2 t (1/2) >= 3^2 + 4^2
    let mut b = ProblemBuilder::new();
    let c = b.rotated_soc(4);
    b.set_cost(c.start, 1.0);
    b.equality(&[(c.start + 1, 1.0)], 0.5);
    b.equality(&[(c.start + 2, 1.0)], 3.0);
    b.equality(&[(c.start + 3, 1.0)], 4.0);
    let p = b.build();
    let sol = solve(&p);
    check_optimal(&p, &sol);
    assert_close(sol.primal_objective, 25.0, 1e-7);
    assert_close(sol.x[c.start], 25.0, 1e-7);
}

#[test]
fn psd_trace_with_pinned_corner() {
    let mut b = ProblemBuilder::new();
    let w = b.psd(2);
    for (k, c) in trace_form(&DMatrix::identity(2, 2)).into_iter().enumerate() {
        b.set_cost(w.start + k, c);
    }
    b.equality(&[(w.start + svec_index(2, 0, 0), 1.0)], 2.0);
    let p = b.build();
    let sol = solve(&p);
    check_optimal(&p, &sol);
    assert_close(sol.primal_objective, 2.0, 1e-7);
    let wm = smat(&sol.x[w], 2);
    assert!((wm[(0, 0)] - 2.0).abs() < 1e-7 && wm[(1, 1)].abs() < 1e-7 && wm[(0, 1)].abs() < 1e-6);
}

#[test]
fn analytic_corpus_solves() {
    for (name, p, want) in analytic_corpus() {
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal, "{name}: {:?}", sol.status);
        check_optimal(&p, &sol);
        let err = (sol.primal_objective - want).abs();
        assert!(err <= 1e-7 * want.abs().max(1.0), "{name}: got {}, want {want}", sol.primal_objective);
    }
}

#[test]
fn infeasible_corpus_certified() {
    for (name, p) in infeasible_corpus() {
        let sol = solve(&p);
        if let Err(e) = check_infeasibility_certificate(&p, &sol) {
            panic!("{name}: {e}");
        }
    }
}

#[test]
fn unbounded_is_dual_infeasible() {
    // min -x1 s.t. x1 - x2 = 0
    let mut b = ProblemBuilder::new();
    let x = b.nonneg(2);
    b.set_cost(x.start, -1.0);
    b.equality(&[(x.start, 1.0), (x.start + 1, -1.0)], 0.0);
    let sol = solve(&b.build());
    assert_eq!(sol.status, SolveStatus::DualInfeasible);
    let ray = sol.certificate.unwrap();
    assert!((ray[0] - ray[1]).abs() < 1e-8 && ray[0] > 0.0);
}

#[test]
fn weak_duality_along_path() {
    for seed in 0..10 {
        for (p, _) in [planted_lp(seed, 8, 3), ball_problem(seed, 3), min_eig_problem(seed, 4)] {
            let sol = solve(&p);
            for it in &sol.history {
                // only near-feasible iterates give a meaningful bound
                if it.primal_residual < 1e-9 && it.dual_residual < 1e-9 {
                    let scale = it.primal_objective.abs().max(1.0);
                    assert!(it.primal_objective >= it.dual_objective - 1e-10 * scale * 100.0);
                }
            }
            let last = sol.history.last().unwrap();
            assert!(last.primal_objective >= last.dual_objective - 1e-10 * last.primal_objective.abs().max(1.0) * 100.0);
        }
    }
}

#[test]
fn deterministic() {
    let (p, _) = mixed_problem();
    assert_eq!(solve(&p), solve(&p));
}

#[test]
fn dump_round_trip() {
    let (p, _) = mixed_problem();
    let text = p.to_text();
    let back = ConicProblem::from_text(&text).unwrap();
    assert_eq!(back, p);
    assert!(ConicProblem::from_text("conic 1 1\ncones 1\nbogus 1\n").is_err());
}

#[test]
fn validation_errors() {
    let p = ConicProblem {
        objective: vec![1.0, 1.0],
        a: vec![],
        b: vec![],
        cones: vec![Cone::NonNeg(1)],
    };
    assert!(solve_conic(&p, &SolverOptions::default()).is_err());
    assert_eq!(svec_len(3), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn row_scaling_invariance(seed in 0u64..1000, f0 in -2.0f64..2.0, f1 in -2.0f64..2.0) {
        let (p, want) = planted_lp(seed, 7, 3);
        let mut q = p.clone();
        let fs = [10f64.powf(f0), 10f64.powf(f1), 1.0];
        for t in q.a.iter_mut() {
            t.2 *= fs[t.0];
        }
        for (bi, f) in q.b.iter_mut().zip(fs) {
            *bi *= f;
        }
        let a = solve(&p);
        let b = solve(&q);
        prop_assert_eq!(b.status, SolveStatus::Optimal);
        prop_assert!((a.primal_objective - b.primal_objective).abs() <= 1e-7 * want.abs().max(1.0));
    }

    #[test]
    fn ball_optimum(seed in 0u64..10_000, d in 1usize..8) {
        let (p, want) = ball_problem(seed, d);
        let sol = solve(&p);
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        prop_assert!((sol.primal_objective - want).abs() <= 1e-7 * want.abs().max(1.0));
    }
}
