//! Homogeneous self-dual interior-point method.
//!
//! The embedding
//!
//! ```text
//!  A x - b tau            = 0
//! -A^T y - s + c tau      = 0
//!  b^T y - c^T x - kappa  = 0,    x, s in K,  tau, kappa >= 0
//! ```
//!
//! is followed with Nesterov-Todd scaled Newton steps and a Mehrotra
//! predictor-corrector. Each step reduces to the normal equations
//! `A H A^T dy = r` with `H = P^T P`, factored once per iteration by a dense
//! Cholesky decomposition. A vanishing `tau` with growing `kappa` yields a
//! Farkas certificate.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::ConicError;
use crate::kernel::{dot, jordan, unit, Block, BlockScaling, Kind};
use crate::problem::{Cone, ConicProblem};

/// Tolerance loosening accepted for [`SolveStatus::AlmostOptimal`].
pub const ALMOST_FACTOR: f64 = 100.0;

const REFINE_PASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Duality gap tolerance, applied to `max(1, |objective|)`.
    pub gap_tol: f64,
    /// Residual tolerance, applied to `1 + |b|_inf` (primal) and
    /// `1 + |c|_inf` (dual).
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Static regularization added to the normal-equation diagonal.
    pub regularization: f64,
    /// Fraction of the distance to the boundary taken per step.
    pub step_fraction: f64,
    /// Run row/block equilibration before iterating.
    pub equilibrate: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            regularization: 1e-10,
            step_fraction: 0.99,
            equilibrate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// The solver stalled after reaching a point that meets the tolerances
    /// loosened by [`ALMOST_FACTOR`]; that point is returned.
    AlmostOptimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

/// Progress of one iteration, measured on the unscaled problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationInfo {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal point (divided by `tau`); for `DualInfeasible` the
    /// normalized improving ray with `c . x = -1`.
    pub x: Vec<f64>,
    /// Equality multipliers; for `PrimalInfeasible` the Farkas vector with
    /// `b . y = 1`.
    pub y: Vec<f64>,
    /// Cone duals `s = c - A^T y`.
    pub s: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Complementarity `x . s`.
    pub gap: f64,
    /// `|A x - b|_inf`
    pub primal_residual: f64,
    /// `|A^T y + s - c|_inf`
    pub dual_residual: f64,
    pub iterations: usize,
    /// Farkas certificate (`y` for primal, `x` for dual infeasibility).
    pub certificate: Option<Vec<f64>>,
    pub history: Vec<IterationInfo>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Optimal, possibly at reduced accuracy.
    pub fn is_solved(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::AlmostOptimal)
    }
}

/// Solves a cone program. Structural problems are reported as errors;
/// numerical trouble is reported through the status.
pub fn solve_conic(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution, ConicError> {
    problem.validate()?;
    let data = ScaledData::new(problem, opts.equilibrate);
    Ok(Ipm::new(&data, opts).run())
}

/// Problem data after rotating RSOC blocks into Lorentz coordinates and
/// equilibrating. `x_orig = T D x_scaled * bscale`, `y_orig = R y_scaled *
/// cscale`, `s_orig = T D^{-1} s_scaled * cscale`.
struct ScaledData {
    blocks: Vec<Block>,
    rsoc: Vec<bool>,
    rows: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    bscale: f64,
    cscale: f64,
    /// Rows touching each block.
    block_rows: Vec<Vec<usize>>,
    orig_rows: Vec<Vec<f64>>,
    orig_b: Vec<f64>,
    orig_c: Vec<f64>,
}

impl ScaledData {
    fn new(problem: &ConicProblem, equilibrate: bool) -> Self {
        let n = problem.n_vars();
        let m = problem.n_eqs();
        let mut blocks = Vec::with_capacity(problem.cones.len());
        let mut rsoc = Vec::with_capacity(problem.cones.len());
        let mut start = 0;
        for cone in &problem.cones {
            let kind = match cone {
                Cone::NonNeg(_) => Kind::NonNeg,
                Cone::RotatedSoc(_) => Kind::Soc,
                Cone::Psd(side) => Kind::Psd(*side),
            };
            blocks.push(Block {
                kind,
                start,
                len: cone.dim(),
            });
            rsoc.push(matches!(cone, Cone::RotatedSoc(_)));
            start += cone.dim();
        }

        let orig_rows = problem.dense_a();
        let mut rows = orig_rows.clone();
        let mut c = problem.objective.clone();
        for (blk, &rot) in blocks.iter().zip(&rsoc) {
            if rot {
                for row in rows.iter_mut() {
                    rotate_pair(row, blk.start);
                }
                rotate_pair(&mut c, blk.start);
            }
        }
        let mut b = problem.b.clone();

        let mut row_scale = vec![1.0; m];
        let mut col_scale = vec![1.0; n];
        if equilibrate && m > 0 {
            for _ in 0..12 {
                for (i, row) in rows.iter_mut().enumerate() {
                    let nrm = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    if nrm > 0.0 {
                        let f = (1.0 / nrm.sqrt()).clamp(1e-4, 1e4);
                        row.iter_mut().for_each(|v| *v *= f);
                        row_scale[i] *= f;
                    }
                }
                for blk in &blocks {
                    let groups: Vec<std::ops::Range<usize>> = match blk.kind {
                        Kind::NonNeg => blk.range().map(|j| j..j + 1).collect(),
                        _ => vec![blk.range()],
                    };
                    for g in groups {
                        let mut nrm = 0.0f64;
                        for row in rows.iter() {
                            for v in &row[g.clone()] {
                                nrm = nrm.max(v.abs());
                            }
                        }
                        if nrm > 0.0 {
                            let f = (1.0 / nrm.sqrt()).clamp(1e-4, 1e4);
                            for row in rows.iter_mut() {
                                row[g.clone()].iter_mut().for_each(|v| *v *= f);
                            }
                            for j in g {
                                col_scale[j] *= f;
                            }
                        }
                    }
                }
            }
        }
        for i in 0..m {
            b[i] *= row_scale[i];
        }
        for j in 0..n {
            c[j] *= col_scale[j];
        }
        let bscale = b.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-8);
        let cscale = c.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-8);
        b.iter_mut().for_each(|v| *v /= bscale);
        c.iter_mut().for_each(|v| *v /= cscale);

        let mut block_rows = vec![Vec::new(); blocks.len()];
        for (i, row) in rows.iter().enumerate() {
            for (k, blk) in blocks.iter().enumerate() {
                if row[blk.range()].iter().any(|v| *v != 0.0) {
                    block_rows[k].push(i);
                }
            }
        }

        Self {
            blocks,
            rsoc,
            rows,
            b,
            c,
            row_scale,
            col_scale,
            bscale,
            cscale,
            block_rows,
            orig_rows,
            orig_b: problem.b.clone(),
            orig_c: problem.objective.clone(),
        }
    }

    fn n(&self) -> usize {
        self.c.len()
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn mul_a(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = dot(row, x);
        }
    }

    fn mul_at(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (yi, row) in y.iter().zip(&self.rows) {
            if *yi != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += yi * a;
                }
            }
        }
    }

    /// Maps a scaled primal vector back to original coordinates.
    fn unscale_x(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = x
            .iter()
            .zip(&self.col_scale)
            .map(|(v, d)| v * d * self.bscale)
            .collect();
        self.unrotate(&mut out);
        out
    }

    fn unscale_s(&self, s: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = s
            .iter()
            .zip(&self.col_scale)
            .map(|(v, d)| v / d * self.cscale)
            .collect();
        self.unrotate(&mut out);
        out
    }

    fn unscale_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.row_scale)
            .map(|(v, d)| v * d * self.cscale)
            .collect()
    }

    fn unrotate(&self, v: &mut [f64]) {
        for (blk, &rot) in self.blocks.iter().zip(&self.rsoc) {
            if rot {
                rotate_pair(v, blk.start);
            }
        }
    }

    /// Absolute residuals `(|Ax - b|, |A^T y + s - c|)` and the same with
    /// each row divided by the magnitude of the terms it sums, which is what
    /// termination is judged on: a row with large coefficients cannot cancel
    /// below roundoff of its largest term.
    fn orig_residuals(&self, x: &[f64], y: &[f64], s: &[f64]) -> [f64; 4] {
        let (mut pres, mut prel) = (0.0f64, 0.0f64);
        for (row, bi) in self.orig_rows.iter().zip(&self.orig_b) {
            let mut v = -bi;
            let mut mag = 1.0 + bi.abs();
            for (a, xj) in row.iter().zip(x) {
                v += a * xj;
                mag += (a * xj).abs();
            }
            pres = pres.max(v.abs());
            prel = prel.max(v.abs() / mag);
        }
        let mut aty = s.to_vec();
        let mut mag: Vec<f64> = s.iter().zip(&self.orig_c).map(|(v, c)| 1.0 + v.abs() + c.abs()).collect();
        for (yi, row) in y.iter().zip(&self.orig_rows) {
            for ((o, m), a) in aty.iter_mut().zip(mag.iter_mut()).zip(row) {
                *o += yi * a;
                *m += (yi * a).abs();
            }
        }
        let (mut dres, mut drel) = (0.0f64, 0.0f64);
        for ((v, c), m) in aty.iter().zip(&self.orig_c).zip(&mag) {
            dres = dres.max((v - c).abs());
            drel = drel.max((v - c).abs() / m);
        }
        [pres, dres, prel, drel]
    }
}

/// `(u, v) -> ((u + v)/sqrt2, (u - v)/sqrt2)` on entries `at`, `at + 1`;
/// an involution.
fn rotate_pair(v: &mut [f64], at: usize) {
    let (a, b) = (v[at], v[at + 1]);
    v[at] = (a + b) * FRAC_1_SQRT_2;
    v[at + 1] = (a - b) * FRAC_1_SQRT_2;
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

/// Right-hand sides of the linearized embedding.
struct Targets {
    p: Vec<f64>,
    d: Vec<f64>,
    g: f64,
    c: Vec<f64>,
    tau: f64,
}

struct Ipm<'a> {
    d: &'a ScaledData,
    opts: &'a SolverOptions,
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
    nu: f64,
}

/// Factored normal equations for the current scaling.
struct Normal {
    chol: Cholesky<f64, Dyn>,
    m: DMatrix<f64>,
    dy2: Vec<f64>,
    dx2: Vec<f64>,
    denom_base: f64,
}

impl<'a> Ipm<'a> {
    fn new(d: &'a ScaledData, opts: &'a SolverOptions) -> Self {
        let n = d.n();
        let mut x = vec![0.0; n];
        for blk in &d.blocks {
            unit(blk.kind, &mut x[blk.range()]);
        }
        let s = x.clone();
        let nu = d.blocks.iter().map(Block::degree).sum::<usize>() as f64;
        Self {
            d,
            opts,
            x,
            y: vec![0.0; d.m()],
            s,
            tau: 1.0,
            kappa: 1.0,
            nu,
        }
    }

    fn scalings(&self) -> Option<Vec<BlockScaling>> {
        self.d
            .blocks
            .iter()
            .map(|blk| BlockScaling::new(blk.kind, &self.x[blk.range()], &self.s[blk.range()]))
            .collect()
    }

    fn apply_h(&self, sc: &[BlockScaling], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (blk, bs) in self.d.blocks.iter().zip(sc) {
            bs.apply_h(&u[blk.range()], &mut out[blk.range()]);
        }
        out
    }

    fn factor(&self, sc: &[BlockScaling]) -> Option<Normal> {
        let d = self.d;
        let m = d.m();
        let mut mat = DMatrix::<f64>::zeros(m, m);
        let mut tmp = Vec::new();
        for (k, blk) in d.blocks.iter().enumerate() {
            let rows = &d.block_rows[k];
            let hrows: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| {
                    tmp.resize(blk.len, 0.0);
                    sc[k].apply_h(&d.rows[i][blk.range()], &mut tmp);
                    tmp.clone()
                })
                .collect();
            for (p, &i) in rows.iter().enumerate() {
                for &j in rows.iter().take(p + 1) {
                    let v = dot(&hrows[p], &d.rows[j][blk.range()]);
                    mat[(i, j)] += v;
                    if i != j {
                        mat[(j, i)] += v;
                    }
                }
            }
        }
        // Regularize each pivot relative to itself: near the cone boundary
        // the diagonal spans many orders of magnitude, and a shift scaled by
        // the largest entry would swamp the small rows.
        let maxdiag = (0..m).map(|i| mat[(i, i)]).fold(0.0f64, f64::max).max(1.0);
        let mut reg = self.opts.regularization;
        let chol = loop {
            let mut reg_mat = mat.clone();
            for i in 0..m {
                reg_mat[(i, i)] += reg * mat[(i, i)].max(1e-8 * maxdiag).max(1e-14);
            }
            if let Some(ch) = reg_mat.cholesky() {
                break ch;
            }
            reg *= 100.0;
            if reg > 1e-4 {
                return None;
            }
        };

        let mut normal = Normal {
            chol,
            m: mat,
            dy2: Vec::new(),
            dx2: Vec::new(),
            denom_base: 0.0,
        };
        // M dy2 = A H c + b
        let hc = self.apply_h(sc, &d.c);
        let mut rhs = vec![0.0; m];
        d.mul_a(&hc, &mut rhs);
        for (r, bi) in rhs.iter_mut().zip(&d.b) {
            *r += bi;
        }
        let dy2 = normal.solve(&rhs);
        let mut at = vec![0.0; d.n()];
        d.mul_at(&dy2, &mut at);
        for (a, c) in at.iter_mut().zip(&d.c) {
            *a -= c;
        }
        let dx2 = self.apply_h(sc, &at);
        normal.denom_base = dot(&d.c, &dx2) - dot(&d.b, &dy2);
        normal.dy2 = dy2;
        normal.dx2 = dx2;
        Some(normal)
    }

    /// Solves the Newton system for complementarity right-hand side `rc`
    /// (scaled space), `rtau`, and residual weight `eta`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        sc: &[BlockScaling],
        nm: &Normal,
        rp: &[f64],
        rd: &[f64],
        rg: f64,
        rc: &[f64],
        rtau: f64,
        eta: f64,
    ) -> Direction {
        let d = self.d;
        let n = d.n();
        let mut dc = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for (blk, bs) in d.blocks.iter().zip(sc) {
            let r = blk.range();
            bs.lambda_div(&rc[r.clone()], &mut tmp[r.clone()]);
            bs.apply_p_inv(&tmp[r.clone()], &mut dc[r]);
        }
        let t = Targets {
            p: rp.iter().map(|v| eta * v).collect(),
            d: rd.iter().map(|v| eta * v).collect(),
            g: eta * rg,
            c: self.apply_h(sc, &dc),
            tau: rtau,
        };
        let mut dir = self.linear_solve(sc, nm, &t);
        // Refine against the unfactored operator; the normal equations lose
        // accuracy as iterates approach the cone boundary.
        for _ in 0..REFINE_PASSES {
            let e = self.newton_residual(sc, &dir, &t);
            let corr = self.linear_solve(sc, nm, &e);
            for (a, b) in dir.dx.iter_mut().zip(&corr.dx) {
                *a += b;
            }
            for (a, b) in dir.dy.iter_mut().zip(&corr.dy) {
                *a += b;
            }
            for (a, b) in dir.ds.iter_mut().zip(&corr.ds) {
                *a += b;
            }
            dir.dtau += corr.dtau;
            dir.dkappa += corr.dkappa;
        }
        dir
    }

    /// Solves
    ///
    /// ```text
    /// A dx - b dtau              = t.p
    /// A^T dy + ds - c dtau       = t.d
    /// c^T dx - b^T dy + dkappa   = t.g
    /// dx + H ds                  = t.c
    /// kappa dtau + tau dkappa    = t.tau
    /// ```
    fn linear_solve(&self, sc: &[BlockScaling], nm: &Normal, t: &Targets) -> Direction {
        let d = self.d;
        let n = d.n();
        let hd = self.apply_h(sc, &t.d);
        let u: Vec<f64> = t.c.iter().zip(&hd).map(|(a, b)| a - b).collect();
        let mut rhs = vec![0.0; d.m()];
        d.mul_a(&u, &mut rhs);
        for (r, p) in rhs.iter_mut().zip(&t.p) {
            *r = p - *r;
        }
        let dy1 = nm.solve(&rhs);
        let mut at = vec![0.0; n];
        d.mul_at(&dy1, &mut at);
        let mut dx1 = self.apply_h(sc, &at);
        for (a, v) in dx1.iter_mut().zip(&u) {
            *a += v;
        }

        let denom = nm.denom_base - self.kappa / self.tau;
        let dtau = (t.g - dot(&d.c, &dx1) + dot(&d.b, &dy1) - t.tau / self.tau) / denom;
        let dy: Vec<f64> = dy1.iter().zip(&nm.dy2).map(|(a, b)| a + dtau * b).collect();
        let dx: Vec<f64> = dx1.iter().zip(&nm.dx2).map(|(a, b)| a + dtau * b).collect();
        let mut ds = vec![0.0; n];
        d.mul_at(&dy, &mut ds);
        for ((o, r), c) in ds.iter_mut().zip(&t.d).zip(&d.c) {
            *o = r - *o + c * dtau;
        }
        let dkappa = (t.tau - self.kappa * dtau) / self.tau;
        Direction {
            dx,
            dy,
            ds,
            dtau,
            dkappa,
        }
    }

    /// Residual of [`Self::linear_solve`]'s system at `dir`.
    fn newton_residual(&self, sc: &[BlockScaling], dir: &Direction, t: &Targets) -> Targets {
        let d = self.d;
        let n = d.n();
        let mut ax = vec![0.0; d.m()];
        d.mul_a(&dir.dx, &mut ax);
        let p = (0..d.m())
            .map(|i| t.p[i] - (ax[i] - d.b[i] * dir.dtau))
            .collect();
        let mut aty = vec![0.0; n];
        d.mul_at(&dir.dy, &mut aty);
        let dres = (0..n)
            .map(|j| t.d[j] - (aty[j] + dir.ds[j] - d.c[j] * dir.dtau))
            .collect();
        let g = t.g - (dot(&d.c, &dir.dx) - dot(&d.b, &dir.dy) + dir.dkappa);
        let hds = self.apply_h(sc, &dir.ds);
        let c = (0..n).map(|j| t.c[j] - (dir.dx[j] + hds[j])).collect();
        let tau = t.tau - (self.kappa * dir.dtau + self.tau * dir.dkappa);
        Targets {
            p,
            d: dres,
            g,
            c,
            tau,
        }
    }

    /// Scaled primal and dual parts of a direction and the largest feasible
    /// step along it.
    fn step_length(&self, sc: &[BlockScaling], dir: &Direction) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.d.n();
        let mut qdx = vec![0.0; n];
        let mut pds = vec![0.0; n];
        let mut alpha = f64::INFINITY;
        for (blk, bs) in self.d.blocks.iter().zip(sc) {
            let r = blk.range();
            bs.apply_q(&dir.dx[r.clone()], &mut qdx[r.clone()]);
            bs.apply_p(&dir.ds[r.clone()], &mut pds[r.clone()]);
            alpha = alpha
                .min(bs.max_step_scaled(&qdx[r.clone()]))
                .min(bs.max_step_scaled(&pds[r]));
        }
        if dir.dtau < 0.0 {
            alpha = alpha.min(-self.tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-self.kappa / dir.dkappa);
        }
        (alpha, qdx, pds)
    }

    fn run(mut self) -> ConicSolution {
        let d = self.d;
        let n = d.n();
        let m = d.m();
        let mut history = Vec::new();
        let mut last_step = 0.0;
        let mut small_steps = 0;
        // best loosely-converged iterate, as (score, solution)
        let mut best: Option<(f64, ConicSolution)> = None;

        for iter in 0..=self.opts.max_iter {
            // residuals of the scaled embedding
            let mut ax = vec![0.0; m];
            d.mul_a(&self.x, &mut ax);
            let rp: Vec<f64> = d.b.iter().zip(&ax).map(|(b, a)| b * self.tau - a).collect();
            let mut aty = vec![0.0; n];
            d.mul_at(&self.y, &mut aty);
            let rd: Vec<f64> = (0..n)
                .map(|j| d.c[j] * self.tau - aty[j] - self.s[j])
                .collect();
            let rg = dot(&d.b, &self.y) - dot(&d.c, &self.x) - self.kappa;
            let mu = (dot(&self.x, &self.s) + self.tau * self.kappa) / (self.nu + 1.0);

            // termination on the original problem
            let xo = d.unscale_x(&self.x);
            let yo = d.unscale_y(&self.y);
            let so = d.unscale_s(&self.s);
            let inv_tau = 1.0 / self.tau;
            let xh: Vec<f64> = xo.iter().map(|v| v * inv_tau).collect();
            let yh: Vec<f64> = yo.iter().map(|v| v * inv_tau).collect();
            let sh: Vec<f64> = so.iter().map(|v| v * inv_tau).collect();
            let [pres, dres, prel, drel] = d.orig_residuals(&xh, &yh, &sh);
            let pcost = dot(&d.orig_c, &xh);
            let dcost = dot(&d.orig_b, &yh);
            let gap = dot(&xh, &sh).max(0.0);
            history.push(IterationInfo {
                primal_objective: pcost,
                dual_objective: dcost,
                gap,
                primal_residual: pres,
                dual_residual: dres,
                tau: self.tau,
                kappa: self.kappa,
                step: last_step,
            });
            let finish = |status: SolveStatus, certificate: Option<Vec<f64>>, history: Vec<IterationInfo>| {
                ConicSolution {
                    status,
                    x: xh.clone(),
                    y: yh.clone(),
                    s: sh.clone(),
                    primal_objective: pcost,
                    dual_objective: dcost,
                    gap,
                    primal_residual: pres,
                    dual_residual: dres,
                    iterations: iter,
                    certificate,
                    history,
                }
            };

            let score = (prel / self.opts.feas_tol)
                .max(drel / self.opts.feas_tol)
                .max(gap / (self.opts.gap_tol * pcost.abs().min(dcost.abs()).max(1.0)));
            if score <= 1.0 {
                return finish(SolveStatus::Optimal, None, history);
            }
            if score <= ALMOST_FACTOR && best.as_ref().map_or(true, |b| score < b.0) {
                best = Some((score, finish(SolveStatus::AlmostOptimal, None, Vec::new())));
            }
            // exits after a stall fall back to the best loose iterate
            let stalled = |status: SolveStatus, history: Vec<IterationInfo>| match best.clone() {
                Some((_, mut sol)) => {
                    sol.history = history;
                    sol
                }
                None => finish(status, None, history),
            };

            // Farkas tests on the raw iterates
            let by = dot(&d.orig_b, &yo);
            if by > 0.0 && self.tau < self.kappa {
                let mut r = so.clone();
                for (yi, row) in yo.iter().zip(&d.orig_rows) {
                    for (o, a) in r.iter_mut().zip(row) {
                        *o += yi * a;
                    }
                }
                let res = r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / by;
                if res <= self.opts.feas_tol {
                    let cert: Vec<f64> = yo.iter().map(|v| v / by).collect();
                    let mut sol = finish(SolveStatus::PrimalInfeasible, Some(cert.clone()), history);
                    sol.y = cert;
                    sol.s = so.iter().map(|v| v / by).collect();
                    return sol;
                }
            }
            let cx = dot(&d.orig_c, &xo);
            if cx < 0.0 && self.tau < self.kappa {
                let res = d
                    .orig_rows
                    .iter()
                    .map(|row| dot(row, &xo).abs())
                    .fold(0.0, f64::max)
                    / -cx;
                if res <= self.opts.feas_tol {
                    let cert: Vec<f64> = xo.iter().map(|v| v / -cx).collect();
                    let mut sol = finish(SolveStatus::DualInfeasible, Some(cert.clone()), history);
                    sol.x = cert;
                    return sol;
                }
            }
            if iter == self.opts.max_iter || small_steps >= 5 {
                return stalled(SolveStatus::MaxIterations, history);
            }

            let Some(sc) = self.scalings() else {
                return stalled(SolveStatus::NumericalFailure, history);
            };
            let Some(nm) = self.factor(&sc) else {
                return stalled(SolveStatus::NumericalFailure, history);
            };

            // predictor
            let mut rc = vec![0.0; n];
            for (blk, bs) in d.blocks.iter().zip(&sc) {
                let r = blk.range();
                bs.lambda_sq(&mut rc[r]);
            }
            rc.iter_mut().for_each(|v| *v = -*v);
            let aff = self.direction(&sc, &nm, &rp, &rd, rg, &rc, -self.tau * self.kappa, 1.0);
            let (alpha_aff, qdx, pds) = self.step_length(&sc, &aff);
            let alpha_aff = alpha_aff.min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(1e-8, 1.0);

            // corrector
            let mut corr = vec![0.0; n];
            let mut e = vec![0.0; n];
            for (blk, bs) in d.blocks.iter().zip(&sc) {
                let r = blk.range();
                jordan(blk.kind, &qdx[r.clone()], &pds[r.clone()], &mut corr[r.clone()]);
                unit(bs.kind, &mut e[r]);
            }
            for j in 0..n {
                rc[j] += sigma * mu * e[j] - corr[j];
            }
            let rtau = -self.tau * self.kappa + sigma * mu - aff.dtau * aff.dkappa;
            let dir = self.direction(&sc, &nm, &rp, &rd, rg, &rc, rtau, 1.0 - sigma);
            if dir.dx.iter().chain(&dir.ds).any(|v| !v.is_finite()) || !dir.dtau.is_finite() {
                return stalled(SolveStatus::NumericalFailure, history);
            }
            let (alpha_max, _, _) = self.step_length(&sc, &dir);
            let alpha = (self.opts.step_fraction * alpha_max).min(1.0);
            last_step = alpha;
            if alpha < 1e-8 {
                small_steps += 1;
            } else {
                small_steps = 0;
            }

            for j in 0..n {
                self.x[j] += alpha * dir.dx[j];
                self.s[j] += alpha * dir.ds[j];
            }
            for i in 0..m {
                self.y[i] += alpha * dir.dy[i];
            }
            self.tau += alpha * dir.dtau;
            self.kappa += alpha * dir.dkappa;

            // keep the homogeneous scale bounded
            let scale = self.tau + self.kappa;
            if !(1e-12..=1e12).contains(&scale) {
                let f = 1.0 / scale;
                self.x.iter_mut().for_each(|v| *v *= f);
                self.s.iter_mut().for_each(|v| *v *= f);
                self.y.iter_mut().for_each(|v| *v *= f);
                self.tau *= f;
                self.kappa *= f;
            }
        }
        unreachable!("loop returns at max_iter")
    }
}

impl Normal {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let r = DVector::from_column_slice(rhs);
        let mut sol = self.chol.solve(&r);
        let mut last = f64::INFINITY;
        for _ in 0..8 {
            let resid = &r - &self.m * &sol;
            let size = resid.amax();
            if !(size < 0.5 * last) {
                break;
            }
            last = size;
            sol += self.chol.solve(&resid);
        }
        sol.iter().copied().collect()
    }
}
