//! Cone-program intermediate representation.
//!
//! Problems are in standard form
//!
//! ```text
//! minimize    c . x
//! subject to  A x = b
//!             x in K = K_1 x K_2 x ... x K_p
//! ```
//!
//! where the cone blocks are laid out contiguously in the order they are
//! listed, so the block list partitions the variable index range.

use std::fmt::Write as _;
use std::ops::Range;

use crate::error::ConicError;
use crate::svec::svec_len;

/// One cone block of the variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// `size` independent nonnegative variables.
    NonNeg(usize),
    /// Rotated second-order cone `{(u, v, z) : 2 u v >= |z|^2, u, v >= 0}` of
    /// total dimension `dim >= 2`.
    RotatedSoc(usize),
    /// Symmetric PSD matrices of the given side, stored via [`crate::svec`].
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNeg(n) | Cone::RotatedSoc(n) => n,
            Cone::Psd(side) => svec_len(side),
        }
    }

    /// Barrier degree of the block.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg(n) => n,
            Cone::RotatedSoc(_) => 1,
            Cone::Psd(side) => side,
        }
    }

    fn tag(&self) -> (&'static str, usize) {
        match *self {
            Cone::NonNeg(n) => ("nonneg", n),
            Cone::RotatedSoc(n) => ("rsoc", n),
            Cone::Psd(s) => ("psd", s),
        }
    }
}

/// A cone program in standard form with a sparse equality matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    pub objective: Vec<f64>,
    /// `(row, col, value)` triplets; duplicates are summed.
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProblem {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_eqs(&self) -> usize {
        self.b.len()
    }

    /// Index ranges of the cone blocks.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|c| {
                let r = start..start + c.dim();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.n_vars();
        let m = self.n_eqs();
        let covered: usize = self.cones.iter().map(Cone::dim).sum();
        if covered != n {
            return Err(ConicError::InvalidProblem(format!(
                "cone blocks cover {covered} variables but the problem has {n}"
            )));
        }
        for cone in &self.cones {
            match *cone {
                Cone::NonNeg(0) | Cone::Psd(0) => {
                    return Err(ConicError::InvalidProblem("empty cone block".into()))
                }
                Cone::RotatedSoc(d) if d < 2 => {
                    return Err(ConicError::InvalidProblem(format!(
                        "rotated cone needs dimension >= 2, got {d}"
                    )))
                }
                _ => {}
            }
        }
        for &(i, j, v) in &self.a {
            if i >= m || j >= n {
                return Err(ConicError::InvalidProblem(format!(
                    "entry ({i}, {j}) outside {m}x{n} equality matrix"
                )));
            }
            if !v.is_finite() {
                return Err(ConicError::InvalidProblem(format!(
                    "non-finite coefficient at ({i}, {j})"
                )));
            }
        }
        if self.objective.iter().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(ConicError::InvalidProblem(
                "non-finite objective or right-hand side".into(),
            ));
        }
        Ok(())
    }

    /// Dense row-major copy of the equality matrix.
    pub fn dense_a(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n_vars()]; self.n_eqs()];
        for &(i, j, v) in &self.a {
            rows[i][j] += v;
        }
        rows
    }

    /// Serializes the problem in a plain sparse-triplet text format:
    ///
    /// ```text
    /// conic <n_vars> <n_eqs>
    /// cones <count>
    /// <nonneg|rsoc|psd> <size>        (one line per block, size = side for psd)
    /// objective <nnz>
    /// <col> <value>                   (nnz lines)
    /// rhs <n_eqs>
    /// <value>                         (n_eqs lines)
    /// a <nnz>
    /// <row> <col> <value>             (nnz lines)
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "conic {} {}", self.n_vars(), self.n_eqs());
        let _ = writeln!(out, "cones {}", self.cones.len());
        for c in &self.cones {
            let (tag, size) = c.tag();
            let _ = writeln!(out, "{tag} {size}");
        }
        let nz: Vec<_> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .collect();
        let _ = writeln!(out, "objective {}", nz.len());
        for (j, v) in nz {
            let _ = writeln!(out, "{j} {v:e}");
        }
        let _ = writeln!(out, "rhs {}", self.b.len());
        for v in &self.b {
            let _ = writeln!(out, "{v:e}");
        }
        let _ = writeln!(out, "a {}", self.a.len());
        for (i, j, v) in &self.a {
            let _ = writeln!(out, "{i} {j} {v:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ConicError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let mut next = |what: &str| -> Result<(usize, Vec<String>), ConicError> {
            let (no, l) = lines.next().ok_or(ConicError::Parse {
                line: 0,
                msg: format!("unexpected end of input, expected {what}"),
            })?;
            Ok((no + 1, l.split_whitespace().map(str::to_owned).collect()))
        };
        fn num<T: std::str::FromStr>(line: usize, s: Option<&String>) -> Result<T, ConicError> {
            s.and_then(|t| t.parse().ok()).ok_or(ConicError::Parse {
                line,
                msg: format!("expected number, found {s:?}"),
            })
        }
        fn header(line: usize, tok: &[String], key: &str) -> Result<(), ConicError> {
            if tok.first().map(String::as_str) == Some(key) {
                Ok(())
            } else {
                Err(ConicError::Parse {
                    line,
                    msg: format!("expected `{key}` section"),
                })
            }
        }

        let (l, t) = next("header")?;
        header(l, &t, "conic")?;
        let n: usize = num(l, t.get(1))?;
        let m: usize = num(l, t.get(2))?;

        let (l, t) = next("cones")?;
        header(l, &t, "cones")?;
        let count: usize = num(l, t.get(1))?;
        let mut cones = Vec::with_capacity(count);
        for _ in 0..count {
            let (l, t) = next("cone block")?;
            let size: usize = num(l, t.get(1))?;
            cones.push(match t[0].as_str() {
                "nonneg" => Cone::NonNeg(size),
                "rsoc" => Cone::RotatedSoc(size),
                "psd" => Cone::Psd(size),
                other => {
                    return Err(ConicError::Parse {
                        line: l,
                        msg: format!("unknown cone `{other}`"),
                    })
                }
            });
        }

        let (l, t) = next("objective")?;
        header(l, &t, "objective")?;
        let mut objective = vec![0.0; n];
        for _ in 0..num::<usize>(l, t.get(1))? {
            let (l, t) = next("objective entry")?;
            let j: usize = num(l, t.first())?;
            if j >= n {
                return Err(ConicError::Parse {
                    line: l,
                    msg: format!("objective index {j} out of range"),
                });
            }
            objective[j] = num(l, t.get(1))?;
        }

        let (l, t) = next("rhs")?;
        header(l, &t, "rhs")?;
        let rows: usize = num(l, t.get(1))?;
        if rows != m {
            return Err(ConicError::Parse {
                line: l,
                msg: format!("rhs has {rows} entries, header says {m}"),
            });
        }
        let mut b = Vec::with_capacity(m);
        for _ in 0..m {
            let (l, t) = next("rhs entry")?;
            b.push(num(l, t.first())?);
        }

        let (l, t) = next("a")?;
        header(l, &t, "a")?;
        let nnz: usize = num(l, t.get(1))?;
        let mut a = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (l, t) = next("matrix entry")?;
            a.push((num(l, t.first())?, num(l, t.get(1))?, num(l, t.get(2))?));
        }

        let p = ConicProblem {
            objective,
            a,
            b,
            cones,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Incremental construction of a [`ConicProblem`].
///
/// Variables are allocated block by block; each allocation returns the index
/// range of the new block.
#[derive(Debug, Default, Clone)]
pub struct ProblemBuilder {
    problem: ConicProblem,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn alloc(&mut self, cone: Cone) -> Range<usize> {
        let start = self.problem.objective.len();
        self.problem.objective.resize(start + cone.dim(), 0.0);
        self.problem.cones.push(cone);
        start..start + cone.dim()
    }

    pub fn nonneg(&mut self, size: usize) -> Range<usize> {
        self.alloc(Cone::NonNeg(size))
    }

    /// Single nonnegative scalar.
    pub fn scalar(&mut self) -> usize {
        self.nonneg(1).start
    }

    pub fn rotated_soc(&mut self, dim: usize) -> Range<usize> {
        self.alloc(Cone::RotatedSoc(dim))
    }

    pub fn psd(&mut self, side: usize) -> Range<usize> {
        self.alloc(Cone::Psd(side))
    }

    pub fn set_cost(&mut self, var: usize, c: f64) {
        self.problem.objective[var] = c;
    }

    pub fn add_cost(&mut self, var: usize, c: f64) {
        self.problem.objective[var] += c;
    }

    /// Appends `sum coeffs[k].1 * x[coeffs[k].0] = rhs` and returns its row.
    pub fn equality(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.problem.b.len();
        self.problem.b.push(rhs);
        self.problem
            .a
            .extend(coeffs.iter().filter(|(_, v)| *v != 0.0).map(|&(j, v)| (row, j, v)));
        row
    }

    pub fn n_vars(&self) -> usize {
        self.problem.objective.len()
    }

    pub fn build(self) -> ConicProblem {
        self.problem
    }
}
