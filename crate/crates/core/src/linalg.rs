//! Dense least squares and error metrics.
//!
//! Training reduces to one linear least-squares problem. The default solver is
//! a truncated SVD that returns the minimum-norm minimizer after discarding
//! singular values below `rel_tol · σ_max`. Tall systems are first compressed
//! with a Householder QR of the augmented matrix `[A | b]`, which yields `R`
//! and `Qᵀb` without forming `Q`.

use std::ops::Range;
use std::time::Instant;

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{Accum, Mat, MatRef, Par};
use thiserror::Error;

/// Default relative truncation threshold for singular values.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("least-squares system is empty ({rows} x {cols})")]
    EmptySystem { rows: usize, cols: usize },
    #[error("non-finite entry in least-squares system")]
    NonFinite,
    #[error("relative tolerance {0} outside (0, 1)")]
    InvalidTolerance(f64),
    #[error("ridge parameter {0} must be finite and non-negative")]
    InvalidRidge(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("reference vector has zero norm")]
    ZeroReference,
    #[error("singular value decomposition did not converge")]
    NoConvergence,
}

/// Design matrix `A` (M × P) with right-hand side `b` (M).
///
/// Column `i·k + j` multiplies coefficient `α[i][j]` (trunk index `i`, branch
/// index `j`); see [`crate::model::Coefficients`].
#[derive(Debug, Clone)]
pub struct LsqSystem {
    design: Mat<f64>,
    rhs: Vec<f64>,
}

impl LsqSystem {
    pub fn new(design: Mat<f64>, rhs: Vec<f64>) -> Result<Self, LinalgError> {
        if design.nrows() != rhs.len() {
            return Err(LinalgError::LengthMismatch {
                left: design.nrows(),
                right: rhs.len(),
            });
        }
        Ok(Self { design, rhs })
    }

    /// Builds a system from row-major data.
    pub fn from_rows(rows: &[f64], cols: usize, rhs: Vec<f64>) -> Result<Self, LinalgError> {
        if cols == 0 || rows.len() != rhs.len() * cols {
            return Err(LinalgError::LengthMismatch {
                left: rows.len(),
                right: rhs.len() * cols,
            });
        }
        let design = Mat::from_fn(rhs.len(), cols, |i, j| rows[i * cols + j]);
        Ok(Self { design, rhs })
    }

    pub fn row_count(&self) -> usize {
        self.design.nrows()
    }

    pub fn col_count(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> MatRef<'_, f64> {
        self.design.as_ref()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Multiplies rows in `rows` (and their right-hand sides) by `weight`.
    ///
    /// A weight of `√λ` turns the plain squared residual into `λ`-weighted
    /// residual terms.
    pub fn scale_rows(&mut self, rows: Range<usize>, weight: f64) {
        for j in 0..self.design.ncols() {
            for i in rows.clone() {
                self.design[(i, j)] *= weight;
            }
        }
        for i in rows {
            self.rhs[i] *= weight;
        }
    }

    /// Returns `A x − b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.col_count());
        let mut r: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.design.col(j);
            for (ri, a) in r.iter_mut().zip(col.iter()) {
                *ri += a * xj;
            }
        }
        r
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        norm2(&self.residual(x))
    }

    fn check(&self) -> Result<(), LinalgError> {
        let (m, p) = (self.row_count(), self.col_count());
        if m == 0 || p == 0 {
            return Err(LinalgError::EmptySystem { rows: m, cols: p });
        }
        if !self.rhs.iter().all(|v| v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        for j in 0..p {
            if !self.design.col(j).iter().all(|v| v.is_finite()) {
                return Err(LinalgError::NonFinite);
            }
        }
        Ok(())
    }
}

/// Options for [`solve_least_squares_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Singular values below `rel_tol · σ_max` are discarded.
    pub rel_tol: f64,
    /// Tikhonov parameter `μ` in `min ‖Ax − b‖² + μ‖x‖²`; zero disables it.
    pub ridge: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            ridge: 0.0,
        }
    }
}

impl SolveOptions {
    fn check(&self) -> Result<(), LinalgError> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(LinalgError::InvalidTolerance(self.rel_tol));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(LinalgError::InvalidRidge(self.ridge));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqSolution {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub effective_rank: usize,
    pub solve_seconds: f64,
}

/// Minimum-norm least-squares solution by truncated SVD.
pub fn solve_least_squares(system: &LsqSystem, rel_tol: f64) -> Result<LsqSolution, LinalgError> {
    solve_least_squares_with(
        system,
        &SolveOptions {
            rel_tol,
            ridge: 0.0,
        },
    )
}

pub fn solve_least_squares_with(
    system: &LsqSystem,
    opts: &SolveOptions,
) -> Result<LsqSolution, LinalgError> {
    opts.check()?;
    system.check()?;
    let start = Instant::now();
    let (m, p) = (system.row_count(), system.col_count());

    // Compress tall systems to a (P+1) × (P+1) triangle first: QR([A | b])
    // gives R in the leading block and Qᵀb in the last column.
    let (u, s, v, projected) = if m > p + p / 4 + 1 {
        let mut aug = Mat::<f64>::zeros(m, p + 1);
        aug.as_mut()
            .submatrix_mut(0, 0, m, p)
            .copy_from(system.design.as_ref());
        for (i, b) in system.rhs.iter().enumerate() {
            aug[(i, p)] = *b;
        }
        let qr = aug.qr();
        drop(aug);
        let r_aug = qr.thin_R();
        let r = r_aug.submatrix(0, 0, p, p).to_owned();
        let qtb: Vec<f64> = (0..p).map(|i| r_aug[(i, p)]).collect();
        drop(qr);
        let svd = r.thin_svd().map_err(|_| LinalgError::NoConvergence)?;
        let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
        (svd.U().to_owned(), s, svd.V().to_owned(), qtb)
    } else {
        let svd = system
            .design
            .thin_svd()
            .map_err(|_| LinalgError::NoConvergence)?;
        let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
        (svd.U().to_owned(), s, svd.V().to_owned(), system.rhs.clone())
    };

    let sigma_max = s.iter().copied().fold(0.0, f64::max);
    let cutoff = opts.rel_tol * sigma_max;
    let mut x = vec![0.0; p];
    let mut rank = 0;
    for (idx, &sigma) in s.iter().enumerate() {
        if !(sigma > cutoff) || sigma == 0.0 {
            continue;
        }
        rank += 1;
        let ui = u.col(idx);
        let proj: f64 = ui.iter().zip(projected.iter()).map(|(a, b)| a * b).sum();
        let gain = if opts.ridge > 0.0 {
            sigma / (sigma * sigma + opts.ridge)
        } else {
            1.0 / sigma
        };
        let scale = proj * gain;
        for (xk, vk) in x.iter_mut().zip(v.col(idx).iter()) {
            *xk += scale * vk;
        }
    }
    let solve_seconds = start.elapsed().as_secs_f64();
    let residual_norm = system.residual_norm(&x);
    Ok(LsqSolution {
        coefficients: x,
        residual_norm,
        effective_rank: rank,
        solve_seconds,
    })
}

/// Accumulates `AᵀA`, `Aᵀb` and `bᵀb` from row blocks without storing `A`.
///
/// The resulting P × P problem is solved by a truncated symmetric
/// eigendecomposition. Eigenvalues are squared singular values, so only
/// singular values above roughly `√ε · σ_max` are resolvable; prefer
/// [`solve_least_squares`] when `A` fits in memory.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    gram: Mat<f64>,
    atb: Vec<f64>,
    btb: f64,
    rows: usize,
}

impl NormalEquations {
    pub fn new(cols: usize) -> Self {
        Self {
            gram: Mat::zeros(cols, cols),
            atb: vec![0.0; cols],
            btb: 0.0,
            rows: 0,
        }
    }

    pub fn col_count(&self) -> usize {
        self.atb.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    /// Adds the rows of `block` to the accumulated products.
    pub fn accumulate(&mut self, block: &LsqSystem) -> Result<(), LinalgError> {
        if block.col_count() != self.col_count() {
            return Err(LinalgError::LengthMismatch {
                left: block.col_count(),
                right: self.col_count(),
            });
        }
        block.check()?;
        let a = block.design.as_ref();
        // lower triangle only; the eigensolver reads that side
        triangular::matmul(
            self.gram.as_mut(),
            BlockStructure::TriangularLower,
            Accum::Add,
            a.transpose(),
            BlockStructure::Rectangular,
            a,
            BlockStructure::Rectangular,
            1.0,
            Par::Seq,
        );
        for j in 0..self.col_count() {
            self.atb[j] += a
                .col(j)
                .iter()
                .zip(block.rhs.iter())
                .map(|(x, y)| x * y)
                .sum::<f64>();
        }
        self.btb += block.rhs.iter().map(|b| b * b).sum::<f64>();
        self.rows += block.row_count();
        Ok(())
    }

    pub fn solve(&self, opts: &SolveOptions) -> Result<LsqSolution, LinalgError> {
        opts.check()?;
        let p = self.col_count();
        if self.rows == 0 || p == 0 {
            return Err(LinalgError::EmptySystem {
                rows: self.rows,
                cols: p,
            });
        }
        let start = Instant::now();
        let eig = self
            .gram
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|_| LinalgError::NoConvergence)?;
        let lambda: Vec<f64> = eig.S().column_vector().iter().copied().collect();
        let vecs = eig.U();
        let lambda_max = lambda.iter().copied().fold(0.0, f64::max);
        // λ = σ², and eigenvalues below ε·λ_max·P are rounding noise.
        let cutoff = (opts.rel_tol * opts.rel_tol * lambda_max)
            .max(f64::EPSILON * lambda_max * p as f64);
        let mut x = vec![0.0; p];
        let mut rank = 0;
        for (idx, &lam) in lambda.iter().enumerate() {
            if !(lam > cutoff) {
                continue;
            }
            rank += 1;
            let vi = vecs.col(idx);
            let proj: f64 = vi.iter().zip(self.atb.iter()).map(|(a, b)| a * b).sum();
            let scale = proj / (lam + opts.ridge);
            for (xk, vk) in x.iter_mut().zip(vi.iter()) {
                *xk += scale * vk;
            }
        }
        let solve_seconds = start.elapsed().as_secs_f64();
        // ‖Ax − b‖² = xᵀGx − 2xᵀAᵀb + bᵀb
        let mut xgx = 0.0;
        for j in 0..p {
            let col = self.gram.col(j);
            let off: f64 = (j + 1..p).map(|i| col[i] * x[i]).sum();
            xgx += x[j] * (col[j] * x[j] + 2.0 * off);
        }
        let xatb: f64 = x.iter().zip(self.atb.iter()).map(|(a, b)| a * b).sum();
        let residual_norm = (xgx - 2.0 * xatb + self.btb).max(0.0).sqrt();
        Ok(LsqSolution {
            coefficients: x,
            residual_norm,
            effective_rank: rank,
            solve_seconds,
        })
    }
}

/// Solves through the normal equations `AᵀA x = Aᵀb` (fast path for M ≫ P).
pub fn solve_normal_equations(
    system: &LsqSystem,
    opts: &SolveOptions,
) -> Result<LsqSolution, LinalgError> {
    system.check()?;
    let mut ne = NormalEquations::new(system.col_count());
    ne.accumulate(system)?;
    let mut sol = ne.solve(opts)?;
    sol.residual_norm = system.residual_norm(&sol.coefficients);
    Ok(sol)
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖pred − reference‖₂ / ‖reference‖₂`.
pub fn relative_l2_error(pred: &[f64], reference: &[f64]) -> Result<f64, LinalgError> {
    if pred.len() != reference.len() || pred.is_empty() {
        return Err(LinalgError::LengthMismatch {
            left: pred.len(),
            right: reference.len(),
        });
    }
    let denom = norm2(reference);
    if denom == 0.0 {
        return Err(LinalgError::ZeroReference);
    }
    let num = pred
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}
