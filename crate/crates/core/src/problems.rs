//! Synthetic test problems and high-precision reference solutions.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dim, dist, dot, norm, norm_inf, norm_sq, orthonormal_columns, sub, Matrix};
use crate::problem::{CompositeProblem, ProxTolerance, SmoothTerm};
use crate::prox::{L1Norm, LoosenedProx, RowColGroups, RowColNorm};
use crate::scalar::Scalar;

/// Iteration cap of [`solve_reference`].
pub const REFERENCE_MAX_ITER: usize = 1_000_000;

/// `½‖Ax − b‖²`
#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    a: Matrix<T>,
    b: Vec<T>,
    lipschitz: T,
    mu: T,
}

impl<T: Scalar> LeastSquares<T> {
    /// Computes `L = λ_max(AᵀA)` by power iteration; `μ` is set to zero.
    pub fn new(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        check_dim(a.rows(), b.len())?;
        let l = a.gram_spectral_radius(100_000, T::epsilon());
        if !(l > T::zero()) {
            return Err(invalid("AᵀA must be nonzero"));
        }
        Ok(Self { a, b, lipschitz: l, mu: T::zero() })
    }

    /// Uses caller-supplied curvature constants.
    pub fn with_constants(a: Matrix<T>, b: Vec<T>, lipschitz: T, mu: T) -> Result<Self> {
        check_dim(a.rows(), b.len())?;
        if !(lipschitz > T::zero()) || mu < T::zero() || mu > lipschitz {
            return Err(invalid("need L > 0 and 0 ≤ μ ≤ L"));
        }
        Ok(Self { a, b, lipschitz, mu })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn rhs(&self) -> &[T] {
        &self.b
    }
}

impl<T: Scalar> SmoothTerm<T> for LeastSquares<T> {
    fn dim(&self) -> usize {
        self.a.cols()
    }
    fn value(&self, x: &[T]) -> T {
        T::lit(0.5) * norm_sq(&sub(&self.a.mul_vec(x), &self.b))
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.a.tr_mul_vec(&sub(&self.a.mul_vec(x), &self.b))
    }
    fn lipschitz(&self) -> T {
        self.lipschitz
    }
    fn strong_convexity(&self) -> T {
        self.mu
    }
}

/// `½‖W − W X W‖²_F` for `W` of shape `m × n` and `X` of shape `n × m` (row-major).
#[derive(Debug, Clone)]
pub struct CurLoss<T> {
    w: Matrix<T>,
    lipschitz: T,
}

impl<T: Scalar> CurLoss<T> {
    /// `L = σ_max(W)⁴`, with `σ_max²` from power iteration.
    pub fn new(w: Matrix<T>) -> Result<Self> {
        let s2 = w.gram_spectral_radius(100_000, T::epsilon());
        if !(s2 > T::zero()) {
            return Err(invalid("W must be nonzero"));
        }
        Ok(Self { w, lipschitz: s2 * s2 })
    }

    pub fn data(&self) -> &Matrix<T> {
        &self.w
    }

    fn residual(&self, x: &[T]) -> Matrix<T> {
        let (m, n) = (self.w.rows(), self.w.cols());
        let xm = Matrix::from_row_major(n, m, x.to_vec()).expect("dimension checked by caller");
        let wxw = self.w.matmul(&xm).matmul(&self.w);
        Matrix::from_fn(m, n, |i, j| self.w.get(i, j) - wxw.get(i, j))
    }
}

impl<T: Scalar> SmoothTerm<T> for CurLoss<T> {
    fn dim(&self) -> usize {
        self.w.rows() * self.w.cols()
    }
    fn value(&self, x: &[T]) -> T {
        T::lit(0.5) * self.residual(x).frobenius_sq()
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        // −Wᵀ R Wᵀ
        let r = self.residual(x);
        let wt = self.w.transpose();
        wt.matmul(&r).matmul(&wt).as_slice().iter().map(|&v| -v).collect()
    }
    fn lipschitz(&self) -> T {
        self.lipschitz
    }
}

/// `½‖Ax − b‖² + λ‖x‖₁` with analytically known curvature constants.
#[derive(Debug, Clone)]
pub struct LassoInstance<T> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub lambda: T,
    /// Smallest eigenvalue of `AᵀA` (zero when `d > n`).
    pub mu_known: T,
    /// Largest eigenvalue of `AᵀA`.
    pub l_known: T,
}

impl<T: Scalar> LassoInstance<T> {
    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn smooth(&self) -> Result<LeastSquares<T>> {
        LeastSquares::with_constants(self.a.clone(), self.b.clone(), self.l_known, self.mu_known)
    }

    pub fn problem(&self) -> Result<CompositeProblem<T>> {
        CompositeProblem::new(self.smooth()?, L1Norm::new(self.dim(), self.lambda)?)
    }

    /// Same objective, but prox calls with a gap target return points that are
    /// deliberately suboptimal by (just under) that target.
    pub fn problem_with_loosened_prox(&self, seed: u64) -> Result<CompositeProblem<T>> {
        let h = LoosenedProx::new(L1Norm::new(self.dim(), self.lambda)?, seed);
        CompositeProblem::new(self.smooth()?, h)
    }

    /// Smallest λ for which `x* = 0`.
    pub fn lambda_max(&self) -> T {
        norm_inf(&self.a.tr_mul_vec(&self.b))
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Seeded lasso instance `A = U diag(σ) Vᵀ` with orthonormal `U`, `V` and `σ_i²`
/// spaced evenly from 1 down to `1/condition_number`, so `L = 1` and
/// `μ = 1/condition_number` whenever `d ≤ n`. `λ = 0.1‖Aᵀb‖_∞`.
pub fn gen_lasso<T: Scalar>(seed: u64, n: usize, d: usize, condition_number: f64) -> Result<LassoInstance<T>> {
    if n == 0 || d == 0 {
        return Err(invalid("lasso dimensions must be positive"));
    }
    if !(condition_number >= 1.0) || !condition_number.is_finite() {
        return Err(invalid(format!("condition number must be ≥ 1, got {condition_number}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = n.min(d);
    let u = orthonormal_columns((0..r).map(|_| gaussian_vec(&mut rng, n)).collect());
    let v = orthonormal_columns((0..r).map(|_| gaussian_vec(&mut rng, d)).collect());
    let sigma: Vec<f64> = (0..r)
        .map(|i| {
            let frac = if r == 1 { 0.0 } else { i as f64 / (r - 1) as f64 };
            (1.0 - frac * (1.0 - 1.0 / condition_number)).sqrt()
        })
        .collect();
    let a64 = Matrix::from_fn(n, d, |i, j| (0..r).map(|k| u[k][i] * sigma[k] * v[k][j]).sum());
    let b64 = gaussian_vec(&mut rng, n);
    let a = Matrix::from_fn(n, d, |i, j| T::lit(a64.get(i, j)));
    let b: Vec<T> = b64.iter().map(|&v| T::lit(v)).collect();
    let l_known = T::one();
    let mu_known = if d <= n { T::lit(1.0 / condition_number) } else { T::zero() };
    let mut inst = LassoInstance { a, b, lambda: T::zero(), mu_known, l_known };
    inst.lambda = T::lit(0.1) * inst.lambda_max();
    Ok(inst)
}

/// CUR-like factorization `min_X ½‖W − WXW‖²_F + λ_row Σ‖Xⁱ‖ + λ_col Σ‖X_j‖`.
#[derive(Debug, Clone)]
pub struct CurInstance<T> {
    /// Data matrix, `m × n`; the variable `X` is `n × m`.
    pub w: Matrix<T>,
    pub lambda_row: T,
    pub lambda_col: T,
}

impl<T: Scalar> CurInstance<T> {
    pub fn from_matrix(w: Matrix<T>, lambda_row: T, lambda_col: T) -> Result<Self> {
        if w.rows() == 0 || w.cols() == 0 {
            return Err(invalid("data matrix must be nonempty"));
        }
        RowColGroups::new(w.cols(), w.rows(), lambda_row, lambda_col)?;
        Ok(Self { w, lambda_row, lambda_col })
    }

    pub fn groups(&self) -> RowColGroups<T> {
        RowColGroups { n_rows: self.w.cols(), n_cols: self.w.rows(), lambda_row: self.lambda_row, lambda_col: self.lambda_col }
    }

    pub fn dim(&self) -> usize {
        self.w.rows() * self.w.cols()
    }

    pub fn smooth(&self) -> Result<CurLoss<T>> {
        CurLoss::new(self.w.clone())
    }

    pub fn problem(&self) -> Result<CompositeProblem<T>> {
        CompositeProblem::new(self.smooth()?, RowColNorm::new(self.groups()))
    }
}

/// Seeded `W` (`rows × cols`): a random rank-`max(1, min(rows, cols)/10)` matrix
/// plus 5% Gaussian noise, rescaled so `σ_max(W) = 1` and hence `L = 1`.
/// The low-rank part is what makes whole rows and columns of the optimal `X` vanish.
pub fn gen_cur<T: Scalar>(seed: u64, rows: usize, cols: usize, lambda_row: f64, lambda_col: f64) -> Result<CurInstance<T>> {
    if rows == 0 || cols == 0 {
        return Err(invalid("CUR dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = (rows.min(cols) / 10).max(1);
    let left = gaussian_vec(&mut rng, rows * rank);
    let right = gaussian_vec(&mut rng, rank * cols);
    let noise = gaussian_vec(&mut rng, rows * cols);
    let raw = Matrix::from_fn(rows, cols, |i, j| {
        let low: f64 = (0..rank).map(|k| left[i * rank + k] * right[k * cols + j]).sum();
        low / (rank as f64).sqrt() + 0.05 * noise[i * cols + j]
    });
    let sigma = raw.gram_spectral_radius(10_000, 1e-14).sqrt();
    let w = Matrix::from_fn(rows, cols, |i, j| T::lit(raw.get(i, j) / sigma));
    CurInstance::from_matrix(w, T::lit(lambda_row), T::lit(lambda_col))
}

/// Reads a matrix from plain CSV: one row per line, comma-separated reals, no header.
pub fn read_matrix_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Matrix<T>> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Import(format!("{}: {e}", path.as_ref().display())))?;
    read_matrix_csv_from(file)
}

pub fn read_matrix_csv_from<T: Scalar>(reader: impl std::io::Read) -> Result<Matrix<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Import(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(Error::Import(format!("line {}: expected {c} fields, found {}", line + 1, rec.len())));
            }
            _ => {}
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Import(format!("line {}: not a real number: {field:?}", line + 1)))?;
            data.push(T::lit(v));
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Import("empty matrix".into()))?;
    Matrix::from_row_major(rows, cols, data)
}

/// High-precision solution used as `x*`, `f*` by every bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    /// Final composite gradient-mapping norm `L‖x − prox_L(x − g'(x)/L)‖`.
    pub residual: T,
}

/// Error-free accelerated proximal gradient with gradient-based momentum restart,
/// started at the origin, run until the gradient-mapping norm is at most `tol` and
/// the objective has stabilised.
///
/// When `g` reports `μ > 0` the mapping target tightens to `tol·min(1, μ/2)` (but not
/// below the round-off floor), which puts the returned point within about `tol` of `x*`.
pub fn solve_reference<T: Scalar>(problem: &CompositeProblem<T>, tol: T) -> Result<Reference<T>> {
    solve_reference_from(problem, &vec![T::zero(); problem.dim()], tol, REFERENCE_MAX_ITER)
}

pub fn solve_reference_from<T: Scalar>(
    problem: &CompositeProblem<T>,
    x0: &[T],
    tol: T,
    max_iter: usize,
) -> Result<Reference<T>> {
    check_dim(problem.dim(), x0.len())?;
    if !(tol > T::zero()) {
        return Err(invalid("reference tolerance must be positive"));
    }
    let g = problem.smooth();
    let h = problem.nonsmooth();
    let l = g.lipschitz();
    let prox_step = |p: &[T]| -> Result<Vec<T>> {
        let grad = g.gradient(p);
        let z: Vec<T> = p.iter().zip(&grad).map(|(&a, &b)| a - b / l).collect();
        Ok(h.prox(&z, l, ProxTolerance::Exact)?.point)
    };

    let mut x = x0.to_vec();
    let mut y = x.clone();
    let mut t = T::one();
    let mut f_prev = problem.objective(&x)?;
    let mut residual = T::infinity();
    let mu = g.strong_convexity();
    let target = if mu > T::zero() { tol * (mu * T::lit(0.5)).min(T::one()) } else { tol };
    for it in 1..=max_iter {
        let x_new = prox_step(&y)?;
        let restart = dot(&sub(&y, &x_new), &sub(&x_new, &x)) > T::zero();
        let t_next = if restart {
            T::one()
        } else {
            (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * T::lit(0.5)
        };
        let beta = if restart { T::zero() } else { (t - T::one()) / t_next };
        y = x_new.iter().zip(&x).map(|(&a, &b)| a + beta * (a - b)).collect();
        t = t_next;
        x = x_new;

        let f = problem.objective(&x)?;
        residual = l * dist(&x, &prox_step(&x)?);
        let stall = (f - f_prev).abs() <= (tol * tol).max(T::epsilon() * T::lit(4.0) * (T::one() + f.abs()));
        f_prev = f;
        let floor = T::lit(64.0) * T::epsilon() * l * (T::one() + norm(&x));
        if residual <= tol && residual <= target.max(floor) && stall {
            return Ok(Reference { x, f, iterations: it, residual });
        }
    }
    Err(Error::ReferenceNotConverged { iterations: max_iter, residual: residual.as_f64() })
}
