//! Composite problems `f = g + h`, the inexact-prox contract, error schedules and traces.

use crate::error::{invalid, Result};
use crate::linalg::{check_dim, dist_sq_half};
use crate::scalar::Scalar;

/// Smooth convex term `g` with an `L`-Lipschitz gradient.
pub trait SmoothTerm<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> T;
    /// Strong-convexity modulus; zero when `g` is merely convex.
    fn strong_convexity(&self) -> T {
        T::zero()
    }
}

/// How accurately a proximal subproblem must be solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxTolerance<T> {
    /// Closed form, or the inner solver's round-off floor.
    Exact,
    /// Stop once the certified gap is at most this value.
    GapBelow(T),
    /// Run exactly this many inner sweeps and report the gap reached.
    Sweeps(usize),
}

/// An approximate proximity-operator output.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult<T> {
    pub point: Vec<T>,
    /// Upper bound on the proximal-objective suboptimality of `point`.
    pub certified_gap: T,
    pub inner_iterations: usize,
}

impl<T: Scalar> ProxResult<T> {
    pub fn exact(point: Vec<T>) -> Self {
        Self { point, certified_gap: T::zero(), inner_iterations: 1 }
    }
}

/// Lower semi-continuous proper convex term `h`, accessed through its value and an
/// (approximate) proximity operator
/// `prox_L(y) = argmin_x (L/2)‖x − y‖² + h(x)`.
pub trait NonsmoothTerm<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    /// May return `+∞` outside the domain.
    fn value(&self, x: &[T]) -> T;
    fn prox(&self, y: &[T], l: T, tol: ProxTolerance<T>) -> Result<ProxResult<T>>;
}

/// Smooth term assembled from closures.
pub struct SmoothFn<T, V, G> {
    dim: usize,
    value: V,
    gradient: G,
    lipschitz: T,
    mu: T,
}

impl<T, V, G> SmoothFn<T, V, G>
where
    T: Scalar,
    V: Fn(&[T]) -> T + Send + Sync,
    G: Fn(&[T]) -> Vec<T> + Send + Sync,
{
    pub fn new(dim: usize, value: V, gradient: G, lipschitz: T, mu: T) -> Result<Self> {
        if !(lipschitz > T::zero()) {
            return Err(invalid("Lipschitz constant must be positive"));
        }
        if mu < T::zero() || mu > lipschitz {
            return Err(invalid("strong convexity modulus must lie in [0, L]"));
        }
        Ok(Self { dim, value, gradient, lipschitz, mu })
    }
}

impl<T, V, G> SmoothTerm<T> for SmoothFn<T, V, G>
where
    T: Scalar,
    V: Fn(&[T]) -> T + Send + Sync,
    G: Fn(&[T]) -> Vec<T> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[T]) -> T {
        (self.value)(x)
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        (self.gradient)(x)
    }
    fn lipschitz(&self) -> T {
        self.lipschitz
    }
    fn strong_convexity(&self) -> T {
        self.mu
    }
}

/// `f = g + h` on `R^d`.
pub struct CompositeProblem<T: Scalar> {
    g: Box<dyn SmoothTerm<T>>,
    h: Box<dyn NonsmoothTerm<T>>,
}

impl<T: Scalar> CompositeProblem<T> {
    pub fn new(g: impl SmoothTerm<T> + 'static, h: impl NonsmoothTerm<T> + 'static) -> Result<Self> {
        Self::from_boxed(Box::new(g), Box::new(h))
    }

    pub fn from_boxed(g: Box<dyn SmoothTerm<T>>, h: Box<dyn NonsmoothTerm<T>>) -> Result<Self> {
        check_dim(g.dim(), h.dim())?;
        if g.dim() == 0 {
            return Err(invalid("problem dimension must be positive"));
        }
        Ok(Self { g, h })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn smooth(&self) -> &dyn SmoothTerm<T> {
        self.g.as_ref()
    }

    pub fn nonsmooth(&self) -> &dyn NonsmoothTerm<T> {
        self.h.as_ref()
    }

    pub fn objective(&self, x: &[T]) -> Result<T> {
        evaluate_objective(self, x)
    }
}

/// `g(x) + h(x)`, or `+∞` whenever `h(x) = +∞`.
pub fn evaluate_objective<T: Scalar>(problem: &CompositeProblem<T>, x: &[T]) -> Result<T> {
    check_dim(problem.dim(), x.len())?;
    let hx = problem.h.value(x);
    if hx == T::infinity() {
        return Ok(T::infinity());
    }
    Ok(problem.g.value(x) + hx)
}

/// `(L/2)‖x − y‖² + h(x)`.
pub fn proximal_objective<T: Scalar>(h: &dyn NonsmoothTerm<T>, y: &[T], l: T, x: &[T]) -> Result<T> {
    check_dim(h.dim(), y.len())?;
    check_dim(h.dim(), x.len())?;
    if !(l > T::zero()) {
        return Err(invalid(format!("prox scale L must be positive, got {l}")));
    }
    let hx = h.value(x);
    if hx == T::infinity() {
        return Ok(T::infinity());
    }
    Ok(l * dist_sq_half(x, y) + hx)
}

/// Accuracy prescription for the k-th proximal subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxSchedule<T> {
    Exact,
    /// `ε_k = c / k^α`
    PolyDecay { c: T, alpha: T },
    /// `ε_k = c · q^k`
    GeometricDecay { c: T, q: T },
    /// `ε_k = ε`
    Constant(T),
    /// A fixed number of inner sweeps, whatever gap they reach.
    FixedSweeps(usize),
}

/// Magnitude prescription for the gradient error `e_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientErrorSchedule<T> {
    None,
    /// `‖e_k‖ = c / k^α`
    PolyDecay { c: T, alpha: T },
    /// `‖e_k‖ = c · q^k`
    GeometricDecay { c: T, q: T },
}

/// Direction rule for the gradient error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorDirection {
    /// One unit vector drawn from the run seed, reused at every iteration.
    #[default]
    SeededRandom,
    /// `e_k = η_k · g'(y)/‖g'(y)‖`, zero when the gradient vanishes.
    TowardAscent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSchedule<T> {
    pub prox: ProxSchedule<T>,
    pub gradient: GradientErrorSchedule<T>,
    pub direction: ErrorDirection,
}

impl<T: Scalar> Default for ErrorSchedule<T> {
    fn default() -> Self {
        Self::exact()
    }
}

impl<T: Scalar> ErrorSchedule<T> {
    pub fn exact() -> Self {
        Self {
            prox: ProxSchedule::Exact,
            gradient: GradientErrorSchedule::None,
            direction: ErrorDirection::SeededRandom,
        }
    }

    pub fn with_prox(mut self, prox: ProxSchedule<T>) -> Self {
        self.prox = prox;
        self
    }

    pub fn with_gradient(mut self, gradient: GradientErrorSchedule<T>) -> Self {
        self.gradient = gradient;
        self
    }

    pub fn with_direction(mut self, direction: ErrorDirection) -> Self {
        self.direction = direction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check_poly = |c: T, alpha: T| {
            if !(c >= T::zero()) || !(alpha > T::zero()) {
                Err(invalid(format!("polynomial decay needs c ≥ 0 and α > 0 (got c = {c}, α = {alpha})")))
            } else {
                Ok(())
            }
        };
        let check_geom = |c: T, q: T| {
            if !(c >= T::zero()) || !(q > T::zero() && q < T::one()) {
                Err(invalid(format!("geometric decay needs c ≥ 0 and 0 < q < 1 (got c = {c}, q = {q})")))
            } else {
                Ok(())
            }
        };
        match self.prox {
            ProxSchedule::Exact => {}
            ProxSchedule::PolyDecay { c, alpha } => {
                check_poly(c, alpha)?;
                if c == T::zero() {
                    return Err(invalid("gap target c/k^α must be positive"));
                }
            }
            ProxSchedule::GeometricDecay { c, q } => {
                check_geom(c, q)?;
                if c == T::zero() {
                    return Err(invalid("gap target c·q^k must be positive"));
                }
            }
            ProxSchedule::Constant(eps) => {
                if !(eps > T::zero()) {
                    return Err(invalid(format!("constant gap target must be positive, got {eps}")));
                }
            }
            ProxSchedule::FixedSweeps(n) => {
                if n == 0 {
                    return Err(invalid("fixed sweep count must be at least 1"));
                }
            }
        }
        match self.gradient {
            GradientErrorSchedule::None => Ok(()),
            GradientErrorSchedule::PolyDecay { c, alpha } => check_poly(c, alpha),
            GradientErrorSchedule::GeometricDecay { c, q } => check_geom(c, q),
        }
    }

    /// Tolerance handed to the prox at outer iteration `k ≥ 1`.
    pub fn tolerance_at(&self, k: usize) -> ProxTolerance<T> {
        let kf = T::from_usize_lossy(k);
        match self.prox {
            ProxSchedule::Exact => ProxTolerance::Exact,
            ProxSchedule::PolyDecay { c, alpha } => ProxTolerance::GapBelow(c / kf.powf(alpha)),
            ProxSchedule::GeometricDecay { c, q } => ProxTolerance::GapBelow(c * q.powf(kf)),
            ProxSchedule::Constant(eps) => ProxTolerance::GapBelow(eps),
            ProxSchedule::FixedSweeps(n) => ProxTolerance::Sweeps(n),
        }
    }

    /// `‖e_k‖` at outer iteration `k ≥ 1`.
    pub fn gradient_error_at(&self, k: usize) -> T {
        let kf = T::from_usize_lossy(k);
        match self.gradient {
            GradientErrorSchedule::None => T::zero(),
            GradientErrorSchedule::PolyDecay { c, alpha } => c / kf.powf(alpha),
            GradientErrorSchedule::GeometricDecay { c, q } => c * q.powf(kf),
        }
    }
}

/// One outer iteration of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord<T> {
    pub k: usize,
    pub f_xk: T,
    /// Objective at the running average `(1/k) Σ_{i=1..k} x_i`.
    pub f_avg: T,
    /// Lowest `f(x_i)` seen so far.
    pub f_best: T,
    pub dist_to_opt: Option<T>,
    /// Certified gap actually achieved by the prox.
    pub eps_used: T,
    /// Scheduled gap target, when the schedule is gap-based.
    pub eps_requested: Option<T>,
    pub grad_err_norm: T,
    pub inner_iters: usize,
    pub cumulative_inner_iters: usize,
    pub l_estimate: T,
}

/// Which objective column a suboptimality series is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMetric {
    LastIterate,
    AveragedIterate,
    BestIterate,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterateTrace<T> {
    records: Vec<IterateRecord<T>>,
}

impl<T: Scalar> IterateTrace<T> {
    pub fn new() -> Self {
        Self { records: Vec::new() }
    }

    /// Appends a record; `k` must exceed the previous one.
    pub fn push(&mut self, record: IterateRecord<T>) {
        let expected = self.records.last().map_or(1, |r| r.k + 1);
        assert!(record.k >= expected, "trace indices must be strictly increasing from 1");
        self.records.push(record);
    }

    pub fn records(&self) -> &[IterateRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterateRecord<T>> {
        self.records.last()
    }

    pub fn eps_used(&self) -> Vec<T> {
        self.records.iter().map(|r| r.eps_used).collect()
    }

    pub fn grad_err_norms(&self) -> Vec<T> {
        self.records.iter().map(|r| r.grad_err_norm).collect()
    }

    /// `(k, f − f*)` pairs for the chosen objective column.
    pub fn suboptimality(&self, f_star: T, metric: TraceMetric) -> Vec<(usize, T)> {
        self.records
            .iter()
            .map(|r| {
                let f = match metric {
                    TraceMetric::LastIterate => r.f_xk,
                    TraceMetric::AveragedIterate => r.f_avg,
                    TraceMetric::BestIterate => r.f_best,
                };
                (r.k, f - f_star)
            })
            .collect()
    }
}
