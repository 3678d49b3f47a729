//! Basic and accelerated inexact proximal-gradient methods.
//!
//! Every method iterates `x_k = prox_L[y_{k−1} − (g'(y_{k−1}) + e_k)/L]` with the prox
//! solved to the scheduled accuracy; they differ only in how `y_k` is extrapolated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dim, dist, dot, norm, norm_sq, sub};
use crate::problem::{
    CompositeProblem, ErrorDirection, ErrorSchedule, IterateRecord, IterateTrace, ProxTolerance, SmoothTerm,
};
use crate::scalar::Scalar;

/// Abort threshold for `f(x_k) − f(x_0)`.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Upper limit for a doubled Lipschitz estimate.
pub const LIPSCHITZ_CAP: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `y_k = x_k`
    BasicConvex,
    /// `y_k = x_k + (k−1)/(k+2)·(x_k − x_{k−1})`
    AccelConvex,
    /// `y_k = x_k`, analysed under strong convexity
    BasicStrong,
    /// `y_k = x_k + (1−√γ)/(1+√γ)·(x_k − x_{k−1})`, `γ = μ/L`
    AccelStrong,
}

impl Variant {
    pub fn is_strong(self) -> bool {
        matches!(self, Variant::BasicStrong | Variant::AccelStrong)
    }

    pub fn is_accelerated(self) -> bool {
        matches!(self, Variant::AccelConvex | Variant::AccelStrong)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LipschitzMode<T> {
    Fixed(T),
    /// Start from `L₀` and double whenever the quadratic upper bound fails.
    Doubling(T),
}

impl<T: Scalar> LipschitzMode<T> {
    pub fn initial(self) -> T {
        match self {
            LipschitzMode::Fixed(l) | LipschitzMode::Doubling(l) => l,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub variant: Variant,
    pub max_outer: usize,
    pub schedule: ErrorSchedule<T>,
    pub l_mode: LipschitzMode<T>,
    /// Strong-convexity modulus; must be positive for the strong variants.
    pub mu: T,
    pub x0: Vec<T>,
    pub seed: u64,
    /// Reference optimum for the `dist_to_opt` column.
    pub x_star: Option<Vec<T>>,
    /// Stop once the cumulative inner-iteration count reaches this value.
    pub inner_budget: Option<usize>,
    /// Keep every `x_k` and the extrapolated point `y_{k−1}` it was computed from.
    pub keep_path: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(variant: Variant, x0: Vec<T>, l_mode: LipschitzMode<T>, max_outer: usize) -> Self {
        Self {
            variant,
            max_outer,
            schedule: ErrorSchedule::exact(),
            l_mode,
            mu: T::zero(),
            x0,
            seed: 0,
            x_star: None,
            inner_budget: None,
            keep_path: false,
        }
    }

    pub fn with_path(mut self) -> Self {
        self.keep_path = true;
        self
    }

    pub fn with_schedule(mut self, schedule: ErrorSchedule<T>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_mu(mut self, mu: T) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reference(mut self, x_star: Vec<T>) -> Self {
        self.x_star = Some(x_star);
        self
    }

    pub fn with_inner_budget(mut self, budget: usize) -> Self {
        self.inner_budget = Some(budget);
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        check_dim(dim, self.x0.len())?;
        if let Some(xs) = &self.x_star {
            check_dim(dim, xs.len())?;
        }
        if self.max_outer == 0 {
            return Err(invalid("max_outer must be positive"));
        }
        if self.inner_budget == Some(0) {
            return Err(invalid("inner budget must be positive"));
        }
        let l0 = self.l_mode.initial();
        if !(l0 > T::zero()) || !l0.is_finite() {
            return Err(invalid(format!("Lipschitz estimate must be positive and finite, got {l0}")));
        }
        if self.variant.is_strong() {
            if !(self.mu > T::zero()) {
                return Err(invalid("strongly convex variants need μ > 0"));
            }
            if self.mu > l0 {
                return Err(invalid(format!("μ = {} exceeds L = {l0}", self.mu)));
            }
        } else if self.mu < T::zero() {
            return Err(invalid("μ must be nonnegative"));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<T> {
    pub trace: IterateTrace<T>,
    pub final_x: Vec<T>,
    /// `(1/k) Σ_{i=1..k} x_i` at the last iteration.
    pub final_avg_x: Vec<T>,
    /// Lipschitz estimate used for each accepted step.
    pub l_history: Vec<T>,
    /// `(y_{k−1}, x_k)` per iteration, when `keep_path` is set.
    pub path: Vec<(Vec<T>, Vec<T>)>,
}

/// Output of one inexact proximal-gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T> {
    pub x: Vec<T>,
    pub eps_achieved: T,
    pub e_norm: T,
    pub inner_iters: usize,
}

/// Gradient error `e_k`: norm from the schedule at `k`, direction from its rule.
pub fn make_error_vector<T: Scalar>(schedule: &ErrorSchedule<T>, k: usize, grad: &[T], seed: u64) -> Vec<T> {
    let eta = schedule.gradient_error_at(k.max(1));
    let d = grad.len();
    if eta == T::zero() || d == 0 {
        return vec![T::zero(); d];
    }
    match schedule.direction {
        ErrorDirection::TowardAscent => {
            let n = norm(grad);
            if n == T::zero() {
                vec![T::zero(); d]
            } else {
                grad.iter().map(|&g| eta * g / n).collect()
            }
        }
        ErrorDirection::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm(&v);
            v.iter().map(|&c| eta * T::lit(c / n)).collect()
        }
    }
}

/// `g(x) ≤ g(y) + ⟨g'(y), x − y⟩ + (L/2)‖x − y‖²`, up to a round-off allowance
/// proportional to the magnitudes involved.
pub fn descent_condition_holds<T: Scalar>(g: &dyn SmoothTerm<T>, x: &[T], y: &[T], grad_y: &[T], l: T) -> bool {
    let d = sub(x, y);
    let gx = g.value(x);
    let gy = g.value(y);
    let lin = dot(grad_y, &d);
    let quad = l * T::lit(0.5) * norm_sq(&d);
    let slack = T::epsilon() * T::lit(16.0) * (gx.abs() + gy.abs() + lin.abs() + quad);
    gx <= gy + lin + quad + slack
}

/// Returns `2L` when `x_k` violates the quadratic upper bound around `y_{k−1}`, else `L`.
pub fn estimate_lipschitz_doubling<T: Scalar>(
    problem: &CompositeProblem<T>,
    x_k: &[T],
    y_prev: &[T],
    l: T,
) -> Result<T> {
    check_dim(problem.dim(), x_k.len())?;
    check_dim(problem.dim(), y_prev.len())?;
    if !(l > T::zero()) {
        return Err(invalid("Lipschitz estimate must be positive"));
    }
    let g = problem.smooth();
    if descent_condition_holds(g, x_k, y_prev, &g.gradient(y_prev), l) {
        return Ok(l);
    }
    let doubled = l + l;
    if doubled > T::lit(LIPSCHITZ_CAP) {
        return Err(Error::LipschitzOverflow(doubled.as_f64()));
    }
    Ok(doubled)
}

fn step_from_gradient<T: Scalar>(
    problem: &CompositeProblem<T>,
    y_prev: &[T],
    grad: &[T],
    e: &[T],
    tol: ProxTolerance<T>,
    l: T,
) -> Result<StepOutput<T>> {
    let inv_l = T::one() / l;
    let z: Vec<T> = y_prev
        .iter()
        .zip(grad.iter().zip(e))
        .map(|(&y, (&g, &ei))| y - inv_l * (g + ei))
        .collect();
    let r = problem.nonsmooth().prox(&z, l, tol)?;
    Ok(StepOutput { x: r.point, eps_achieved: r.certified_gap, e_norm: norm(e), inner_iters: r.inner_iterations })
}

/// One step `x_k = prox_L[y_{k−1} − (g'(y_{k−1}) + e_k)/L]` with the prox solved to
/// the schedule's tolerance at `k`.
pub fn step_inexact_pg<T: Scalar>(
    problem: &CompositeProblem<T>,
    y_prev: &[T],
    k: usize,
    schedule: &ErrorSchedule<T>,
    l: T,
    seed: u64,
) -> Result<StepOutput<T>> {
    check_dim(problem.dim(), y_prev.len())?;
    if !(l > T::zero()) {
        return Err(invalid("Lipschitz estimate must be positive"));
    }
    if k == 0 {
        return Err(invalid("iteration counter starts at 1"));
    }
    let grad = problem.smooth().gradient(y_prev);
    let e = make_error_vector(schedule, k, &grad, seed);
    step_from_gradient(problem, y_prev, &grad, &e, schedule.tolerance_at(k), l)
}

fn run_loop<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &SolverConfig<T>,
    momentum: impl Fn(usize, T) -> T,
) -> Result<RunResult<T>> {
    config.validate(problem.dim())?;
    let g = problem.smooth();
    let doubling = matches!(config.l_mode, LipschitzMode::Doubling(_));
    let mut l = config.l_mode.initial();

    let f0 = problem.objective(&config.x0)?;
    let guard = f0 + T::lit(DIVERGENCE_THRESHOLD);
    let mut x_prev = config.x0.clone();
    let mut y = config.x0.clone();
    let mut avg = vec![T::zero(); problem.dim()];
    let mut trace = IterateTrace::new();
    let mut l_history = Vec::new();
    let mut f_best = T::infinity();
    let mut cumulative = 0usize;
    let mut path = Vec::new();

    for k in 1..=config.max_outer {
        let grad = g.gradient(&y);
        let e = make_error_vector(&config.schedule, k, &grad, config.seed);
        let tol = config.schedule.tolerance_at(k);
        let mut step = step_from_gradient(problem, &y, &grad, &e, tol, l)?;
        let mut inner = step.inner_iters;
        if doubling {
            while !descent_condition_holds(g, &step.x, &y, &grad, l) {
                l = l + l;
                if l > T::lit(LIPSCHITZ_CAP) {
                    return Err(Error::LipschitzOverflow(l.as_f64()));
                }
                step = step_from_gradient(problem, &y, &grad, &e, tol, l)?;
                inner += step.inner_iters;
            }
        }
        cumulative += inner;

        let x = step.x;
        let kf = T::from_usize_lossy(k);
        for (a, &xi) in avg.iter_mut().zip(&x) {
            *a = *a + (xi - *a) / kf;
        }
        let f_xk = problem.objective(&x)?;
        if f_xk > guard || f_xk.is_nan() {
            return Err(Error::Divergence { k, value: f_xk.as_f64(), initial: f0.as_f64() });
        }
        f_best = f_best.min(f_xk);
        trace.push(IterateRecord {
            k,
            f_xk,
            f_avg: problem.objective(&avg)?,
            f_best,
            dist_to_opt: config.x_star.as_ref().map(|xs| dist(&x, xs)),
            eps_used: step.eps_achieved,
            eps_requested: match tol {
                ProxTolerance::GapBelow(eps) => Some(eps),
                _ => None,
            },
            grad_err_norm: step.e_norm,
            inner_iters: inner,
            cumulative_inner_iters: cumulative,
            l_estimate: l,
        });
        l_history.push(l);
        if config.keep_path {
            path.push((y.clone(), x.clone()));
        }

        let beta = momentum(k, l);
        y = x.iter().zip(&x_prev).map(|(&a, &b)| a + beta * (a - b)).collect();
        x_prev = x;
        if config.inner_budget.is_some_and(|b| cumulative >= b) {
            break;
        }
    }
    Ok(RunResult { trace, final_x: x_prev, final_avg_x: avg, l_history, path })
}

/// Basic method, `y_k = x_k`.
pub fn run_basic_pg<T: Scalar>(problem: &CompositeProblem<T>, config: &SolverConfig<T>) -> Result<RunResult<T>> {
    if config.variant.is_accelerated() {
        return Err(invalid(format!("{:?} is not a basic variant", config.variant)));
    }
    run_loop(problem, config, |_, _| T::zero())
}

/// Accelerated method for convex `g`, `β_k = (k−1)/(k+2)`.
pub fn run_accel_pg_convex<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &SolverConfig<T>,
) -> Result<RunResult<T>> {
    if config.variant != Variant::AccelConvex {
        return Err(invalid(format!("expected AccelConvex, got {:?}", config.variant)));
    }
    run_loop(problem, config, |k, _| convex_momentum(k))
}

/// Accelerated method for `μ`-strongly convex `g`, `β = (1−√γ)/(1+√γ)` with `γ = μ/L`
/// for the current estimate `L`.
pub fn run_accel_pg_strong<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &SolverConfig<T>,
) -> Result<RunResult<T>> {
    if config.variant != Variant::AccelStrong {
        return Err(invalid(format!("expected AccelStrong, got {:?}", config.variant)));
    }
    let mu = config.mu;
    run_loop(problem, config, move |_, l| strong_momentum(mu / l))
}

/// Dispatches on `config.variant`.
pub fn run<T: Scalar>(problem: &CompositeProblem<T>, config: &SolverConfig<T>) -> Result<RunResult<T>> {
    match config.variant {
        Variant::BasicConvex | Variant::BasicStrong => run_basic_pg(problem, config),
        Variant::AccelConvex => run_accel_pg_convex(problem, config),
        Variant::AccelStrong => run_accel_pg_strong(problem, config),
    }
}

/// `(k−1)/(k+2)`
pub fn convex_momentum<T: Scalar>(k: usize) -> T {
    let k = T::from_usize_lossy(k);
    (k - T::one()) / (k + T::lit(2.0))
}

/// `(1−√γ)/(1+√γ)`
pub fn strong_momentum<T: Scalar>(gamma: T) -> T {
    let s = gamma.min(T::one()).sqrt();
    (T::one() - s) / (T::one() + s)
}
