//! Theoretical convergence bounds of the inexact basic and accelerated methods,
//! evaluated on realised error sequences.
//!
//! With `a_i = ‖e_i‖/L + √(2ε_i/L)`:
//!
//! | bound      | controls        | value                                                        |
//! |------------|-----------------|--------------------------------------------------------------|
//! | basic      | `f(x̄_k) − f*`   | `L/(2k)·(‖x₀−x*‖ + 2A_k + √(2B_k))²`, `A_k = Σ a_i`, `B_k = Σ ε_i/L` |
//! | accel      | `f(x_k) − f*`   | `2L/(k+1)²·(‖x₀−x*‖ + 2Ã_k + √(2B̃_k))²`, `Ã_k = Σ i·a_i`, `B̃_k = Σ i²ε_i/L` |
//! | basic, μ>0 | `‖x_k − x*‖`    | `(1−γ)^k (‖x₀−x*‖ + Ā_k)`, `Ā_k = Σ (1−γ)^{−i} a_i`           |
//! | accel, μ>0 | `f(x_k) − f*`   | `(1−√γ)^k (√(2(f(x₀)−f*)) + Â_k√(2/μ) + √B̂_k)²`               |
//!
//! where `Â_k = Σ (‖e_i‖ + √(2Lε_i))(1−√γ)^{−i/2}`, `B̂_k = Σ ε_i (1−√γ)^{−i}` and `γ = μ/L`.

use crate::error::{invalid, Error, Result};
use crate::problem::{IterateTrace, TraceMetric};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs<T> {
    pub l: T,
    pub mu: T,
    /// `‖x₀ − x*‖`
    pub dist0: T,
    /// `f(x₀) − f(x*)`
    pub f0_gap: T,
    /// Realised prox errors `ε_1..ε_k`.
    pub eps: Vec<T>,
    /// Realised gradient-error norms `‖e_1‖..‖e_k‖`.
    pub e_norms: Vec<T>,
}

impl<T: Scalar> BoundInputs<T> {
    /// Reads the realised `ε_i` and `‖e_i‖` from a trace.
    pub fn from_trace(trace: &IterateTrace<T>, l: T, mu: T, dist0: T, f0_gap: T) -> Self {
        Self { l, mu, dist0, f0_gap, eps: trace.eps_used(), e_norms: trace.grad_err_norms() }
    }

    pub fn error_free(l: T, mu: T, dist0: T, f0_gap: T, k: usize) -> Self {
        Self { l, mu, dist0, f0_gap, eps: vec![T::zero(); k], e_norms: vec![T::zero(); k] }
    }

    fn validate(&self, needs_mu: bool) -> Result<()> {
        if self.eps.is_empty() || self.e_norms.is_empty() {
            return Err(Error::EmptySequence);
        }
        if self.eps.len() != self.e_norms.len() {
            return Err(Error::DimensionMismatch { expected: self.eps.len(), found: self.e_norms.len() });
        }
        if !(self.l > T::zero()) {
            return Err(invalid("L must be positive"));
        }
        if !(self.dist0 >= T::zero()) || !(self.f0_gap >= T::zero()) {
            return Err(invalid("initial distance and gap must be nonnegative"));
        }
        if self.eps.iter().chain(&self.e_norms).any(|v| !(*v >= T::zero())) {
            return Err(invalid("error sequences must be nonnegative"));
        }
        if needs_mu {
            if !(self.mu > T::zero()) {
                return Err(invalid("strongly convex bounds need μ > 0"));
            }
            if self.mu > self.l {
                return Err(invalid("μ must not exceed L"));
            }
        }
        Ok(())
    }

    fn a_term(&self, i: usize) -> T {
        self.e_norms[i] / self.l + (T::lit(2.0) * self.eps[i] / self.l).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Basic method, convex: bounds `f(x̄_k) − f*`.
    BasicConvex,
    /// Accelerated method, convex: bounds `f(x_k) − f*`.
    AccelConvex,
    /// Basic method, strongly convex: bounds `‖x_k − x*‖`.
    BasicStrong,
    /// Accelerated method, strongly convex: bounds `f(x_k) − f*`.
    AccelStrong,
}

impl BoundKind {
    /// Trace column the bound controls; `None` for the iterate-distance bound.
    pub fn metric(self) -> Option<TraceMetric> {
        match self {
            BoundKind::BasicConvex => Some(TraceMetric::AveragedIterate),
            BoundKind::AccelConvex | BoundKind::AccelStrong => Some(TraceMetric::LastIterate),
            BoundKind::BasicStrong => None,
        }
    }
}

/// Cumulative error series and the resulting per-k bound (index `k − 1`).
///
/// `a` holds `A_k`, `Ã_k`, `Ā_k` or `Â_k` and `b` holds `B_k`, `B̃_k` or `B̂_k`
/// according to `kind` (`b` is all zeros for the strongly convex basic bound).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSeries<T> {
    pub kind: BoundKind,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub value: Vec<T>,
}

/// Basic method, convex `g`.
pub fn bound_prop1<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundSeries<T>> {
    inputs.validate(false)?;
    let two = T::lit(2.0);
    let (mut a_k, mut b_k) = (T::zero(), T::zero());
    let n = inputs.eps.len();
    let (mut a, mut b, mut value) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        a_k = a_k + inputs.a_term(i);
        b_k = b_k + inputs.eps[i] / inputs.l;
        let k = T::from_usize_lossy(i + 1);
        let inner = inputs.dist0 + two * a_k + (two * b_k).sqrt();
        value.push(inputs.l / (two * k) * inner * inner);
        a.push(a_k);
        b.push(b_k);
    }
    Ok(BoundSeries { kind: BoundKind::BasicConvex, a, b, value })
}

/// Accelerated method with `β_k = (k−1)/(k+2)`, convex `g`.
pub fn bound_prop2<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundSeries<T>> {
    inputs.validate(false)?;
    let two = T::lit(2.0);
    let (mut a_k, mut b_k) = (T::zero(), T::zero());
    let n = inputs.eps.len();
    let (mut a, mut b, mut value) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let k = T::from_usize_lossy(i + 1);
        a_k = a_k + k * inputs.a_term(i);
        b_k = b_k + k * k * inputs.eps[i] / inputs.l;
        let inner = inputs.dist0 + two * a_k + (two * b_k).sqrt();
        let kp1 = k + T::one();
        value.push(two * inputs.l / (kp1 * kp1) * inner * inner);
        a.push(a_k);
        b.push(b_k);
    }
    Ok(BoundSeries { kind: BoundKind::AccelConvex, a, b, value })
}

/// `ln(e^acc + e^term)`, treating `−∞` as an empty sum.
fn log_add<T: Scalar>(acc: T, term: T) -> T {
    if acc == T::neg_infinity() {
        return term;
    }
    if term == T::neg_infinity() {
        return acc;
    }
    let (hi, lo) = if acc > term { (acc, term) } else { (term, acc) };
    hi + (lo - hi).exp().ln_1p()
}

/// Basic method, `μ`-strongly convex `g`: bound on `‖x_k − x*‖`.
///
/// The bound is accumulated as `V_k = (1−γ)V_{k−1} + a_k`, `V_0 = ‖x₀−x*‖`, which
/// equals `(1−γ)^k(‖x₀−x*‖ + Ā_k)` without forming the growing factors `(1−γ)^{−i}`.
/// `Ā_k` itself is reported from a log-space accumulation.
pub fn bound_prop3<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundSeries<T>> {
    inputs.validate(true)?;
    let gamma = inputs.mu / inputs.l;
    let rate = (T::one() - gamma).max(T::zero());
    let log_rate = rate.ln();
    let n = inputs.eps.len();
    let mut v = inputs.dist0;
    let mut log_a = T::neg_infinity();
    let (mut a, mut value) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let term = inputs.a_term(i);
        v = rate * v + term;
        let k = T::from_usize_lossy(i + 1);
        if term > T::zero() {
            log_a = log_add(log_a, term.ln() - k * log_rate);
        }
        a.push(if log_a.is_nan() { T::infinity() } else { log_a.exp() });
        value.push(v);
    }
    Ok(BoundSeries { kind: BoundKind::BasicStrong, a, b: vec![T::zero(); n], value })
}

/// Accelerated method with `β = (1−√γ)/(1+√γ)`, `μ`-strongly convex `g`.
///
/// Uses the scaled accumulators `P_k = ρ^{k/2}Â_k = ρ^{1/2}P_{k−1} + (‖e_k‖ + √(2Lε_k))`
/// and `Q_k = ρ^k B̂_k = ρQ_{k−1} + ε_k` with `ρ = 1−√γ`, so the value is
/// `(ρ^{k/2}√(2(f(x₀)−f*)) + P_k√(2/μ) + √Q_k)²`.
pub fn bound_prop4<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundSeries<T>> {
    inputs.validate(true)?;
    let two = T::lit(2.0);
    let gamma = inputs.mu / inputs.l;
    let rho = (T::one() - gamma.sqrt()).max(T::zero());
    let sqrt_rho = rho.sqrt();
    let log_rho = rho.ln();
    let start = (two * inputs.f0_gap).sqrt();
    let scale_mu = (two / inputs.mu).sqrt();
    let n = inputs.eps.len();
    let (mut p, mut q, mut lead) = (T::zero(), T::zero(), start);
    let (mut log_a, mut log_b) = (T::neg_infinity(), T::neg_infinity());
    let (mut a, mut b, mut value) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let k = T::from_usize_lossy(i + 1);
        let e_term = inputs.e_norms[i] + (two * inputs.l * inputs.eps[i]).sqrt();
        p = sqrt_rho * p + e_term;
        q = rho * q + inputs.eps[i];
        lead = lead * sqrt_rho;
        let inner = lead + p * scale_mu + q.sqrt();
        value.push(inner * inner);

        if e_term > T::zero() {
            log_a = log_add(log_a, e_term.ln() - k * T::lit(0.5) * log_rho);
        }
        if inputs.eps[i] > T::zero() {
            log_b = log_add(log_b, inputs.eps[i].ln() - k * log_rho);
        }
        a.push(if log_a.is_nan() { T::infinity() } else { log_a.exp() });
        b.push(if log_b.is_nan() { T::infinity() } else { log_b.exp() });
    }
    Ok(BoundSeries { kind: BoundKind::AccelStrong, a, b, value })
}

/// Dispatches on the bound kind.
pub fn bound_for<T: Scalar>(kind: BoundKind, inputs: &BoundInputs<T>) -> Result<BoundSeries<T>> {
    match kind {
        BoundKind::BasicConvex => bound_prop1(inputs),
        BoundKind::AccelConvex => bound_prop2(inputs),
        BoundKind::BasicStrong => bound_prop3(inputs),
        BoundKind::AccelStrong => bound_prop4(inputs),
    }
}

/// Bound on `u_k` for any nonnegative sequence with
/// `u_k² ≤ S_k + Σ_{i≤k} λ_i u_i`: `½Σλ_i + √(S_k + (½Σλ_i)²)`.
///
/// `s` and `lambda` hold `S_1..S_n` and `λ_1..λ_n`; `k` is 1-based.
pub fn lemma1_bound<T: Scalar>(s: &[T], lambda: &[T], k: usize) -> Result<T> {
    if s.is_empty() || lambda.is_empty() {
        return Err(Error::EmptySequence);
    }
    if k == 0 || k > s.len() || k > lambda.len() {
        return Err(invalid(format!("k = {k} outside 1..={}", s.len().min(lambda.len()))));
    }
    if let Some(i) = (1..k).find(|&i| s[i] < s[i - 1]) {
        return Err(Error::NotNondecreasing(i));
    }
    if lambda[..k].iter().any(|l| !(*l >= T::zero())) {
        return Err(invalid("λ_i must be nonnegative"));
    }
    if !(s[0] >= T::zero()) {
        return Err(invalid("S must be nonnegative"));
    }
    let half: T = lambda[..k].iter().copied().sum::<T>() * T::lit(0.5);
    Ok(half + (s[k - 1] + half * half).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Slope of `log(f − f*)` against `log k`.
    PowerLaw,
    /// Slope of `log(f − f*)` against `k`.
    Geometric,
}

/// Least-squares slope over `k_min ≤ k ≤ k_max` of a `(k, f_k − f*)` series.
pub fn fit_rate_slope<T: Scalar>(series: &[(usize, T)], k_min: usize, k_max: usize, mode: RateMode) -> Result<T> {
    if k_min == 0 || k_max <= k_min {
        return Err(invalid(format!("need 1 ≤ k_min < k_max, got [{k_min}, {k_max}]")));
    }
    let mut pts = Vec::new();
    for &(k, v) in series.iter().filter(|(k, _)| (k_min..=k_max).contains(k)) {
        if !(v > T::zero()) {
            return Err(Error::NonpositiveSuboptimality { k, value: v.as_f64() });
        }
        let x = match mode {
            RateMode::PowerLaw => (k as f64).ln(),
            RateMode::Geometric => k as f64,
        };
        pts.push((x, v.as_f64().ln()));
    }
    if pts.len() < 2 {
        return Err(invalid("fewer than two points inside the fitting window"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(T::lit(sxy / sxx))
}

/// Fits the chosen objective column of a trace against `f*`.
pub fn fit_trace_slope<T: Scalar>(
    trace: &IterateTrace<T>,
    f_star: T,
    metric: TraceMetric,
    k_min: usize,
    k_max: usize,
    mode: RateMode,
) -> Result<T> {
    fit_rate_slope(&trace.suboptimality(f_star, metric), k_min, k_max, mode)
}
