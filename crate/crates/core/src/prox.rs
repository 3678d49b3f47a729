//! Proximity operators.
//!
//! Closed-form operators for `λ‖·‖₁` and disjoint group-ℓ2 norms, and the overlapping
//! row/column group-ℓ2 norm of a matrix variable, solved by two-block proximal Dykstra
//! with a Fenchel duality gap as the certificate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dim, dist_sq_half, norm, norm_sq};
use crate::problem::{proximal_objective, NonsmoothTerm, ProxResult, ProxTolerance};
use crate::scalar::Scalar;

/// Hard cap on Dykstra sweeps for a single prox call.
pub const MAX_SWEEPS: usize = 1_000_000;

fn check_scale<T: Scalar>(l: T) -> Result<()> {
    if l > T::zero() && l.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("prox scale L must be positive and finite, got {l}")))
    }
}

/// Block shrinkage factor `max(1 − τ/‖v‖, 0)`, with 0 for a zero block.
#[inline]
fn shrink_factor<T: Scalar>(block_norm: T, tau: T) -> T {
    if block_norm > tau {
        T::one() - tau / block_norm
    } else {
        T::zero()
    }
}

/// `h ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroTerm {
    dim: usize,
}

impl ZeroTerm {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl<T: Scalar> NonsmoothTerm<T> for ZeroTerm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[T]) -> T {
        T::zero()
    }
    fn prox(&self, y: &[T], l: T, _tol: ProxTolerance<T>) -> Result<ProxResult<T>> {
        check_dim(self.dim, y.len())?;
        check_scale(l)?;
        Ok(ProxResult::exact(y.to_vec()))
    }
}

/// Soft threshold: `x_i = sign(y_i)·max(|y_i| − λ/L, 0)`.
pub fn prox_l1<T: Scalar>(y: &[T], l: T, lambda: T) -> Result<Vec<T>> {
    check_scale(l)?;
    if !(lambda >= T::zero()) {
        return Err(invalid(format!("λ must be nonnegative, got {lambda}")));
    }
    let tau = lambda / l;
    Ok(y.iter().map(|&v| v.signum() * (v.abs() - tau).max(T::zero())).collect())
}

/// `λ‖x‖₁`
#[derive(Debug, Clone, Copy)]
pub struct L1Norm<T> {
    dim: usize,
    lambda: T,
}

impl<T: Scalar> L1Norm<T> {
    pub fn new(dim: usize, lambda: T) -> Result<Self> {
        if !(lambda >= T::zero()) {
            return Err(invalid("λ must be nonnegative"));
        }
        Ok(Self { dim, lambda })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }
}

impl<T: Scalar> NonsmoothTerm<T> for L1Norm<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[T]) -> T {
        self.lambda * x.iter().map(|v| v.abs()).sum::<T>()
    }
    fn prox(&self, y: &[T], l: T, _tol: ProxTolerance<T>) -> Result<ProxResult<T>> {
        check_dim(self.dim, y.len())?;
        prox_l1(y, l, self.lambda).map(ProxResult::exact)
    }
}

/// Index sets over `0..dim` with one positive weight per group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure<T> {
    dim: usize,
    groups: Vec<Vec<usize>>,
    weights: Vec<T>,
}

impl<T: Scalar> GroupStructure<T> {
    pub fn new(dim: usize, groups: Vec<Vec<usize>>, weights: Vec<T>) -> Result<Self> {
        check_dim(groups.len(), weights.len())?;
        if let Some(w) = weights.iter().find(|w| !(**w > T::zero())) {
            return Err(invalid(format!("group weights must be positive, got {w}")));
        }
        if let Some(&i) = groups.iter().flatten().find(|&&i| i >= dim) {
            return Err(invalid(format!("group index {i} out of range for dimension {dim}")));
        }
        Ok(Self { dim, groups, weights })
    }

    /// Consecutive blocks of `size` entries, all with weight `w`.
    pub fn contiguous(dim: usize, size: usize, w: T) -> Result<Self> {
        if size == 0 || !dim.is_multiple_of(size) {
            return Err(invalid(format!("block size {size} does not divide dimension {dim}")));
        }
        let groups = (0..dim / size).map(|g| (g * size..(g + 1) * size).collect()).collect();
        Self::new(dim, groups, vec![w; dim / size])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// First index shared by two groups, if any.
    pub fn first_overlap(&self) -> Option<usize> {
        let mut seen = vec![false; self.dim];
        for &i in self.groups.iter().flatten() {
            if seen[i] {
                return Some(i);
            }
            seen[i] = true;
        }
        None
    }

    pub fn is_disjoint(&self) -> bool {
        self.first_overlap().is_none()
    }

    /// `Σ_g w_g ‖x_g‖₂`
    pub fn value(&self, x: &[T]) -> T {
        self.groups
            .iter()
            .zip(&self.weights)
            .map(|(g, &w)| w * g.iter().map(|&i| x[i] * x[i]).sum::<T>().sqrt())
            .sum()
    }
}

/// Block soft threshold `x_g = max(1 − w_g/(L‖y_g‖), 0)·y_g` over disjoint groups.
/// Entries outside every group are left unchanged.
pub fn prox_group_l2<T: Scalar>(y: &[T], l: T, groups: &GroupStructure<T>) -> Result<Vec<T>> {
    check_scale(l)?;
    check_dim(groups.dim, y.len())?;
    if let Some(i) = groups.first_overlap() {
        return Err(Error::OverlappingGroups(i));
    }
    let mut x = y.to_vec();
    for (g, &w) in groups.groups.iter().zip(&groups.weights) {
        let n = g.iter().map(|&i| y[i] * y[i]).sum::<T>().sqrt();
        let s = shrink_factor(n, w / l);
        for &i in g {
            x[i] = s * y[i];
        }
    }
    Ok(x)
}

/// `Σ_g w_g ‖x_g‖₂` for disjoint groups.
#[derive(Debug, Clone)]
pub struct GroupL2Norm<T> {
    groups: GroupStructure<T>,
}

impl<T: Scalar> GroupL2Norm<T> {
    pub fn new(groups: GroupStructure<T>) -> Result<Self> {
        if let Some(i) = groups.first_overlap() {
            return Err(Error::OverlappingGroups(i));
        }
        Ok(Self { groups })
    }
}

impl<T: Scalar> NonsmoothTerm<T> for GroupL2Norm<T> {
    fn dim(&self) -> usize {
        self.groups.dim
    }
    fn value(&self, x: &[T]) -> T {
        self.groups.value(x)
    }
    fn prox(&self, y: &[T], l: T, _tol: ProxTolerance<T>) -> Result<ProxResult<T>> {
        prox_group_l2(y, l, &self.groups).map(ProxResult::exact)
    }
}

/// Row and column group-ℓ2 penalty `λ_row Σ_i ‖Xⁱ‖ + λ_col Σ_j ‖X_j‖` on an
/// `n_rows × n_cols` matrix stored flat in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowColGroups<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub lambda_row: T,
    pub lambda_col: T,
}

impl<T: Scalar> RowColGroups<T> {
    pub fn new(n_rows: usize, n_cols: usize, lambda_row: T, lambda_col: T) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(invalid("row/column counts must be positive"));
        }
        if !(lambda_row >= T::zero()) || !(lambda_col >= T::zero()) {
            return Err(invalid("row/column weights must be nonnegative"));
        }
        Ok(Self { n_rows, n_cols, lambda_row, lambda_col })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n_rows * self.n_cols
    }

    fn row_norm(&self, x: &[T], i: usize) -> T {
        norm(&x[i * self.n_cols..(i + 1) * self.n_cols])
    }

    fn col_norm(&self, x: &[T], j: usize) -> T {
        (0..self.n_rows).map(|i| x[i * self.n_cols + j].powi(2)).sum::<T>().sqrt()
    }

    pub fn value(&self, x: &[T]) -> T {
        let rows = if self.lambda_row > T::zero() {
            self.lambda_row * (0..self.n_rows).map(|i| self.row_norm(x, i)).sum::<T>()
        } else {
            T::zero()
        };
        let cols = if self.lambda_col > T::zero() {
            self.lambda_col * (0..self.n_cols).map(|j| self.col_norm(x, j)).sum::<T>()
        } else {
            T::zero()
        };
        rows + cols
    }

    /// Number of entirely zero rows and columns of `x`.
    pub fn zero_rows_cols(&self, x: &[T]) -> (usize, usize) {
        let r = (0..self.n_rows).filter(|&i| self.row_norm(x, i) == T::zero()).count();
        let c = (0..self.n_cols).filter(|&j| self.col_norm(x, j) == T::zero()).count();
        (r, c)
    }

    fn shrink_rows(&self, w: &mut [T], tau: T) {
        for i in 0..self.n_rows {
            let s = shrink_factor(self.row_norm(w, i), tau);
            w[i * self.n_cols..(i + 1) * self.n_cols].iter_mut().for_each(|v| *v = *v * s);
        }
    }

    fn shrink_cols(&self, w: &mut [T], tau: T) {
        for j in 0..self.n_cols {
            let s = shrink_factor(self.col_norm(w, j), tau);
            for i in 0..self.n_rows {
                let v = &mut w[i * self.n_cols + j];
                *v = *v * s;
            }
        }
    }

    fn project_rows(&self, u: &mut [T], radius: T) {
        for i in 0..self.n_rows {
            let n = self.row_norm(u, i);
            if n > radius {
                let s = radius / n;
                u[i * self.n_cols..(i + 1) * self.n_cols].iter_mut().for_each(|v| *v = *v * s);
            }
        }
    }

    fn project_cols(&self, v: &mut [T], radius: T) {
        for j in 0..self.n_cols {
            let n = self.col_norm(v, j);
            if n > radius {
                let s = radius / n;
                for i in 0..self.n_rows {
                    let e = &mut v[i * self.n_cols + j];
                    *e = *e * s;
                }
            }
        }
    }
}

/// Stopping rule for [`prox_overlap_bcd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcdStop<T> {
    GapBelow(T),
    Sweeps(usize),
}

/// Iterate of the two-block proximal Dykstra recursion.
///
/// After every full sweep `z = y − (p_row + p_col)`; `L·p_row` and `L·p_col` are the
/// dual variables of the row and column penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct DykstraState<T> {
    pub z: Vec<T>,
    pub p_row: Vec<T>,
    pub p_col: Vec<T>,
    pub sweep: usize,
}

impl<T: Scalar> DykstraState<T> {
    pub fn new(y: &[T]) -> Self {
        Self { z: y.to_vec(), p_row: vec![T::zero(); y.len()], p_col: vec![T::zero(); y.len()], sweep: 0 }
    }

    /// One row pass followed by one column pass.
    pub fn sweep(&mut self, l: T, rc: &RowColGroups<T>) {
        let mut w: Vec<T> = self.z.iter().zip(&self.p_row).map(|(&a, &b)| a + b).collect();
        let mut z_row = w.clone();
        rc.shrink_rows(&mut z_row, rc.lambda_row / l);
        for ((p, &wi), &zi) in self.p_row.iter_mut().zip(&w).zip(&z_row) {
            *p = wi - zi;
        }

        for ((wi, &zi), &pi) in w.iter_mut().zip(&z_row).zip(&self.p_col) {
            *wi = zi + pi;
        }
        let mut z_col = w.clone();
        rc.shrink_cols(&mut z_col, rc.lambda_col / l);
        for ((p, &wi), &zi) in self.p_col.iter_mut().zip(&w).zip(&z_col) {
            *p = wi - zi;
        }
        self.z = z_col;
        self.sweep += 1;
    }
}

/// Largest tolerated negative gap before it is reported as an error.
fn negative_gap_allowance<T: Scalar>() -> T {
    T::lit(1e-14).max(T::epsilon() * T::lit(16.0))
}

/// Fenchel duality gap `P(z) − D(u, v)` of the row/column proximal problem, where
/// `u = L·p_row`, `v = L·p_col` are projected group-wise onto their dual balls and
/// `D(u, v) = ⟨y, u + v⟩ − ‖u + v‖²/(2L)`.
///
/// The gap is evaluated in the algebraically identical form
/// `(L/2)‖z − y + (u+v)/L‖² + Σ_i (λ_row‖zⁱ‖ − ⟨zⁱ, uⁱ⟩) + Σ_j (λ_col‖z_j‖ − ⟨z_j, v_j⟩)`,
/// a sum of nonnegative terms, which avoids cancellation between `P` and `D`.
pub fn duality_gap<T: Scalar>(
    y: &[T],
    l: T,
    rc: &RowColGroups<T>,
    z: &[T],
    p_row: &[T],
    p_col: &[T],
) -> Result<T> {
    check_scale(l)?;
    let d = rc.dim();
    for len in [y.len(), z.len(), p_row.len(), p_col.len()] {
        check_dim(d, len)?;
    }
    let mut u: Vec<T> = p_row.iter().map(|&p| p * l).collect();
    let mut v: Vec<T> = p_col.iter().map(|&p| p * l).collect();
    rc.project_rows(&mut u, rc.lambda_row);
    rc.project_cols(&mut v, rc.lambda_col);

    let inv_l = T::one() / l;
    let resid: T = (0..d)
        .map(|i| {
            let r = z[i] - y[i] + (u[i] + v[i]) * inv_l;
            r * r
        })
        .sum();
    let mut gap = l * T::lit(0.5) * resid;
    for i in 0..rc.n_rows {
        let zr = &z[i * rc.n_cols..(i + 1) * rc.n_cols];
        let ur = &u[i * rc.n_cols..(i + 1) * rc.n_cols];
        gap = gap + rc.lambda_row * norm(zr) - zr.iter().zip(ur).map(|(&a, &b)| a * b).sum::<T>();
    }
    for j in 0..rc.n_cols {
        let zc = rc.col_norm(z, j);
        let inner: T = (0..rc.n_rows).map(|i| z[i * rc.n_cols + j] * v[i * rc.n_cols + j]).sum();
        gap = gap + rc.lambda_col * zc - inner;
    }
    if gap < T::zero() {
        if gap < -negative_gap_allowance::<T>() {
            return Err(Error::NegativeGap(gap.as_f64()));
        }
        gap = T::zero();
    }
    Ok(gap)
}

/// Approximate `prox_L` of the row/column penalty by proximal Dykstra, checking the
/// duality gap once per full sweep.
pub fn prox_overlap_bcd<T: Scalar>(
    y: &[T],
    l: T,
    rc: &RowColGroups<T>,
    stop: BcdStop<T>,
) -> Result<ProxResult<T>> {
    prox_overlap_bcd_observed(y, l, rc, stop, |_, _| {})
}

/// [`prox_overlap_bcd`] with a callback receiving the state and gap after every sweep.
pub fn prox_overlap_bcd_observed<T: Scalar>(
    y: &[T],
    l: T,
    rc: &RowColGroups<T>,
    stop: BcdStop<T>,
    mut observe: impl FnMut(&DykstraState<T>, T),
) -> Result<ProxResult<T>> {
    check_scale(l)?;
    check_dim(rc.dim(), y.len())?;
    match stop {
        BcdStop::GapBelow(eps) if !(eps > T::zero()) => {
            return Err(invalid(format!("gap target must be positive, got {eps}")));
        }
        BcdStop::Sweeps(0) => return Err(invalid("sweep count must be at least 1")),
        BcdStop::Sweeps(n) if n > MAX_SWEEPS => {
            return Err(invalid(format!("sweep count {n} exceeds the cap of {MAX_SWEEPS}")));
        }
        _ => {}
    }
    let mut state = DykstraState::new(y);
    loop {
        state.sweep(l, rc);
        let gap = duality_gap(y, l, rc, &state.z, &state.p_row, &state.p_col)?;
        observe(&state, gap);
        let done = match stop {
            BcdStop::GapBelow(eps) => gap <= eps,
            BcdStop::Sweeps(n) => state.sweep >= n,
        };
        if done {
            return Ok(ProxResult { point: state.z, certified_gap: gap, inner_iterations: state.sweep });
        }
        if state.sweep >= MAX_SWEEPS {
            return Err(Error::NonConvergence { sweeps: state.sweep, last_gap: gap.as_f64() });
        }
    }
}

/// Row/column group-ℓ2 penalty as a [`NonsmoothTerm`]; its prox is [`prox_overlap_bcd`].
#[derive(Debug, Clone, Copy)]
pub struct RowColNorm<T> {
    rc: RowColGroups<T>,
}

impl<T: Scalar> RowColNorm<T> {
    pub fn new(rc: RowColGroups<T>) -> Self {
        Self { rc }
    }

    pub fn groups(&self) -> &RowColGroups<T> {
        &self.rc
    }

    /// Gap target used for [`ProxTolerance::Exact`]: the round-off floor of the gap.
    pub fn exact_floor(&self, y: &[T]) -> T {
        T::epsilon() * T::lit(32.0) * (T::one() + self.rc.value(y))
    }
}

impl<T: Scalar> NonsmoothTerm<T> for RowColNorm<T> {
    fn dim(&self) -> usize {
        self.rc.dim()
    }
    fn value(&self, x: &[T]) -> T {
        self.rc.value(x)
    }
    fn prox(&self, y: &[T], l: T, tol: ProxTolerance<T>) -> Result<ProxResult<T>> {
        let stop = match tol {
            ProxTolerance::Exact => BcdStop::GapBelow(self.exact_floor(y)),
            ProxTolerance::GapBelow(eps) => BcdStop::GapBelow(eps),
            ProxTolerance::Sweeps(n) => BcdStop::Sweeps(n),
        };
        prox_overlap_bcd(y, l, &self.rc, stop)
    }
}

/// Wraps an exactly solvable term and returns deliberately suboptimal prox points.
///
/// For `GapBelow(ε)` the exact prox `x*` is moved along a fixed seeded unit direction
/// until the proximal objective exceeds its minimum by (just under) `ε`; the realised
/// excess is reported as the certified gap. Used to inject controlled prox errors on
/// problems whose prox is available in closed form.
#[derive(Debug, Clone)]
pub struct LoosenedProx<H> {
    inner: H,
    direction: Vec<f64>,
}

impl<H> LoosenedProx<H> {
    pub fn new<T: Scalar>(inner: H, seed: u64) -> Self
    where
        H: NonsmoothTerm<T>,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5_eed0_f9a9);
        let mut direction: Vec<f64> = (0..inner.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&direction);
        direction.iter_mut().for_each(|v| *v /= n);
        Self { inner, direction }
    }

    pub fn inner(&self) -> &H {
        &self.inner
    }
}

impl<T: Scalar, H: NonsmoothTerm<T>> NonsmoothTerm<T> for LoosenedProx<H> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[T]) -> T {
        self.inner.value(x)
    }
    fn prox(&self, y: &[T], l: T, tol: ProxTolerance<T>) -> Result<ProxResult<T>> {
        let exact = self.inner.prox(y, l, ProxTolerance::Exact)?;
        let eps = match tol {
            ProxTolerance::Exact => return Ok(exact),
            ProxTolerance::GapBelow(eps) if eps > T::zero() => eps,
            ProxTolerance::GapBelow(eps) => return Err(invalid(format!("gap target must be positive, got {eps}"))),
            ProxTolerance::Sweeps(_) => return Err(invalid("a loosened closed-form prox has no sweep count")),
        };
        let x_star = exact.point;
        let base = proximal_objective(&self.inner, y, l, &x_star)?;
        let dir: Vec<T> = self.direction.iter().map(|&v| T::lit(v)).collect();
        let excess = |t: T| -> Result<(Vec<T>, T)> {
            let x: Vec<T> = x_star.iter().zip(&dir).map(|(&a, &b)| a + t * b).collect();
            let e = proximal_objective(&self.inner, y, l, &x)? - base;
            Ok((x, e))
        };
        // the excess is convex in t, vanishes at 0 and is at least (L/2)t²
        let mut lo = T::zero();
        let mut hi = (T::lit(2.0) * eps / l).sqrt();
        let (mut best, mut best_gap) = (x_star.clone(), T::zero());
        for _ in 0..100 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            let (x, e) = excess(mid)?;
            if e <= eps {
                lo = mid;
                best = x;
                best_gap = e.max(T::zero());
            } else {
                hi = mid;
            }
        }
        Ok(ProxResult { point: best, certified_gap: best_gap, inner_iterations: 1 })
    }
}

/// `(L/2)‖x − y‖²` helper used by tests and oracles.
pub fn half_scaled_dist_sq<T: Scalar>(x: &[T], y: &[T], l: T) -> T {
    l * dist_sq_half(x, y)
}

/// Squared norm of the subgradient residual `L(y − x) − s` for the ℓ1 prox, where `s`
/// is the closest element of `λ∂‖x‖₁`. Zero exactly when `x = prox_L(y)`.
pub fn l1_optimality_residual<T: Scalar>(y: &[T], x: &[T], l: T, lambda: T) -> T {
    let r: Vec<T> = y
        .iter()
        .zip(x)
        .map(|(&yi, &xi)| {
            let g = l * (yi - xi);
            if xi != T::zero() {
                g - lambda * xi.signum()
            } else {
                (g.abs() - lambda).max(T::zero())
            }
        })
        .collect();
    norm_sq(&r)
}
