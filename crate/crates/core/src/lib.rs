//! Inexact proximal-gradient methods.
//!
//! Basic and accelerated proximal-gradient iterations for `min_x g(x) + h(x)` where the
//! gradient of `g` may carry an error `e_k` and the proximity operator of `h` is solved
//! only to a certified accuracy `ε_k`. The [`bounds`] module evaluates the matching
//! convergence guarantees on the realised error sequences, so every run can be checked
//! against its bound.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases below
//! fix the scalar to `f64`.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod solvers;

pub use bounds::{
    bound_for, bound_prop1, bound_prop2, bound_prop3, bound_prop4, fit_rate_slope, fit_trace_slope, lemma1_bound,
    BoundInputs, BoundKind, BoundSeries, RateMode,
};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use problem::{
    evaluate_objective, proximal_objective, CompositeProblem, ErrorDirection, ErrorSchedule, GradientErrorSchedule,
    IterateRecord, IterateTrace, NonsmoothTerm, ProxResult, ProxSchedule, ProxTolerance, SmoothFn, SmoothTerm,
    TraceMetric,
};
pub use problems::{
    gen_cur, gen_lasso, read_matrix_csv, solve_reference, solve_reference_from, CurInstance, CurLoss, LassoInstance,
    LeastSquares, Reference,
};
pub use prox::{
    duality_gap, prox_group_l2, prox_l1, prox_overlap_bcd, prox_overlap_bcd_observed, BcdStop, DykstraState,
    GroupL2Norm, GroupStructure, L1Norm, LoosenedProx, RowColGroups, RowColNorm, ZeroTerm,
};
pub use scalar::Scalar;
pub use solvers::{
    descent_condition_holds, estimate_lipschitz_doubling, make_error_vector, run, run_accel_pg_convex, run_accel_pg_strong, run_basic_pg,
    step_inexact_pg, LipschitzMode, RunResult, SolverConfig, StepOutput, Variant,
};

pub type Problem64 = CompositeProblem<f64>;
pub type ErrorSchedule64 = ErrorSchedule<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type RunResult64 = RunResult<f64>;
pub type IterateTrace64 = IterateTrace<f64>;
pub type ProxResult64 = ProxResult<f64>;
pub type BoundInputs64 = BoundInputs<f64>;
pub type BoundSeries64 = BoundSeries<f64>;
pub type LassoInstance64 = LassoInstance<f64>;
pub type CurInstance64 = CurInstance<f64>;
pub type RowColGroups64 = RowColGroups<f64>;
pub type Matrix64 = Matrix<f64>;

pub type Problem32 = CompositeProblem<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
