//! The `run`, `bounds` and `rates` drivers.

use std::path::Path;

use ipg_core::{
    bound_for, fit_trace_slope, solve_reference, BoundInputs, BoundKind, CompositeProblem, ErrorSchedule,
    GradientErrorSchedule, LipschitzMode, ProxSchedule, RateMode, Reference, RunResult, SolverConfig, TraceMetric, Variant,
};

use crate::error::{usage, CliError, Result};
use crate::output::{fmt_real, write_csv};
use crate::settings::ExperimentSpec;
use crate::spec::{Budget, BuiltProblem, Strategy};

struct StrategyRun<'a> {
    strategy: &'a Strategy,
    result: RunResult<f64>,
    /// Lipschitz constant handed to the bound calculators.
    bound_l: f64,
}

fn problem_for<'a>(built: &'a BuiltProblem, strategy: &Strategy) -> Result<&'a CompositeProblem<f64>> {
    match (&strategy.prox, &built.loosened) {
        (ProxSchedule::Exact, _) => Ok(&built.problem),
        (ProxSchedule::FixedSweeps(_), Some(_)) => {
            Err(usage("sweep strategies need an iterative prox; use a cur or csv problem"))
        }
        (_, Some(loosened)) => Ok(loosened),
        (_, None) => Ok(&built.problem),
    }
}

fn config_for(spec: &ExperimentSpec, built: &BuiltProblem, strategy: &Strategy, x_star: Option<&[f64]>) -> SolverConfig<f64> {
    let schedule = ErrorSchedule::exact()
        .with_prox(strategy.prox)
        .with_gradient(spec.grad_error)
        .with_direction(spec.direction);
    let max_outer = match spec.budget {
        Budget::OuterIters(n) | Budget::InnerSweepTotal(n) => n,
    };
    let l_mode = if spec.corrupt_bound {
        LipschitzMode::Fixed(0.5 * built.lipschitz)
    } else {
        spec.l_mode.unwrap_or(built.default_l_mode)
    };
    let mut cfg = SolverConfig::new(spec.variant, vec![0.0; built.problem.dim()], l_mode, max_outer)
    .with_schedule(schedule)
    .with_seed(spec.seed)
    .with_mu(spec.mu.unwrap_or(built.mu));
    if let Budget::InnerSweepTotal(n) = spec.budget {
        cfg = cfg.with_inner_budget(n);
    }
    if let Some(xs) = x_star {
        cfg = cfg.with_reference(xs.to_vec());
    }
    cfg
}

fn check_variant(spec: &ExperimentSpec, built: &BuiltProblem) -> Result<()> {
    if spec.variant.is_strong() && !(spec.mu.unwrap_or(built.mu) > 0.0) {
        return Err(usage("strongly convex solvers need μ > 0 (pass --mu or use a lasso with d ≤ n)"));
    }
    Ok(())
}

/// Runs every strategy on its own thread; results come back in strategy order.
fn run_all<'a>(spec: &'a ExperimentSpec, built: &BuiltProblem, x_star: Option<&[f64]>) -> Result<Vec<StrategyRun<'a>>> {
    check_variant(spec, built)?;
    let jobs = spec
        .strategies
        .iter()
        .map(|s| Ok((s, problem_for(built, s)?, config_for(spec, built, s, x_star))))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<ipg_core::Result<RunResult<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(_, problem, cfg)| scope.spawn(move || ipg_core::run(problem, cfg)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    jobs.iter()
        .zip(results)
        .map(|((strategy, _, _), r)| {
            let result = r?;
            let bound_l = result.l_history.iter().copied().fold(0.0, f64::max);
            Ok(StrategyRun { strategy, result, bound_l })
        })
        .collect()
}

fn reference(spec: &ExperimentSpec, built: &BuiltProblem) -> Result<Reference<f64>> {
    Ok(solve_reference(&built.problem, spec.reference_tol)?)
}

fn f_within_budget(spec: &ExperimentSpec, run: &RunResult<f64>, f0: f64) -> (f64, usize, usize) {
    let recs = run.trace.records();
    let last = match spec.budget {
        Budget::InnerSweepTotal(n) => recs.iter().rev().find(|r| r.cumulative_inner_iters <= n),
        Budget::OuterIters(_) => recs.last(),
    };
    match last {
        Some(r) => (r.f_xk, r.cumulative_inner_iters, r.k),
        None => (f0, 0, 0),
    }
}

/// Writes `run_<label>.csv` per strategy and `summary.csv`.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<String> {
    let built = spec.problem.build(spec.seed)?;
    let reference = if spec.reference { Some(reference(spec, &built)?) } else { None };
    let runs = run_all(spec, &built, reference.as_ref().map(|r| r.x.as_slice()))?;
    create_dir(&spec.out)?;
    for run in &runs {
        let header = ["k", "cumulative_inner_iters", "f_xk", "f_avg", "eps_used", "grad_err_norm", "L_estimate", "dist_to_opt"];
        let rows = run.result.trace.records().iter().map(|r| {
            vec![
                r.k.to_string(),
                r.cumulative_inner_iters.to_string(),
                fmt_real(r.f_xk),
                fmt_real(r.f_avg),
                fmt_real(r.eps_used),
                fmt_real(r.grad_err_norm),
                fmt_real(r.l_estimate),
                r.dist_to_opt.map(fmt_real).unwrap_or_default(),
            ]
        });
        write_csv(&spec.out.join(format!("run_{}.csv", run.strategy.label)), &header, rows)?;
    }

    let f0 = built.problem.objective(&vec![0.0; built.problem.dim()])?;
    let mut ranked: Vec<(usize, f64, usize, usize)> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (f, inner, outer) = f_within_budget(spec, &r.result, f0);
            (i, f, inner, outer)
        })
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let header = ["rank", "strategy", "final_f", "cumulative_inner_iters", "outer_iters"];
    let rows = ranked.iter().enumerate().map(|(rank, &(i, f, inner, outer))| {
        vec![(rank + 1).to_string(), runs[i].strategy.label.clone(), fmt_real(f), inner.to_string(), outer.to_string()]
    });
    write_csv(&spec.out.join("summary.csv"), &header, rows)?;

    let mut msg = String::new();
    for (rank, &(i, f, inner, _)) in ranked.iter().enumerate() {
        msg.push_str(&format!("{}. {} f = {} after {inner} inner iterations\n", rank + 1, runs[i].strategy.label, fmt_real(f)));
    }
    Ok(msg)
}

fn bound_kind(variant: Variant) -> BoundKind {
    match variant {
        Variant::BasicConvex => BoundKind::BasicConvex,
        Variant::AccelConvex => BoundKind::AccelConvex,
        Variant::BasicStrong => BoundKind::BasicStrong,
        Variant::AccelStrong => BoundKind::AccelStrong,
    }
}

/// Writes `bounds_<label>.csv` per strategy; any margin below `−1e−9(1 + |f*|)` is a violation.
pub fn cmd_bounds(spec: &ExperimentSpec) -> Result<String> {
    let built = spec.problem.build(spec.seed)?;
    let reference = reference(spec, &built)?;
    let runs = run_all(spec, &built, Some(&reference.x))?;
    create_dir(&spec.out)?;
    let x0 = vec![0.0; built.problem.dim()];
    let dist0 = x0.iter().zip(&reference.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let f0_gap = (built.problem.objective(&x0)? - reference.f).max(0.0);
    let tol = 1e-9 * (1.0 + reference.f.abs());
    let kind = bound_kind(spec.variant);
    let mu = spec.mu.unwrap_or(built.mu);

    let mut msg = String::new();
    let mut violations = Vec::new();
    for run in &runs {
        let l = run.bound_l;
        let inputs = BoundInputs::from_trace(&run.result.trace, l, mu.min(l), dist0, f0_gap);
        let series = bound_for(kind, &inputs)?;
        let measured: Vec<(usize, f64)> = match kind.metric() {
            Some(metric) => run.result.trace.suboptimality(reference.f, metric),
            None => run.result.trace.records().iter().map(|r| (r.k, r.dist_to_opt.unwrap_or(f64::NAN))).collect(),
        };
        let rows: Vec<(usize, f64, f64, f64)> =
            measured.iter().map(|&(k, m)| (k, m, series.value[k - 1], series.value[k - 1] - m)).collect();
        let worst = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
        let header = ["k", "measured_subopt", "bound_value", "margin"];
        write_csv(
            &spec.out.join(format!("bounds_{}.csv", run.strategy.label)),
            &header,
            rows.iter().map(|&(k, m, b, g)| vec![k.to_string(), fmt_real(m), fmt_real(b), fmt_real(g)]),
        )?;
        let ok = worst >= -tol;
        msg.push_str(&format!(
            "{} {:?}: min margin {} over {} iterations: {}\n",
            run.strategy.label,
            kind,
            fmt_real(worst),
            rows.len(),
            if ok { "ok" } else { "VIOLATED" }
        ));
        if !ok {
            violations.push(run.strategy.label.clone());
        }
    }
    if violations.is_empty() {
        Ok(msg)
    } else {
        print!("{msg}");
        Err(CliError::Violation(format!("bound exceeded for {}", violations.join(", "))))
    }
}

/// Decay exponent of the prox contribution `√ε_k`; infinite for geometric or no error.
fn prox_exponent(prox: &ProxSchedule<f64>) -> Option<f64> {
    match *prox {
        ProxSchedule::Exact | ProxSchedule::GeometricDecay { .. } => Some(f64::INFINITY),
        ProxSchedule::PolyDecay { alpha, .. } => Some(alpha / 2.0),
        ProxSchedule::Constant(_) => Some(0.0),
        ProxSchedule::FixedSweeps(_) => None,
    }
}

fn grad_exponent(g: &GradientErrorSchedule<f64>) -> f64 {
    match *g {
        GradientErrorSchedule::None | GradientErrorSchedule::GeometricDecay { .. } => f64::INFINITY,
        GradientErrorSchedule::PolyDecay { alpha, .. } => alpha,
    }
}

/// Rate the bounds guarantee when `‖e_k‖` and `√ε_k` decay like `k^−r`.
pub fn regime_label(variant: Variant, prox: &ProxSchedule<f64>, grad: &GradientErrorSchedule<f64>) -> String {
    let Some(rp) = prox_exponent(prox) else {
        return "depends on realised gaps".into();
    };
    let r = rp.min(grad_exponent(grad));
    let power = |p: f64| format!("O(k^{})", -p);
    match variant {
        Variant::BasicConvex if r > 1.0 => "O(1/k)".into(),
        Variant::BasicConvex if r == 1.0 => "O(log^2 k/k)".into(),
        Variant::BasicConvex if r > 0.5 => power(2.0 * r - 1.0),
        Variant::AccelConvex if r > 2.0 => "O(1/k^2)".into(),
        Variant::AccelConvex if r == 2.0 => "O(log^2 k/k^2)".into(),
        Variant::AccelConvex if r > 1.0 => power(2.0 * r - 2.0),
        Variant::BasicConvex | Variant::AccelConvex => "no guarantee".into(),
        Variant::BasicStrong | Variant::AccelStrong if r.is_infinite() => "linear".into(),
        Variant::BasicStrong if r > 0.0 => power(r),
        Variant::AccelStrong if r > 0.0 => power(2.0 * r),
        Variant::BasicStrong | Variant::AccelStrong => "no guarantee".into(),
    }
}

fn metric_name(m: TraceMetric) -> &'static str {
    match m {
        TraceMetric::LastIterate => "last",
        TraceMetric::AveragedIterate => "avg",
        TraceMetric::BestIterate => "best",
    }
}

/// Writes `rates.csv` with one fitted slope per strategy.
pub fn cmd_rates(spec: &ExperimentSpec) -> Result<String> {
    let built = spec.problem.build(spec.seed)?;
    let reference = reference(spec, &built)?;
    let runs = run_all(spec, &built, None)?;
    create_dir(&spec.out)?;
    let mode = if spec.variant.is_strong() { RateMode::Geometric } else { RateMode::PowerLaw };
    let mut rows = Vec::new();
    let mut msg = String::new();
    for run in &runs {
        let len = run.result.trace.len();
        if len < spec.k_max {
            return Err(CliError::Violation(format!(
                "{}: only {len} iterations, the fit window ends at {}",
                run.strategy.label, spec.k_max
            )));
        }
        let slope = fit_trace_slope(&run.result.trace, reference.f, spec.metric, spec.k_min, spec.k_max, mode)
            .map_err(|e| CliError::Violation(format!("{}: {e}", run.strategy.label)))?;
        let regime = regime_label(spec.variant, &run.strategy.prox, &spec.grad_error);
        msg.push_str(&format!("{} slope {} (expected {regime})\n", run.strategy.label, fmt_real(slope)));
        rows.push(vec![
            run.strategy.label.clone(),
            format!("{:?}", spec.variant),
            metric_name(spec.metric).to_string(),
            format!("{mode:?}"),
            spec.k_min.to_string(),
            spec.k_max.to_string(),
            fmt_real(slope),
            regime,
        ]);
    }
    let header = ["strategy", "solver", "metric", "mode", "k_min", "k_max", "slope", "regime"];
    write_csv(&spec.out.join("rates.csv"), &header, rows)?;
    Ok(msg)
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}
