mod common;

use common::{dist, uniform_vec};
use ipg_core::*;

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Textbook ISTA written out with explicit loops.
fn ista_by_hand(a: &Matrix64, b: &[f64], lambda: f64, l: f64, iters: usize) -> Vec<Vec<f64>> {
    let (n, d) = (a.rows(), a.cols());
    let mut x = vec![0.0; d];
    let mut out = Vec::new();
    for _ in 0..iters {
        let mut r = vec![0.0; n];
        for i in 0..n {
            r[i] = (0..d).map(|j| a.get(i, j) * x[j]).sum::<f64>() - b[i];
        }
        let mut next = vec![0.0; d];
        for j in 0..d {
            let gj: f64 = (0..n).map(|i| a.get(i, j) * r[i]).sum();
            next[j] = soft(x[j] - gj / l, lambda / l);
        }
        x = next;
        out.push(x.clone());
    }
    out
}

#[test]
fn error_free_basic_method_is_ista() {
    let inst = gen_lasso::<f64>(41, 40, 25, 30.0).unwrap();
    let p = inst.problem().unwrap();
    let cfg = SolverConfig::new(Variant::BasicConvex, vec![0.0; 25], LipschitzMode::Fixed(1.0), 50).with_path();
    let r = run_basic_pg(&p, &cfg).unwrap();
    let expected = ista_by_hand(&inst.a, &inst.b, inst.lambda, 1.0, 50);
    for ((_, x), e) in r.path.iter().zip(&expected) {
        assert!(dist(x, e) <= 1e-12);
    }
}

#[test]
fn quadratic_gradient_descent_has_closed_form_iterates() {
    // g(x) = ½ Σ c_i x_i², h = 0: x_k,i = (1 − c_i/L)^k x_0,i
    let c = [1.0, 0.5, 0.1, 0.02];
    let g = SmoothFn::new(
        4,
        move |x: &[f64]| 0.5 * x.iter().zip(&c).map(|(v, ci)| ci * v * v).sum::<f64>(),
        move |x: &[f64]| x.iter().zip(&c).map(|(v, ci)| ci * v).collect::<Vec<f64>>(),
        1.0,
        0.02,
    )
    .unwrap();
    let p = CompositeProblem::new(g, ZeroTerm::new(4)).unwrap();
    let x0 = vec![1.0, -2.0, 3.0, 4.0];
    let cfg = SolverConfig::new(Variant::BasicConvex, x0.clone(), LipschitzMode::Fixed(1.0), 100).with_path();
    let r = run(&p, &cfg).unwrap();
    let mut prev = f64::INFINITY;
    for ((k, (_, x)), rec) in r.path.iter().enumerate().zip(r.trace.records()) {
        let k = k as i32 + 1;
        for i in 0..4 {
            let expect = (1.0 - c[i]).powi(k) * x0[i];
            assert!((x[i] - expect).abs() <= 1e-12);
        }
        assert!(rec.f_xk < prev);
        prev = rec.f_xk;
    }
}

#[test]
fn runs_are_bit_identical() {
    let inst = gen_lasso::<f64>(42, 30, 20, 10.0).unwrap();
    let p = inst.problem_with_loosened_prox(3).unwrap();
    for dir in [ErrorDirection::SeededRandom, ErrorDirection::TowardAscent] {
        let schedule = ErrorSchedule::exact()
            .with_prox(ProxSchedule::PolyDecay { c: 0.1, alpha: 2.0 })
            .with_gradient(GradientErrorSchedule::PolyDecay { c: 0.5, alpha: 1.5 })
            .with_direction(dir);
        let cfg = SolverConfig::new(Variant::AccelConvex, vec![0.0; 20], LipschitzMode::Doubling(0.25), 80)
            .with_schedule(schedule)
            .with_seed(9);
        let a = run(&p, &cfg).unwrap();
        let b = run(&p, &cfg).unwrap();
        assert_eq!(a, b);
    }
    let cur = gen_cur::<f64>(3, 8, 6, 0.05, 0.05).unwrap();
    let p = cur.problem().unwrap();
    let cfg = SolverConfig::new(Variant::BasicConvex, vec![0.0; 48], LipschitzMode::Doubling(1.0), 40)
        .with_schedule(ErrorSchedule::exact().with_prox(ProxSchedule::FixedSweeps(3)));
    assert_eq!(run(&p, &cfg).unwrap(), run(&p, &cfg).unwrap());
}

#[test]
fn single_precision_run_tracks_double_precision() {
    let inst32 = gen_lasso::<f32>(43, 40, 20, 10.0).unwrap();
    let inst64 = gen_lasso::<f64>(43, 40, 20, 10.0).unwrap();
    let cfg32: SolverConfig32 = SolverConfig::new(Variant::AccelConvex, vec![0.0; 20], LipschitzMode::Fixed(1.0), 200);
    let cfg64: SolverConfig64 = SolverConfig::new(Variant::AccelConvex, vec![0.0; 20], LipschitzMode::Fixed(1.0), 200);
    let r32 = run(&inst32.problem().unwrap(), &cfg32).unwrap();
    let r64 = run(&inst64.problem().unwrap(), &cfg64).unwrap();
    let f32_final = r32.trace.last().unwrap().f_xk as f64;
    let f64_final = r64.trace.last().unwrap().f_xk;
    assert!((f32_final - f64_final).abs() <= 1e-4 * (1.0 + f64_final.abs()));
}

#[test]
fn gap_based_runs_never_exceed_the_scheduled_tolerance() {
    let cur = gen_cur::<f64>(4, 10, 12, 0.01, 0.01).unwrap();
    let p = cur.problem().unwrap();
    for prox in [ProxSchedule::PolyDecay { c: 1.0, alpha: 3.0 }, ProxSchedule::Constant(1e-6)] {
        let cfg = SolverConfig::new(Variant::AccelConvex, vec![0.0; cur.dim()], LipschitzMode::Doubling(1.0), 60)
            .with_schedule(ErrorSchedule::exact().with_prox(prox));
        let r = run(&p, &cfg).unwrap();
        for rec in r.trace.records() {
            assert!(rec.eps_used <= rec.eps_requested.unwrap());
        }
    }
}

#[test]
fn doubling_on_cur_lands_near_the_true_constant() {
    let cur = gen_cur::<f64>(5, 15, 10, 0.01, 0.01).unwrap();
    // scale W so that σ_max⁴ is well above the starting estimate
    let w = Matrix::from_fn(15, 10, |i, j| 1.7 * cur.w.get(i, j));
    let scaled = CurInstance::from_matrix(w, 0.01, 0.01).unwrap();
    let p = scaled.problem().unwrap();
    let true_l = p.smooth().lipschitz();
    let cfg = SolverConfig::new(Variant::BasicConvex, vec![0.0; scaled.dim()], LipschitzMode::Doubling(1.0), 100)
        .with_schedule(ErrorSchedule::exact().with_prox(ProxSchedule::PolyDecay { c: 1.0, alpha: 3.0 }));
    let r = run(&p, &cfg).unwrap();
    let l = *r.l_history.last().unwrap();
    assert!(l >= true_l / 2.0 && l <= 2.0 * true_l, "L = {l}, true {true_l}");
    assert!(r.l_history.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn zero_error_convex_bounds_hold() {
    let inst = gen_lasso::<f64>(44, 60, 30, 200.0).unwrap();
    let p = inst.problem().unwrap();
    let reference = solve_reference(&p, 1e-12).unwrap();
    let x0 = vec![0.0; 30];
    let d0 = dist(&x0, &reference.x);
    let tol = 1e-9 * (1.0 + reference.f.abs());
    for variant in [Variant::BasicConvex, Variant::AccelConvex] {
        let cfg = SolverConfig::new(variant, x0.clone(), LipschitzMode::Fixed(1.0), 300);
        let r = run(&p, &cfg).unwrap();
        for rec in r.trace.records() {
            let k = rec.k as f64;
            let (measured, bound) = if variant.is_accelerated() {
                (rec.f_xk - reference.f, 2.0 * d0 * d0 / ((k + 1.0) * (k + 1.0)))
            } else {
                (rec.f_avg - reference.f, d0 * d0 / (2.0 * k))
            };
            assert!(measured <= bound + tol, "{variant:?} k={k}");
            assert!(rec.f_best <= rec.f_xk);
        }
    }
}

#[test]
fn polynomial_prox_errors_keep_the_basic_bound() {
    let inst = gen_lasso::<f64>(45, 60, 30, 50.0).unwrap();
    let reference = solve_reference(&inst.problem().unwrap(), 1e-12).unwrap();
    let p = inst.problem_with_loosened_prox(1).unwrap();
    let x0 = vec![0.0; 30];
    let cfg = SolverConfig::new(Variant::BasicConvex, x0.clone(), LipschitzMode::Fixed(1.0), 300)
        .with_schedule(ErrorSchedule::exact().with_prox(ProxSchedule::PolyDecay { c: 1.0, alpha: 3.0 }));
    let r = run(&p, &cfg).unwrap();
    let f0_gap = p.objective(&x0).unwrap() - reference.f;
    let bound = bound_prop1(&BoundInputs::from_trace(&r.trace, 1.0, 0.0, dist(&x0, &reference.x), f0_gap)).unwrap();
    for (k, m) in r.trace.suboptimality(reference.f, TraceMetric::AveragedIterate) {
        assert!(m <= bound.value[k - 1] + 1e-9 * (1.0 + reference.f.abs()));
    }
}

#[test]
fn error_free_accelerated_slope_is_at_least_quadratic() {
    let inst = gen_lasso::<f64>(7, 200, 100, 1e6).unwrap();
    let lambda = 0.01 * inst.lambda_max();
    let inst = inst.with_lambda(lambda);
    let p = inst.problem().unwrap();
    let reference = solve_reference(&p, 1e-12).unwrap();
    let cfg = SolverConfig::new(Variant::AccelConvex, vec![0.0; 100], LipschitzMode::Fixed(1.0), 200);
    let r = run(&p, &cfg).unwrap();
    let slope = fit_trace_slope(&r.trace, reference.f, TraceMetric::LastIterate, 10, 200, RateMode::PowerLaw).unwrap();
    assert!(slope <= -1.7, "{slope}");
}

#[test]
fn strongly_convex_accelerated_method_is_linear() {
    // small λ keeps the solution dense, so f − f* stays above round-off up to k = 200
    let inst = gen_lasso::<f64>(46, 80, 40, 1000.0).unwrap();
    let lambda = 0.01 * inst.lambda_max();
    let inst = inst.with_lambda(lambda);
    let (l, mu) = (inst.l_known, inst.mu_known);
    let gamma: f64 = mu / l;
    let p = inst.problem().unwrap();
    let reference = solve_reference(&p, 1e-13).unwrap();
    let x0 = vec![0.0; 40];
    let f0_gap = p.objective(&x0).unwrap() - reference.f;
    let tol = 1e-9 * (1.0 + reference.f.abs());

    let cfg = SolverConfig::new(Variant::AccelStrong, x0.clone(), LipschitzMode::Fixed(l), 200).with_mu(mu);
    let r = run(&p, &cfg).unwrap();
    for (k, m) in r.trace.suboptimality(reference.f, TraceMetric::LastIterate) {
        let bound = (1.0 - gamma.sqrt()).powi(k as i32) * 2.0 * f0_gap;
        assert!(m <= bound + tol, "k={k}");
    }

    let q = 0.8 * (1.0 - gamma.sqrt());
    let schedule = ErrorSchedule::exact()
        .with_gradient(GradientErrorSchedule::GeometricDecay { c: 0.1, q })
        .with_direction(ErrorDirection::TowardAscent);
    let cfg = SolverConfig::new(Variant::AccelStrong, x0, LipschitzMode::Fixed(l), 200).with_mu(mu).with_schedule(schedule);
    let r = run(&p, &cfg).unwrap();
    let slope = fit_trace_slope(&r.trace, reference.f, TraceMetric::LastIterate, 20, 200, RateMode::Geometric).unwrap();
    assert!(slope.exp() <= 1.0 - gamma.sqrt() + 0.02, "rate {}", slope.exp());
}

#[test]
fn toward_ascent_error_moves_the_step_by_at_most_its_size_over_l() {
    let mut rng = common::rng(47);
    let inst = gen_lasso::<f64>(48, 30, 15, 10.0).unwrap();
    let p = inst.problem().unwrap();
    for _ in 0..20 {
        let y = uniform_vec(&mut rng, 15, 2.0);
        let exact = step_inexact_pg(&p, &y, 1, &ErrorSchedule::exact(), 2.0, 0).unwrap();
        let noisy_schedule = ErrorSchedule::exact()
            .with_gradient(GradientErrorSchedule::PolyDecay { c: 0.1, alpha: 1.0 })
            .with_direction(ErrorDirection::TowardAscent);
        let noisy = step_inexact_pg(&p, &y, 1, &noisy_schedule, 2.0, 0).unwrap();
        assert!((noisy.e_norm - 0.1).abs() <= 1e-15);
        assert!(dist(&exact.x, &noisy.x) <= 0.1 / 2.0 + 1e-15);
    }
}
