//! Acceptance suite. Every test prints exactly one `[PASS]`/`[FAIL]` line.
//!
//! Run with `cargo test -p ipg-core --test acceptance -- --nocapture --test-threads 1`.

use std::time::{Duration, Instant};

use ipg_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BOUND_SLACK: f64 = 1e-9;

fn report(id: &str, what: &str, pass: bool, detail: &str, elapsed: Duration, limit_s: f64) -> bool {
    let in_time = elapsed.as_secs_f64() < limit_s;
    let ok = pass && in_time;
    println!(
        "[{}] {id} {what}: {detail} ({:.3} s, limit {limit_s} s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn slack(f_star: f64) -> f64 {
    BOUND_SLACK * (1.0 + f_star.abs())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Largest `measured − bound` over the run, paired with the k where it occurs.
fn worst_margin(measured: &[(usize, f64)], bound: &[f64]) -> (usize, f64) {
    measured
        .iter()
        .map(|&(k, m)| (k, m - bound[k - 1]))
        .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc })
}

fn poly_schedule(pc: f64, pa: f64, gc: f64, ga: f64, dir: ErrorDirection) -> ErrorSchedule64 {
    let mut s = ErrorSchedule::exact().with_direction(dir);
    if pc > 0.0 {
        s = s.with_prox(ProxSchedule::PolyDecay { c: pc, alpha: pa });
    }
    if gc > 0.0 {
        s = s.with_gradient(GradientErrorSchedule::PolyDecay { c: gc, alpha: ga });
    }
    s
}

/// Lasso used by the error-free and inexact bound criteria.
fn standard_lasso() -> LassoInstance64 {
    gen_lasso(2024, 100, 50, 10.0).unwrap()
}

/// Ill-conditioned lasso whose iterates stay away from machine precision on `[50, 500]`.
fn slope_lasso() -> LassoInstance64 {
    let inst = gen_lasso::<f64>(7, 200, 100, 1e6).unwrap();
    let lambda = 0.01 * inst.lambda_max();
    inst.with_lambda(lambda)
}

struct BoundCheck {
    worst: (usize, f64),
    tol: f64,
}

impl BoundCheck {
    fn ok(&self) -> bool {
        self.worst.1 <= self.tol
    }
}

fn check_convex_bound(
    inst: &LassoInstance64,
    variant: Variant,
    schedule: ErrorSchedule64,
    loosened: bool,
    k_max: usize,
) -> BoundCheck {
    let exact = inst.problem().unwrap();
    let reference = solve_reference(&exact, 1e-12).unwrap();
    let problem = if loosened { inst.problem_with_loosened_prox(11).unwrap() } else { exact };
    let d = inst.dim();
    let x0 = vec![0.0; d];
    let l = inst.l_known;
    let cfg = SolverConfig::new(variant, x0.clone(), LipschitzMode::Fixed(l), k_max).with_schedule(schedule).with_seed(5);
    let r = run(&problem, &cfg).unwrap();
    assert_eq!(r.trace.len(), k_max);
    let f0_gap = (problem.objective(&x0).unwrap() - reference.f).max(0.0);
    let inputs = BoundInputs::from_trace(&r.trace, l, 0.0, dist(&x0, &reference.x), f0_gap);
    let kind = if variant.is_accelerated() { BoundKind::AccelConvex } else { BoundKind::BasicConvex };
    let series = bound_for(kind, &inputs).unwrap();
    let measured = r.trace.suboptimality(reference.f, kind.metric().unwrap());
    BoundCheck { worst: worst_margin(&measured, &series.value), tol: slack(reference.f) }
}

#[test]
fn ac01_error_free_rates() {
    let t = Instant::now();
    let inst = standard_lasso();
    let schedule = ErrorSchedule::exact();
    let basic = check_convex_bound(&inst, Variant::BasicConvex, schedule, false, 500);
    let accel = check_convex_bound(&inst, Variant::AccelConvex, schedule, false, 500);
    let pass = basic.ok() && accel.ok();
    let detail = format!(
        "max(measured − bound): basic {:.3e} at k={}, accel {:.3e} at k={}, slack {:.1e}",
        basic.worst.1, basic.worst.0, accel.worst.1, accel.worst.0, basic.tol
    );
    assert!(report("AC1", "error-free O(1/k) and O(1/k²) bounds, k ≤ 500", pass, &detail, t.elapsed(), 5.0));
}

#[test]
fn ac02_inexact_basic_bound() {
    let t = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, inst) in [("standard", standard_lasso()), ("ill-conditioned", slope_lasso())] {
        for dir in [ErrorDirection::TowardAscent, ErrorDirection::SeededRandom] {
            let c = check_convex_bound(&inst, Variant::BasicConvex, poly_schedule(0.1, 3.0, 0.1, 2.0, dir), true, 500);
            pass &= c.ok();
            lines.push(format!("{name}/{dir:?} {:.3e}", c.worst.1));
        }
    }
    let detail = format!("ε_k = 0.1/k³, ‖e_k‖ = 0.1/k²; max(measured − bound): {}", lines.join(", "));
    assert!(report("AC2", "basic method bound with inexact prox and gradient", pass, &detail, t.elapsed(), 10.0));
}

#[test]
fn ac03_inexact_accelerated_bound() {
    let t = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, inst) in [("standard", standard_lasso()), ("ill-conditioned", slope_lasso())] {
        for dir in [ErrorDirection::TowardAscent, ErrorDirection::SeededRandom] {
            let c = check_convex_bound(&inst, Variant::AccelConvex, poly_schedule(0.1, 5.0, 0.1, 3.0, dir), true, 500);
            pass &= c.ok();
            lines.push(format!("{name}/{dir:?} {:.3e}", c.worst.1));
        }
    }
    let detail = format!("ε_k = 0.1/k⁵, ‖e_k‖ = 0.1/k³; max(measured − bound): {}", lines.join(", "));
    assert!(report("AC3", "accelerated bound with inexact prox and gradient", pass, &detail, t.elapsed(), 10.0));
}

#[test]
fn ac04_strongly_convex_bounds() {
    let t = Instant::now();
    let inst = standard_lasso();
    let (l, mu) = (inst.l_known, inst.mu_known);
    let gamma: f64 = mu / l;
    assert!((gamma - 0.1).abs() < 1e-12);
    let exact = inst.problem().unwrap();
    let reference = solve_reference(&exact, 1e-13).unwrap();
    let problem = inst.problem_with_loosened_prox(13).unwrap();
    let x0 = vec![0.0; inst.dim()];
    let dist0 = dist(&x0, &reference.x);
    let f0_gap = problem.objective(&x0).unwrap() - reference.f;
    let tol = slack(reference.f);

    // Basic: a_i must shrink faster than (1 − γ)^i, so ‖e_i‖ ∝ Q′^i and √ε_i ∝ Q′^i.
    let q = 0.8 * (1.0 - gamma);
    let schedule = ErrorSchedule::exact()
        .with_direction(ErrorDirection::TowardAscent)
        .with_prox(ProxSchedule::GeometricDecay { c: 0.1, q: q * q })
        .with_gradient(GradientErrorSchedule::GeometricDecay { c: 0.1, q });
    let cfg = SolverConfig::new(Variant::BasicStrong, x0.clone(), LipschitzMode::Fixed(l), 200)
        .with_schedule(schedule)
        .with_mu(mu)
        .with_reference(reference.x.clone());
    let r = run(&problem, &cfg).unwrap();
    let series = bound_prop3(&BoundInputs::from_trace(&r.trace, l, mu, dist0, f0_gap)).unwrap();
    let measured: Vec<(usize, f64)> = r.trace.records().iter().map(|rec| (rec.k, rec.dist_to_opt.unwrap())).collect();
    let basic = worst_margin(&measured, &series.value);

    // Accelerated: ‖e_i‖ ∝ √Q′^i and ε_i ∝ Q′^i with Q′ < 1 − √γ.
    let q = 0.8 * (1.0 - gamma.sqrt());
    let schedule = ErrorSchedule::exact()
        .with_direction(ErrorDirection::TowardAscent)
        .with_prox(ProxSchedule::GeometricDecay { c: 0.1, q })
        .with_gradient(GradientErrorSchedule::GeometricDecay { c: 0.1, q: q.sqrt() });
    let cfg = SolverConfig::new(Variant::AccelStrong, x0.clone(), LipschitzMode::Fixed(l), 200)
        .with_schedule(schedule)
        .with_mu(mu);
    let r = run(&problem, &cfg).unwrap();
    let series = bound_prop4(&BoundInputs::from_trace(&r.trace, l, mu, dist0, f0_gap)).unwrap();
    let accel = worst_margin(&r.trace.suboptimality(reference.f, TraceMetric::LastIterate), &series.value);

    let pass = basic.1 <= tol && accel.1 <= tol;
    let detail = format!(
        "γ = {gamma}; max(measured − bound): distance {:.3e} at k={}, objective {:.3e} at k={}, slack {tol:.1e}",
        basic.1, basic.0, accel.1, accel.0
    );
    assert!(report("AC4", "linear-rate bounds on distance and objective, k ≤ 200", pass, &detail, t.elapsed(), 10.0));
}

#[test]
fn ac05_rate_regime_slopes() {
    let t = Instant::now();
    let inst = slope_lasso();
    let reference = solve_reference(&inst.problem().unwrap(), 1e-12).unwrap();
    let problem = inst.problem_with_loosened_prox(17).unwrap();
    let slope = |variant: Variant, schedule: ErrorSchedule64| -> f64 {
        let cfg = SolverConfig::new(variant, vec![0.0; inst.dim()], LipschitzMode::Fixed(inst.l_known), 500)
            .with_schedule(schedule);
        let r = run(&problem, &cfg).unwrap();
        fit_trace_slope(&r.trace, reference.f, TraceMetric::LastIterate, 50, 500, RateMode::PowerLaw).unwrap()
    };
    let dir = ErrorDirection::TowardAscent;
    let basic = slope(Variant::BasicConvex, poly_schedule(0.1, 3.0, 0.1, 2.0, dir));
    let accel = slope(Variant::AccelConvex, poly_schedule(0.1, 5.0, 0.1, 3.0, dir));
    let fast = slope(Variant::AccelConvex, poly_schedule(1.0, 5.0, 0.0, 0.0, dir));
    let slow = slope(Variant::AccelConvex, poly_schedule(1.0, 1.0, 0.0, 0.0, dir));
    let pass = basic <= -0.9 && accel <= -1.7 && slow > fast;
    let detail = format!(
        "basic {basic:.3} (≤ −0.9), accelerated {accel:.3} (≤ −1.7), accelerated ε=1/k {slow:.3} vs ε=1/k⁵ {fast:.3} (must be greater)"
    );
    assert!(report("AC5", "power-law slopes over k ∈ [50, 500]", pass, &detail, t.elapsed(), 20.0));
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

#[test]
fn ac06_prox_oracle_equivalence() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let mut worst_bcd: f64 = 0.0;
    for _ in 0..20 {
        let rc = RowColGroups::new(8, 8, rng.random_range(0.05..0.5), rng.random_range(0.05..0.5)).unwrap();
        let y = random_vec(&mut rng, 64, 1.0);
        let l = rng.random_range(0.5..2.0);
        let fast = prox_overlap_bcd(&y, l, &rc, BcdStop::GapBelow(1e-10)).unwrap();
        let slow = prox_overlap_bcd(&y, l, &rc, BcdStop::Sweeps(100_000)).unwrap();
        worst_bcd = worst_bcd.max(dist(&fast.point, &slow.point));
    }

    let mut worst_disjoint: f64 = 0.0;
    for i in 0..20 {
        let (nr, nc) = if i % 2 == 0 { (1, 12) } else { (6, 5) };
        let lambda = rng.random_range(0.05..1.0);
        let rc = RowColGroups::new(nr, nc, lambda, 0.0).unwrap();
        let y = random_vec(&mut rng, nr * nc, 1.0);
        let l = rng.random_range(0.5..2.0);
        let bcd = prox_overlap_bcd(&y, l, &rc, BcdStop::GapBelow(1e-12)).unwrap();
        let groups = GroupStructure::contiguous(nr * nc, nc, lambda).unwrap();
        let closed = prox_group_l2(&y, l, &groups).unwrap();
        worst_disjoint = worst_disjoint.max(dist(&bcd.point, &closed));
    }

    // dense 2-D grid, step 1e-3, over a box containing the minimiser
    let mut l1_wins = 0;
    for _ in 0..100 {
        let y = random_vec(&mut rng, 2, 1.0);
        let l = rng.random_range(0.5..2.0);
        let lambda = rng.random_range(0.0..1.0);
        let obj = |x: &[f64]| {
            0.5 * l * ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)) + lambda * (x[0].abs() + x[1].abs())
        };
        let axis = |c: f64| -> Vec<f64> {
            let (lo, hi) = (c.min(0.0) - 0.01, c.max(0.0) + 0.01);
            let n = ((hi - lo) / 1e-3).ceil() as usize;
            (0..=n).map(|i| lo + i as f64 * 1e-3).collect()
        };
        let (g0, g1) = (axis(y[0]), axis(y[1]));
        let mut grid_best = f64::INFINITY;
        for &a in &g0 {
            for &b in &g1 {
                grid_best = grid_best.min(obj(&[a, b]));
            }
        }
        let x = prox_l1(&y, l, lambda).unwrap();
        if obj(&x) <= grid_best + 1e-15 {
            l1_wins += 1;
        }
    }

    let pass = worst_bcd <= 1e-5 && worst_disjoint <= 1e-10 && l1_wins == 100;
    let detail = format!(
        "BCD vs 1e5-sweep reference max ℓ2 {worst_bcd:.2e} (≤ 1e-5); degenerate vs closed form {worst_disjoint:.2e} (≤ 1e-10); ℓ1 prox ≤ grid on {l1_wins}/100"
    );
    assert!(report("AC6", "prox operators agree with their oracles", pass, &detail, t.elapsed(), 30.0));
}

#[test]
fn ac07_duality_gap_soundness() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut violations, mut errors) = (0usize, 0usize, 0usize);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..100 {
        let nr = rng.random_range(2..7);
        let nc = rng.random_range(2..7);
        let rc = RowColGroups::new(nr, nc, rng.random_range(0.01..0.5), rng.random_range(0.01..0.5)).unwrap();
        let y = random_vec(&mut rng, nr * nc, 1.0);
        let l = rng.random_range(0.5..2.0);
        let h = RowColNorm::new(rc);
        let reference = prox_overlap_bcd(&y, l, &rc, BcdStop::Sweeps(100_000)).unwrap();
        let p_ref = proximal_objective(&h, &y, l, &reference.point).unwrap();
        let res = prox_overlap_bcd_observed(&y, l, &rc, BcdStop::GapBelow(1e-12), |state, gap| {
            let excess = proximal_objective(&h, &y, l, &state.z).unwrap() - p_ref;
            checked += 1;
            worst = worst.max(excess - gap);
            if excess > gap + 1e-10 || gap < 0.0 {
                violations += 1;
            }
        });
        if res.is_err() {
            errors += 1;
        }
    }
    let pass = violations == 0 && errors == 0;
    let detail = format!(
        "{checked} sweeps checked, {violations} with gap < suboptimality, {errors} errors; max(suboptimality − gap) {worst:.2e}"
    );
    assert!(report("AC7", "certified gap bounds the prox suboptimality", pass, &detail, t.elapsed(), 30.0));
}

#[test]
fn ac08_lemma1_property_suite() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut sequences, mut violations) = (0usize, 0usize);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=50);
        let mut s = Vec::with_capacity(k);
        let mut acc: f64 = rng.random_range(0.0..2.0);
        for _ in 0..k {
            acc += rng.random_range(0.0..1.0);
            s.push(acc);
        }
        let lambda: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..2.0)).collect();
        let mut weighted = 0.0;
        for i in 0..k {
            let (li, si) = (lambda[i], s[i]);
            let u = 0.5 * (li + (li * li + 4.0 * (si + weighted)).sqrt());
            weighted += li * u;
            let bound = lemma1_bound(&s, &lambda, i + 1).unwrap();
            worst_ratio = worst_ratio.max(u / bound);
            if u > bound * (1.0 + 1e-12) {
                violations += 1;
            }
        }
        sequences += 1;
    }
    let pass = violations == 0;
    let detail = format!("{sequences} saturating sequences, {violations} violations, max u_k / bound = {worst_ratio:.12}");
    assert!(report("AC8", "greedy-saturating sequences stay under the recursion bound", pass, &detail, t.elapsed(), 5.0));
}

#[test]
fn ac09_cur_protocol() {
    let t = Instant::now();
    let inst = gen_cur::<f64>(1, 30, 30, 0.01, 0.01).unwrap();
    let problem = inst.problem().unwrap();
    let budget = 500;
    let final_f = |prox: ProxSchedule<f64>| -> f64 {
        let cfg = SolverConfig::new(Variant::BasicConvex, vec![0.0; inst.dim()], LipschitzMode::Doubling(1.0), usize::MAX)
            .with_schedule(ErrorSchedule::exact().with_prox(prox))
            .with_inner_budget(budget);
        let r = run(&problem, &cfg).unwrap();
        r.trace.records().iter().rev().find(|rec| rec.cumulative_inner_iters <= budget).unwrap().f_xk
    };
    let cubic = final_f(ProxSchedule::PolyDecay { c: 1.0, alpha: 3.0 });
    let constants: Vec<(f64, f64)> =
        [1e-2, 1e-4, 1e-6].iter().map(|&e| (e, final_f(ProxSchedule::Constant(e)))).collect();
    let best = constants.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let pass = cubic <= best * 1.01;
    let consts: Vec<String> = constants.iter().map(|(e, f)| format!("ε={e:e}: {f:.10}")).collect();
    let detail = format!(
        "non-blocking; after {budget} BCD sweeps ε_k=1/k³: {cubic:.10}, constants: {}",
        consts.join(", ")
    );
    // informational only: the comparison depends on the data
    report("AC9", "CUR stopping-strategy comparison", pass, &detail, t.elapsed(), 60.0);
}

#[test]
fn ac10_lipschitz_doubling() {
    let t = Instant::now();

    // curvature-4 quadratic ½·4‖x‖² plus ℓ1, from L₀ = 1
    let d = 10;
    let quad = SmoothFn::new(
        d,
        |x: &[f64]| 2.0 * x.iter().map(|v| v * v).sum::<f64>(),
        |x: &[f64]| x.iter().map(|v| 4.0 * v).collect::<Vec<f64>>(),
        4.0,
        4.0,
    )
    .unwrap();
    let problem = CompositeProblem::new(quad, L1Norm::new(d, 0.1).unwrap()).unwrap();
    let x0: Vec<f64> = (0..d).map(|i| 1.0 + i as f64).collect();
    let cfg = SolverConfig::new(Variant::BasicConvex, x0, LipschitzMode::Doubling(1.0), 50).with_path();
    let r = run(&problem, &cfg).unwrap();
    let final_l = *r.l_history.last().unwrap();
    let doublings = (final_l / 1.0).log2().round() as usize;
    let settled = final_l == 4.0 && r.l_history.iter().all(|&l| l <= 4.0);

    // every accepted step on problems that force doublings satisfies the descent inequality
    let mut steps = 0usize;
    let mut failures = 0usize;
    let mut record = |problem: &Problem64, r: &RunResult64| {
        for ((y, x), &l) in r.path.iter().zip(&r.l_history) {
            let g = problem.smooth();
            steps += 1;
            if !descent_condition_holds(g, x, y, &g.gradient(y), l) {
                failures += 1;
            }
        }
    };
    record(&problem, &r);
    let lasso = gen_lasso::<f64>(3, 60, 40, 50.0).unwrap();
    let scaled = Matrix::from_fn(60, 40, |i, j| 3.0 * lasso.a.get(i, j));
    let steep = CompositeProblem::new(
        LeastSquares::new(scaled, lasso.b.clone()).unwrap(),
        L1Norm::new(40, lasso.lambda).unwrap(),
    )
    .unwrap();
    let mut steep_final = Vec::new();
    for variant in [Variant::BasicConvex, Variant::AccelConvex] {
        let cfg = SolverConfig::new(variant, vec![0.0; 40], LipschitzMode::Doubling(1.0), 200).with_path();
        let r = run(&steep, &cfg).unwrap();
        steep_final.push(*r.l_history.last().unwrap());
        record(&steep, &r);
    }
    let cur = gen_cur::<f64>(1, 30, 30, 0.01, 0.01).unwrap();
    let cur_problem = cur.problem().unwrap();
    let cfg = SolverConfig::new(Variant::BasicConvex, vec![0.0; cur.dim()], LipschitzMode::Doubling(1.0), 100)
        .with_schedule(ErrorSchedule::exact().with_prox(ProxSchedule::PolyDecay { c: 1.0, alpha: 3.0 }))
        .with_path();
    let r = run(&cur_problem, &cfg).unwrap();
    let cur_l = *r.l_history.last().unwrap();
    let true_cur_l = cur_problem.smooth().lipschitz();
    record(&cur_problem, &r);

    let pass = settled && doublings <= 2 && failures == 0 && cur_l >= true_cur_l / 2.0 && cur_l <= 2.0 * true_cur_l;
    let detail = format!(
        "curvature 4: final L = {final_l} after {doublings} doublings; descent holds on {}/{steps} accepted steps; \
         scaled lasso (L = 9) final L {steep_final:?}; CUR final L {cur_l} (true {true_cur_l:.6})",
        steps - failures
    );
    assert!(report("AC10", "L-doubling from L₀ = 1", pass, &detail, t.elapsed(), 1.0));
}
