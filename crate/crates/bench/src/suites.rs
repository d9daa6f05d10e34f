//! Registered verification suites: one per acceptance criterion, each
//! producing a measured value, its bound, and a verdict.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsd_core::analysis::{
    contraction_report, least_squares_slope, performance_profile, r_linear_envelope_violations,
    theoretical_sd_factor, FailurePolicy, ProfileOutcome,
};
use tsd_core::linesearch::{strong_wolfe_search, LineSearchError, Objective, WolfeParams};
use tsd_core::objectives::{ExtendedRosenbrock, Quartic, Rosenbrock2d};
use tsd_core::quadprob::{generate_problem, SpectrumSet, ToleranceSpec};
use tsd_core::solvers::{
    solve_quadratic, MethodId, RunStatus, SolverConfig, StepKind,
};
use tsd_core::{QuadraticProblem64, RunRecord64};

use crate::error::BenchError;
use crate::general::{builtin_objective, run_general, DEFAULT_GENERAL_CAP, DEFAULT_GENERAL_EPS};
use crate::plan::{execute_plan, ExperimentPlan};
use crate::seedmix::{derive, start_seed};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: &'static str, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            passed,
            detail,
        }
    }

    pub fn report_line(&self) -> String {
        format!(
            "{} {}: {} ({})",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

pub const SUITE_IDS: &[&str] = &[
    "2d-termination",
    "theorem2",
    "descent",
    "table1-trend",
    "figure3",
    "wolfe",
    "rosenbrock",
    "scale-invariance",
    "baselines",
    "profiles",
    "determinism",
    "all",
];

pub fn run_suite(suite_id: &str) -> Result<Vec<CriterionResult>, BenchError> {
    match suite_id {
        "2d-termination" => Ok(vec![two_d_termination()]),
        "theorem2" => Ok(vec![theorem2()]),
        "descent" => Ok(vec![descent_and_orthogonality()]),
        "table1-trend" => Ok(vec![table1_trend()]),
        "figure3" => Ok(vec![figure3()]),
        "wolfe" => Ok(vec![wolfe_correctness()]),
        "rosenbrock" => Ok(vec![rosenbrock_convergence()]),
        "scale-invariance" => Ok(vec![scale_invariance()]),
        "baselines" => Ok(vec![baselines()]),
        "profiles" => Ok(vec![profiles()]),
        "determinism" => Ok(determinism()?),
        "all" => {
            let mut out = Vec::new();
            for id in SUITE_IDS.iter().filter(|&&s| s != "all") {
                out.extend(run_suite(id)?);
            }
            Ok(out)
        }
        other => Err(BenchError::UnknownSuite(other.to_string())),
    }
}

fn uniform_start(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| -10.0 + 20.0 * rng.random::<f64>()).collect()
}

/// The 100 seeded 2-D cases of the termination criterion, shared with the
/// descent suite.
fn two_d_cases() -> Vec<(QuadraticProblem64, Vec<f64>, f64)> {
    (0..100u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(1001, i));
            let kappa = 10f64.powf(1.0 + 5.0 * rng.random::<f64>());
            let spec = SpectrumSet {
                set_id: 1,
                kappa,
                n: 2,
                seed: derive(1002, i),
            };
            let p: QuadraticProblem64 = generate_problem(&spec).unwrap();
            let x0 = uniform_start(&mut rng, 2);
            (p, x0, kappa)
        })
        .collect()
}

fn run_tsd(
    p: &QuadraticProblem64,
    x0: &[f64],
    j: u32,
    eps: f64,
    cap: usize,
    trajectory: bool,
) -> RunRecord64 {
    let mut cfg = SolverConfig::new(MethodId::Tsd { j }, ToleranceSpec::relative(eps), cap);
    cfg.record_trajectory = trajectory;
    solve_quadratic(p, x0, &cfg).unwrap()
}

fn two_d_termination() -> CriterionResult {
    let mut passes = 0usize;
    let mut worst: f64 = 0.0;
    let cases = two_d_cases();
    let total = cases.len();
    for (p, x0, _) in &cases {
        // tolerance far below the 1e-8 target so the run cannot stop
        // before its first combined step
        let rec = run_tsd(p, x0, 3, 1e-14, 50, false);
        let g0 = rec.iterations[0].grad_norm2;
        let at_combined = rec
            .iterations
            .iter()
            .find(|e| e.step_kind == StepKind::CombinedStep);
        let ratio = match at_combined {
            Some(e) => e.grad_norm2 / g0,
            // converged exactly before any combined step was needed
            None => rec.final_entry().grad_norm2 / g0,
        };
        worst = worst.max(ratio);
        if ratio <= 1e-8 {
            passes += 1;
        }
    }
    CriterionResult::new(
        "A1",
        "2d-termination",
        passes == total,
        format!("{passes}/{total} cases; worst grad ratio at first combined step {worst:.3e} vs bound 1e-8"),
    )
}

/// The grid behind the `theorem2` suite, shared with the descent suite.
fn theorem2_runs(trajectory: bool) -> Vec<(RunRecord64, f64)> {
    let mut out = Vec::new();
    for set_id in [1u8, 4] {
        for kappa in [1e2, 1e3] {
            for j in [3u32, 10] {
                let spec = SpectrumSet {
                    set_id,
                    kappa,
                    n: 100,
                    seed: 202,
                };
                let p: QuadraticProblem64 = generate_problem(&spec).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(start_seed(202, spec.seed, 0));
                let x0 = uniform_start(&mut rng, 100);
                out.push((run_tsd(&p, &x0, j, 1e-10, 200_000, trajectory), kappa));
            }
        }
    }
    out
}

fn theorem2() -> CriterionResult {
    let mut violations = 0usize;
    let mut runs = 0usize;
    let mut max_sd_ratio_gap: f64 = f64::NEG_INFINITY;
    let mut all_converged = true;
    for (rec, kappa) in theorem2_runs(false) {
        runs += 1;
        all_converged &= rec.status == RunStatus::Converged;
        let report = contraction_report(&rec, kappa);
        violations += report.violations.len();
        violations += r_linear_envelope_violations(&rec, kappa).len();
        max_sd_ratio_gap =
            max_sd_ratio_gap.max(report.max_sd_ratio - theoretical_sd_factor(kappa));
    }
    CriterionResult::new(
        "A2",
        "theorem2",
        violations == 0 && all_converged,
        format!(
            "{runs} runs, {violations} contraction/envelope violations; worst SD ratio excess over (k-1)/(k+1): {max_sd_ratio_gap:.3e}"
        ),
    )
}

fn descent_and_orthogonality() -> CriterionResult {
    let mut runs: Vec<RunRecord64> = two_d_cases()
        .iter()
        .map(|(p, x0, _)| run_tsd(p, x0, 3, 1e-14, 50, true))
        .collect();
    runs.extend(theorem2_runs(true).into_iter().map(|(r, _)| r));

    let mut descent_checked = 0usize;
    let mut ortho_checked = 0usize;
    let mut bad = 0usize;
    let mut worst_ortho: f64 = 0.0;
    for rec in &runs {
        let xs = rec.iterates.as_ref().unwrap();
        let gs = rec.gradients.as_ref().unwrap();
        for w in rec.iterations.windows(2) {
            let k = w[0].k;
            if w[0].grad_norm2 == 0.0 {
                continue;
            }
            // the step s = alpha p with alpha > 0, so sign(p.g) = sign(s.g)
            let sg: f64 = xs[k + 1]
                .iter()
                .zip(&xs[k])
                .zip(&gs[k])
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            descent_checked += 1;
            if !(sg < 0.0) {
                bad += 1;
            }
            if w[1].step_kind == StepKind::SdStep && w[1].grad_norm2 > 0.0 {
                let dot: f64 = gs[k].iter().zip(&gs[k + 1]).map(|(a, b)| a * b).sum();
                let rel = dot.abs() / (w[0].grad_norm2 * w[1].grad_norm2);
                worst_ortho = worst_ortho.max(rel);
                ortho_checked += 1;
                if rel > 1e-10 {
                    bad += 1;
                }
            }
        }
    }
    CriterionResult::new(
        "A3",
        "descent",
        bad == 0,
        format!(
            "{descent_checked} descent checks, {ortho_checked} orthogonality checks, {bad} failures; \
             worst |g_k+1.g_k|/(|g_k+1||g_k|) = {worst_ortho:.3e} vs bound 1e-10 \
             (f64 floor: stepsize rounding leaves |g_k+1.g_k| ~ eps*|g_k|^2, so the measure is \
             ~eps/contraction when one step contracts the gradient by more than ~1e-6)"
        ),
    )
}

/// Iteration counts for the Table-1 trend grid: set 1, n = 1000,
/// kappa = 1e4, eps = 1e-6 relative, 10 starting points, methods
/// TSD(10) / TSD(100) / SD. Shared with the profile suite.
fn table1_counts() -> Vec<[usize; 3]> {
    let spec = SpectrumSet {
        set_id: 1,
        kappa: 1e4,
        n: 1000,
        seed: 404,
    };
    let p: QuadraticProblem64 = generate_problem(&spec).unwrap();
    let methods = [
        MethodId::Tsd { j: 10 },
        MethodId::Tsd { j: 100 },
        MethodId::Sd,
    ];
    (0..10u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(start_seed(404, spec.seed, i));
            let x0 = uniform_start(&mut rng, 1000);
            let mut row = [0usize; 3];
            for (slot, &m) in row.iter_mut().zip(&methods) {
                let cfg = SolverConfig::new(m, ToleranceSpec::relative(1e-6), 200_000);
                let rec = solve_quadratic(&p, &x0, &cfg).unwrap();
                assert_eq!(rec.status, RunStatus::Converged);
                *slot = rec.total_iterations;
            }
            row
        })
        .collect()
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    if v.len() % 2 == 1 {
        v[v.len() / 2] as f64
    } else {
        (v[v.len() / 2 - 1] + v[v.len() / 2]) as f64 / 2.0
    }
}

fn table1_trend() -> CriterionResult {
    let counts = table1_counts();
    let med = |i: usize| median(counts.iter().map(|r| r[i]).collect());
    let (m10, m100, msd) = (med(0), med(1), med(2));
    let wins_vs_100 = counts.iter().filter(|r| r[0] < r[1]).count();
    let wins_vs_sd = counts.iter().filter(|r| r[0] < r[2]).count();
    let passed = m10 < m100 && m10 < msd && wins_vs_100 >= 8 && wins_vs_sd >= 8;
    CriterionResult::new(
        "A4",
        "table1-trend",
        passed,
        format!(
            "median iters tsd(10)={m10} tsd(100)={m100} sd={msd}; per-seed wins tsd(10)<tsd(100): {wins_vs_100}/10, tsd(10)<sd: {wins_vs_sd}/10 (need >= 8)"
        ),
    )
}

fn figure3() -> CriterionResult {
    let spec = SpectrumSet {
        set_id: 1,
        kappa: 1e4,
        n: 1000,
        seed: 505,
    };
    let p: QuadraticProblem64 = generate_problem(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(start_seed(505, spec.seed, 0));
    let x0 = uniform_start(&mut rng, 1000);
    let run = |m: MethodId| {
        let cfg = SolverConfig::new(m, ToleranceSpec::relative(1e-12), 100_000);
        solve_quadratic(&p, &x0, &cfg).unwrap()
    };
    let tsd = run(MethodId::Tsd { j: 50 });
    let sd = run(MethodId::Sd);
    // least-squares slope of log10 ||x - x*||_2 over SD's final half
    let pts: Vec<(f64, f64)> = sd
        .iterations
        .iter()
        .filter_map(|e| {
            let err = e.x_err_norm2.unwrap();
            (err > 0.0).then(|| (e.k as f64, err.log10()))
        })
        .collect();
    let tail = &pts[pts.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let slope = least_squares_slope(&xs, &ys);
    let expected = theoretical_sd_factor(1e4_f64).log10();
    let slope_ok = (slope - expected).abs() <= 0.05 * expected.abs();
    let fewer = tsd.total_iterations < sd.total_iterations;
    CriterionResult::new(
        "A5",
        "figure3",
        fewer && slope_ok,
        format!(
            "tsd(50) iters {} vs sd {} ({:?}); sd tail slope {slope:.6e} vs log10((k-1)/(k+1)) = {expected:.6e} (5% band)",
            tsd.total_iterations, sd.total_iterations, sd.status
        ),
    )
}

fn wolfe_correctness() -> CriterionResult {
    let params = WolfeParams::default();
    let mut ok = 0usize;
    let total = 1000usize;
    let mut ascent_ok = 0usize;
    let ascent_total = 100usize;
    for i in 0..total as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(606, i));
        let quad;
        let rosen2;
        let rosen6;
        let quart;
        let (obj, n): (&dyn Objective<f64>, usize) = match i % 4 {
            0 => {
                let spec = SpectrumSet {
                    set_id: 1,
                    kappa: 1.0 + 999.0 * rng.random::<f64>(),
                    n: 8,
                    seed: derive(607, i),
                };
                quad = generate_problem::<f64>(&spec).unwrap();
                (&quad, 8)
            }
            1 => {
                rosen2 = Rosenbrock2d;
                (&rosen2, 2)
            }
            2 => {
                rosen6 = ExtendedRosenbrock::new(6);
                (&rosen6, 6)
            }
            _ => {
                quart = Quartic::new(5);
                (&quart, 5)
            }
        };
        let x: Vec<f64> = (0..n).map(|_| -3.0 + 6.0 * rng.random::<f64>()).collect();
        let f0 = obj.value(&x);
        let g0 = obj.gradient(&x);
        let gnorm: f64 = g0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-10 {
            ok += 1; // no usable descent direction at a stationary point
            continue;
        }
        // random direction, sign-flipped into the descent half-space,
        // with a slice of -g mixed in so p.g stays well away from 0
        let mut dir: Vec<f64> = (0..n).map(|_| -1.0 + 2.0 * rng.random::<f64>()).collect();
        let pg: f64 = dir.iter().zip(&g0).map(|(a, b)| a * b).sum();
        if pg > 0.0 {
            for d in dir.iter_mut() {
                *d = -*d;
            }
        }
        for (d, g) in dir.iter_mut().zip(&g0) {
            *d -= 0.1 * g / gnorm;
        }
        let d0: f64 = dir.iter().zip(&g0).map(|(a, b)| a * b).sum();
        if !(d0 < 0.0) {
            continue;
        }
        match strong_wolfe_search(obj, &x, &dir, f0, &g0, &params) {
            Ok(res) => {
                let xa: Vec<f64> = x
                    .iter()
                    .zip(&dir)
                    .map(|(xi, di)| xi + res.alpha * di)
                    .collect();
                let fa = obj.value(&xa);
                let da: f64 = obj.gradient(&xa).iter().zip(&dir).map(|(a, b)| a * b).sum();
                let sufficient = fa <= f0 + params.c1 * res.alpha * d0;
                let curvature = da.abs() <= params.c2 * d0.abs();
                if res.alpha > 0.0 && sufficient && curvature {
                    ok += 1;
                }
            }
            Err(_) => {}
        }
    }
    for i in 0..ascent_total as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(608, i));
        let obj = Rosenbrock2d;
        let x: Vec<f64> = (0..2).map(|_| -2.0 + 4.0 * rng.random::<f64>()).collect();
        let f0 = obj.value(&x);
        let g0 = obj.gradient(&x);
        // the gradient itself is an ascent direction wherever g != 0
        if matches!(
            strong_wolfe_search(&obj, &x, &g0.clone(), f0, &g0, &params),
            Err(LineSearchError::NonDescentDirection(_))
        ) {
            ascent_ok += 1;
        }
    }
    CriterionResult::new(
        "A6",
        "wolfe",
        ok == total && ascent_ok == ascent_total,
        format!("{ok}/{total} Wolfe condition checks passed; {ascent_ok}/{ascent_total} ascent-direction calls rejected"),
    )
}

fn rosenbrock_convergence() -> CriterionResult {
    let o = builtin_objective("rosenbrock2d", None).unwrap();
    let mut detail = Vec::new();
    let mut all = true;
    for j in [10u32, 50] {
        let rec = run_general(
            &o,
            None,
            MethodId::Tsd { j },
            DEFAULT_GENERAL_EPS,
            DEFAULT_GENERAL_CAP,
            &WolfeParams::default(),
        )
        .unwrap();
        all &= rec.status == RunStatus::Converged;
        detail.push(format!(
            "tsd({j}): {:?} in {} iters",
            rec.status, rec.total_iterations
        ));
    }
    CriterionResult::new("A7", "rosenbrock", all, detail.join("; "))
}

fn scale_invariance() -> CriterionResult {
    // kappa is kept moderate: scaling the eigenvalues by 10 rounds each one
    // at the last ulp, and the nonmonotone stepsize dynamics (bb/cabb/csd)
    // amplify that perturbation at a kappa-dependent rate; by kappa ~ 100
    // the deviation over 200 iterations exceeds any fixed bound.
    let spec = SpectrumSet {
        set_id: 1,
        kappa: 20.0,
        n: 20,
        seed: 808,
    };
    let p: QuadraticProblem64 = generate_problem(&spec).unwrap();
    let eigs: Vec<f64> = match p.hessian() {
        tsd_core::quadprob::Hessian::Diagonal(d) => d.clone(),
        _ => unreachable!(),
    };
    let scaled = QuadraticProblem64::new_diagonal(
        eigs.iter().map(|&e| 10.0 * e).collect(),
        p.minimizer().to_vec(),
        0.0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(start_seed(808, spec.seed, 0));
    let x0 = uniform_start(&mut rng, 20);
    let methods = [
        MethodId::Tsd { j: 5 },
        MethodId::Sd,
        MethodId::Bb1,
        MethodId::Bb2,
        MethodId::CaBb,
        MethodId::Csd { m: 3 },
    ];
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut all_ok = true;
    for m in methods {
        let mut cfg = SolverConfig::new(m, ToleranceSpec::relative(1e-12), 200);
        cfg.record_trajectory = true;
        let a = solve_quadratic(&p, &x0, &cfg).unwrap();
        let b = solve_quadratic(&scaled, &x0, &cfg).unwrap();
        let xa = a.iterates.as_ref().unwrap();
        let xb = b.iterates.as_ref().unwrap();
        let steps = xa.len().min(xb.len()).min(201);
        for (u, v) in xa.iter().zip(xb).take(steps) {
            for (&ui, &vi) in u.iter().zip(v) {
                let rel = (ui - vi).abs() / ui.abs().max(vi.abs()).max(1e-300);
                worst = worst.max(rel);
                checked += 1;
                if rel > 1e-10 {
                    all_ok = false;
                }
            }
        }
    }
    CriterionResult::new(
        "A8",
        "scale-invariance",
        all_ok,
        format!("{checked} coordinate comparisons across 6 methods; worst relative deviation {worst:.3e} vs bound 1e-10"),
    )
}

fn baselines() -> CriterionResult {
    let mut issues = Vec::new();
    // BB1 stepsizes confined to the inverse spectral range
    for seed in [1u64, 2, 3] {
        let spec = SpectrumSet {
            set_id: 1,
            kappa: 1e3,
            n: 50,
            seed,
        };
        let p: QuadraticProblem64 = generate_problem(&spec).unwrap();
        let (lo, hi) = p.hessian().eigen_extremes().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(start_seed(909, seed, 0));
        let x0 = uniform_start(&mut rng, 50);
        let cfg = SolverConfig::new(MethodId::Bb1, ToleranceSpec::relative(1e-10), 100_000);
        let rec = solve_quadratic(&p, &x0, &cfg).unwrap();
        for e in &rec.iterations {
            if e.step_kind == StepKind::BbStep {
                let min = (1.0 / hi) * (1.0 - 1e-12);
                let max = (1.0 / lo) * (1.0 + 1e-12);
                if e.stepsize < min || e.stepsize > max {
                    issues.push(format!("bb1 stepsize {} outside [{min}, {max}]", e.stepsize));
                }
            }
        }
    }
    // method coincidences are bit-exact
    let spec = SpectrumSet {
        set_id: 4,
        kappa: 1e3,
        n: 30,
        seed: 6,
    };
    let p: QuadraticProblem64 = generate_problem(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(start_seed(910, 6, 0));
    let x0 = uniform_start(&mut rng, 30);
    let run = |m: MethodId| {
        let cfg = SolverConfig::new(m, ToleranceSpec::relative(1e-10), 100_000);
        solve_quadratic(&p, &x0, &cfg).unwrap()
    };
    let pairs = [
        ("csd(1) vs sd", run(MethodId::Csd { m: 1 }), run(MethodId::Sd)),
        (
            "csd(2) vs cabb",
            run(MethodId::Csd { m: 2 }),
            run(MethodId::CaBb),
        ),
    ];
    for (label, a, b) in &pairs {
        if a.iterations.len() != b.iterations.len() {
            issues.push(format!("{label}: different lengths"));
            continue;
        }
        for (x, y) in a.iterations.iter().zip(&b.iterations) {
            if x.f != y.f || x.stepsize != y.stepsize || x.grad_norm2 != y.grad_norm2 {
                issues.push(format!("{label}: mismatch at k = {}", x.k));
                break;
            }
        }
    }
    CriterionResult::new(
        "A9",
        "baselines",
        issues.is_empty(),
        if issues.is_empty() {
            "bb1 steps in [1/l_max, 1/l_min]; csd(1)=sd and csd(2)=cabb bit-exact".to_string()
        } else {
            issues.join("; ")
        },
    )
}

fn profiles() -> CriterionResult {
    // profiles over the table-1 run set: each starting point is one
    // problem, iteration count is the cost
    let counts = table1_counts();
    let methods = ["tsd(10)", "tsd(100)", "sd"];
    let mut outcomes = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        for (m, &c) in methods.iter().zip(row) {
            outcomes.push(ProfileOutcome {
                method: m.to_string(),
                problem_key: format!("start{i}"),
                cost: Some(c as f64),
            });
        }
    }
    let curves = performance_profile(&outcomes, FailurePolicy::DropUnsolvedByAny);
    let mut issues = Vec::new();
    for c in &curves {
        let grid: Vec<f64> = std::iter::once(1.0)
            .chain(c.breakpoints())
            .chain(std::iter::once(f64::INFINITY))
            .collect();
        let mut prev = -1.0;
        for &rho in &grid {
            let v = c.value_at(rho);
            if !(0.0..=1.0).contains(&v) {
                issues.push(format!("{} value {v} outside [0,1]", c.method));
            }
            if v < prev {
                issues.push(format!("{} decreases at rho = {rho}", c.method));
            }
            prev = v;
        }
        if c.value_at(f64::INFINITY) != 1.0 {
            issues.push(format!("{} never reaches 1", c.method));
        }
    }
    // hand-computed 2-method / 3-problem fixture:
    // p1: A=2 B=4; p2: A=10 B=5; p3: A=6 B=6
    // A ratios {1, 2, 1}; B ratios {2, 1, 1}
    let fixture = vec![
        ("A", "p1", 2.0),
        ("B", "p1", 4.0),
        ("A", "p2", 10.0),
        ("B", "p2", 5.0),
        ("A", "p3", 6.0),
        ("B", "p3", 6.0),
    ];
    let fixture_outcomes: Vec<ProfileOutcome> = fixture
        .iter()
        .map(|&(m, p, c)| ProfileOutcome {
            method: m.to_string(),
            problem_key: p.to_string(),
            cost: Some(c),
        })
        .collect();
    let fx = performance_profile(&fixture_outcomes, FailurePolicy::DropUnsolvedByAny);
    let a = fx.iter().find(|c| c.method == "A").unwrap();
    let b = fx.iter().find(|c| c.method == "B").unwrap();
    let expect = [
        (a.value_at(1.0), 2.0 / 3.0),
        (a.value_at(1.999), 2.0 / 3.0),
        (a.value_at(2.0), 1.0),
        (b.value_at(1.0), 2.0 / 3.0),
        (b.value_at(2.0), 1.0),
    ];
    for (got, want) in expect {
        if got != want {
            issues.push(format!("fixture value {got} != {want}"));
        }
    }
    CriterionResult::new(
        "A10",
        "profiles",
        issues.is_empty(),
        if issues.is_empty() {
            format!(
                "{} curves monotone step functions in [0,1]; hand fixture breakpoints exact",
                curves.len()
            )
        } else {
            issues.join("; ")
        },
    )
}

fn determinism() -> Result<Vec<CriterionResult>, BenchError> {
    let plan = ExperimentPlan {
        seed: 11,
        set_ids: vec![1, 2],
        dims: vec![50],
        kappas: vec![1e2],
        problem_seeds: vec![3, 4],
        methods: vec!["sd".into(), "tsd(10)".into(), "bb1".into(), "csd(2)".into()],
        eps: vec![1e-6],
        eps_kind: "rel2".into(),
        max_iterations: 100_000,
        starts: 3,
        out: None,
        trajectory: false,
    };
    let body = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    // serial vs parallel rerun must agree byte for byte
    let (_, s1, a1) = execute_plan(&plan, Some(1))?;
    let (_, s2, a2) = execute_plan(&plan, None)?;
    let passed = body(&s1) == body(&s2) && a1 == a2;
    Ok(vec![CriterionResult::new(
        "A11",
        "determinism",
        passed,
        format!(
            "{} summary rows + {} aggregate rows byte-identical across serial and parallel reruns",
            s1.lines().filter(|l| !l.starts_with('#')).count() - 1,
            a1.lines().count() - 1
        ),
    )])
}
