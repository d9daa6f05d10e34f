//! Convergence-theory checks and benchmark post-processing.
//!
//! The quadratic theory being verified: every exact SD step contracts the
//! energy-norm error by at most `(kappa - 1) / (kappa + 1)`, every
//! combined (chord) step still contracts it, and a full cycle of `j - 1`
//! SD steps plus one combined step yields R-linear convergence with
//! asymptotic per-iteration factor `((kappa - 1) / (kappa + 1))^((j-1)/j)`.

use crate::scalar::Scalar;
use crate::solvers::{RunRecord, StepKind};

/// Worst-case per-step energy-norm contraction of exact steepest descent:
/// `(kappa - 1) / (kappa + 1)`.
pub fn theoretical_sd_factor<T: Scalar>(kappa: T) -> T {
    assert!(kappa > T::one(), "kappa must exceed 1");
    (kappa - T::one()) / (kappa + T::one())
}

/// Asymptotic per-iteration R-linear factor of TSD(j): the SD factor
/// raised to `(j - 1) / j`, since `j - 1` of every `j` steps are SD steps
/// and the combined step never expands the error.
pub fn asymptotic_tsd_factor<T: Scalar>(kappa: T, j: u32) -> T {
    assert!(j >= 3, "TSD requires j >= 3");
    let e = T::from_f64_lossy((j - 1) as f64 / j as f64);
    theoretical_sd_factor(kappa).powf(e)
}

/// One step whose contraction ratio broke its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionViolation {
    /// Index of the produced iterate: the ratio is `err_k / err_{k-1}`.
    pub k: usize,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub sd_steps_checked: usize,
    pub combined_steps_checked: usize,
    pub max_sd_ratio: f64,
    pub max_combined_ratio: f64,
    pub violations: Vec<ContractionViolation>,
}

impl ContractionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative slack on the SD bound; absorbs the last-bit rounding of the
/// recorded energy norms without hiding a real violation.
pub const SD_BOUND_SLACK: f64 = 1e-10;

/// Checks every recorded step of a quadratic run against its contraction
/// bound: SD and repeated steps against the SD factor (with
/// [`SD_BOUND_SLACK`]), combined steps against 1. BB-type steps have no
/// per-step bound and are skipped.
pub fn contraction_report<T: Scalar>(record: &RunRecord<T>, kappa: f64) -> ContractionReport {
    let sd_bound = theoretical_sd_factor(kappa) * (1.0 + SD_BOUND_SLACK);
    let mut report = ContractionReport {
        sd_steps_checked: 0,
        combined_steps_checked: 0,
        max_sd_ratio: 0.0,
        max_combined_ratio: 0.0,
        violations: Vec::new(),
    };
    for w in record.iterations.windows(2) {
        let prev = w[0]
            .a_norm_error
            .expect("contraction checks need a quadratic run")
            .to_f64_lossy();
        let next = w[1].a_norm_error.unwrap().to_f64_lossy();
        if prev == 0.0 {
            continue;
        }
        let ratio = next / prev;
        let bound = match w[1].step_kind {
            StepKind::SdStep => sd_bound,
            StepKind::CombinedStep => 1.0,
            // repeated Cauchy steps also satisfy the SD worst case
            StepKind::RepeatStep => sd_bound,
            StepKind::BbStep => continue,
        };
        match w[1].step_kind {
            StepKind::CombinedStep => {
                report.combined_steps_checked += 1;
                report.max_combined_ratio = report.max_combined_ratio.max(ratio);
                if !(ratio < bound) {
                    report.violations.push(ContractionViolation {
                        k: w[1].k,
                        ratio,
                        bound,
                    });
                }
            }
            _ => {
                report.sd_steps_checked += 1;
                report.max_sd_ratio = report.max_sd_ratio.max(ratio);
                if ratio > bound {
                    report.violations.push(ContractionViolation {
                        k: w[1].k,
                        ratio,
                        bound,
                    });
                }
            }
        }
    }
    report
}

/// Relative slack on the R-linear envelope check.
pub const ENVELOPE_SLACK: f64 = 1e-8;

/// Verifies `err_k <= err_0 * rho^{e(k)}` (up to [`ENVELOPE_SLACK`]) where
/// `rho` is the SD factor and `e(k)` counts the SD-type steps among the
/// first `k`; combined steps contribute the trivial factor 1. Compared in
/// log space so long runs cannot underflow the bound. Returns the indices
/// that break the envelope.
pub fn r_linear_envelope_violations<T: Scalar>(record: &RunRecord<T>, kappa: f64) -> Vec<usize> {
    let log_rho = theoretical_sd_factor(kappa).ln();
    let err0 = record.iterations[0]
        .a_norm_error
        .expect("envelope checks need a quadratic run")
        .to_f64_lossy();
    if err0 == 0.0 {
        return Vec::new();
    }
    let log_bound0 = err0.ln() + ENVELOPE_SLACK.ln_1p();
    let mut sd_steps = 0usize;
    let mut out = Vec::new();
    for e in record.iterations.iter().skip(1) {
        match e.step_kind {
            StepKind::SdStep | StepKind::RepeatStep => sd_steps += 1,
            StepKind::CombinedStep => {}
            StepKind::BbStep => return out, // no envelope for BB runs
        }
        let err = e.a_norm_error.unwrap().to_f64_lossy();
        if err == 0.0 {
            continue;
        }
        if err.ln() > log_bound0 + sd_steps as f64 * log_rho {
            out.push(e.k);
        }
    }
    out
}

/// One (problem, method) benchmark outcome for a performance profile.
/// `cost` is the comparison metric (iterations, evaluations, or time);
/// `None` marks a failed run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOutcome {
    pub method: String,
    pub problem_key: String,
    pub cost: Option<f64>,
}

/// How to treat problems some method failed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    /// Failed runs get an infinite ratio; the problem stays in the pool.
    Infinite,
    /// Problems unsolved by any method in the comparison are dropped from
    /// the pool entirely.
    #[default]
    DropUnsolvedByAny,
}

/// Performance-profile step function for one method: the fraction of
/// problems whose cost ratio to the per-problem best is at most `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub method: String,
    /// Sorted finite cost ratios, one per solved problem.
    pub ratios: Vec<f64>,
    /// Pool size the fractions are taken over.
    pub pool: usize,
}

impl ProfileCurve {
    /// Exact step-function value at `rho`.
    pub fn value_at(&self, rho: f64) -> f64 {
        if self.pool == 0 {
            return 0.0;
        }
        let solved = self.ratios.partition_point(|&r| r <= rho);
        solved as f64 / self.pool as f64
    }

    /// All ratio breakpoints where the curve steps up.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.ratios.clone();
        b.dedup();
        b
    }
}

/// Dolan-More performance profiles over a set of per-problem, per-method
/// outcomes. Ratios are exact quotients; no binning or smoothing.
pub fn performance_profile(
    outcomes: &[ProfileOutcome],
    policy: FailurePolicy,
) -> Vec<ProfileCurve> {
    use std::collections::BTreeMap;
    let mut methods: Vec<String> = Vec::new();
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    let mut solved_problems: BTreeMap<&str, bool> = BTreeMap::new();
    for o in outcomes {
        if !methods.contains(&o.method) {
            methods.push(o.method.clone());
        }
        let entry = solved_problems.entry(o.problem_key.as_str()).or_default();
        if let Some(c) = o.cost {
            assert!(c > 0.0 && c.is_finite(), "costs must be positive finite");
            *entry = true;
            let b = best.entry(o.problem_key.as_str()).or_insert(f64::INFINITY);
            *b = b.min(c);
        }
    }
    let in_pool = |key: &str| match policy {
        FailurePolicy::Infinite => true,
        FailurePolicy::DropUnsolvedByAny => solved_problems.get(key).copied().unwrap_or(false),
    };
    let pool = solved_problems.keys().filter(|k| in_pool(k)).count();

    methods
        .into_iter()
        .map(|method| {
            let mut ratios: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.method == method && in_pool(&o.problem_key))
                .filter_map(|o| o.cost.map(|c| c / best[o.problem_key.as_str()]))
                .collect();
            ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ProfileCurve {
                method,
                ratios,
                pool,
            }
        })
        .collect()
}

/// Serializes profile curves as `method,rho,value` rows, one row per
/// breakpoint of each curve (plus the starting point at rho = 1).
pub fn profile_to_csv(curves: &[ProfileCurve]) -> String {
    let mut out = String::from("method,rho,value\n");
    for c in curves {
        let mut points = vec![1.0];
        points.extend(c.breakpoints());
        points.dedup();
        for rho in points {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", c.method, rho, c.value_at(rho)));
        }
    }
    out
}

/// Per-iteration trajectory CSV: objective value, log10 norms, stepsize
/// and step kind. Error columns are empty for runs without a known
/// minimizer; exact zeros log to `-inf`.
pub fn trajectory_export<T: Scalar>(record: &RunRecord<T>) -> String {
    fn log10_col(v: f64) -> String {
        if v == 0.0 {
            "-inf".to_string()
        } else {
            format!("{:.17e}", v.log10())
        }
    }
    let mut out = String::from("k,f,log10_gnorm2,log10_anorm_err,log10_xerr2,stepsize,step_kind\n");
    for e in &record.iterations {
        out.push_str(&format!(
            "{},{:.17e},{},{},{},{:.17e},{}\n",
            e.k,
            e.f.to_f64_lossy(),
            log10_col(e.grad_norm2.to_f64_lossy()),
            e.a_norm_error
                .map(|v| log10_col(v.to_f64_lossy()))
                .unwrap_or_default(),
            e.x_err_norm2
                .map(|v| log10_col(v.to_f64_lossy()))
                .unwrap_or_default(),
            e.stepsize.to_f64_lossy(),
            e.step_kind.name(),
        ));
    }
    out
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "slope needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Fitted per-iteration log10 error decay rate over the last half of a
/// run, skipping exact zeros. `10^slope` estimates the empirical linear
/// convergence factor.
pub fn fitted_log10_error_slope<T: Scalar>(record: &RunRecord<T>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = record
        .iterations
        .iter()
        .filter_map(|e| {
            let err = e.a_norm_error?.to_f64_lossy();
            (err > 0.0).then(|| (e.k as f64, err.log10()))
        })
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let tail = &pts[pts.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
    Some(least_squares_slope(&xs, &ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadprob::{generate_problem, QuadraticProblem, SpectrumSet, ToleranceSpec};
    use crate::solvers::{solve_quadratic, MethodId, RunStatus, SolverConfig};

    #[test]
    fn sd_factor_hand_values() {
        assert_eq!(theoretical_sd_factor(9.0), 0.8);
        assert_eq!(theoretical_sd_factor(3.0), 0.5);
        let diff: f64 = theoretical_sd_factor(1e6) - (1e6 - 1.0) / (1e6 + 1.0);
        assert!(diff.abs() < 1e-16);
    }

    #[test]
    fn tsd_factor_hand_value_and_monotone_in_j() {
        let f = asymptotic_tsd_factor(9.0, 3);
        assert!((f - 0.8_f64.powf(2.0 / 3.0)).abs() < 1e-15);
        let mut prev = 1.0;
        for j in 3..12 {
            let v = asymptotic_tsd_factor(100.0, j);
            assert!(v < prev, "factor must fall toward the SD factor as j grows");
            assert!(v > theoretical_sd_factor(100.0));
            prev = v;
        }
    }

    fn tsd_run(kappa: f64, j: u32) -> crate::solvers::RunRecord<f64> {
        let spec = SpectrumSet {
            set_id: 1,
            kappa,
            n: 40,
            seed: 13,
        };
        let p: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        let cfg = SolverConfig::new(
            MethodId::Tsd { j },
            ToleranceSpec::relative(1e-10),
            100_000,
        );
        let rec = solve_quadratic(&p, &vec![2.0; 40], &cfg).unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        rec
    }

    #[test]
    fn contraction_bounds_hold_on_real_runs() {
        for (kappa, j) in [(100.0, 3), (1e4, 5)] {
            let rec = tsd_run(kappa, j);
            let report = contraction_report(&rec, kappa);
            assert!(report.sd_steps_checked > 0);
            assert!(report.combined_steps_checked > 0);
            assert!(report.is_clean(), "violations: {:?}", report.violations);
            assert!(report.max_sd_ratio <= theoretical_sd_factor(kappa) * (1.0 + SD_BOUND_SLACK));
            assert!(report.max_combined_ratio < 1.0);
        }
    }

    #[test]
    fn contraction_report_flags_a_fabricated_expansion() {
        let mut rec = tsd_run(100.0, 3);
        // corrupt one SD-step energy error upward past the bound
        let idx = rec
            .iterations
            .iter()
            .position(|e| e.k > 0 && e.step_kind == crate::solvers::StepKind::SdStep)
            .unwrap();
        let prev = rec.iterations[idx - 1].a_norm_error.unwrap();
        rec.iterations[idx].a_norm_error = Some(prev * 2.0);
        let report = contraction_report(&rec, 100.0);
        assert!(!report.is_clean());
    }

    #[test]
    fn envelope_holds_on_real_runs() {
        let rec = tsd_run(1e3, 4);
        assert!(r_linear_envelope_violations(&rec, 1e3).is_empty());
    }

    #[test]
    fn profile_hand_example() {
        // Problem p1: A costs 2, B costs 4 -> ratios 1 and 2.
        // Problem p2: A costs 10, B costs 5 -> ratios 2 and 1.
        // Problem p3: A fails, B costs 7 -> B ratio 1.
        let outcomes = vec![
            ProfileOutcome {
                method: "A".into(),
                problem_key: "p1".into(),
                cost: Some(2.0),
            },
            ProfileOutcome {
                method: "B".into(),
                problem_key: "p1".into(),
                cost: Some(4.0),
            },
            ProfileOutcome {
                method: "A".into(),
                problem_key: "p2".into(),
                cost: Some(10.0),
            },
            ProfileOutcome {
                method: "B".into(),
                problem_key: "p2".into(),
                cost: Some(5.0),
            },
            ProfileOutcome {
                method: "A".into(),
                problem_key: "p3".into(),
                cost: None,
            },
            ProfileOutcome {
                method: "B".into(),
                problem_key: "p3".into(),
                cost: Some(7.0),
            },
        ];
        let curves = performance_profile(&outcomes, FailurePolicy::Infinite);
        let a = curves.iter().find(|c| c.method == "A").unwrap();
        let b = curves.iter().find(|c| c.method == "B").unwrap();
        assert_eq!(a.pool, 3);
        assert_eq!(a.value_at(1.0), 1.0 / 3.0);
        assert_eq!(a.value_at(2.0), 2.0 / 3.0);
        assert_eq!(a.value_at(1e9), 2.0 / 3.0); // the failure never resolves
        assert_eq!(b.value_at(1.0), 2.0 / 3.0);
        assert_eq!(b.value_at(2.0), 1.0);
    }

    #[test]
    fn profile_drop_policy_shrinks_pool() {
        let outcomes = vec![
            ProfileOutcome {
                method: "A".into(),
                problem_key: "p1".into(),
                cost: Some(1.0),
            },
            ProfileOutcome {
                method: "B".into(),
                problem_key: "p1".into(),
                cost: None,
            },
            ProfileOutcome {
                method: "A".into(),
                problem_key: "p2".into(),
                cost: None,
            },
            ProfileOutcome {
                method: "B".into(),
                problem_key: "p2".into(),
                cost: None,
            },
        ];
        let curves = performance_profile(&outcomes, FailurePolicy::DropUnsolvedByAny);
        // p2 unsolved by every method -> dropped; pool is just p1
        for c in &curves {
            assert_eq!(c.pool, 1);
        }
        let a = curves.iter().find(|c| c.method == "A").unwrap();
        assert_eq!(a.value_at(1.0), 1.0);
        let b = curves.iter().find(|c| c.method == "B").unwrap();
        assert_eq!(b.value_at(1e12), 0.0);
    }

    #[test]
    fn profile_csv_shape() {
        let curves = vec![ProfileCurve {
            method: "tsd".into(),
            ratios: vec![1.0, 1.0, 3.0],
            pool: 3,
        }];
        let csv = profile_to_csv(&curves);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "method,rho,value");
        assert!(lines[1..].iter().all(|l| l.starts_with("tsd,")));
        assert_eq!(lines.len(), 3); // header + breakpoints at 1 and 3
    }

    #[test]
    fn trajectory_export_shape() {
        let rec = tsd_run(100.0, 3);
        let csv = trajectory_export(&rec);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(
            lines[0],
            "k,f,log10_gnorm2,log10_anorm_err,log10_xerr2,stepsize,step_kind"
        );
        assert_eq!(lines.len(), rec.iterations.len() + 1);
        assert!(lines[1].ends_with(",sd") || lines[1].ends_with(",combined"));
    }

    #[test]
    fn least_squares_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.25 * x).collect();
        assert!((least_squares_slope(&xs, &ys) + 0.25).abs() < 1e-14);
    }

    #[test]
    fn fitted_slope_bounded_by_theory() {
        // the fitted decay of an SD run cannot beat the worst case by
        // accident, but it must be a genuine decay
        let spec = SpectrumSet {
            set_id: 4,
            kappa: 100.0,
            n: 30,
            seed: 2,
        };
        let p: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        let cfg = SolverConfig::new(MethodId::Sd, ToleranceSpec::relative(1e-10), 100_000);
        let rec = solve_quadratic(&p, &vec![1.0; 30], &cfg).unwrap();
        let slope = fitted_log10_error_slope(&rec).unwrap();
        assert!(slope < 0.0);
        // per-step factor can never be worse than the SD bound
        assert!(10f64.powf(slope) <= theoretical_sd_factor(100.0) * (1.0 + 1e-6));
    }
}
