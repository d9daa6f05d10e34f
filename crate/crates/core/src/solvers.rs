//! Gradient-method iteration engines.
//!
//! The triangle steepest descent method (TSD) runs plain exact-line-search
//! gradient steps, except every `j`-th iteration (`j >= 3`) where the
//! search direction is the sum of the two most recent displacements,
//! `p_k = s_{k-1} + s_{k-2} = x_k - x_{k-2}`. Baselines: steepest descent
//! (SD), the two Barzilai-Borwein stepsizes (BB1/BB2), the
//! Cauchy-Barzilai-Borwein alternate-step method (CaBB), and the cyclic SD
//! method CSD(m) that reuses each exact stepsize `m` times.
//!
//! Quadratic solves iterate on the offset `d = x - x*` internally; this is
//! algebraically identical to iterating on `x` and keeps gradient and
//! error norms fully accurate near the minimizer, where forming `x - x*`
//! afresh would lose most significant digits.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linesearch::{
    exact_quadratic_step, strong_wolfe_search, LineSearchError, Objective, WolfeParams,
};
use crate::quadprob::{QuadraticProblem, ToleranceSpec};
use crate::scalar::{format_full, Scalar};
use crate::vecops;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("method {got} not valid here, expected {expected}")]
    MethodMismatch {
        expected: &'static str,
        got: String,
    },
    #[error("invalid method parameter: {0}")]
    InvalidMethod(String),
    #[error("combined direction requested without displacement history")]
    MissingHistory,
    #[error("method not supported for general objectives: {0}")]
    UnsupportedMethod(String),
    #[error("too few gradients for direction estimate: need {need}, got {got}")]
    TooFewGradients { need: usize, got: usize },
    #[error(transparent)]
    LineSearch(#[from] LineSearchError),
}

/// Method identifier with its cycle parameter where one exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodId {
    /// Triangle steepest descent with cycle parameter `j >= 3`.
    Tsd { j: u32 },
    Sd,
    Bb1,
    Bb2,
    CaBb,
    /// Cyclic steepest descent: each exact stepsize reused `m` times.
    Csd { m: u32 },
}

impl MethodId {
    pub fn validate(&self) -> Result<(), SolverError> {
        match *self {
            MethodId::Tsd { j } if j < 3 => Err(SolverError::InvalidMethod(format!(
                "TSD requires j >= 3, got {j}"
            ))),
            MethodId::Csd { m } if m < 1 => Err(SolverError::InvalidMethod(
                "CSD requires m >= 1".to_string(),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MethodId::Tsd { .. } => "tsd",
            MethodId::Sd => "sd",
            MethodId::Bb1 => "bb1",
            MethodId::Bb2 => "bb2",
            MethodId::CaBb => "cabb",
            MethodId::Csd { .. } => "csd",
        }
    }

    /// Cycle parameter (`j` or `m`) if the method has one.
    pub fn cycle_parameter(&self) -> Option<u32> {
        match *self {
            MethodId::Tsd { j } => Some(j),
            MethodId::Csd { m } => Some(m),
            MethodId::CaBb => Some(2),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self.cycle_parameter() {
            Some(c) if matches!(self, MethodId::Tsd { .. } | MethodId::Csd { .. }) => {
                format!("{}({})", self.name(), c)
            }
            _ => self.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    SdStep,
    CombinedStep,
    BbStep,
    RepeatStep,
}

impl StepKind {
    pub fn name(&self) -> &'static str {
        match self {
            StepKind::SdStep => "sd",
            StepKind::CombinedStep => "combined",
            StepKind::BbStep => "bb",
            StepKind::RepeatStep => "repeat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub method: MethodId,
    pub tolerance: ToleranceSpec<T>,
    pub max_iterations: usize,
    /// Store full iterate and gradient vectors (memory `n * iterations`).
    /// Scalar per-iteration data is always recorded.
    pub record_trajectory: bool,
    /// Stepsize used when a BB denominator is nonpositive; reachable only
    /// on nonquadratic objectives.
    pub bb_fallback_step: T,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(method: MethodId, tolerance: ToleranceSpec<T>, max_iterations: usize) -> Self {
        assert!(max_iterations >= 1);
        Self {
            method,
            tolerance,
            max_iterations,
            record_trajectory: false,
            bb_fallback_step: T::from_f64_lossy(1e-4),
        }
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }
}

/// Scalar record of one iterate. `stepsize` and `step_kind` describe the
/// step that *produced* this iterate; entry 0 carries a zero stepsize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationEntry<T> {
    pub k: usize,
    pub f: T,
    pub grad_norm2: T,
    pub grad_norm_inf: T,
    pub stepsize: T,
    pub step_kind: StepKind,
    /// `||x_k - x*||_H` when the minimizer is known.
    pub a_norm_error: Option<T>,
    /// `||x_k - x*||_2` when the minimizer is known.
    pub x_err_norm2: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    LineSearchFailure,
    NumericalFailure,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Converged => "Converged",
            RunStatus::MaxIterations => "MaxIterations",
            RunStatus::LineSearchFailure => "LineSearchFailure",
            RunStatus::NumericalFailure => "NumericalFailure",
        }
    }
}

/// Where a run's problem came from; benchmark harnesses fill the optional
/// fields for generated problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub label: String,
    pub n: usize,
    pub set_id: Option<u8>,
    pub kappa: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord<T> {
    pub config: SolverConfig<T>,
    pub problem: ProblemDescriptor,
    pub iterations: Vec<IterationEntry<T>>,
    pub status: RunStatus,
    pub total_iterations: usize,
    pub wall_time_seconds: f64,
    pub function_evals: usize,
    pub gradient_evals: usize,
    /// Combined directions that failed the descent check and fell back to
    /// the negative gradient (nonquadratic runs only).
    pub combined_fallbacks: usize,
    pub iterates: Option<Vec<Vec<T>>>,
    pub gradients: Option<Vec<Vec<T>>>,
}

pub const CSV_HEADER: &str = "method,j_or_m,set_id,n,kappa,seed,eps_kind,eps,status,iters,fevals,gevals,time_s,final_gnorm2,final_gnorm_inf";

impl<T: Scalar> RunRecord<T> {
    pub fn final_entry(&self) -> &IterationEntry<T> {
        self.iterations.last().expect("runs record at least entry 0")
    }

    /// One-row CSV summary using the measured wall time.
    pub fn to_csv_row(&self) -> String {
        self.to_csv_row_with_time(self.wall_time_seconds)
    }

    /// One-row CSV summary with a caller-supplied time value, so
    /// deterministic outputs can zero the only nondeterministic column.
    pub fn to_csv_row_with_time(&self, time_s: f64) -> String {
        use crate::quadprob::ToleranceKind;
        let last = self.final_entry();
        let eps_kind = match self.config.tolerance.kind {
            ToleranceKind::RelativeGradNorm2 => "rel2",
            ToleranceKind::AbsoluteGradNormInf => "absinf",
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{},{}",
            self.config.method.name(),
            self.config
                .method
                .cycle_parameter()
                .map(|c| c.to_string())
                .unwrap_or_default(),
            self.problem
                .set_id
                .map(|s| s.to_string())
                .unwrap_or_default(),
            self.problem.n,
            self.problem
                .kappa
                .map(format_full)
                .unwrap_or_default(),
            self.problem
                .seed
                .map(|s| s.to_string())
                .unwrap_or_default(),
            eps_kind,
            format_full(self.config.tolerance.epsilon),
            self.status.name(),
            self.total_iterations,
            self.function_evals,
            self.gradient_evals,
            time_s,
            format_full(last.grad_norm2),
            format_full(last.grad_norm_inf),
        )
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("run record serializes")
    }
}

/// TSD search direction, Eq.-(7)-style cycle on the iteration index:
/// the sum of the two most recent displacements every `j`-th iteration
/// (except at `k = 0`), the negative gradient otherwise.
pub fn tsd_direction<T: Scalar>(
    g_k: &[T],
    k: usize,
    j: u32,
    s_prev: Option<&[T]>,
    s_prev2: Option<&[T]>,
) -> Result<(Vec<T>, StepKind), SolverError> {
    if k != 0 && k % j as usize == 0 {
        match (s_prev, s_prev2) {
            (Some(s1), Some(s2)) => {
                let p = s1.iter().zip(s2).map(|(&a, &b)| a + b).collect();
                Ok((p, StepKind::CombinedStep))
            }
            _ => Err(SolverError::MissingHistory),
        }
    } else {
        Ok((g_k.iter().map(|&v| -v).collect(), StepKind::SdStep))
    }
}

struct QuadRunState<T> {
    entries: Vec<IterationEntry<T>>,
    iterates: Option<Vec<Vec<T>>>,
    gradients: Option<Vec<Vec<T>>>,
    fevals: usize,
    gevals: usize,
}

/// Shared quadratic iteration engine. All exact-line-search methods and
/// the BB family funnel through here so that coincident methods (CSD(1)
/// and SD, CSD(2) and CaBB) are bit-identical by construction.
pub fn solve_quadratic<T: Scalar>(
    problem: &QuadraticProblem<T>,
    x0: &[T],
    config: &SolverConfig<T>,
) -> Result<RunRecord<T>, SolverError> {
    config.method.validate()?;
    let n = problem.dim();
    if x0.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let method = match config.method {
        MethodId::CaBb => MethodId::Csd { m: 2 },
        m => m,
    };

    let start = Instant::now();
    let mut d = vecops::sub(x0, problem.minimizer());
    let mut g = vec![T::zero(); n];
    problem.grad_at_offset(&d, &mut g);
    let mut f = problem.f_at_offset(&d);
    let g0_norm2 = vecops::norm2(&g);

    let mut st = QuadRunState {
        entries: Vec::new(),
        iterates: config.record_trajectory.then(Vec::new),
        gradients: config.record_trajectory.then(Vec::new),
        fevals: 1,
        gevals: 1,
    };
    let mut prev_step = (T::zero(), StepKind::SdStep);
    let mut s_prev: Option<Vec<T>> = None;
    let mut s_prev2: Option<Vec<T>> = None;
    let mut bb_prev: Option<(Vec<T>, Vec<T>)> = None; // (d, g) at previous iterate
    let mut saved_alpha = T::zero();
    let status;
    let mut k = 0usize;

    loop {
        let gn2 = vecops::norm2(&g);
        let gninf = vecops::norm_inf(&g);
        st.entries.push(IterationEntry {
            k,
            f,
            grad_norm2: gn2,
            grad_norm_inf: gninf,
            stepsize: prev_step.0,
            step_kind: prev_step.1,
            a_norm_error: Some(problem.hessian().quadform(&d).sqrt()),
            x_err_norm2: Some(vecops::norm2(&d)),
        });
        if let Some(xs) = st.iterates.as_mut() {
            let x: Vec<T> = problem
                .minimizer()
                .iter()
                .zip(&d)
                .map(|(&m, &di)| m + di)
                .collect();
            xs.push(x);
        }
        if let Some(gs) = st.gradients.as_mut() {
            gs.push(g.clone());
        }
        if !f.is_finite() || !vecops::all_finite(&g) {
            status = RunStatus::NumericalFailure;
            break;
        }
        if config.tolerance.met(gn2, gninf, g0_norm2) {
            status = RunStatus::Converged;
            break;
        }
        if k >= config.max_iterations {
            status = RunStatus::MaxIterations;
            break;
        }

        // direction and stepsize
        let mut step = vec![T::zero(); n]; // alpha * p, the displacement
        let (alpha, kind) = match method {
            MethodId::Tsd { j } => {
                let (p, kind) = tsd_direction(
                    &g,
                    k,
                    j,
                    s_prev.as_deref(),
                    s_prev2.as_deref(),
                )?;
                let alpha = match exact_quadratic_step(problem, &g, &p) {
                    Ok(a) => a,
                    Err(_) => {
                        status = RunStatus::NumericalFailure;
                        break;
                    }
                };
                for (si, &pi) in step.iter_mut().zip(&p) {
                    *si = alpha * pi;
                }
                (alpha, kind)
            }
            MethodId::Sd | MethodId::Csd { .. } | MethodId::Bb1 | MethodId::Bb2 => {
                let alpha;
                let kind;
                match method {
                    MethodId::Sd => {
                        alpha = sd_stepsize(problem, &g);
                        kind = StepKind::SdStep;
                    }
                    MethodId::Csd { m } => {
                        if k % m as usize == 0 {
                            alpha = sd_stepsize(problem, &g);
                            saved_alpha = alpha;
                            kind = StepKind::SdStep;
                        } else {
                            alpha = saved_alpha;
                            kind = StepKind::RepeatStep;
                        }
                    }
                    MethodId::Bb1 | MethodId::Bb2 => {
                        match bb_prev.take() {
                            None => {
                                alpha = sd_stepsize(problem, &g);
                                kind = StepKind::SdStep;
                            }
                            Some((pd, pg)) => {
                                let s = vecops::sub(&d, &pd);
                                let y = vecops::sub(&g, &pg);
                                let sy = vecops::dot(&s, &y);
                                alpha = if sy > T::zero() {
                                    if matches!(method, MethodId::Bb1) {
                                        vecops::dot(&s, &s) / sy
                                    } else {
                                        sy / vecops::dot(&y, &y)
                                    }
                                } else {
                                    config.bb_fallback_step
                                };
                                kind = StepKind::BbStep;
                            }
                        }
                        bb_prev = Some((d.clone(), g.clone()));
                    }
                    _ => unreachable!(),
                }
                for (si, &gi) in step.iter_mut().zip(&g) {
                    *si = -alpha * gi;
                }
                (alpha, kind)
            }
            MethodId::CaBb => unreachable!("mapped to CSD(2)"),
        };

        if !alpha.is_finite() || !vecops::all_finite(&step) {
            status = RunStatus::NumericalFailure;
            break;
        }
        for (di, &si) in d.iter_mut().zip(&step) {
            *di += si;
        }
        problem.grad_at_offset(&d, &mut g);
        f = problem.f_at_offset(&d);
        st.fevals += 1;
        st.gevals += 1;
        if matches!(method, MethodId::Tsd { .. }) {
            s_prev2 = s_prev.take();
            s_prev = Some(step);
        }
        prev_step = (alpha, kind);
        k += 1;
    }

    let total_iterations = st.entries.len() - 1;
    Ok(RunRecord {
        config: config.clone(),
        problem: ProblemDescriptor {
            label: "quadratic".to_string(),
            n,
            set_id: None,
            kappa: problem.condition_number().map(|c| c.to_f64_lossy()),
            seed: None,
        },
        iterations: st.entries,
        status,
        total_iterations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        function_evals: st.fevals,
        gradient_evals: st.gevals,
        combined_fallbacks: 0,
        iterates: st.iterates,
        gradients: st.gradients,
    })
}

fn sd_stepsize<T: Scalar>(problem: &QuadraticProblem<T>, g: &[T]) -> T {
    vecops::dot(g, g) / problem.hessian().quadform(g)
}

fn expect_method<T: Scalar>(
    config: &SolverConfig<T>,
    ok: bool,
    expected: &'static str,
) -> Result<(), SolverError> {
    if ok {
        Ok(())
    } else {
        Err(SolverError::MethodMismatch {
            expected,
            got: config.method.label(),
        })
    }
}

/// TSD on a quadratic (exact line search).
pub fn tsd_solve<T: Scalar>(
    problem: &QuadraticProblem<T>,
    x0: &[T],
    config: &SolverConfig<T>,
) -> Result<RunRecord<T>, SolverError> {
    expect_method(config, matches!(config.method, MethodId::Tsd { .. }), "tsd")?;
    solve_quadratic(problem, x0, config)
}

/// Steepest descent with the exact stepsize `g^T g / g^T H g`.
pub fn sd_solve<T: Scalar>(
    problem: &QuadraticProblem<T>,
    x0: &[T],
    config: &SolverConfig<T>,
) -> Result<RunRecord<T>, SolverError> {
    expect_method(config, matches!(config.method, MethodId::Sd), "sd")?;
    solve_quadratic(problem, x0, config)
}

/// Barzilai-Borwein (BB1 or BB2); the first step uses the SD stepsize.
pub fn bb_solve<T: Scalar>(
    problem: &QuadraticProblem<T>,
    x0: &[T],
    config: &SolverConfig<T>,
) -> Result<RunRecord<T>, SolverError> {
    expect_method(
        config,
        matches!(config.method, MethodId::Bb1 | MethodId::Bb2),
        "bb1 or bb2",
    )?;
    solve_quadratic(problem, x0, config)
}

/// Cauchy-Barzilai-Borwein: each exact SD stepsize applied twice.
pub fn cabb_solve<T: Scalar>(
    problem: &QuadraticProblem<T>,
    x0: &[T],
    config: &SolverConfig<T>,
) -> Result<RunRecord<T>, SolverError> {
    expect_method(config, matches!(config.method, MethodId::CaBb), "cabb")?;
    solve_quadratic(problem, x0, config)
}

/// Cyclic SD: each exact stepsize reused `m` times. `m = 1` is SD,
/// `m = 2` is CaBB.
pub fn csd_solve<T: Scalar>(
    problem: &QuadraticProblem<T>,
    x0: &[T],
    config: &SolverConfig<T>,
) -> Result<RunRecord<T>, SolverError> {
    expect_method(config, matches!(config.method, MethodId::Csd { .. }), "csd")?;
    solve_quadratic(problem, x0, config)
}

/// TSD (or plain SD) for general unconstrained minimization: the same
/// direction cycle, with stepsizes from the strong Wolfe search. When a
/// combined direction is not a descent direction, which the quadratic
/// theory no longer rules out, the iteration falls back to the negative
/// gradient and records a plain SD step.
pub fn tsd_solve_general<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    x0: &[T],
    config: &SolverConfig<T>,
    wolfe: &WolfeParams<T>,
) -> Result<RunRecord<T>, SolverError> {
    config.method.validate()?;
    let j = match config.method {
        MethodId::Tsd { j } => Some(j),
        MethodId::Sd => None,
        _ => {
            return Err(SolverError::MethodMismatch {
                expected: "tsd or sd",
                got: config.method.label(),
            })
        }
    };
    let n = obj.dim();
    if x0.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }

    let start = Instant::now();
    let mut x = x0.to_vec();
    let mut f = obj.value(&x);
    let mut g = obj.gradient(&x);
    let g0_norm2 = vecops::norm2(&g);
    let mut st = QuadRunState {
        entries: Vec::new(),
        iterates: config.record_trajectory.then(Vec::new),
        gradients: config.record_trajectory.then(Vec::new),
        fevals: 1,
        gevals: 1,
    };
    let mut prev_step = (T::zero(), StepKind::SdStep);
    let mut s_prev: Option<Vec<T>> = None;
    let mut s_prev2: Option<Vec<T>> = None;
    let mut fallbacks = 0usize;
    let status;
    let mut k = 0usize;

    loop {
        let gn2 = vecops::norm2(&g);
        let gninf = vecops::norm_inf(&g);
        st.entries.push(IterationEntry {
            k,
            f,
            grad_norm2: gn2,
            grad_norm_inf: gninf,
            stepsize: prev_step.0,
            step_kind: prev_step.1,
            a_norm_error: None,
            x_err_norm2: None,
        });
        if let Some(xs) = st.iterates.as_mut() {
            xs.push(x.clone());
        }
        if let Some(gs) = st.gradients.as_mut() {
            gs.push(g.clone());
        }
        if !f.is_finite() || !vecops::all_finite(&g) {
            status = RunStatus::NumericalFailure;
            break;
        }
        if config.tolerance.met(gn2, gninf, g0_norm2) {
            status = RunStatus::Converged;
            break;
        }
        if k >= config.max_iterations {
            status = RunStatus::MaxIterations;
            break;
        }

        let combined = j
            .map(|j| k != 0 && k % j as usize == 0 && s_prev.is_some() && s_prev2.is_some())
            .unwrap_or(false);
        let (p, kind) = if combined {
            let (p, kind) = tsd_direction(&g, k, j.unwrap(), s_prev.as_deref(), s_prev2.as_deref())?;
            if vecops::dot(&p, &g) < T::zero() {
                (p, kind)
            } else {
                fallbacks += 1;
                (g.iter().map(|&v| -v).collect(), StepKind::SdStep)
            }
        } else {
            (g.iter().map(|&v| -v).collect::<Vec<T>>(), StepKind::SdStep)
        };

        let result = match strong_wolfe_search(obj, &x, &p, f, &g, wolfe) {
            Ok(r) => r,
            Err(LineSearchError::NonFiniteValue { .. }) => {
                status = RunStatus::NumericalFailure;
                break;
            }
            Err(_) => {
                status = RunStatus::LineSearchFailure;
                break;
            }
        };
        st.fevals += result.counters.value_evals;
        st.gevals += result.counters.gradient_evals;
        let alpha = result.alpha;
        let step: Vec<T> = p.iter().map(|&pi| alpha * pi).collect();
        for (xi, &si) in x.iter_mut().zip(&step) {
            *xi += si;
        }
        f = result.f_new;
        g = result.g_new;
        s_prev2 = s_prev.take();
        s_prev = Some(step);
        prev_step = (alpha, kind);
        k += 1;
    }

    let total_iterations = st.entries.len() - 1;
    Ok(RunRecord {
        config: config.clone(),
        problem: ProblemDescriptor {
            label: "general".to_string(),
            n,
            set_id: None,
            kappa: None,
            seed: None,
        },
        iterations: st.entries,
        status,
        total_iterations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        function_evals: st.fevals,
        gradient_evals: st.gevals,
        combined_fallbacks: fallbacks,
        iterates: st.iterates,
        gradients: st.gradients,
    })
}

/// BB on a general objective: raw BB steps `x - alpha g` with the Wolfe
/// search bootstrapping the first step, and the fallback stepsize whenever
/// `s^T y <= 0`.
pub fn bb_solve_general<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    x0: &[T],
    config: &SolverConfig<T>,
    wolfe: &WolfeParams<T>,
) -> Result<RunRecord<T>, SolverError> {
    let bb1 = match config.method {
        MethodId::Bb1 => true,
        MethodId::Bb2 => false,
        _ => {
            return Err(SolverError::MethodMismatch {
                expected: "bb1 or bb2",
                got: config.method.label(),
            })
        }
    };
    let n = obj.dim();
    if x0.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }

    let start = Instant::now();
    let mut x = x0.to_vec();
    let mut f = obj.value(&x);
    let mut g = obj.gradient(&x);
    let g0_norm2 = vecops::norm2(&g);
    let mut st = QuadRunState {
        entries: Vec::new(),
        iterates: config.record_trajectory.then(Vec::new),
        gradients: config.record_trajectory.then(Vec::new),
        fevals: 1,
        gevals: 1,
    };
    let mut prev_step = (T::zero(), StepKind::SdStep);
    let mut prev: Option<(Vec<T>, Vec<T>)> = None;
    let status;
    let mut k = 0usize;

    loop {
        let gn2 = vecops::norm2(&g);
        let gninf = vecops::norm_inf(&g);
        st.entries.push(IterationEntry {
            k,
            f,
            grad_norm2: gn2,
            grad_norm_inf: gninf,
            stepsize: prev_step.0,
            step_kind: prev_step.1,
            a_norm_error: None,
            x_err_norm2: None,
        });
        if let Some(xs) = st.iterates.as_mut() {
            xs.push(x.clone());
        }
        if let Some(gs) = st.gradients.as_mut() {
            gs.push(g.clone());
        }
        if !f.is_finite() || !vecops::all_finite(&g) {
            status = RunStatus::NumericalFailure;
            break;
        }
        if config.tolerance.met(gn2, gninf, g0_norm2) {
            status = RunStatus::Converged;
            break;
        }
        if k >= config.max_iterations {
            status = RunStatus::MaxIterations;
            break;
        }

        let (alpha, kind) = match prev.take() {
            None => {
                let p: Vec<T> = g.iter().map(|&v| -v).collect();
                let result = match strong_wolfe_search(obj, &x, &p, f, &g, wolfe) {
                    Ok(r) => r,
                    Err(LineSearchError::NonFiniteValue { .. }) => {
                        status = RunStatus::NumericalFailure;
                        break;
                    }
                    Err(_) => {
                        status = RunStatus::LineSearchFailure;
                        break;
                    }
                };
                st.fevals += result.counters.value_evals;
                st.gevals += result.counters.gradient_evals;
                (result.alpha, StepKind::SdStep)
            }
            Some((px, pg)) => {
                let s = vecops::sub(&x, &px);
                let y = vecops::sub(&g, &pg);
                let sy = vecops::dot(&s, &y);
                let alpha = if sy > T::zero() {
                    if bb1 {
                        vecops::dot(&s, &s) / sy
                    } else {
                        sy / vecops::dot(&y, &y)
                    }
                } else {
                    config.bb_fallback_step
                };
                (alpha, StepKind::BbStep)
            }
        };
        prev = Some((x.clone(), g.clone()));
        for (xi, &gi) in x.iter_mut().zip(&g) {
            *xi = *xi - alpha * gi;
        }
        f = obj.value(&x);
        g = obj.gradient(&x);
        st.fevals += 1;
        st.gevals += 1;
        prev_step = (alpha, kind);
        k += 1;
    }

    let total_iterations = st.entries.len() - 1;
    Ok(RunRecord {
        config: config.clone(),
        problem: ProblemDescriptor {
            label: "general".to_string(),
            n,
            set_id: None,
            kappa: None,
            seed: None,
        },
        iterations: st.entries,
        status,
        total_iterations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        function_evals: st.fevals,
        gradient_evals: st.gevals,
        combined_fallbacks: 0,
        iterates: st.iterates,
        gradients: st.gradients,
    })
}

/// Per-iteration context handed to a user-supplied stepsize rule.
pub struct StepContext<'a, T> {
    pub k: usize,
    pub gradient: &'a [T],
    /// `x_k - x_{k-1}` once a step has been taken.
    pub prev_displacement: Option<&'a [T]>,
    /// `g_k - g_{k-1}` once a step has been taken.
    pub prev_grad_change: Option<&'a [T]>,
    pub problem: &'a QuadraticProblem<T>,
}

/// Registration point for gradient methods defined purely by a stepsize
/// formula (DY, ABBmin2, BBQ and friends live behind this trait; their
/// formulas are not part of this crate).
pub trait StepsizeRule<T: Scalar> {
    fn name(&self) -> &str;
    fn stepsize(&mut self, ctx: StepContext<'_, T>) -> T;
}

/// Gradient iteration `x_{k+1} = x_k - alpha_k g_k` with `alpha_k` from a
/// user-supplied rule. Steps are recorded as BB-kind steps.
pub fn custom_gradient_solve<T: Scalar>(
    problem: &QuadraticProblem<T>,
    x0: &[T],
    config: &SolverConfig<T>,
    rule: &mut dyn StepsizeRule<T>,
) -> Result<RunRecord<T>, SolverError> {
    let n = problem.dim();
    if x0.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let start = Instant::now();
    let mut d = vecops::sub(x0, problem.minimizer());
    let mut g = vec![T::zero(); n];
    problem.grad_at_offset(&d, &mut g);
    let mut f = problem.f_at_offset(&d);
    let g0_norm2 = vecops::norm2(&g);
    let mut entries = Vec::new();
    let mut prev: Option<(Vec<T>, Vec<T>)> = None; // (d, g)
    let mut prev_step = (T::zero(), StepKind::SdStep);
    let mut fevals = 1usize;
    let mut gevals = 1usize;
    let status;
    let mut k = 0usize;
    loop {
        let gn2 = vecops::norm2(&g);
        let gninf = vecops::norm_inf(&g);
        entries.push(IterationEntry {
            k,
            f,
            grad_norm2: gn2,
            grad_norm_inf: gninf,
            stepsize: prev_step.0,
            step_kind: prev_step.1,
            a_norm_error: Some(problem.hessian().quadform(&d).sqrt()),
            x_err_norm2: Some(vecops::norm2(&d)),
        });
        if !f.is_finite() || !vecops::all_finite(&g) {
            status = RunStatus::NumericalFailure;
            break;
        }
        if config.tolerance.met(gn2, gninf, g0_norm2) {
            status = RunStatus::Converged;
            break;
        }
        if k >= config.max_iterations {
            status = RunStatus::MaxIterations;
            break;
        }
        let (s, y);
        let (ps, pg) = match &prev {
            Some((pd, pgr)) => {
                s = vecops::sub(&d, pd);
                y = vecops::sub(&g, pgr);
                (Some(s.as_slice()), Some(y.as_slice()))
            }
            None => (None, None),
        };
        let alpha = rule.stepsize(StepContext {
            k,
            gradient: &g,
            prev_displacement: ps,
            prev_grad_change: pg,
            problem,
        });
        if !alpha.is_finite() {
            status = RunStatus::NumericalFailure;
            break;
        }
        prev = Some((d.clone(), g.clone()));
        for (di, &gi) in d.iter_mut().zip(&g) {
            *di = *di - alpha * gi;
        }
        problem.grad_at_offset(&d, &mut g);
        f = problem.f_at_offset(&d);
        fevals += 1;
        gevals += 1;
        prev_step = (alpha, StepKind::BbStep);
        k += 1;
    }
    let total_iterations = entries.len() - 1;
    Ok(RunRecord {
        config: config.clone(),
        problem: ProblemDescriptor {
            label: format!("quadratic/{}", rule.name()),
            n,
            set_id: None,
            kappa: problem.condition_number().map(|c| c.to_f64_lossy()),
            seed: None,
        },
        iterations: entries,
        status,
        total_iterations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        function_evals: fevals,
        gradient_evals: gevals,
        combined_fallbacks: 0,
        iterates: None,
        gradients: None,
    })
}

/// Estimated limiting gradient directions of an SD-stepsize run.
#[derive(Debug, Clone)]
pub struct DirectionEstimate<T> {
    /// Normalized last even-index gradient.
    pub d1: Vec<T>,
    /// Normalized last odd-index gradient.
    pub d2: Vec<T>,
    /// Sign-aligned gaps `|| g_hat_{k+2} - g_hat_k ||` in index order.
    pub residuals: Vec<T>,
}

/// Estimates the two alternating limit directions of the gradient
/// sequence and how fast same-parity gradients settle onto them.
pub fn akaike_direction_estimate<T: Scalar>(
    _record: &RunRecord<T>,
    gradients: &[Vec<T>],
) -> Result<DirectionEstimate<T>, SolverError> {
    let units: Vec<Vec<T>> = gradients
        .iter()
        .filter(|g| vecops::norm2(g) > T::zero())
        .map(|g| {
            let nrm = vecops::norm2(g);
            g.iter().map(|&v| v / nrm).collect()
        })
        .collect();
    if units.len() < 6 {
        return Err(SolverError::TooFewGradients {
            need: 6,
            got: units.len(),
        });
    }
    let mut residuals = Vec::with_capacity(units.len() - 2);
    for k in 0..units.len() - 2 {
        let a = &units[k];
        let b = &units[k + 2];
        let sign = if vecops::dot(a, b) < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        let gap = a
            .iter()
            .zip(b)
            .map(|(&ai, &bi)| {
                let diff = sign * bi - ai;
                diff * diff
            })
            .sum::<T>()
            .sqrt();
        residuals.push(gap);
    }
    let last = units.len() - 1;
    let (even_idx, odd_idx) = if last % 2 == 0 {
        (last, last - 1)
    } else {
        (last - 1, last)
    };
    Ok(DirectionEstimate {
        d1: units[even_idx].clone(),
        d2: units[odd_idx].clone(),
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Quartic, Rosenbrock2d};
    use crate::quadprob::generate_problem;
    use crate::quadprob::SpectrumSet;

    fn diag(eigs: &[f64], x_star: &[f64]) -> QuadraticProblem<f64> {
        QuadraticProblem::new_diagonal(eigs.to_vec(), x_star.to_vec(), 0.0).unwrap()
    }

    fn config(method: MethodId, eps: f64, cap: usize) -> SolverConfig<f64> {
        SolverConfig::new(method, ToleranceSpec::relative(eps), cap)
    }

    #[test]
    fn two_dimensional_quadratic_terminates_in_four_iterations() {
        // In 2-D the gradients alternate between two fixed directions, so
        // the k = 3 chord passes through the minimizer and the exact step
        // along it lands there.
        let p = diag(&[1.0, 10.0], &[2.0, -3.0]);
        let cfg = config(MethodId::Tsd { j: 3 }, 1e-10, 50);
        let rec = tsd_solve(&p, &[5.0, 5.0], &cfg).unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        assert!(rec.total_iterations <= 4, "took {}", rec.total_iterations);
    }

    #[test]
    fn combined_direction_is_the_chord() {
        let spec = SpectrumSet {
            set_id: 1,
            kappa: 1e3,
            n: 30,
            seed: 7,
        };
        let p: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        let cfg = config(MethodId::Tsd { j: 3 }, 1e-10, 10_000).with_trajectory();
        let x0 = vec![1.0; 30];
        let rec = tsd_solve(&p, &x0, &cfg).unwrap();
        let xs = rec.iterates.as_ref().unwrap();
        let mut checked = 0;
        for e in &rec.iterations {
            if e.step_kind == StepKind::CombinedStep && e.k >= 2 {
                // step producing x_k went along x_{k-1} - x_{k-3}
                let k = e.k;
                let chord = vecops::sub(&xs[k - 1], &xs[k - 3]);
                let step = vecops::sub(&xs[k], &xs[k - 1]);
                let cos = vecops::dot(&chord, &step)
                    / (vecops::norm2(&chord) * vecops::norm2(&step));
                assert!((cos.abs() - 1.0).abs() < 1e-12, "cos = {cos}");
                checked += 1;
            }
        }
        assert!(checked > 3);
    }

    #[test]
    fn consecutive_gradients_orthogonal_after_exact_sd_steps() {
        let p = diag(&[1.0, 4.0, 9.0, 25.0], &[0.0; 4]);
        let cfg = config(MethodId::Sd, 1e-10, 1000).with_trajectory();
        let rec = sd_solve(&p, &[1.0, 1.0, 1.0, 1.0], &cfg).unwrap();
        let gs = rec.gradients.as_ref().unwrap();
        for w in gs.windows(2) {
            let scale = vecops::norm2(&w[0]) * vecops::norm2(&w[1]);
            if scale > 0.0 {
                assert!(vecops::dot(&w[0], &w[1]).abs() / scale < 1e-12);
            }
        }
    }

    #[test]
    fn tsd_objective_decreases_monotonically() {
        let spec = SpectrumSet {
            set_id: 4,
            kappa: 1e4,
            n: 50,
            seed: 21,
        };
        let p: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        let cfg = config(MethodId::Tsd { j: 5 }, 1e-12, 100_000);
        let rec = tsd_solve(&p, &vec![3.0; 50], &cfg).unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        for w in rec.iterations.windows(2) {
            assert!(w[1].f < w[0].f, "f rose at k = {}", w[1].k);
        }
    }

    #[test]
    fn bb_stepsizes_hand_values() {
        // H = diag(1, 3), x0 - x* = (1, 1): the bootstrap SD step is
        // 10/28 = 5/14; the first BB1 step equals the previous Cauchy
        // step 5/14, the first BB2 step is g H g / g H^2 g = 28/82.
        let p = diag(&[1.0, 3.0], &[0.0, 0.0]);
        for (method, expect) in [
            (MethodId::Bb1, 5.0 / 14.0),
            (MethodId::Bb2, 28.0 / 82.0),
        ] {
            let cfg = config(method, 1e-14, 100);
            let rec = bb_solve(&p, &[1.0, 1.0], &cfg).unwrap();
            assert_eq!(rec.iterations[1].step_kind, StepKind::SdStep);
            assert!((rec.iterations[1].stepsize - 5.0 / 14.0).abs() < 1e-15);
            assert_eq!(rec.iterations[2].step_kind, StepKind::BbStep);
            assert!(
                (rec.iterations[2].stepsize - expect).abs() < 1e-15,
                "{method:?}: {} vs {expect}",
                rec.iterations[2].stepsize
            );
        }
    }

    #[test]
    fn start_at_minimizer_converges_immediately() {
        let p = diag(&[1.0, 2.0], &[4.0, -1.0]);
        let cfg = SolverConfig::new(
            MethodId::Sd,
            ToleranceSpec::absolute_inf(1e-8),
            10,
        );
        let rec = sd_solve(&p, &[4.0, -1.0], &cfg).unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        assert_eq!(rec.total_iterations, 0);
        assert_eq!(rec.iterations[0].stepsize, 0.0);
    }

    #[test]
    fn csd_one_matches_sd_and_cabb_matches_csd_two() {
        let spec = SpectrumSet {
            set_id: 1,
            kappa: 100.0,
            n: 12,
            seed: 5,
        };
        let p: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        let x0 = vec![1.5; 12];
        let run = |m| {
            let cfg = config(m, 1e-10, 10_000);
            solve_quadratic(&p, &x0, &cfg).unwrap()
        };
        let sd = run(MethodId::Sd);
        let csd1 = run(MethodId::Csd { m: 1 });
        assert_eq!(sd.total_iterations, csd1.total_iterations);
        for (a, b) in sd.iterations.iter().zip(&csd1.iterations) {
            assert_eq!(a.f, b.f);
            assert_eq!(a.stepsize, b.stepsize);
        }
        let cabb = run(MethodId::CaBb);
        let csd2 = run(MethodId::Csd { m: 2 });
        assert_eq!(cabb.total_iterations, csd2.total_iterations);
        for (a, b) in cabb.iterations.iter().zip(&csd2.iterations) {
            assert_eq!(a.f, b.f);
            assert_eq!(a.stepsize, b.stepsize);
            assert_eq!(a.grad_norm2, b.grad_norm2);
        }
    }

    #[test]
    fn csd_repeats_each_stepsize_m_times() {
        let p = diag(&[1.0, 2.0, 7.0], &[0.0; 3]);
        let cfg = config(MethodId::Csd { m: 3 }, 1e-10, 500);
        let rec = csd_solve(&p, &[1.0, -2.0, 0.5], &cfg).unwrap();
        for e in rec.iterations.iter().skip(1) {
            // entry k was produced at iteration k-1
            let expect_fresh = (e.k - 1) % 3 == 0;
            assert_eq!(
                e.step_kind,
                if expect_fresh {
                    StepKind::SdStep
                } else {
                    StepKind::RepeatStep
                }
            );
        }
    }

    #[test]
    fn invalid_cycle_parameters_rejected() {
        assert!(MethodId::Tsd { j: 2 }.validate().is_err());
        assert!(MethodId::Tsd { j: 3 }.validate().is_ok());
        assert!(MethodId::Csd { m: 0 }.validate().is_err());
        let p = diag(&[1.0, 2.0], &[0.0, 0.0]);
        let cfg = config(MethodId::Tsd { j: 2 }, 1e-8, 10);
        assert!(tsd_solve(&p, &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn wrapper_method_mismatch_rejected() {
        let p = diag(&[1.0, 2.0], &[0.0, 0.0]);
        let cfg = config(MethodId::Sd, 1e-8, 10);
        assert!(tsd_solve(&p, &[1.0, 1.0], &cfg).is_err());
        assert!(bb_solve(&p, &[1.0, 1.0], &cfg).is_err());
        assert!(cabb_solve(&p, &[1.0, 1.0], &cfg).is_err());
        assert!(csd_solve(&p, &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn tsd_direction_requires_history() {
        let g = [1.0_f64, 2.0];
        assert!(matches!(
            tsd_direction(&g, 3, 3, None, None),
            Err(SolverError::MissingHistory)
        ));
        let (p, kind) = tsd_direction(&g, 1, 3, None, None).unwrap();
        assert_eq!(kind, StepKind::SdStep);
        assert_eq!(p, vec![-1.0, -2.0]);
        let s1 = [1.0, 0.0];
        let s2 = [0.0, 1.0];
        let (p, kind) = tsd_direction(&g, 3, 3, Some(&s1), Some(&s2)).unwrap();
        assert_eq!(kind, StepKind::CombinedStep);
        assert_eq!(p, vec![1.0, 1.0]);
    }

    #[test]
    fn csv_row_shape() {
        let p = diag(&[1.0, 2.0], &[0.0, 0.0]);
        let cfg = config(MethodId::Tsd { j: 3 }, 1e-10, 100);
        let mut rec = tsd_solve(&p, &[1.0, 1.0], &cfg).unwrap();
        rec.problem.set_id = Some(1);
        rec.problem.seed = Some(42);
        let row = rec.to_csv_row_with_time(0.0);
        assert_eq!(CSV_HEADER.split(',').count(), 15);
        assert_eq!(row.split(',').count(), 15);
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "tsd");
        assert_eq!(fields[1], "3");
        assert_eq!(fields[2], "1");
        assert_eq!(fields[5], "42");
        assert_eq!(fields[6], "rel2");
        assert_eq!(fields[8], "Converged");
        assert_eq!(fields[12], "0.000000");
    }

    #[test]
    fn run_record_json_round_trip() {
        let p = diag(&[1.0, 2.0], &[0.0, 0.0]);
        let cfg = config(MethodId::Tsd { j: 3 }, 1e-10, 100).with_trajectory();
        let rec = tsd_solve(&p, &[1.0, 1.0], &cfg).unwrap();
        let text = rec.to_json();
        let back: RunRecord<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(rec, back);
    }

    #[test]
    fn general_tsd_solves_rosenbrock() {
        let cfg = SolverConfig::new(
            MethodId::Tsd { j: 3 },
            ToleranceSpec::absolute_inf(1e-6),
            20_000,
        );
        let rec = tsd_solve_general(
            &Rosenbrock2d,
            &Rosenbrock2d::canonical_start::<f64>(),
            &cfg,
            &WolfeParams::default(),
        )
        .unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        assert!(rec.final_entry().f < 1e-10);
        assert!(rec.function_evals >= rec.total_iterations);
    }

    #[test]
    fn general_bb_solves_quartic() {
        let q = Quartic::new(6);
        let cfg = SolverConfig::new(
            MethodId::Bb1,
            ToleranceSpec::absolute_inf(1e-8),
            10_000,
        );
        let rec = bb_solve_general(&q, &q.canonical_start::<f64>(), &cfg, &WolfeParams::default())
            .unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        assert!(rec.final_entry().f < 1e-12);
    }

    #[test]
    fn general_solver_rejects_unsupported_methods() {
        let cfg = SolverConfig::new(
            MethodId::CaBb,
            ToleranceSpec::absolute_inf(1e-6),
            100,
        );
        assert!(tsd_solve_general(
            &Rosenbrock2d,
            &[0.0, 0.0],
            &cfg,
            &WolfeParams::default()
        )
        .is_err());
        assert!(bb_solve_general(
            &Rosenbrock2d,
            &[0.0, 0.0],
            &cfg,
            &WolfeParams::default()
        )
        .is_err());
    }

    #[test]
    fn max_iterations_reported_honestly() {
        let p = diag(&[1.0, 1000.0], &[0.0, 0.0]);
        let cfg = config(MethodId::Sd, 1e-14, 3);
        let rec = sd_solve(&p, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(rec.status, RunStatus::MaxIterations);
        assert_eq!(rec.total_iterations, 3);
        assert_eq!(rec.iterations.len(), 4);
    }

    #[test]
    fn custom_rule_plugs_in() {
        struct ConstantStep(f64);
        impl StepsizeRule<f64> for ConstantStep {
            fn name(&self) -> &str {
                "constant"
            }
            fn stepsize(&mut self, _ctx: StepContext<'_, f64>) -> f64 {
                self.0
            }
        }
        // isotropic H = 2 I: the exact step 1/2 converges in one move
        let p = diag(&[2.0, 2.0], &[0.0, 0.0]);
        let cfg = config(MethodId::Sd, 1e-12, 100);
        let rec =
            custom_gradient_solve(&p, &[3.0, -1.0], &cfg, &mut ConstantStep(0.5)).unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        assert_eq!(rec.total_iterations, 1);
        assert_eq!(rec.iterations[1].step_kind, StepKind::BbStep);
        assert_eq!(rec.problem.label, "quadratic/constant");
    }

    #[test]
    fn direction_estimate_needs_six_gradients() {
        let p = diag(&[1.0, 2.0], &[0.0, 0.0]);
        let cfg = config(MethodId::Sd, 1e-10, 100).with_trajectory();
        let rec = sd_solve(&p, &[1.0, 1.0], &cfg).unwrap();
        let gs = rec.gradients.clone().unwrap();
        let short = &gs[..4.min(gs.len())];
        assert!(matches!(
            akaike_direction_estimate(&rec, short),
            Err(SolverError::TooFewGradients { .. })
        ));
    }

    #[test]
    fn direction_estimate_finds_alternating_limits() {
        // SD on a 2-D quadratic: gradients alternate between two fixed
        // directions, so same-parity residuals collapse to zero quickly.
        let p = diag(&[1.0, 10.0], &[0.0, 0.0]);
        let cfg = config(MethodId::Sd, 1e-13, 10_000).with_trajectory();
        let rec = sd_solve(&p, &[1.0, 1.0], &cfg).unwrap();
        let gs = rec.gradients.clone().unwrap();
        let est = akaike_direction_estimate(&rec, &gs).unwrap();
        assert!((vecops::norm2(&est.d1) - 1.0).abs() < 1e-14);
        assert!((vecops::norm2(&est.d2) - 1.0).abs() < 1e-14);
        let tail = est.residuals[est.residuals.len() - 1];
        assert!(tail < 1e-10, "tail residual {tail}");
        // the two limits are genuinely different directions
        assert!(vecops::dot(&est.d1, &est.d2).abs() < 0.999);
    }
}
