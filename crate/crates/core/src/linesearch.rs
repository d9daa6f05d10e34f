//! Line searches: the closed-form exact step on quadratics and a strong
//! Wolfe bracket/zoom search for general objectives.

use thiserror::Error;

use crate::quadprob::QuadraticProblem;
use crate::scalar::Scalar;
use crate::vecops;

#[derive(Debug, Error, PartialEq)]
pub enum LineSearchError {
    #[error("search direction is not a descent direction (p^T g = {0})")]
    NonDescentDirection(f64),
    #[error("zero search direction")]
    ZeroDirection,
    #[error("no bracket found within {expansions} expansions (direction may be unbounded below)")]
    BracketFailure { expansions: usize },
    #[error("zoom interval collapsed to width {width} without satisfying the curvature condition")]
    ZoomFailure { width: f64 },
    #[error("objective returned a non-finite value at trial step {alpha}")]
    NonFiniteValue { alpha: f64 },
    #[error("p^T H p = {0} <= 0: Hessian is not positive definite")]
    IndefiniteCurvature(f64),
    #[error("dimension mismatch")]
    DimensionMismatch,
}

/// Callback contract for a general smooth objective over R^n.
///
/// A single instance must either tolerate concurrent callbacks or be used
/// by one search at a time; the crate never shares an instance between
/// concurrent searches on its own.
pub trait Objective<T: Scalar> {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
}

impl<T: Scalar> Objective<T> for QuadraticProblem<T> {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn value(&self, x: &[T]) -> T {
        self.eval_f(x).expect("dimension checked by caller")
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.eval_grad(x).expect("dimension checked by caller")
    }
}

/// Strong Wolfe parameters. Defaults follow the common choice for
/// gradient-type methods: `c1 = 1e-4`, `c2 = 0.1`, unit initial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams<T> {
    pub c1: T,
    pub c2: T,
    pub initial_step: T,
    pub max_bracket_expansions: usize,
    pub max_zoom_iterations: usize,
    pub step_upper_bound: T,
}

impl<T: Scalar> Default for WolfeParams<T> {
    fn default() -> Self {
        Self {
            c1: T::from_f64_lossy(1e-4),
            c2: T::from_f64_lossy(0.1),
            initial_step: T::one(),
            max_bracket_expansions: 60,
            max_zoom_iterations: 100,
            step_upper_bound: T::from_f64_lossy(1e10),
        }
    }
}

impl<T: Scalar> WolfeParams<T> {
    pub fn validate(&self) -> bool {
        T::zero() < self.c1 && self.c1 < self.c2 && self.c2 < T::one() && self.initial_step > T::zero()
    }
}

/// Exact number of objective callbacks a search performed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub value_evals: usize,
    pub gradient_evals: usize,
}

/// Successful strong Wolfe search output; the trial values are returned so
/// the caller does not recompute them.
#[derive(Debug, Clone)]
pub struct WolfeResult<T> {
    pub alpha: T,
    pub f_new: T,
    pub g_new: Vec<T>,
    pub counters: EvalCounters,
}

/// Exact one-dimensional minimizer of a quadratic along the ray `x + a p`:
/// `a = -(p^T g) / (p^T H p)`.
pub fn exact_quadratic_step<T: Scalar>(
    problem: &QuadraticProblem<T>,
    g: &[T],
    p: &[T],
) -> Result<T, LineSearchError> {
    if g.len() != problem.dim() || p.len() != problem.dim() {
        return Err(LineSearchError::DimensionMismatch);
    }
    if p.iter().all(|&x| x == T::zero()) {
        return Err(LineSearchError::ZeroDirection);
    }
    let php = problem.hessian().quadform(p);
    if !(php > T::zero()) {
        return Err(LineSearchError::IndefiniteCurvature(php.to_f64_lossy()));
    }
    Ok(-vecops::dot(p, g) / php)
}

struct CountingObjective<'a, T: Scalar, O: Objective<T> + ?Sized> {
    obj: &'a O,
    counters: EvalCounters,
    _marker: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar, O: Objective<T> + ?Sized> CountingObjective<'a, T, O> {
    fn value(&mut self, x: &[T]) -> T {
        self.counters.value_evals += 1;
        self.obj.value(x)
    }

    fn gradient(&mut self, x: &[T]) -> Vec<T> {
        self.counters.gradient_evals += 1;
        self.obj.gradient(x)
    }
}

/// Minimizer of the quadratic through `(lo, f_lo)` with slope `d_lo` at
/// `lo` and value `f_hi` at `hi`.
fn quadratic_interpolate<T: Scalar>(lo: T, f_lo: T, d_lo: T, hi: T, f_hi: T) -> Option<T> {
    let w = hi - lo;
    let denom = T::from_f64_lossy(2.0) * (f_hi - f_lo - d_lo * w);
    if denom == T::zero() {
        return None;
    }
    let a = lo - d_lo * w * w / denom;
    if a.is_finite() {
        Some(a)
    } else {
        None
    }
}

/// Two-phase strong Wolfe search along `p` from `x`.
///
/// `f0` and `g0` are the objective value and gradient at `x`; the search
/// evaluates the objective only at trial points and reports those
/// evaluations exactly in the returned counters. Phase one brackets a
/// Wolfe point by doubling from `initial_step`; phase two zooms with
/// safeguarded quadratic interpolation, bisecting whenever the
/// interpolated point leaves the middle 90% of the interval.
pub fn strong_wolfe_search<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    x: &[T],
    p: &[T],
    f0: T,
    g0: &[T],
    params: &WolfeParams<T>,
) -> Result<WolfeResult<T>, LineSearchError> {
    assert!(params.validate(), "invalid Wolfe parameters");
    let n = x.len();
    if p.len() != n || g0.len() != n || obj.dim() != n {
        return Err(LineSearchError::DimensionMismatch);
    }
    let d0 = vecops::dot(g0, p);
    if !(d0 < T::zero()) {
        return Err(LineSearchError::NonDescentDirection(d0.to_f64_lossy()));
    }
    let mut counting = CountingObjective {
        obj,
        counters: EvalCounters::default(),
        _marker: std::marker::PhantomData,
    };
    let mut trial = vec![T::zero(); n];
    let sufficient = |alpha: T, f: T| f <= f0 + params.c1 * alpha * d0;
    let curvature_ok = |d: T| d.abs() <= params.c2 * d0.abs();

    let mut lo;
    let mut hi;
    {
        // bracketing phase
        let mut a_prev = T::zero();
        let mut f_prev = f0;
        let mut d_prev = d0;
        let mut alpha = params.initial_step.min(params.step_upper_bound);
        let mut found = None;
        for i in 0..params.max_bracket_expansions {
            vecops::add_scaled(x, alpha, p, &mut trial);
            let f_a = counting.value(&trial);
            if !f_a.is_finite() {
                return Err(LineSearchError::NonFiniteValue {
                    alpha: alpha.to_f64_lossy(),
                });
            }
            if !sufficient(alpha, f_a) || (i > 0 && f_a >= f_prev) {
                found = Some(((a_prev, f_prev, d_prev), (alpha, f_a)));
                break;
            }
            let g_a = counting.gradient(&trial);
            if !vecops::all_finite(&g_a) {
                return Err(LineSearchError::NonFiniteValue {
                    alpha: alpha.to_f64_lossy(),
                });
            }
            let d_a = vecops::dot(&g_a, p);
            if curvature_ok(d_a) {
                return Ok(WolfeResult {
                    alpha,
                    f_new: f_a,
                    g_new: g_a,
                    counters: counting.counters,
                });
            }
            if d_a >= T::zero() {
                found = Some(((alpha, f_a, d_a), (a_prev, f_prev)));
                break;
            }
            if alpha >= params.step_upper_bound {
                return Err(LineSearchError::BracketFailure {
                    expansions: i + 1,
                });
            }
            a_prev = alpha;
            f_prev = f_a;
            d_prev = d_a;
            alpha = (alpha + alpha).min(params.step_upper_bound);
        }
        match found {
            Some((l, h)) => {
                lo = l;
                hi = h;
            }
            None => {
                return Err(LineSearchError::BracketFailure {
                    expansions: params.max_bracket_expansions,
                })
            }
        }
    }

    // zoom phase; lo always satisfies sufficient decrease with the lowest
    // value seen, hi is the other end of the bracket
    let point_zero_five = T::from_f64_lossy(0.05);
    let width_floor = T::from_f64_lossy(1e-16);
    for _ in 0..params.max_zoom_iterations {
        let (a_lo, f_lo, d_lo) = lo;
        let (a_hi, f_hi) = hi;
        let width = (a_hi - a_lo).abs();
        if width < width_floor * T::one().max(a_lo.abs().max(a_hi.abs())) {
            return Err(LineSearchError::ZoomFailure {
                width: width.to_f64_lossy(),
            });
        }
        let inner_lo = a_lo.min(a_hi) + point_zero_five * width;
        let inner_hi = a_lo.max(a_hi) - point_zero_five * width;
        let alpha = match quadratic_interpolate(a_lo, f_lo, d_lo, a_hi, f_hi) {
            Some(a) if a >= inner_lo && a <= inner_hi => a,
            _ => (a_lo + a_hi) * T::from_f64_lossy(0.5),
        };
        vecops::add_scaled(x, alpha, p, &mut trial);
        let f_a = counting.value(&trial);
        if !f_a.is_finite() {
            return Err(LineSearchError::NonFiniteValue {
                alpha: alpha.to_f64_lossy(),
            });
        }
        if !sufficient(alpha, f_a) || f_a >= f_lo {
            hi = (alpha, f_a);
        } else {
            let g_a = counting.gradient(&trial);
            if !vecops::all_finite(&g_a) {
                return Err(LineSearchError::NonFiniteValue {
                    alpha: alpha.to_f64_lossy(),
                });
            }
            let d_a = vecops::dot(&g_a, p);
            if curvature_ok(d_a) {
                return Ok(WolfeResult {
                    alpha,
                    f_new: f_a,
                    g_new: g_a,
                    counters: counting.counters,
                });
            }
            if d_a * (a_hi - a_lo) >= T::zero() {
                hi = (a_lo, f_lo);
            }
            lo = (alpha, f_a, d_a);
        }
    }
    let width = (hi.0 - lo.0).abs();
    Err(LineSearchError::ZoomFailure {
        width: width.to_f64_lossy(),
    })
}
