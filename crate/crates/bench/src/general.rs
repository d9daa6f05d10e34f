//! Registry of built-in nonquadratic objectives and the Wolfe-searched
//! solver entry point for them.

use tsd_core::linesearch::Objective;
use tsd_core::objectives::{ExtendedRosenbrock, NegSquaredNorm, Quartic, Rosenbrock2d};
use tsd_core::quadprob::ToleranceSpec;
use tsd_core::solvers::{bb_solve_general, tsd_solve_general, MethodId, SolverConfig};
use tsd_core::{RunRecord64, WolfeParams64};

use crate::error::BenchError;

/// Stopping tolerance for general problems: `||g||_inf < 1e-6`.
pub const DEFAULT_GENERAL_EPS: f64 = 1e-6;
/// Iteration cap for general problems.
pub const DEFAULT_GENERAL_CAP: usize = 10_000;

/// A registered objective together with its canonical starting point.
pub struct BuiltinObjective {
    pub name: &'static str,
    pub objective: Box<dyn Objective<f64> + Send + Sync>,
    pub start: Vec<f64>,
}

pub const OBJECTIVE_NAMES: &[&str] = &["rosenbrock2d", "extrosenbrock", "quartic", "negsqnorm"];

/// Looks up an objective by name; `n` sizes the dimensioned families and
/// is ignored by `rosenbrock2d`.
pub fn builtin_objective(name: &str, n: Option<usize>) -> Result<BuiltinObjective, BenchError> {
    let bad_n = |reason: &str| BenchError::UnknownObjective(format!("{name}: {reason}"));
    match name {
        "rosenbrock2d" => Ok(BuiltinObjective {
            name: "rosenbrock2d",
            objective: Box::new(Rosenbrock2d),
            start: Rosenbrock2d::canonical_start(),
        }),
        "extrosenbrock" => {
            let n = n.unwrap_or(10);
            if n < 2 || n % 2 != 0 {
                return Err(bad_n("needs even n >= 2"));
            }
            let o = ExtendedRosenbrock::new(n);
            Ok(BuiltinObjective {
                name: "extrosenbrock",
                start: o.canonical_start(),
                objective: Box::new(o),
            })
        }
        "quartic" => {
            let n = n.unwrap_or(10);
            if n == 0 {
                return Err(bad_n("needs n >= 1"));
            }
            let o = Quartic::new(n);
            Ok(BuiltinObjective {
                name: "quartic",
                start: o.canonical_start(),
                objective: Box::new(o),
            })
        }
        "negsqnorm" => {
            let n = n.unwrap_or(2);
            let o = NegSquaredNorm::new(n);
            Ok(BuiltinObjective {
                name: "negsqnorm",
                start: o.canonical_start(),
                objective: Box::new(o),
            })
        }
        other => Err(BenchError::UnknownObjective(other.to_string())),
    }
}

/// Runs a Wolfe-searched method on a registered objective from its
/// canonical start (or a caller-supplied one).
pub fn run_general(
    builtin: &BuiltinObjective,
    x0: Option<&[f64]>,
    method: MethodId,
    eps: f64,
    cap: usize,
    wolfe: &WolfeParams64,
) -> Result<RunRecord64, BenchError> {
    let cfg = SolverConfig::new(method, ToleranceSpec::absolute_inf(eps), cap);
    let start = x0.unwrap_or(&builtin.start);
    let mut rec = match method {
        MethodId::Tsd { .. } | MethodId::Sd => {
            tsd_solve_general(builtin.objective.as_ref(), start, &cfg, wolfe)?
        }
        MethodId::Bb1 | MethodId::Bb2 => {
            bb_solve_general(builtin.objective.as_ref(), start, &cfg, wolfe)?
        }
        MethodId::CaBb | MethodId::Csd { .. } => {
            return Err(BenchError::InvalidMethod(format!(
                "{} needs exact line searches and only applies to quadratics",
                method.label()
            )))
        }
    };
    rec.problem.label = builtin.name.to_string();
    Ok(rec)
}
