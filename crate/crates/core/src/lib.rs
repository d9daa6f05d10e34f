//! Gradient-method laboratory for strongly convex quadratic and general
//! unconstrained minimization.
//!
//! The centerpiece is the triangle steepest descent method (TSD): an exact
//! line-search gradient method that, every `j`-th iteration, replaces the
//! negative gradient by the sum of the two most recent displacements (the
//! chord `x_k - x_{k-2}`). On any two-dimensional strongly convex quadratic
//! that combined direction passes through the minimizer, and in general the
//! iterates contract R-linearly in the energy norm with factor
//! `((kappa-1)/(kappa+1))^((j-1)/j)`.
//!
//! Modules:
//! - [`quadprob`]: quadratic test problems, randomized spectrum generators,
//!   energy-norm machinery.
//! - [`linesearch`]: exact quadratic line search and a strong Wolfe
//!   bracket/zoom search.
//! - [`objectives`]: desk-scale nonquadratic test functions.
//! - [`solvers`]: TSD plus SD / BB / CaBB / CSD iteration engines producing
//!   full run records.
//! - [`analysis`]: contraction-theory verification and Dolan-More
//!   performance profiles.
//!
//! All numerical code is generic over the scalar type via [`Scalar`];
//! concrete `f64` aliases live at the crate root.

pub mod analysis;
pub mod linesearch;
pub mod objectives;
pub mod quadprob;
pub mod scalar;
pub mod solvers;
pub(crate) mod vecops;

pub use scalar::Scalar;

/// `f64` quadratic problem, the type every generator emits.
pub type QuadraticProblem64 = quadprob::QuadraticProblem<f64>;
/// `f64` tolerance specification.
pub type ToleranceSpec64 = quadprob::ToleranceSpec<f64>;
/// `f64` solver configuration.
pub type SolverConfig64 = solvers::SolverConfig<f64>;
/// `f64` run record.
pub type RunRecord64 = solvers::RunRecord<f64>;
/// `f64` Wolfe line-search parameters.
pub type WolfeParams64 = linesearch::WolfeParams<f64>;
