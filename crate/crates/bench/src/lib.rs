//! Benchmark harness for the gradient-method laboratory: deterministic
//! experiment plans over the quadratic spectrum generators, a registry of
//! nonquadratic test objectives, and the verification suites behind the
//! `tsd-bench verify` command.

pub mod error;
pub mod general;
pub mod methods;
pub mod plan;
pub mod seedmix;
pub mod suites;

pub use error::BenchError;
