//! Strongly convex quadratic test problems.
//!
//! A problem is stored in the canonical centered form
//! `f(x) = 1/2 (x - x*)^T H (x - x*) + c` with a symmetric positive
//! definite Hessian `H`, so the minimizer and the optimal value are known
//! exactly. The five randomized diagonal spectrum generators follow the
//! classical benchmark distributions parameterized by a target condition
//! number `kappa`; the generated objective `(x - x*)^T diag(v) (x - x*)`
//! is folded into the canonical form by setting `H = 2 diag(v)`, which
//! leaves the condition number and every iterate sequence of the methods
//! in this crate unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{format_full, Scalar};
use crate::vecops;

#[derive(Debug, Error)]
pub enum QuadProbError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid spectrum set id {0}, must be 1..=5")]
    InvalidSetId(u8),
    #[error("kappa must be > 1, got {0}")]
    InvalidKappa(f64),
    #[error("dimension {n} invalid for set {set_id}: {reason}")]
    InvalidDimension {
        set_id: u8,
        n: usize,
        reason: &'static str,
    },
    #[error("eigenvalue {0} is not strictly positive")]
    NonPositiveEigenvalue(f64),
    #[error("problem JSON malformed: {0}")]
    Json(String),
}

/// SPD linear operator: the Hessian of a quadratic problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Hessian<T> {
    /// Eigenvalues on the diagonal, stored in index order (not sorted).
    Diagonal(Vec<T>),
    /// Dense symmetric matrix in row-major order, SPD certified at
    /// construction by a Cholesky factorization.
    DenseSymmetric { n: usize, data: Vec<T> },
}

impl<T: Scalar> Hessian<T> {
    pub fn dim(&self) -> usize {
        match self {
            Hessian::Diagonal(d) => d.len(),
            Hessian::DenseSymmetric { n, .. } => *n,
        }
    }

    /// `out = H v`
    pub fn matvec(&self, v: &[T], out: &mut [T]) {
        match self {
            Hessian::Diagonal(d) => {
                for ((o, &di), &vi) in out.iter_mut().zip(d).zip(v) {
                    *o = di * vi;
                }
            }
            Hessian::DenseSymmetric { n, data } => {
                for i in 0..*n {
                    out[i] = vecops::dot(&data[i * n..(i + 1) * n], v);
                }
            }
        }
    }

    /// `v^T H v`
    pub fn quadform(&self, v: &[T]) -> T {
        match self {
            Hessian::Diagonal(d) => d.iter().zip(v).map(|(&di, &vi)| di * vi * vi).sum(),
            Hessian::DenseSymmetric { n, data } => {
                let mut acc = T::zero();
                for i in 0..*n {
                    acc = acc + v[i] * vecops::dot(&data[i * n..(i + 1) * n], v);
                }
                acc
            }
        }
    }

    /// Smallest and largest eigenvalue; available in closed form only for
    /// diagonal operators.
    pub fn eigen_extremes(&self) -> Option<(T, T)> {
        match self {
            Hessian::Diagonal(d) => {
                let mut lo = d[0];
                let mut hi = d[0];
                for &x in d {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                Some((lo, hi))
            }
            Hessian::DenseSymmetric { .. } => None,
        }
    }
}

/// Plain Cholesky; succeeds iff the matrix is SPD (up to roundoff).
fn cholesky_spd<T: Scalar>(n: usize, a: &[T]) -> bool {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

/// Strongly convex quadratic with a known minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem<T> {
    hessian: Hessian<T>,
    minimizer: Vec<T>,
    constant_shift: T,
}

impl<T: Scalar> QuadraticProblem<T> {
    pub fn new_diagonal(
        eigenvalues: Vec<T>,
        minimizer: Vec<T>,
        constant_shift: T,
    ) -> Result<Self, QuadProbError> {
        if eigenvalues.len() != minimizer.len() {
            return Err(QuadProbError::DimensionMismatch {
                expected: eigenvalues.len(),
                got: minimizer.len(),
            });
        }
        for &e in &eigenvalues {
            if !(e > T::zero()) || !e.is_finite() {
                return Err(QuadProbError::NonPositiveEigenvalue(e.to_f64_lossy()));
            }
        }
        Ok(Self {
            hessian: Hessian::Diagonal(eigenvalues),
            minimizer,
            constant_shift,
        })
    }

    /// Dense symmetric Hessian; rejected unless a Cholesky factorization
    /// certifies positive definiteness.
    pub fn new_dense(
        n: usize,
        matrix: Vec<T>,
        minimizer: Vec<T>,
        constant_shift: T,
    ) -> Result<Self, QuadProbError> {
        if matrix.len() != n * n || minimizer.len() != n {
            return Err(QuadProbError::DimensionMismatch {
                expected: n,
                got: minimizer.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if matrix[i * n + j] != matrix[j * n + i] {
                    return Err(QuadProbError::NotPositiveDefinite);
                }
            }
        }
        if !cholesky_spd(n, &matrix) {
            return Err(QuadProbError::NotPositiveDefinite);
        }
        Ok(Self {
            hessian: Hessian::DenseSymmetric { n, data: matrix },
            minimizer,
            constant_shift,
        })
    }

    pub fn dim(&self) -> usize {
        self.minimizer.len()
    }

    pub fn hessian(&self) -> &Hessian<T> {
        &self.hessian
    }

    pub fn minimizer(&self) -> &[T] {
        &self.minimizer
    }

    pub fn constant_shift(&self) -> T {
        self.constant_shift
    }

    /// `lambda_max / lambda_min`; `None` for dense Hessians.
    pub fn condition_number(&self) -> Option<T> {
        self.hessian.eigen_extremes().map(|(lo, hi)| hi / lo)
    }

    fn check_dim(&self, len: usize) -> Result<(), QuadProbError> {
        if len != self.dim() {
            Err(QuadProbError::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        } else {
            Ok(())
        }
    }

    /// Objective value at an offset `d = x - x*`: `1/2 d^T H d + c`.
    pub fn f_at_offset(&self, d: &[T]) -> T {
        let half = T::from_f64_lossy(0.5);
        half * self.hessian.quadform(d) + self.constant_shift
    }

    /// Gradient at an offset `d = x - x*`: `H d`.
    pub fn grad_at_offset(&self, d: &[T], out: &mut [T]) {
        self.hessian.matvec(d, out);
    }

    /// `f(x) = 1/2 (x - x*)^T H (x - x*) + c`
    pub fn eval_f(&self, x: &[T]) -> Result<T, QuadProbError> {
        self.check_dim(x.len())?;
        let d = vecops::sub(x, &self.minimizer);
        Ok(self.f_at_offset(&d))
    }

    /// `g(x) = H (x - x*)`
    pub fn eval_grad(&self, x: &[T]) -> Result<Vec<T>, QuadProbError> {
        self.check_dim(x.len())?;
        let d = vecops::sub(x, &self.minimizer);
        let mut g = vec![T::zero(); self.dim()];
        self.grad_at_offset(&d, &mut g);
        Ok(g)
    }

    /// Energy norm `||v||_H = sqrt(v^T H v)`.
    pub fn a_norm(&self, v: &[T]) -> Result<T, QuadProbError> {
        self.check_dim(v.len())?;
        Ok(self.hessian.quadform(v).sqrt())
    }
}

/// Which of the five randomized diagonal spectra to generate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSet {
    pub set_id: u8,
    pub kappa: f64,
    pub n: usize,
    pub seed: u64,
}

impl SpectrumSet {
    pub fn validate(&self) -> Result<(), QuadProbError> {
        if !(1..=5).contains(&self.set_id) {
            return Err(QuadProbError::InvalidSetId(self.set_id));
        }
        if !(self.kappa > 1.0) {
            return Err(QuadProbError::InvalidKappa(self.kappa));
        }
        if self.n < 2 {
            return Err(QuadProbError::InvalidDimension {
                set_id: self.set_id,
                n: self.n,
                reason: "n must be at least 2",
            });
        }
        if self.set_id == 2 && self.n % 2 != 0 {
            return Err(QuadProbError::InvalidDimension {
                set_id: 2,
                n: self.n,
                reason: "set 2 needs n even",
            });
        }
        if (self.set_id == 3 || self.set_id == 5) && self.n % 5 != 0 {
            return Err(QuadProbError::InvalidDimension {
                set_id: self.set_id,
                n: self.n,
                reason: "sets 3 and 5 need n divisible by 5",
            });
        }
        Ok(())
    }
}

/// Stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ToleranceKind {
    /// `||g_k||_2 <= eps * ||g_0||_2`
    RelativeGradNorm2,
    /// `||g_k||_inf < eps`
    AbsoluteGradNormInf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec<T> {
    pub kind: ToleranceKind,
    pub epsilon: T,
}

impl<T: Scalar> ToleranceSpec<T> {
    pub fn relative(epsilon: T) -> Self {
        assert!(epsilon > T::zero(), "epsilon must be positive");
        Self {
            kind: ToleranceKind::RelativeGradNorm2,
            epsilon,
        }
    }

    pub fn absolute_inf(epsilon: T) -> Self {
        assert!(epsilon > T::zero(), "epsilon must be positive");
        Self {
            kind: ToleranceKind::AbsoluteGradNormInf,
            epsilon,
        }
    }

    pub fn met(&self, grad_norm2: T, grad_norm_inf: T, initial_grad_norm2: T) -> bool {
        match self.kind {
            ToleranceKind::RelativeGradNorm2 => grad_norm2 <= self.epsilon * initial_grad_norm2,
            ToleranceKind::AbsoluteGradNormInf => grad_norm_inf < self.epsilon,
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Generates a diagonal problem from one of the five spectrum
/// distributions. The RNG is ChaCha8 seeded from `spec.seed`; draws happen
/// in index order for the eigenvalues first, then the minimizer
/// components, so equal specs yield bit-identical problems.
pub fn generate_problem<T: Scalar>(
    spec: &SpectrumSet,
) -> Result<QuadraticProblem<T>, QuadProbError> {
    spec.validate()?;
    let n = spec.n;
    let kappa = spec.kappa;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut v = vec![0.0_f64; n];
    match spec.set_id {
        1 => {
            v[0] = 1.0;
            for vi in v.iter_mut().take(n - 1).skip(1) {
                *vi = uniform(&mut rng, 1.0, kappa);
            }
            v[n - 1] = kappa;
        }
        2 => {
            for (i, vi) in v.iter_mut().enumerate() {
                let s = if i < n / 2 {
                    uniform(&mut rng, 0.8, 1.0)
                } else {
                    uniform(&mut rng, 0.0, 0.2)
                };
                *vi = 1.0 + (kappa - 1.0) * s;
            }
        }
        3 => {
            v[0] = 1.0;
            for vi in v.iter_mut().take(n / 5).skip(1) {
                *vi = uniform(&mut rng, 1.0, 100.0);
            }
            for vi in v.iter_mut().take(n - 1).skip(n / 5) {
                *vi = uniform(&mut rng, kappa / 2.0, kappa);
            }
            v[n - 1] = kappa;
        }
        4 => {
            for (i, vi) in v.iter_mut().enumerate() {
                // 1-based: v_i = kappa^((n-i)/(n-1))
                *vi = kappa.powf((n - 1 - i) as f64 / (n - 1) as f64);
            }
        }
        5 => {
            v[0] = 1.0;
            for vi in v.iter_mut().take(4 * n / 5).skip(1) {
                *vi = uniform(&mut rng, 1.0, 100.0);
            }
            for vi in v.iter_mut().take(n - 1).skip(4 * n / 5) {
                *vi = uniform(&mut rng, kappa / 2.0, kappa);
            }
            v[n - 1] = kappa;
        }
        _ => unreachable!(),
    }
    let eigenvalues: Vec<T> = v.iter().map(|&x| T::from_f64_lossy(2.0 * x)).collect();
    let minimizer: Vec<T> = (0..n)
        .map(|_| T::from_f64_lossy(uniform(&mut rng, -10.0, 10.0)))
        .collect();
    QuadraticProblem::new_diagonal(eigenvalues, minimizer, T::zero())
}

/// Serializes a generated problem together with its generation spec.
/// Floats are written with 17 significant digits so the round-trip is
/// bit-exact.
pub fn problem_to_json(spec: &SpectrumSet, problem: &QuadraticProblem<f64>) -> String {
    let eigs = match problem.hessian() {
        Hessian::Diagonal(d) => d,
        Hessian::DenseSymmetric { .. } => panic!("only diagonal problems serialize"),
    };
    let eig_str: Vec<String> = eigs.iter().map(|&e| format_full(e)).collect();
    let min_str: Vec<String> = problem.minimizer().iter().map(|&m| format_full(m)).collect();
    format!(
        "{{\"set_id\": {}, \"n\": {}, \"kappa\": {}, \"seed\": {}, \"eigenvalues\": [{}], \"minimizer\": [{}]}}",
        spec.set_id,
        spec.n,
        format_full(spec.kappa),
        spec.seed,
        eig_str.join(", "),
        min_str.join(", ")
    )
}

pub fn problem_from_json(
    text: &str,
) -> Result<(SpectrumSet, QuadraticProblem<f64>), QuadProbError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| QuadProbError::Json(e.to_string()))?;
    let get = |k: &str| -> Result<&serde_json::Value, QuadProbError> {
        value
            .get(k)
            .ok_or_else(|| QuadProbError::Json(format!("missing field {k}")))
    };
    let as_vec = |k: &str| -> Result<Vec<f64>, QuadProbError> {
        get(k)?
            .as_array()
            .ok_or_else(|| QuadProbError::Json(format!("{k} is not an array")))?
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| QuadProbError::Json(format!("{k} holds a non-number")))
            })
            .collect()
    };
    let spec = SpectrumSet {
        set_id: get("set_id")?
            .as_u64()
            .ok_or_else(|| QuadProbError::Json("set_id".into()))? as u8,
        kappa: get("kappa")?
            .as_f64()
            .ok_or_else(|| QuadProbError::Json("kappa".into()))?,
        n: get("n")?
            .as_u64()
            .ok_or_else(|| QuadProbError::Json("n".into()))? as usize,
        seed: get("seed")?
            .as_u64()
            .ok_or_else(|| QuadProbError::Json("seed".into()))?,
    };
    let problem = QuadraticProblem::new_diagonal(as_vec("eigenvalues")?, as_vec("minimizer")?, 0.0)?;
    Ok((spec, problem))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set4_exact_powers() {
        let spec = SpectrumSet {
            set_id: 4,
            kappa: 8.0,
            n: 4,
            seed: 0,
        };
        let p: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        match p.hessian() {
            Hessian::Diagonal(d) => {
                for (got, want) in d.iter().zip([16.0, 8.0, 4.0, 2.0]) {
                    assert!((got - want).abs() <= 1e-14 * want, "{got} vs {want}");
                }
            }
            _ => panic!(),
        }
    }

    #[test]
    fn set1_extremes_exact() {
        for &(n, kappa) in &[(2usize, 5.0), (17, 1e4), (100, 123.0)] {
            let spec = SpectrumSet {
                set_id: 1,
                kappa,
                n,
                seed: 3,
            };
            let p: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
            let (lo, hi) = p.hessian().eigen_extremes().unwrap();
            assert_eq!(lo, 2.0);
            assert_eq!(hi, 2.0 * kappa);
            assert_eq!(p.condition_number().unwrap(), kappa);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SpectrumSet {
            set_id: 3,
            kappa: 1e3,
            n: 25,
            seed: 99,
        };
        let a: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        let b: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divisibility_and_kappa_checks() {
        let bad = |set_id, n, kappa| SpectrumSet {
            set_id,
            kappa,
            n,
            seed: 0,
        };
        assert!(generate_problem::<f64>(&bad(2, 7, 10.0)).is_err());
        assert!(generate_problem::<f64>(&bad(3, 12, 10.0)).is_err());
        assert!(generate_problem::<f64>(&bad(5, 12, 10.0)).is_err());
        assert!(generate_problem::<f64>(&bad(1, 10, 0.5)).is_err());
        assert!(generate_problem::<f64>(&bad(6, 10, 10.0)).is_err());
        assert!(generate_problem::<f64>(&bad(1, 1, 10.0)).is_err());
    }

    #[test]
    fn eval_f_hand_values() {
        let p = QuadraticProblem::new_diagonal(vec![2.0, 4.0], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(p.eval_f(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(p.eval_f(&[1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(p.eval_grad(&[1.0, 1.0]).unwrap(), vec![2.0, 4.0]);
        assert_eq!(p.eval_grad(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn a_norm_hand_values() {
        let p = QuadraticProblem::new_diagonal(vec![2.0, 4.0], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(p.a_norm(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((p.a_norm(&[1.0, 1.0]).unwrap() - 6.0_f64.sqrt()).abs() < 1e-15);
        let id = QuadraticProblem::new_diagonal(vec![1.0; 3], vec![0.0; 3], 0.0).unwrap();
        let v = [3.0, -4.0, 12.0];
        assert_eq!(id.a_norm(&v).unwrap(), 13.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = QuadraticProblem::new_diagonal(vec![1.0, 2.0], vec![0.0, 0.0], 0.0).unwrap();
        assert!(p.eval_f(&[1.0]).is_err());
        assert!(p.eval_grad(&[1.0, 2.0, 3.0]).is_err());
        assert!(p.a_norm(&[1.0]).is_err());
    }

    #[test]
    fn dense_requires_spd() {
        // not positive definite
        assert!(
            QuadraticProblem::new_dense(2, vec![1.0, 2.0, 2.0, 1.0], vec![0.0, 0.0], 0.0).is_err()
        );
        // asymmetric
        assert!(
            QuadraticProblem::new_dense(2, vec![2.0, 1.0, 0.0, 2.0], vec![0.0, 0.0], 0.0).is_err()
        );
        let p =
            QuadraticProblem::new_dense(2, vec![2.0, 1.0, 1.0, 2.0], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(p.eval_grad(&[1.0, 0.0]).unwrap(), vec![2.0, 1.0]);
        assert_eq!(p.eval_f(&[1.0, 1.0]).unwrap(), 3.0);
    }

    #[test]
    fn json_round_trip_bit_exact() {
        let spec = SpectrumSet {
            set_id: 2,
            kappa: 1e5,
            n: 8,
            seed: 11,
        };
        let p: QuadraticProblem<f64> = generate_problem(&spec).unwrap();
        let text = problem_to_json(&spec, &p);
        let (spec2, p2) = problem_from_json(&text).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(p, p2);
    }

    #[test]
    fn nonpositive_eigenvalue_rejected() {
        assert!(QuadraticProblem::new_diagonal(vec![1.0, 0.0], vec![0.0, 0.0], 0.0).is_err());
        assert!(QuadraticProblem::new_diagonal(vec![1.0, -2.0], vec![0.0, 0.0], 0.0).is_err());
    }
}
