//! Desk-scale nonquadratic test functions with analytic gradients.

use crate::linesearch::Objective;
use crate::scalar::Scalar;

/// Classic two-dimensional Rosenbrock valley, `a = 1`, `b = 100`,
/// minimizer `(1, 1)`, canonical start `(-1.2, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock2d;

impl Rosenbrock2d {
    pub fn canonical_start<T: Scalar>() -> Vec<T> {
        vec![T::from_f64_lossy(-1.2), T::one()]
    }
}

impl<T: Scalar> Objective<T> for Rosenbrock2d {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[T]) -> T {
        let a = T::one();
        let b = T::from_f64_lossy(100.0);
        let t1 = a - x[0];
        let t2 = x[1] - x[0] * x[0];
        t1 * t1 + b * t2 * t2
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let a = T::one();
        let b = T::from_f64_lossy(100.0);
        let two = T::from_f64_lossy(2.0);
        let four = T::from_f64_lossy(4.0);
        let t2 = x[1] - x[0] * x[0];
        vec![
            -two * (a - x[0]) - four * b * t2 * x[0],
            two * b * t2,
        ]
    }
}

/// Chained Rosenbrock in `n` dimensions (`n` even, consecutive pairs),
/// minimizer at the all-ones vector, canonical start alternating
/// `(-1.2, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedRosenbrock {
    n: usize,
}

impl ExtendedRosenbrock {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0, "extended Rosenbrock needs even n >= 2");
        Self { n }
    }

    pub fn canonical_start<T: Scalar>(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                if i % 2 == 0 {
                    T::from_f64_lossy(-1.2)
                } else {
                    T::one()
                }
            })
            .collect()
    }
}

impl<T: Scalar> Objective<T> for ExtendedRosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[T]) -> T {
        let b = T::from_f64_lossy(100.0);
        let mut acc = T::zero();
        for i in (0..self.n).step_by(2) {
            let t1 = T::one() - x[i];
            let t2 = x[i + 1] - x[i] * x[i];
            acc = acc + t1 * t1 + b * t2 * t2;
        }
        acc
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let b = T::from_f64_lossy(100.0);
        let two = T::from_f64_lossy(2.0);
        let four = T::from_f64_lossy(4.0);
        let mut g = vec![T::zero(); self.n];
        for i in (0..self.n).step_by(2) {
            let t2 = x[i + 1] - x[i] * x[i];
            g[i] = -two * (T::one() - x[i]) - four * b * t2 * x[i];
            g[i + 1] = two * b * t2;
        }
        g
    }
}

/// Separable convex quartic `sum_i c_i (x_i^4 / 4 + x_i^2 / 2)` with
/// `c_i = 1 + i`, minimizer at the origin, canonical start all twos.
#[derive(Debug, Clone, Copy)]
pub struct Quartic {
    n: usize,
}

impl Quartic {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        Self { n }
    }

    pub fn canonical_start<T: Scalar>(&self) -> Vec<T> {
        vec![T::from_f64_lossy(2.0); self.n]
    }
}

impl<T: Scalar> Objective<T> for Quartic {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[T]) -> T {
        let quarter = T::from_f64_lossy(0.25);
        let half = T::from_f64_lossy(0.5);
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let c = T::from_f64_lossy(1.0 + i as f64);
                let sq = xi * xi;
                c * (quarter * sq * sq + half * sq)
            })
            .sum()
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let c = T::from_f64_lossy(1.0 + i as f64);
                c * (xi * xi * xi + xi)
            })
            .collect()
    }
}

/// `-||x||^2`: deliberately unbounded below, registered so line-search
/// failure paths can be exercised.
#[derive(Debug, Clone, Copy)]
pub struct NegSquaredNorm {
    n: usize,
}

impl NegSquaredNorm {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn canonical_start<T: Scalar>(&self) -> Vec<T> {
        vec![T::one(); self.n]
    }
}

impl<T: Scalar> Objective<T> for NegSquaredNorm {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[T]) -> T {
        -x.iter().map(|&xi| xi * xi).sum::<T>()
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let two = T::from_f64_lossy(-2.0);
        x.iter().map(|&xi| two * xi).collect()
    }
}

/// Central finite difference of `value`, used as the gradient oracle in
/// tests.
pub fn central_difference_gradient<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    x: &[T],
    h: T,
) -> Vec<T> {
    let mut g = vec![T::zero(); x.len()];
    let mut xp = x.to_vec();
    let two = T::from_f64_lossy(2.0);
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = obj.value(&xp);
        xp[i] = xi - h;
        let fm = obj.value(&xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (two * h);
    }
    g
}
