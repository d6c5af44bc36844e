//! Product Matérn-5/2 covariance.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Matérn-5/2 correlation at scaled distance `u = |d| / rho`.
pub fn matern52<T: Scalar>(u: T) -> T {
    let a = T::lit(5.0).sqrt() * u.abs();
    (T::one() + a + a * a / T::lit(3.0)) * (-a).exp()
}

/// `sigma2 * prod_d matern52(|a_d - b_d| / rho_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T: Scalar> {
    pub sigma2: T,
    pub rho: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(sigma2: T, rho: Vec<T>) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::Parameter(format!(
                "signal variance {sigma2} must be positive"
            )));
        }
        if let Some(r) = rho.iter().find(|r| !(**r > T::zero())) {
            return Err(Error::Parameter(format!(
                "length-scale {r} must be positive"
            )));
        }
        Ok(Self { sigma2, rho })
    }

    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    /// Correlation between two points (the kernel divided by `sigma2`).
    ///
    /// Evaluated as `exp(-sum a_d) * prod (1 + a_d + a_d^2 / 3)` with
    /// `a_d = sqrt(5) |a_d - b_d| / rho_d`, which needs a single exponential.
    pub fn correlation(&self, a: &[T], b: &[T]) -> T {
        let s5 = T::lit(5.0).sqrt();
        let third = T::one() / T::lit(3.0);
        let mut sum = T::zero();
        let mut poly = T::one();
        for ((x, y), r) in a.iter().zip(b).zip(&self.rho) {
            let u = s5 * (*x - *y).abs() / *r;
            sum += u;
            poly *= T::one() + u + u * u * third;
        }
        poly * (-sum).exp()
    }

    pub fn eval(&self, a: &[T], b: &[T]) -> T {
        self.sigma2 * self.correlation(a, b)
    }

    /// Covariance matrix of a set of points.
    pub fn gram(&self, points: &[Vec<T>]) -> DMatrix<T> {
        let n = points.len();
        let mut k = DMatrix::from_element(n, n, self.sigma2);
        for i in 0..n {
            for j in i + 1..n {
                let v = self.eval(&points[i], &points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_distance_gives_variance() {
        let k = Kernel::new(2.5, vec![0.3; 9]).unwrap();
        let x = [0.1, 0.4, 1.0, 1.5, 0.0, 2.0, 0.7, 0.2, 1.1];
        assert_eq!(k.eval(&x, &x), 2.5);
    }

    #[test]
    fn unit_scaled_distance() {
        let k = Kernel::new(1.0, vec![0.7]).unwrap();
        let v = k.eval(&[0.2], &[0.9]);
        let s5 = 5f64.sqrt();
        assert_relative_eq!(
            v,
            (1.0 + s5 + 5.0 / 3.0) * (-s5).exp(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            matern52(1.0f64),
            0.523_994_108_831_820_3,
            max_relative = 1e-14
        );
    }

    #[test]
    fn product_matches_factorwise() {
        let k = Kernel::new(1.7, vec![0.3, 1.1, 0.05]).unwrap();
        let a = [0.2, 1.3, 0.4];
        let b = [0.5, 0.1, 0.41];
        let direct = 1.7
            * (0..3)
                .map(|d| matern52((a[d] - b[d]) / k.rho[d]))
                .product::<f64>();
        assert_relative_eq!(k.eval(&a, &b), direct, max_relative = 1e-13);
    }

    #[test]
    fn infinite_length_scale_limit() {
        let k = Kernel::new(3.0, vec![1e12; 9]).unwrap();
        let v = k.eval(&[0.0; 9], &[2.0; 9]);
        assert_relative_eq!(v, 3.0, max_relative = 1e-9);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Kernel::new(1.0, vec![0.5, 0.0]).is_err());
        assert!(Kernel::new(0.0, vec![0.5]).is_err());
        assert!(Kernel::new(1.0f32, vec![-1.0]).is_err());
    }
}
