//! Tridiagonal systems.
//!
//! The Jacobians met here (`-ε²D² + 1 - p u^{p-1}`) are symmetric but
//! indefinite inside the spike, so elimination uses partial pivoting
//! (the `gtsv` scheme: one extra superdiagonal of fill-in).

use crate::error::{Error, Result};

/// Pivot-ratio threshold above which a system is reported singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e14;

#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// `lower[i] = A[i+1][i]`
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// `upper[i] = A[i][i+1]`
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `A x = rhs` by Gaussian elimination with partial pivoting.
    ///
    /// Fails with [`Error::SingularOperator`] on a zero pivot or when the
    /// ratio of largest to smallest pivot exceeds [`SINGULAR_PIVOT_RATIO`].
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n, "right-hand side length mismatch");
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut dl = self.lower.clone(); // becomes the second superdiagonal
        let mut b = rhs.to_vec();

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return Err(Error::SingularOperator { pivot_ratio: f64::INFINITY });
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
                dl[i] = 0.0;
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    dl[i] = du[i + 1];
                    du[i + 1] = -fact * dl[i];
                } else {
                    dl[i] = 0.0;
                }
                du[i] = temp;
                let bi = b[i];
                b[i] = b[i + 1];
                b[i + 1] = bi - fact * b[i + 1];
            }
        }

        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for &di in &d {
            dmin = dmin.min(di.abs());
            dmax = dmax.max(di.abs());
        }
        let pivot_ratio = if dmin == 0.0 { f64::INFINITY } else { dmax / dmin };
        if !(pivot_ratio <= SINGULAR_PIVOT_RATIO) {
            return Err(Error::SingularOperator { pivot_ratio });
        }

        b[n - 1] /= d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solves_indefinite_system_needing_pivots() {
        // zero leading diagonal forces a row swap
        let a = Tridiagonal {
            lower: vec![1.0, 2.0, -1.0],
            diag: vec![0.0, 1.0, -3.0, 2.0],
            upper: vec![4.0, 1.0, 5.0],
        };
        let x_true = vec![1.0, -2.0, 0.5, 3.0];
        let b = a.mul_vec(&x_true);
        let x = a.solve(&b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-13);
        }
    }

    #[test]
    fn detects_singular_matrix() {
        let a = Tridiagonal {
            lower: vec![1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0],
        };
        assert!(matches!(a.solve(&[1.0, 1.0]), Err(Error::SingularOperator { .. })));
    }

    #[test]
    fn single_equation() {
        let a = Tridiagonal { lower: vec![], diag: vec![4.0], upper: vec![] };
        assert_eq!(a.solve(&[2.0]).unwrap(), vec![0.5]);
    }

    proptest! {
        #[test]
        fn residual_small_for_random_well_posed_systems(
            n in 2usize..40,
            seed in proptest::collection::vec(-1.0f64..1.0, 160),
        ) {
            let lower: Vec<f64> = (0..n - 1).map(|i| seed[i]).collect();
            let upper: Vec<f64> = (0..n - 1).map(|i| seed[40 + i]).collect();
            // sign-alternating diagonal, bounded away from zero
            let diag: Vec<f64> = (0..n)
                .map(|i| {
                    let s = if i % 3 == 0 { -1.0 } else { 1.0 };
                    s * (3.0 + seed[80 + i])
                })
                .collect();
            let x_true: Vec<f64> = (0..n).map(|i| seed[120 + (i % 40)]).collect();
            let a = Tridiagonal { lower, diag, upper };
            let b = a.mul_vec(&x_true);
            let x = a.solve(&b).unwrap();
            for (xi, ti) in x.iter().zip(&x_true) {
                prop_assert!((xi - ti).abs() < 1e-10);
            }
        }
    }
}
