use nalgebra::DMatrix;

use super::{Potential, SmoothnessConstants};
use crate::error::{Error, Result};

/// `f(x) = ½ xᵀ A x` for a symmetric positive definite `A`.
///
/// `μ` and `L` are the extreme eigenvalues of `A` and `L_i = A_ii`.
#[derive(Debug, Clone)]
pub struct QuadraticTarget {
    dim: usize,
    // Row-major copy of A for cache-friendly partial derivatives.
    rows: Vec<f64>,
    matrix: DMatrix<f64>,
    constants: SmoothnessConstants,
    x_star: Vec<f64>,
}

impl QuadraticTarget {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic matrix".into()));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        for i in 0..dim {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotPositiveDefinite(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eig = crate::linalg::sym_eigen(&matrix)?;
        let mu = eig.eigenvalues.min();
        let big_l = eig.eigenvalues.max();
        if !(mu > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("smallest eigenvalue {mu:e}")));
        }
        let coord_l: Vec<f64> = (0..dim).map(|i| matrix[(i, i)]).collect();
        let constants = SmoothnessConstants::new(mu, big_l, coord_l)?;
        let rows = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| matrix[(i, j)])
            .collect();
        Ok(Self {
            dim,
            rows,
            matrix,
            constants,
            x_star: vec![0.0; dim],
        })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    /// The standard Gaussian target `f(x) = |x|²/2`.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }
}

impl Potential for QuadraticTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            acc += x[i] * dot(self.row(i), x);
        }
        0.5 * acc
    }

    fn partial(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.row(i), x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, g) in out.iter_mut().enumerate() {
            *g = dot(self.row(i), x);
        }
    }

    fn constants(&self) -> &SmoothnessConstants {
        &self.constants
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&self.x_star)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{condition_numbers, eval, full_grad, partial_grad, CostLedger};

    fn ones_plus_identity(d: usize) -> QuadraticTarget {
        QuadraticTarget::new(DMatrix::identity(d, d) + DMatrix::from_element(d, d, 1.0)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let t = QuadraticTarget::identity(2).unwrap();
        assert_eq!(eval(&t, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(eval(&t, &[3.0, 4.0]).unwrap(), 12.5);
        assert!(matches!(
            eval(&t, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn partial_examples() {
        let mut ledger = CostLedger::new();
        let t = QuadraticTarget::identity(4).unwrap();
        for i in 0..4 {
            let mut e = vec![0.0; 4];
            e[i] = 1.0;
            assert_eq!(partial_grad(&t, i, &e, &mut ledger).unwrap(), 1.0);
        }
        assert_eq!(ledger.units(), 4);

        let t = ones_plus_identity(3);
        assert_eq!(partial_grad(&t, 0, &[1.0, 1.0, 1.0], &mut ledger).unwrap(), 4.0);
        assert!(matches!(
            partial_grad(&t, 3, &[1.0, 1.0, 1.0], &mut ledger),
            Err(Error::IndexOutOfRange { index: 3, dim: 3 })
        ));
        // Failed calls are not charged.
        assert_eq!(ledger.units(), 5);
    }

    #[test]
    fn full_grad_examples() {
        let mut ledger = CostLedger::new();
        let t = QuadraticTarget::identity(2).unwrap();
        assert_eq!(full_grad(&t, &[1.0, 2.0], &mut ledger).unwrap(), vec![1.0, 2.0]);
        assert_eq!(ledger.units(), 2);

        let t = ones_plus_identity(3);
        assert_eq!(full_grad(&t, &[1.0, 1.0, 1.0], &mut ledger).unwrap(), vec![4.0, 4.0, 4.0]);
        let g = full_grad(&t, t.minimizer().unwrap(), &mut ledger).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-10));
        assert_eq!(ledger.units(), 8);
    }

    #[test]
    fn condition_number_examples() {
        let k = condition_numbers(ones_plus_identity(3).constants()).unwrap();
        assert!((k.kappa - 4.0).abs() < 1e-12);
        assert_eq!(k.kappa_vec, vec![2.0, 2.0, 2.0]);
        assert_eq!(k.kappa_max, 2.0);
        assert!(k.kappa <= 3.0 * k.kappa_max);

        let k = condition_numbers(QuadraticTarget::diagonal(&[1.0, 8.0]).unwrap().constants()).unwrap();
        assert_eq!(k.kappa, 8.0);
        assert_eq!(k.kappa_vec, vec![1.0, 8.0]);
        assert_eq!(k.kappa_max, 8.0);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        assert!(QuadraticTarget::diagonal(&[1.0, -1.0]).is_err());
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.5;
        assert!(QuadraticTarget::new(m).is_err());
    }
}
