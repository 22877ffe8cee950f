use nalgebra::{DMatrix, SymmetricEigen};

use super::{residual_norm, Eigensolver, Method, SolveError, SolveOptions, SpectralResult};
use crate::discretize::DiscreteOperator;

/// Largest operator handled by the dense path.
pub const DENSE_LIMIT: usize = 8192;

/// Full symmetric eigendecomposition; the reference every other solver is
/// checked against.
#[derive(Debug, Clone, Copy)]
pub struct DenseSolver {
    pub limit: usize,
}

impl Default for DenseSolver {
    fn default() -> Self {
        Self { limit: DENSE_LIMIT }
    }
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn symmetric_eigen_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// All eigenvalues of `op`, ascending.
pub fn dense_spectrum(op: &DiscreteOperator) -> Result<Vec<f64>, SolveError> {
    check_limit(op.size(), DENSE_LIMIT)?;
    let mut ev: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn check_limit(size: usize, limit: usize) -> Result<(), SolveError> {
    if size > limit {
        Err(SolveError::TooLarge { size, limit })
    } else {
        Ok(())
    }
}

impl Eigensolver for DenseSolver {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn smallest(&self, op: &DiscreteOperator, k: usize, _opts: &SolveOptions) -> Result<SpectralResult, SolveError> {
        check_limit(op.size(), self.limit)?;
        if k == 0 || k > op.size() {
            return Err(SolveError::InvalidRequest(format!("k = {k} for operator of size {}", op.size())));
        }
        let (values, vectors) = symmetric_eigen_sorted(op.to_dense());
        let eigenvectors: Vec<Vec<f64>> = (0..k).map(|c| vectors.column(c).iter().copied().collect()).collect();
        let residuals = eigenvectors
            .iter()
            .zip(&values)
            .map(|(v, &l)| residual_norm(op, l, v))
            .collect();
        Ok(SpectralResult {
            requested: k,
            eigenvalues: values[..k].to_vec(),
            residuals,
            eigenvectors,
            method: Method::Dense,
            iterations: 0,
            start_seed: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{neumann_laplacian, GridSpec};

    #[test]
    fn free_spectrum_small() {
        let op = neumann_laplacian(&GridSpec::new(1, 1, 2).unwrap());
        let r = DenseSolver::default().smallest(&op, 4, &SolveOptions::default()).unwrap();
        let expected = [0.0, 2.3431, 8.0, 13.6569];
        for (a, b) in r.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-4);
        }
        assert!(r.residuals.iter().all(|&x| x < 1e-12));
        assert_eq!(r.method, Method::Dense);
    }

    #[test]
    fn shift_moves_every_eigenvalue() {
        let op = neumann_laplacian(&GridSpec::new(1, 2, 2).unwrap());
        let base = DenseSolver::default().smallest(&op, 5, &SolveOptions::default()).unwrap();
        let shifted = DenseSolver::default().smallest(&op.clone().shifted(0.7), 5, &SolveOptions::default()).unwrap();
        for (a, b) in base.eigenvalues.iter().zip(&shifted.eigenvalues) {
            assert!((b - a - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_matrix() {
        let (values, vectors) = symmetric_eigen_sorted(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0])));
        assert_eq!(values[..2], [1.0, 2.0]);
        assert_eq!(vectors[(1, 0)].abs(), 1.0);
    }

    #[test]
    fn limit_and_bad_k() {
        let op = neumann_laplacian(&GridSpec::new(1, 1, 2).unwrap());
        let small = DenseSolver { limit: 2 };
        assert_eq!(
            small.smallest(&op, 1, &SolveOptions::default()).unwrap_err(),
            SolveError::TooLarge { size: 4, limit: 2 }
        );
        assert!(DenseSolver::default().smallest(&op, 0, &SolveOptions::default()).is_err());
        assert!(DenseSolver::default().smallest(&op, 5, &SolveOptions::default()).is_err());
    }
}
