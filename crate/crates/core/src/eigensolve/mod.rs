//! Smallest eigenpairs of symmetric operators and eigenvalue counting.
//!
//! Solvers implement [`Eigensolver`] and are looked up by name in a
//! [`SolverRegistry`]; `dense` is the verification oracle, `lanczos` the
//! scalable path, and `auto` picks between them by problem size.

mod dense;
mod lanczos;
mod registry;

pub use dense::{dense_spectrum, symmetric_eigen_sorted, DenseSolver, DENSE_LIMIT};
pub use lanczos::{lanczos_smallest, LanczosSolver};
pub use registry::{AutoSolver, SolverRegistry};

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::discretize::DiscreteOperator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("operator size {size} exceeds the dense limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("no convergence after {iterations} iterations; best residuals {residuals:?}")]
    NotConverged { iterations: usize, residuals: Vec<f64> },
    #[error("invalid eigensolver request: {0}")]
    InvalidRequest(String),
    #[error("unknown eigensolver {name:?} (known: {known})")]
    UnknownSolver { name: String, known: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dense,
    Iterative,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dense => "dense",
            Method::Iterative => "iterative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target for `||H v - lambda v||` with `||v|| = 1`.
    pub tol: f64,
    /// Cap on the Krylov dimension per eigenpair.
    pub maxiter: usize,
    /// Seed of the starting vectors.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, maxiter: 5000, seed: 0x1a2c_3e4f }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub requested: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub method: Method,
    pub iterations: usize,
    /// Starting-vector seed of iterative runs.
    pub start_seed: Option<u64>,
}

impl SpectralResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Symmetric linear map accessible through matrix-vector products.
pub trait SymmetricOperator {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for DiscreteOperator {
    fn size(&self) -> usize {
        DiscreteOperator::size(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        DiscreteOperator::apply(self, x, y)
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn size(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            *out = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// A strategy for the `k` smallest eigenpairs.
pub trait Eigensolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn smallest(&self, op: &DiscreteOperator, k: usize, opts: &SolveOptions) -> Result<SpectralResult, SolveError>;
}

pub fn smallest_eigs_dense(op: &DiscreteOperator, k: usize) -> Result<SpectralResult, SolveError> {
    DenseSolver::default().smallest(op, k, &SolveOptions::default())
}

pub fn smallest_eigs_iterative(
    op: &DiscreteOperator,
    k: usize,
    tol: f64,
    maxiter: usize,
) -> Result<SpectralResult, SolveError> {
    LanczosSolver.smallest(op, k, &SolveOptions { tol, maxiter, ..SolveOptions::default() })
}

/// `#{eigenvalues <= energy}`; the closed interval matches `chi_{(-inf, E]}`.
pub fn count_eigs_below(op: &DiscreteOperator, energy: f64) -> Result<usize, SolveError> {
    Ok(count_in_spectrum(&dense_spectrum(op)?, energy))
}

/// Counting on an already computed ascending spectrum.
pub fn count_in_spectrum(spectrum: &[f64], energy: f64) -> usize {
    spectrum.partition_point(|&ev| ev <= energy)
}

pub(crate) fn residual_norm<O: SymmetricOperator + ?Sized>(op: &O, value: f64, vector: &[f64]) -> f64 {
    let mut hv = vec![0.0; vector.len()];
    op.apply(vector, &mut hv);
    hv.iter()
        .zip(vector)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{add_potential, neumann_laplacian, GridSpec};
    use crate::potential::PotentialField;

    #[test]
    fn counting_free_spectrum() {
        let op = neumann_laplacian(&GridSpec::new(1, 1, 2).unwrap());
        assert_eq!(count_eigs_below(&op, 5.0).unwrap(), 2);
        assert_eq!(count_eigs_below(&op, -1e-6).unwrap(), 0);
        // closed interval at an exact eigenvalue
        assert_eq!(count_eigs_below(&op, 8.0 + 1e-12).unwrap(), 3);
        let top = op.gershgorin_upper();
        assert_eq!(count_eigs_below(&op, top).unwrap(), 4);
    }

    #[test]
    fn counting_monotone_in_energy() {
        let grid = GridSpec::new(2, 1, 3).unwrap();
        let values: Vec<bool> = (0..grid.total_points()).map(|i| i % 3 == 0).collect();
        let field = PotentialField::from_values(grid, values).unwrap();
        let op = add_potential(&neumann_laplacian(&grid), &field, 0.0).unwrap();
        let spectrum = dense_spectrum(&op).unwrap();
        let mut last = 0;
        let top = op.gershgorin_upper();
        for i in 0..=200 {
            let e = -1.0 + i as f64 * (top + 1.0) / 200.0;
            let c = count_in_spectrum(&spectrum, e);
            assert!(c >= last);
            last = c;
        }
        assert_eq!(last, op.size());
    }

    #[test]
    fn dense_matrix_operator() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let mut y = [0.0; 2];
        SymmetricOperator::apply(&m, &[1.0, -1.0], &mut y);
        assert_eq!(y, [1.0, -2.0]);
    }
}
