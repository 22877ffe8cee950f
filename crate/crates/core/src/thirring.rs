//! Thirring's lower bound for the ground state of `H + V` and its explicit
//! evaluation for the breather operator on a Neumann box.
//!
//! With `gamma` half the free gap, `H_0 = -Delta - gamma` has the constant
//! ground state `Psi = N^{-1/2}` with `E_1 = -gamma`, `E_2 = gamma`, and
//! `V = W + gamma` is two-valued, so `<Psi, V^{-1} Psi>` is a function of the
//! support fraction `S` alone. The bound then reads
//!
//! ```text
//! E_1(-Delta + W) >= min{ gamma S / (1 + gamma - S), gamma } >= gamma S / 2
//! ```
//!
//! for `gamma <= 1`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::discretize::{free_gap, GridError, GridSpec, C_GAP};
use crate::discretize::{add_potential, neumann_laplacian};
use crate::eigensolve::{symmetric_eigen_sorted, AutoSolver, Eigensolver, SolveError, SolveOptions};
use crate::potential::{assemble_field, BaseSet, PotentialError, SiteScales};

/// Slack allowed on every verified inequality.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThirringError {
    #[error("V must be strictly positive; entry {index} is {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("psi is not normalized: |psi| = {norm}")]
    NotNormalized { norm: f64 },
    #[error("length mismatch: psi has {psi} entries, V has {v}")]
    Length { psi: usize, v: usize },
    #[error("ground state is not simple: E2 = {e2} <= E1 = {e1}")]
    NoGap { e1: f64, e2: f64 },
    #[error(
        "box too small: gamma = {gamma} > 1 for L = {half_length}; need L >= L0 = sqrt(C_gap / 2) = {l0:.4} (and fine enough n)"
    )]
    BoxTooSmall { gamma: f64, half_length: usize, l0: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// `L_0 = sqrt(C_gap / 2)`: below it the continuum shift exceeds 1.
pub fn l0() -> f64 {
    (C_GAP / 2.0).sqrt()
}

/// A positive invertible operator entering Thirring's bound.
pub trait PositiveOperator {
    fn dim(&self) -> usize;

    /// `<psi, V^{-1} psi>`.
    fn inverse_expectation(&self, psi: &[f64]) -> Result<f64, ThirringError>;

    /// `h += V`.
    fn add_to(&self, h: &mut DMatrix<f64>);
}

/// Multiplication by a strictly positive function.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPotential {
    values: Vec<f64>,
}

impl DiagonalPotential {
    pub fn new(values: Vec<f64>) -> Result<Self, ThirringError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(ThirringError::NonPositive { index, value });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl PositiveOperator for DiagonalPotential {
    fn dim(&self) -> usize {
        self.values.len()
    }

    fn inverse_expectation(&self, psi: &[f64]) -> Result<f64, ThirringError> {
        inner_vinv(psi, &self.values)
    }

    fn add_to(&self, h: &mut DMatrix<f64>) {
        for (i, v) in self.values.iter().enumerate() {
            h[(i, i)] += v;
        }
    }
}

/// `sum_i psi_i^2 / V_i` for normalized `psi` and positive `V`.
pub fn inner_vinv(psi: &[f64], v: &[f64]) -> Result<f64, ThirringError> {
    if psi.len() != v.len() {
        return Err(ThirringError::Length { psi: psi.len(), v: v.len() });
    }
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(ThirringError::NonPositive { index, value });
    }
    let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-12f64.max(4.0 * psi.len() as f64 * f64::EPSILON);
    if (norm - 1.0).abs() > tol {
        return Err(ThirringError::NotNormalized { norm });
    }
    Ok(psi.iter().zip(v).map(|(p, vi)| p * p / vi).sum())
}

/// `<Psi, (W + gamma)^{-1} Psi>` for the constant `Psi` when `W` is an
/// indicator covering the fraction `s` of the box.
pub fn closed_form_inner(s: f64, gamma: f64) -> f64 {
    (1.0 + gamma - s) / ((1.0 + gamma) * gamma)
}

/// `min{E1 + 1/inner, E2}`.
pub fn thirring_lower_bound(e1: f64, e2: f64, inner: f64) -> Result<f64, ThirringError> {
    if !(e2 > e1) {
        return Err(ThirringError::NoGap { e1, e2 });
    }
    if !(inner > 0.0) {
        return Err(ThirringError::NonPositive { index: 0, value: inner });
    }
    Ok((e1 + inner.recip()).min(e2))
}

/// Dense check of Thirring's bound for a symmetric `h` and positive `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirringCheck {
    pub e1: f64,
    pub e2: f64,
    pub inner: f64,
    pub bound: f64,
    pub e1_perturbed: f64,
}

impl ThirringCheck {
    pub fn slack(&self) -> f64 {
        self.e1_perturbed - self.bound
    }
}

pub fn check_thirring(h: &DMatrix<f64>, v: &dyn PositiveOperator) -> Result<ThirringCheck, ThirringError> {
    let (values, vectors) = symmetric_eigen_sorted(h.clone());
    if values.len() < 2 {
        return Err(ThirringError::NoGap { e1: values[0], e2: values[0] });
    }
    let psi: Vec<f64> = vectors.column(0).iter().copied().collect();
    let inner = v.inverse_expectation(&psi)?;
    let bound = thirring_lower_bound(values[0], values[1], inner)?;
    let mut hv = h.clone();
    v.add_to(&mut hv);
    let e1_perturbed = hv.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ThirringCheck { e1: values[0], e2: values[1], inner, bound, e1_perturbed })
}

/// Outcome of the lower-bound chain on one breather instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirringReport {
    /// `E_1(H_0) = -gamma`.
    pub e1_free: f64,
    /// `E_2(H_0) = gap - gamma = gamma`.
    pub e2_free: f64,
    /// `<Psi, V^{-1} Psi>` from the closed form.
    pub inner: f64,
    /// The same quantity summed over the grid.
    pub inner_direct: f64,
    pub bound: f64,
    /// `E_1(-Delta + W)` computed by an eigensolver.
    pub e1_perturbed: f64,
    pub slack: f64,
    /// Shift used: half the discrete gap.
    pub gamma: f64,
    /// `C_gap / (2 L^2)`, for comparison.
    pub gamma_continuum: f64,
    /// Grid-mode `S_L`.
    pub s: f64,
    pub verified: bool,
}

impl ThirringReport {
    /// `gamma S / 2`.
    pub fn chain_lower(&self) -> f64 {
        self.gamma * self.s / 2.0
    }
}

pub fn ground_state_lower_bound(
    scales: &SiteScales,
    base: &BaseSet,
    grid: &GridSpec,
) -> Result<ThirringReport, ThirringError> {
    ground_state_lower_bound_with(scales, base, grid, &AutoSolver::default(), &SolveOptions::default())
}

pub fn ground_state_lower_bound_with(
    scales: &SiteScales,
    base: &BaseSet,
    grid: &GridSpec,
    solver: &dyn Eigensolver,
    opts: &SolveOptions,
) -> Result<ThirringReport, ThirringError> {
    let gap = free_gap(grid);
    let gamma = gap.gamma();
    if gamma > 1.0 {
        return Err(ThirringError::BoxTooSmall { gamma, half_length: grid.half_length(), l0: l0() });
    }
    let field = assemble_field(scales, base, grid)?;
    let s = field.support_fraction();

    let e1_free = -gamma;
    let e2_free = gap.discrete - gamma;
    let inner = closed_form_inner(s, gamma);
    let n = field.values().len();
    let psi = vec![(n as f64).recip().sqrt(); n];
    let v: Vec<f64> = (0..n).map(|i| field.value(i) + gamma).collect();
    let inner_direct = inner_vinv(&psi, &v)?;
    let bound = thirring_lower_bound(e1_free, e2_free, inner)?;

    let op = add_potential(&neumann_laplacian(grid), &field, 0.0)?;
    let e1_perturbed = solver.smallest(&op, 1, opts)?.ground_energy();
    let slack = e1_perturbed - bound;
    let chain = gamma * s / 2.0;
    let verified = slack >= -VERIFY_TOLERANCE && chain <= bound + VERIFY_TOLERANCE;

    Ok(ThirringReport {
        e1_free,
        e2_free,
        inner,
        inner_direct,
        bound,
        e1_perturbed,
        slack,
        gamma,
        gamma_continuum: gap.gamma_continuum(),
        s,
        verified,
    })
}
