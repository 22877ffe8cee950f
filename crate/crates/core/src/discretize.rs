//! Cell-centered finite differences for the Neumann Laplacian on
//! `Lambda_L = I_L + [-1/2, 1/2]^d`, plus closed-form free spectra.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::potential::PotentialField;

/// Gap constant of the continuum Neumann Laplacian: `E_2 - E_1 = C_GAP / L^2`.
pub const C_GAP: f64 = PI * PI / 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("grid mismatch: operator is {op}, field is {field}")]
    Mismatch { op: String, field: String },
}

/// Uniform grid over `Lambda_L` with `n` points per unit length.
///
/// Per axis there are `M = 2Ln` points at cell centers
/// `x_i = -L - 1/2 + (i + 1/2) h`, so every unit cell `j + [-1/2, 1/2)^d`
/// carries the same `n^d` local points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    dimension: usize,
    half_length: usize,
    points_per_unit: usize,
}

impl GridSpec {
    pub fn new(dimension: usize, half_length: usize, points_per_unit: usize) -> Result<Self, GridError> {
        if dimension == 0 {
            return Err(GridError::Invalid("dimension must be positive".into()));
        }
        if half_length == 0 {
            return Err(GridError::Invalid("box half-length L must be at least 1".into()));
        }
        if points_per_unit == 0 {
            return Err(GridError::Invalid("points per unit length n must be at least 1".into()));
        }
        let side = 2 * half_length * points_per_unit;
        if side.checked_pow(dimension as u32).is_none() {
            return Err(GridError::Invalid("grid size overflows".into()));
        }
        Ok(Self { dimension, half_length, points_per_unit })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_length(&self) -> usize {
        self.half_length
    }

    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_unit as f64
    }

    pub fn points_per_axis(&self) -> usize {
        2 * self.half_length * self.points_per_unit
    }

    pub fn total_points(&self) -> usize {
        self.points_per_axis().pow(self.dimension as u32)
    }

    /// `|I_L| = (2L)^d`, the volume of the box.
    pub fn site_count(&self) -> usize {
        (2 * self.half_length).pow(self.dimension as u32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -(self.half_length as f64) - 0.5 + (i as f64 + 0.5) * self.spacing()
    }

    /// Offset of the `k`-th point inside its unit cell, in `(-1/2, 1/2)`.
    pub fn local_coordinate(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.spacing() - 0.5
    }

    /// `1/h^2` as an exact value.
    fn inv_h2(&self) -> f64 {
        (self.points_per_unit * self.points_per_unit) as f64
    }

    fn describe(&self) -> String {
        format!("d={} L={} n={}", self.dimension, self.half_length, self.points_per_unit)
    }
}

/// `-Delta^L + diag(potential)` stored as a CSR Laplacian plus a diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    grid: GridSpec,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    potential: Vec<f64>,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.potential.len()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.size());
        debug_assert_eq!(y.len(), self.size());
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = self.potential[row] * x[row];
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.values[idx] * x[self.col_idx[idx]];
            }
            *out = acc;
        }
    }

    pub fn laplacian_entries(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[row]..self.row_ptr[row + 1]).map(move |idx| (self.col_idx[idx], self.values[idx]))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for row in 0..n {
            for (col, v) in self.laplacian_entries(row) {
                m[(row, col)] += v;
            }
            m[(row, row)] += self.potential[row];
        }
        m
    }

    /// Upper end of the union of Gershgorin disks.
    pub fn gershgorin_upper(&self) -> f64 {
        (0..self.size())
            .map(|row| {
                let (diag, off) = self.laplacian_entries(row).fold((0.0, 0.0), |(d, o), (c, v)| {
                    if c == row {
                        (d + v, o)
                    } else {
                        (d, o + v.abs())
                    }
                });
                diag + off + self.potential[row]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Adds `c` to every diagonal entry.
    pub fn shifted(mut self, c: f64) -> Self {
        for p in &mut self.potential {
            *p += c;
        }
        self
    }
}

/// Mirror-reflecting second-order stencil; row sums of the result are exactly 0.
pub fn neumann_laplacian(grid: &GridSpec) -> DiscreteOperator {
    let d = grid.dimension();
    let side = grid.points_per_axis();
    let total = grid.total_points();
    let c = grid.inv_h2();

    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * side;
    }

    let mut row_ptr = Vec::with_capacity(total + 1);
    let mut col_idx = Vec::with_capacity(total * (2 * d + 1));
    let mut values = Vec::with_capacity(total * (2 * d + 1));
    row_ptr.push(0);
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * d + 1);
    for row in 0..total {
        entries.clear();
        let mut neighbours = 0u32;
        for &stride in &strides {
            let i = (row / stride) % side;
            if i > 0 {
                entries.push((row - stride, -c));
                neighbours += 1;
            }
            if i + 1 < side {
                entries.push((row + stride, -c));
                neighbours += 1;
            }
        }
        entries.push((row, f64::from(neighbours) * c));
        entries.sort_unstable_by_key(|&(col, _)| col);
        for &(col, v) in &entries {
            col_idx.push(col);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    DiscreteOperator { grid: *grid, row_ptr, col_idx, values, potential: vec![0.0; total] }
}

/// Returns `op` with `field(x) + shift` added to the diagonal.
pub fn add_potential(op: &DiscreteOperator, field: &PotentialField, shift: f64) -> Result<DiscreteOperator, GridError> {
    if field.grid() != op.grid() {
        return Err(GridError::Mismatch { op: op.grid.describe(), field: field.grid().describe() });
    }
    let mut out = op.clone();
    for (i, p) in out.potential.iter_mut().enumerate() {
        *p += field.value(i) + shift;
    }
    Ok(out)
}

/// `-Delta^L + W` for a field on the same grid.
pub fn breather_operator(field: &PotentialField) -> DiscreteOperator {
    let lap = neumann_laplacian(field.grid());
    add_potential(&lap, field, 0.0).expect("field and laplacian share the grid")
}

/// Neumann eigenvalues along one axis: `(2/h^2)(1 - cos(k pi / M))`, `k = 0..M`.
pub fn axis_eigenvalues(grid: &GridSpec) -> Vec<f64> {
    let m = grid.points_per_axis();
    let c = 2.0 * grid.inv_h2();
    (0..m).map(|k| c * (1.0 - (k as f64 * PI / m as f64).cos())).collect()
}

/// Full free spectrum as tensor sums of the axis eigenvalues, ascending.
pub fn free_spectrum(grid: &GridSpec) -> Vec<f64> {
    let axis = axis_eigenvalues(grid);
    let mut spectrum = vec![0.0];
    for _ in 0..grid.dimension() {
        spectrum = spectrum.iter().flat_map(|&s| axis.iter().map(move |&a| s + a)).collect();
    }
    spectrum.sort_by(f64::total_cmp);
    spectrum
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeGap {
    /// `E_2 - E_1` of the discrete Neumann Laplacian.
    pub discrete: f64,
    /// `C_GAP / L^2`.
    pub continuum: f64,
}

impl FreeGap {
    /// Half the discrete gap: the shift that makes `-Delta - gamma` have
    /// `E_1 = -gamma` and `E_2 = gamma`.
    pub fn gamma(&self) -> f64 {
        self.discrete / 2.0
    }

    pub fn gamma_continuum(&self) -> f64 {
        self.continuum / 2.0
    }
}

pub fn free_gap(grid: &GridSpec) -> FreeGap {
    let m = grid.points_per_axis() as f64;
    let discrete = 2.0 * grid.inv_h2() * (1.0 - (PI / m).cos());
    let l = grid.half_length() as f64;
    FreeGap { discrete, continuum: C_GAP / (l * l) }
}

/// Number of continuum Neumann eigenvalues `pi^2 |k|^2 / (2L)^2 <= E` on
/// `Lambda_L`, i.e. `#{k in Z_{>=0}^d : |k|^2 <= 4 L^2 E / pi^2}`.
pub fn free_counting(dimension: usize, half_length: usize, energy: f64) -> u64 {
    if energy < 0.0 {
        return 0;
    }
    let l = half_length as f64;
    let radius2 = 4.0 * l * l * energy / (PI * PI);
    count_lattice_points(dimension, radius2)
}

fn count_lattice_points(dimension: usize, radius2: f64) -> u64 {
    if dimension == 0 {
        return 1;
    }
    let mut total = 0;
    let mut k = 0u64;
    loop {
        let k2 = (k * k) as f64;
        if k2 > radius2 {
            break;
        }
        total += count_lattice_points(dimension - 1, radius2 - k2);
        k += 1;
    }
    total
}
