use super::{BaseSet, PotentialError, SiteScales};
use crate::discretize::GridSpec;

/// Values of the breather potential at the grid points of `Lambda_L`.
///
/// Supports of distinct sites are disjoint, so every value is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialField {
    grid: GridSpec,
    values: Vec<bool>,
}

impl PotentialField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.total_points();
        Self { grid, values: vec![false; n] }
    }

    pub fn from_values(grid: GridSpec, values: Vec<bool>) -> Result<Self, PotentialError> {
        if values.len() != grid.total_points() {
            return Err(PotentialError::Mismatch(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.total_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.values[i] {
            1.0
        } else {
            0.0
        }
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Fraction of grid points in the support.
    pub fn support_fraction(&self) -> f64 {
        self.support_size() as f64 / self.values.len() as f64
    }
}

/// Rasterizes `W_omega` onto the grid.
///
/// Grid point `x` belongs to the site `j` with `x - j` in `[-1/2, 1/2)^d`;
/// its value is `1_{lambda_j A}(x - j)`.
pub fn assemble_field(scales: &SiteScales, base: &BaseSet, grid: &GridSpec) -> Result<PotentialField, PotentialError> {
    let d = grid.dimension();
    if scales.dimension() != d || base.dimension() != d {
        return Err(PotentialError::Mismatch(format!(
            "dimensions differ: grid {d}, scales {}, base set {}",
            scales.dimension(),
            base.dimension()
        )));
    }
    if scales.half_length() != grid.half_length() {
        return Err(PotentialError::Mismatch(format!(
            "box half-lengths differ: grid {}, scales {}",
            grid.half_length(),
            scales.half_length()
        )));
    }

    let n = grid.points_per_unit();
    let side = grid.points_per_axis();
    let sites_per_axis = 2 * grid.half_length();
    let local_axis: Vec<f64> = (0..n).map(|k| grid.local_coordinate(k)).collect();
    let local_count = n.pow(d as u32);

    let mut values = vec![false; grid.total_points()];
    let mut local = vec![0usize; d];
    let mut x = vec![0.0; d];
    for (site, &t) in scales.scales().iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        // site multi-index, axis 0 slowest
        let mut site_idx = vec![0usize; d];
        let mut rem = site;
        for s in site_idx.iter_mut().rev() {
            *s = rem % sites_per_axis;
            rem /= sites_per_axis;
        }
        for flat_local in 0..local_count {
            let mut rem = flat_local;
            for k in (0..d).rev() {
                local[k] = rem % n;
                rem /= n;
            }
            for k in 0..d {
                x[k] = local_axis[local[k]];
            }
            if base.indicator(t, &x) {
                let mut g = 0usize;
                for k in 0..d {
                    g = g * side + site_idx[k] * n + local[k];
                }
                values[g] = true;
            }
        }
    }
    Ok(PotentialField { grid: *grid, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SMode {
    /// `(1/|I_L|) sum_k lambda_k^d vol(A)`.
    Continuum,
    /// Fraction of grid points where the assembled field is 1.
    Grid,
}

/// The spatial average `S_L` of the single-site volumes.
pub fn s_statistic(
    scales: &SiteScales,
    base: &BaseSet,
    mode: SMode,
    grid: Option<&GridSpec>,
) -> Result<f64, PotentialError> {
    match mode {
        SMode::Continuum => {
            let d = scales.dimension() as i32;
            let sum: f64 = scales.scales().iter().map(|t| t.powi(d)).sum();
            Ok(sum * base.volume() / scales.site_count() as f64)
        }
        SMode::Grid => {
            let grid = grid.ok_or(PotentialError::MissingGrid)?;
            Ok(assemble_field(scales, base, grid)?.support_fraction())
        }
    }
}
