//! Base set, random scales and the assembled breather potential
//! `W(x) = sum_j 1_{lambda_j A}(x - j)`.

mod baseset;
pub mod distribution;
mod field;
pub(crate) mod rng;

pub use baseset::BaseSet;
pub use distribution::{DistributionRegistry, ScaleDistribution, ScaleLaw};
pub use field::{assemble_field, s_statistic, PotentialField, SMode};
pub use rng::{site_uniform, SiteMixer};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("invalid base set mask: {0}")]
    Mask(String),
    #[error("{0}")]
    Io(String),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("shape mismatch: {0}")]
    Mismatch(String),
    #[error("grid-mode S statistic requires a grid specification")]
    MissingGrid,
    #[error("box half-length must be at least 1")]
    EmptyBox,
}

/// One realization `omega` restricted to `I_L = [-L, L)^d`.
///
/// Sites are stored row-major over `I_L` with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteScales {
    dimension: usize,
    half_length: usize,
    scales: Vec<f64>,
    seed: u64,
    sample: u64,
}

impl SiteScales {
    /// Builds a configuration from explicit scales (seed and sample are zero).
    pub fn from_values(dimension: usize, half_length: usize, scales: Vec<f64>) -> Result<Self, PotentialError> {
        if half_length == 0 {
            return Err(PotentialError::EmptyBox);
        }
        let sites = (2 * half_length).pow(dimension as u32);
        if scales.len() != sites {
            return Err(PotentialError::Mismatch(format!(
                "expected {sites} scales for d={dimension}, L={half_length}, got {}",
                scales.len()
            )));
        }
        if let Some(bad) = scales.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(PotentialError::Mismatch(format!("scale {bad} outside [0, 1]")));
        }
        Ok(Self { dimension, half_length, scales, seed: 0, sample: 0 })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_length(&self) -> usize {
        self.half_length
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&self) -> u64 {
        self.sample
    }

    pub fn site_count(&self) -> usize {
        self.scales.len()
    }

    /// Lattice coordinates of the site with the given flat index.
    pub fn site_coords(&self, flat: usize) -> Vec<i64> {
        site_coords(self.dimension, self.half_length, flat)
    }
}

pub(crate) fn site_coords(dimension: usize, half_length: usize, mut flat: usize) -> Vec<i64> {
    let side = 2 * half_length;
    let mut coords = vec![0i64; dimension];
    for c in coords.iter_mut().rev() {
        *c = (flat % side) as i64 - half_length as i64;
        flat /= side;
    }
    coords
}

/// Draws `(2L)^d` i.i.d. scales.
///
/// The scale at site `j` depends only on `(seed, sample, j)`, so boxes of
/// different size see the same realization on their overlap and the result
/// does not depend on iteration order.
pub fn sample_scales(
    dist: &ScaleDistribution,
    dimension: usize,
    half_length: usize,
    seed: u64,
    sample: u64,
) -> Result<SiteScales, PotentialError> {
    if half_length == 0 {
        return Err(PotentialError::EmptyBox);
    }
    let sites = (2 * half_length).pow(dimension as u32);
    let mixer = SiteMixer::new(seed, sample);
    let scales = (0..sites)
        .map(|flat| {
            let j = site_coords(dimension, half_length, flat);
            dist.quantile(mixer.uniform(&j)).clamp(0.0, 1.0)
        })
        .collect();
    Ok(SiteScales { dimension, half_length, scales, seed, sample })
}
