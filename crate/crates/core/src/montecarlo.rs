//! Ensemble estimates over independent configurations `omega`.
//!
//! Sample `m` draws its scales from `(seed, m, site)` only, samples run as
//! independent rayon tasks, and results are reduced in sample order, so
//! every estimate is bit-identical for any thread count.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{mean_s, AnalysisError};
use crate::discretize::{add_potential, free_counting, free_gap, neumann_laplacian, DiscreteOperator, GridError, GridSpec};
use crate::eigensolve::{count_in_spectrum, dense_spectrum, AutoSolver, Eigensolver, SolveError, SolveOptions, DENSE_LIMIT};
use crate::potential::{
    assemble_field, s_statistic, sample_scales, BaseSet, PotentialError, PotentialField, SMode, ScaleDistribution,
    SiteScales,
};
use crate::stats::{mean_and_stderr, ProbabilityEstimate};
use crate::thirring::VERIFY_TOLERANCE;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("energies must be ascending")]
    UnsortedEnergies,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("grid has {points} points, above the dense counting limit {limit}")]
    TooLarge { points: usize, limit: usize },
    #[error("sample {sample}: {source}")]
    Solver { sample: u64, source: SolveError },
    #[error(
        "sample {sample}: proof chain violated, E1 = {e1} < gamma S / 2 = {lower} (beyond {VERIFY_TOLERANCE})"
    )]
    ChainViolation { sample: u64, e1: f64, lower: f64 },
    #[error("degenerate distribution: E[S_1] = 0")]
    Degenerate,
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Everything needed to reproduce an ensemble.
#[derive(Clone)]
pub struct EnsembleSpec {
    pub base: Arc<BaseSet>,
    pub distribution: ScaleDistribution,
    pub grid: GridSpec,
    pub samples: u64,
    pub seed: u64,
    pub solve: SolveOptions,
    pub solver: Arc<dyn Eigensolver>,
    /// Check `E_1 >= gamma S_grid / 2` on every sample where `gamma <= 1`.
    pub verify_chain: bool,
}

impl EnsembleSpec {
    pub fn new(base: BaseSet, distribution: ScaleDistribution, grid: GridSpec, samples: u64, seed: u64) -> Self {
        Self {
            base: Arc::new(base),
            distribution,
            grid,
            samples,
            seed,
            solve: SolveOptions::default(),
            solver: Arc::new(AutoSolver::default()),
            verify_chain: true,
        }
    }

    pub fn with_grid(&self, grid: GridSpec) -> Self {
        Self { grid, ..self.clone() }
    }

    pub fn scales(&self, sample: u64) -> Result<SiteScales, PotentialError> {
        sample_scales(&self.distribution, self.grid.dimension(), self.grid.half_length(), self.seed, sample)
    }

    pub fn field(&self, sample: u64) -> Result<PotentialField, PotentialError> {
        assemble_field(&self.scales(sample)?, &self.base, &self.grid)
    }

    /// `H_omega^L` for one sample.
    pub fn operator(&self, sample: u64) -> Result<(PotentialField, DiscreteOperator), MonteCarloError> {
        let field = self.field(sample)?;
        let op = add_potential(&neumann_laplacian(&self.grid), &field, 0.0)?;
        Ok((field, op))
    }

    fn validate(&self) -> Result<(), MonteCarloError> {
        if self.samples == 0 {
            return Err(MonteCarloError::NoSamples);
        }
        if self.base.dimension() != self.grid.dimension() {
            return Err(PotentialError::Mismatch(format!(
                "base set is {}-dimensional, grid is {}-dimensional",
                self.base.dimension(),
                self.grid.dimension()
            ))
            .into());
        }
        Ok(())
    }
}

fn check_ascending(energies: &[f64]) -> Result<(), MonteCarloError> {
    if energies.windows(2).all(|w| w[0] <= w[1]) {
        Ok(())
    } else {
        Err(MonteCarloError::UnsortedEnergies)
    }
}

/// Runs `task` for every sample in parallel and returns results in sample
/// order; the first failing sample (by index) wins.
fn per_sample<T, F>(samples: u64, task: F) -> Result<Vec<T>, MonteCarloError>
where
    T: Send,
    F: Fn(u64) -> Result<T, MonteCarloError> + Sync + Send,
{
    let results: Vec<Result<T, MonteCarloError>> = (0..samples).into_par_iter().map(task).collect();
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdsPoint {
    pub energy: f64,
    /// Mean of `#{eigenvalues <= E} / (2L)^d`.
    pub estimate: f64,
    pub stderr: f64,
    pub half_length: usize,
}

/// Finite-volume Neumann IDS with per-energy standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdsCurve {
    pub points: Vec<IdsPoint>,
    pub samples: u64,
    pub dimension: usize,
    pub points_per_unit: usize,
    pub seed: u64,
}

impl IdsCurve {
    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.estimate).collect()
    }
}

/// Per-sample data from a dense ensemble pass.
struct SampleSpectrum {
    counts: Vec<u64>,
    e1: f64,
}

fn dense_pass(spec: &EnsembleSpec, energies: &[f64]) -> Result<Vec<SampleSpectrum>, MonteCarloError> {
    spec.validate()?;
    check_ascending(energies)?;
    let points = spec.grid.total_points();
    if points > DENSE_LIMIT {
        return Err(MonteCarloError::TooLarge { points, limit: DENSE_LIMIT });
    }
    let gamma = free_gap(&spec.grid).gamma();
    per_sample(spec.samples, |m| {
        let (field, op) = spec.operator(m)?;
        let spectrum = dense_spectrum(&op).map_err(|source| MonteCarloError::Solver { sample: m, source })?;
        let e1 = spectrum[0];
        if spec.verify_chain && gamma <= 1.0 {
            let lower = gamma * field.support_fraction() / 2.0;
            if e1 < lower - VERIFY_TOLERANCE {
                return Err(MonteCarloError::ChainViolation { sample: m, e1, lower });
            }
        }
        let counts = energies.iter().map(|&e| count_in_spectrum(&spectrum, e) as u64).collect();
        Ok(SampleSpectrum { counts, e1 })
    })
}

fn summarize_ids(spec: &EnsembleSpec, energies: &[f64], per: &[SampleSpectrum]) -> IdsCurve {
    let volume = spec.grid.site_count() as f64;
    let points = energies
        .iter()
        .enumerate()
        .map(|(i, &energy)| {
            let values: Vec<f64> = per.iter().map(|s| s.counts[i] as f64 / volume).collect();
            let (estimate, stderr) = mean_and_stderr(&values);
            IdsPoint { energy, estimate, stderr, half_length: spec.grid.half_length() }
        })
        .collect();
    IdsCurve {
        points,
        samples: spec.samples,
        dimension: spec.grid.dimension(),
        points_per_unit: spec.grid.points_per_unit(),
        seed: spec.seed,
    }
}

/// Monte Carlo estimate of `E[#{eigenvalues of H_omega^L <= E}] / (2L)^d`.
pub fn estimate_ids(spec: &EnsembleSpec, energies: &[f64]) -> Result<IdsCurve, MonteCarloError> {
    let per = dense_pass(spec, energies)?;
    Ok(summarize_ids(spec, energies, &per))
}

/// Empirical `P(E_1(H_omega^L) <= E)` per energy, with Wilson intervals.
pub fn ground_state_probability(
    spec: &EnsembleSpec,
    energies: &[f64],
) -> Result<Vec<ProbabilityEstimate>, MonteCarloError> {
    spec.validate()?;
    check_ascending(energies)?;
    let gamma = free_gap(&spec.grid).gamma();
    let e1s = per_sample(spec.samples, |m| {
        let (field, op) = spec.operator(m)?;
        let e1 = spec
            .solver
            .smallest(&op, 1, &spec.solve)
            .map_err(|source| MonteCarloError::Solver { sample: m, source })?
            .ground_energy();
        if spec.verify_chain && gamma <= 1.0 {
            let lower = gamma * field.support_fraction() / 2.0;
            if e1 < lower - VERIFY_TOLERANCE {
                return Err(MonteCarloError::ChainViolation { sample: m, e1, lower });
            }
        }
        Ok(e1)
    })?;
    Ok(energies
        .iter()
        .map(|&e| {
            let hits = e1s.iter().filter(|&&x| x <= e).count() as u64;
            ProbabilityEstimate::new(format!("E1 <= {e}"), hits, spec.samples)
        })
        .collect())
}

/// One energy of the finite-volume Weyl comparison
/// `N_L(E) <= free_counting(E) / (2L)^d * P(E_1 <= E)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylRow {
    pub energy: f64,
    pub ids: f64,
    pub ids_stderr: f64,
    pub free_count: u64,
    pub ground_probability: ProbabilityEstimate,
    /// `free_count / (2L)^d * P(E_1 <= E)`.
    pub bound: f64,
    pub combined_stderr: f64,
}

impl WeylRow {
    /// Inequality up to two combined standard errors.
    pub fn holds(&self) -> bool {
        self.ids <= self.bound + 2.0 * self.combined_stderr
    }
}

/// IDS and ground-state probability from the same dense ensemble pass.
pub fn weyl_table(spec: &EnsembleSpec, energies: &[f64]) -> Result<Vec<WeylRow>, MonteCarloError> {
    let per = dense_pass(spec, energies)?;
    let curve = summarize_ids(spec, energies, &per);
    let volume = spec.grid.site_count() as f64;
    Ok(curve
        .points
        .iter()
        .map(|p| {
            let hits = per.iter().filter(|s| s.e1 <= p.energy).count() as u64;
            let prob = ProbabilityEstimate::new(format!("E1 <= {}", p.energy), hits, spec.samples);
            let free_count = free_counting(spec.grid.dimension(), spec.grid.half_length(), p.energy);
            let factor = free_count as f64 / volume;
            let bound = factor * prob.estimate;
            let combined_stderr = (p.stderr.powi(2) + (factor * prob.std_error()).powi(2)).sqrt();
            WeylRow {
                energy: p.energy,
                ids: p.estimate,
                ids_stderr: p.stderr,
                free_count,
                ground_probability: prob,
                bound,
                combined_stderr,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub half_length: usize,
    /// `(2L)^d`.
    pub sites: u64,
    pub probability: ProbabilityEstimate,
}

/// Empirical `P(S_L <= E[S_1] / 2)` with continuum-mode `S_L`, per box size.
pub fn concentration_probability(
    base: &BaseSet,
    dist: &ScaleDistribution,
    dimension: usize,
    half_lengths: &[usize],
    samples: u64,
    seed: u64,
) -> Result<Vec<ConcentrationRow>, MonteCarloError> {
    if samples == 0 {
        return Err(MonteCarloError::NoSamples);
    }
    let expected = mean_s(dist, base, dimension);
    if expected.degenerate || !(expected.value > 0.0) {
        return Err(MonteCarloError::Degenerate);
    }
    let threshold = expected.value / 2.0;
    half_lengths
        .iter()
        .map(|&l| {
            let hits = per_sample(samples, |m| {
                let scales = sample_scales(dist, dimension, l, seed, m)?;
                Ok(s_statistic(&scales, base, SMode::Continuum, None)? <= threshold)
            })?
            .into_iter()
            .filter(|&hit| hit)
            .count() as u64;
            Ok(ConcentrationRow {
                half_length: l,
                sites: (2 * l as u64).pow(dimension as u32),
                probability: ProbabilityEstimate::new(format!("S_{l} <= E[S_1]/2"), hits, samples),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::free_counting;

    fn spec(dist: ScaleDistribution, l: usize, n: usize, samples: u64) -> EnsembleSpec {
        let base = BaseSet::from_bits(1, 4, "0110").unwrap();
        EnsembleSpec::new(base, dist, GridSpec::new(1, l, n).unwrap(), samples, 17)
    }

    #[test]
    fn free_ensemble_matches_counting() {
        let s = spec(ScaleDistribution::point_mass(0.0).unwrap(), 2, 8, 3);
        let energies = [-0.5, 1e-9, 0.3, 1.0, 2.5, 5.0];
        let curve = estimate_ids(&s, &energies).unwrap();
        for p in &curve.points {
            // the discrete levels sit just below the continuum ones; these energies avoid the gaps
            let expected = free_counting(1, 2, p.energy) as f64 / 4.0;
            assert_eq!(p.estimate, expected, "E = {}", p.energy);
            assert_eq!(p.stderr, 0.0);
        }
        assert_eq!(curve.points[0].estimate, 0.0);
    }

    #[test]
    fn saturates_at_states_per_volume() {
        let s = spec(ScaleDistribution::uniform01(), 1, 4, 5);
        let curve = estimate_ids(&s, &[1e6]).unwrap();
        assert_eq!(curve.points[0].estimate, 4.0);
    }

    #[test]
    fn random_ids_below_free() {
        let s = spec(ScaleDistribution::uniform01(), 2, 4, 200);
        let free = spec(ScaleDistribution::point_mass(0.0).unwrap(), 2, 4, 1);
        let e = [0.05];
        let random = estimate_ids(&s, &e).unwrap().points[0].estimate;
        let reference = estimate_ids(&free, &e).unwrap().points[0].estimate;
        assert!(random > 0.0 && random < reference, "{random} vs {reference}");
    }

    #[test]
    fn probability_edges() {
        let s = spec(ScaleDistribution::uniform01(), 2, 4, 50);
        let gap = free_gap(&s.grid).discrete;
        let p = ground_state_probability(&s, &[-1e-9, 1.0 + gap]).unwrap();
        assert_eq!(p[0].successes, 0);
        assert_eq!(p[1].successes, 50);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = spec(ScaleDistribution::uniform01(), 2, 4, 5);
        assert_eq!(estimate_ids(&s, &[1.0, 0.5]).unwrap_err(), MonteCarloError::UnsortedEnergies);
        let mut empty = s.clone();
        empty.samples = 0;
        assert_eq!(estimate_ids(&empty, &[1.0]).unwrap_err(), MonteCarloError::NoSamples);
        let base = BaseSet::from_bits(1, 4, "0110").unwrap();
        let pm = ScaleDistribution::point_mass(0.0).unwrap();
        assert_eq!(
            concentration_probability(&base, &pm, 1, &[2], 10, 1).unwrap_err(),
            MonteCarloError::Degenerate
        );
    }

    #[test]
    fn point_mass_one_never_concentrates() {
        let base = BaseSet::from_bits(1, 4, "0110").unwrap();
        let pm = ScaleDistribution::point_mass(1.0).unwrap();
        for row in concentration_probability(&base, &pm, 1, &[1, 2, 4], 100, 3).unwrap() {
            assert_eq!(row.probability.successes, 0);
        }
    }

    #[test]
    fn thread_count_independent() {
        let s = spec(ScaleDistribution::uniform01(), 2, 4, 64);
        let energies = [0.1, 0.5, 2.0];
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| (estimate_ids(&s, &energies).unwrap(), ground_state_probability(&s, &energies).unwrap()))
        };
        assert_eq!(run(1), run(4));
    }
}
