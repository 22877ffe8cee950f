//! Post-processing: `E[S_1]`, the `L_E` box schedule, the concentration
//! constant and the Lifshitz tail exponent.
//!
//! All fitted constants are empirical and depend on the fit window.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::discretize::{free_counting, C_GAP};
use crate::montecarlo::{estimate_ids, EnsembleSpec, IdsCurve, MonteCarloError};
use crate::potential::{BaseSet, ScaleDistribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("need at least {needed} usable points, have {have}")]
    TooFewPoints { needed: usize, have: usize },
    #[error("no usable points in the fit window ({low}, {high}]")]
    EmptyWindow { low: f64, high: f64 },
    #[error("unknown tail estimator '{name}' (known: {known})")]
    UnknownEstimator { name: String, known: String },
}

/// Midpoint nodes used when `E[lambda^d]` has no closed form.
pub const QUADRATURE_NODES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanS {
    pub value: f64,
    /// The law violates the non-degeneracy assumption or `E[S_1] = 0`.
    pub degenerate: bool,
}

/// `E[S_L] = vol(A) E[lambda^d]`, independent of `L`.
pub fn mean_s(dist: &ScaleDistribution, base: &BaseSet, dimension: usize) -> MeanS {
    let moment = dist
        .law()
        .power_moment(dimension)
        .unwrap_or_else(|| quantile_moment(dist, dimension, QUADRATURE_NODES));
    let value = base.volume() * moment;
    MeanS { value, degenerate: dist.is_degenerate() && !(value > 0.0) }
}

/// `int_0^1 Q(u)^d du` by the midpoint rule.
pub fn quantile_moment(dist: &ScaleDistribution, dimension: usize, nodes: usize) -> f64 {
    let h = 1.0 / nodes as f64;
    let d = dimension as i32;
    (0..nodes).map(|i| dist.quantile((i as f64 + 0.5) * h).powi(d)).sum::<f64>() * h
}

/// `L_0 = sqrt(C_gap / 2)`.
pub fn l0() -> f64 {
    crate::thirring::l0()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoxSchedule {
    /// `floor(sqrt(C_gap E[S_1] / (8 E)))`.
    pub half_length: u64,
    /// `half_length >= L_0`, i.e. `E` is small enough for the bound.
    pub admissible: bool,
}

impl BoxSchedule {
    /// Box actually simulated: the schedule value, at least 1.
    pub fn simulated(&self) -> usize {
        self.half_length.max(1) as usize
    }
}

pub fn choose_l(energy: f64, mean_s: f64) -> Result<BoxSchedule, AnalysisError> {
    if !(energy > 0.0) {
        return Err(AnalysisError::NonPositive { what: "energy", value: energy });
    }
    if !(mean_s > 0.0) {
        return Err(AnalysisError::NonPositive { what: "E[S_1]", value: mean_s });
    }
    let half_length = (C_GAP * mean_s / (8.0 * energy)).sqrt().floor() as u64;
    Ok(BoxSchedule { half_length, admissible: half_length as f64 >= l0() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LineFit {
    slope: f64,
    intercept: f64,
    residual_norm: f64,
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual_norm = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        .sqrt();
    LineFit { slope, intercept, residual_norm }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationFit {
    /// `((2L)^d, ln p)` for every usable point.
    pub points: Vec<(f64, f64)>,
    /// `-slope`, the rate in `p ~ exp(-C_ld (2L)^d)`.
    pub c_ld: f64,
    pub intercept: f64,
    pub residual_norm: f64,
    /// `c_ld > 0`; a nonpositive rate means no observed concentration.
    pub positive: bool,
}

/// Least-squares line through `((2L)^d, ln p_L)`; zero probabilities are
/// skipped.
pub fn bernstein_fit(table: &[(usize, f64)], dimension: usize) -> Result<ConcentrationFit, AnalysisError> {
    let points: Vec<(f64, f64)> = table
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|&(l, p)| (((2 * l) as f64).powi(dimension as i32), p.ln()))
        .collect();
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints { needed: 3, have: points.len() });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let fit = least_squares_line(&xs, &ys);
    let c_ld = -fit.slope;
    Ok(ConcentrationFit {
        points,
        c_ld,
        intercept: fit.intercept,
        residual_norm: fit.residual_norm,
        positive: c_ld > 0.0,
    })
}

/// `C_exp = C_ld (C_gap E[S_1] / 8)^{d/2}` as produced by the proof.
pub fn proof_c_exp(c_ld: f64, mean_s: f64, dimension: usize) -> f64 {
    c_ld * (C_GAP * mean_s / 8.0).powf(dimension as f64 / 2.0)
}

/// Estimates the Lifshitz exponent from `(ln(E - E0), ln N)` pairs.
pub trait TailEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Minimum number of points the estimator needs.
    fn min_points(&self) -> usize;

    fn estimate(&self, log_e: &[f64], log_n: &[f64]) -> ExponentEstimate;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub slope: f64,
    pub residual_norm: f64,
}

/// Regression slope of `ln(-ln N)` on `ln(E - E0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogLogSlope;

impl TailEstimator for LogLogSlope {
    fn name(&self) -> &'static str {
        "loglog"
    }

    fn min_points(&self) -> usize {
        2
    }

    fn estimate(&self, log_e: &[f64], log_n: &[f64]) -> ExponentEstimate {
        let ys: Vec<f64> = log_n.iter().map(|y| (-y).ln()).collect();
        let line = least_squares_line(log_e, &ys);
        ExponentEstimate { slope: line.slope, residual_norm: line.residual_norm }
    }
}

/// Fits `ln N = a + b ln E - C E^{-alpha}` and reports `-alpha`.
///
/// Insensitive to a power-law prefactor, but poorly conditioned on noisy
/// or staircase-shaped curves.
#[derive(Debug, Clone, Copy)]
pub struct ProfileExponent {
    pub alpha_range: (f64, f64),
}

impl Default for ProfileExponent {
    fn default() -> Self {
        Self { alpha_range: (0.02, 4.0) }
    }
}

/// Least squares in `(a, b, C)` for fixed `alpha`.
fn profile_residual(log_e: &[f64], log_n: &[f64], alpha: f64) -> f64 {
    let design = DMatrix::from_fn(log_e.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => log_e[i],
        _ => -(-alpha * log_e[i]).exp(),
    });
    let rhs = DVector::from_column_slice(log_n);
    let coef = design.clone().svd(true, true).solve(&rhs, 1e-14).expect("svd with vectors");
    (&design * &coef - rhs).norm()
}

impl TailEstimator for ProfileExponent {
    fn name(&self) -> &'static str {
        "profile"
    }

    fn min_points(&self) -> usize {
        4
    }

    fn estimate(&self, log_e: &[f64], log_n: &[f64]) -> ExponentEstimate {
        let f = |alpha: f64| profile_residual(log_e, log_n, alpha);
        let (lo, hi) = self.alpha_range;
        let steps = 400;
        let grid: Vec<f64> = (0..=steps).map(|i| lo * (hi / lo).powf(i as f64 / steps as f64)).collect();
        let values: Vec<f64> = grid.iter().map(|&a| f(a)).collect();
        let best = (0..grid.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty scan");

        // golden-section refinement between the scan neighbours
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = grid[best.saturating_sub(1)];
        let mut b = grid[(best + 1).min(steps)];
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..200 {
            if b - a <= 1e-13 * (a + b) {
                break;
            }
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d);
            }
        }
        let alpha = 0.5 * (a + b);
        ExponentEstimate { slope: -alpha, residual_norm: f(alpha) }
    }
}

#[derive(Clone)]
pub struct TailEstimatorRegistry {
    estimators: BTreeMap<&'static str, Arc<dyn TailEstimator>>,
}

impl TailEstimatorRegistry {
    /// `loglog` and `profile`.
    pub fn builtin() -> Self {
        let mut reg = Self { estimators: BTreeMap::new() };
        reg.register(Arc::new(LogLogSlope));
        reg.register(Arc::new(ProfileExponent::default()));
        reg
    }

    pub fn register(&mut self, estimator: Arc<dyn TailEstimator>) {
        self.estimators.insert(estimator.name(), estimator);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.estimators.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TailEstimator>, AnalysisError> {
        self.estimators.get(name).cloned().ok_or_else(|| AnalysisError::UnknownEstimator {
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })
    }
}

impl Default for TailEstimatorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub window: (f64, f64),
    pub e0: f64,
    pub estimator: &'static str,
    /// Lifshitz exponent estimate; the bound predicts `-d/2` as `E -> E0`.
    pub slope: f64,
    pub residual_norm: f64,
    /// `sup_E free_counting(E) / ((2L)^d E^{d/2})` over the window.
    pub c_front: f64,
    /// Largest `C_exp` with `N <= C_front E^{d/2} exp(-C_exp E^{-d/2})` on the window.
    pub c_exp: f64,
    pub point_count: usize,
    pub label: &'static str,
}

/// [`fit_tail_with`] using the log-log slope.
pub fn fit_tail(curve: &IdsCurve, e0: f64, dimension: usize, window: (f64, f64)) -> Result<TailFit, AnalysisError> {
    fit_tail_with(curve, e0, dimension, window, &LogLogSlope)
}

/// Fits the tail of an IDS curve on `(low, high]`.
///
/// Only points with `0 < N < 1` and `E > e0` inside the window are used.
pub fn fit_tail_with(
    curve: &IdsCurve,
    e0: f64,
    dimension: usize,
    window: (f64, f64),
    estimator: &dyn TailEstimator,
) -> Result<TailFit, AnalysisError> {
    let (low, high) = window;
    let usable: Vec<_> = curve
        .points
        .iter()
        .filter(|p| p.energy > low && p.energy <= high && p.energy > e0 && p.estimate > 0.0 && p.estimate < 1.0)
        .collect();
    if usable.is_empty() {
        return Err(AnalysisError::EmptyWindow { low, high });
    }
    let needed = estimator.min_points();
    if usable.len() < needed {
        return Err(AnalysisError::TooFewPoints { needed, have: usable.len() });
    }
    let log_e: Vec<f64> = usable.iter().map(|p| (p.energy - e0).ln()).collect();
    let log_n: Vec<f64> = usable.iter().map(|p| p.estimate.ln()).collect();
    let fit = estimator.estimate(&log_e, &log_n);

    let half_d = dimension as f64 / 2.0;
    let c_front = usable
        .iter()
        .map(|p| {
            let e = p.energy - e0;
            let volume = ((2 * p.half_length) as f64).powi(dimension as i32);
            free_counting(dimension, p.half_length, e) as f64 / (volume * e.powf(half_d))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let c_exp = usable
        .iter()
        .map(|p| {
            let e = (p.energy - e0).powf(half_d);
            e * (c_front * e / p.estimate).ln()
        })
        .fold(f64::INFINITY, f64::min);

    Ok(TailFit {
        window,
        e0,
        estimator: estimator.name(),
        slope: fit.slope,
        residual_norm: fit.residual_norm,
        c_front,
        c_exp,
        point_count: usable.len(),
        label: "empirical, window-dependent",
    })
}

/// IDS with the box size chosen per energy by [`choose_l`] (at least 1).
pub fn scheduled_ids(spec: &EnsembleSpec, energies: &[f64], mean_s: f64) -> Result<IdsCurve, MonteCarloError> {
    let mut points = Vec::with_capacity(energies.len());
    for &e in energies {
        let l = choose_l(e, mean_s)?.simulated();
        let grid = crate::discretize::GridSpec::new(spec.grid.dimension(), l, spec.grid.points_per_unit())?;
        let curve = estimate_ids(&spec.with_grid(grid), &[e])?;
        points.extend(curve.points);
    }
    Ok(IdsCurve {
        points,
        samples: spec.samples,
        dimension: spec.grid.dimension(),
        points_per_unit: spec.grid.points_per_unit(),
        seed: spec.seed,
    })
}

/// `count` energies log-spaced over `[low, high]`.
pub fn log_spaced(low: f64, high: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![low],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    high
                } else {
                    low * (high / low).powf(i as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}
