use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::output::{float, ids_table, json_document, parse_ids_csv, write_file, CsvTable, RunHeader};
use super::{CliError, ExperimentConfig};
use crate::analysis::{
    bernstein_fit, choose_l, fit_tail_with, mean_s, proof_c_exp, scheduled_ids, BoxSchedule, ConcentrationFit,
    TailEstimatorRegistry, TailFit,
};
use crate::discretize::{free_gap, GridSpec};
use crate::eigensolve::{SolveOptions, SolverRegistry};
use crate::montecarlo::{concentration_probability, estimate_ids, EnsembleSpec, IdsCurve};
use crate::potential::BaseSet;
use crate::thirring::{ground_state_lower_bound_with, l0, ThirringError, ThirringReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Ids,
    ThirringVerify,
    Concentration,
    Tailfit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Ids => "ids",
            Command::ThirringVerify => "thirring-verify",
            Command::Concentration => "concentration",
            Command::Tailfit => "tailfit",
        }
    }
}

/// A validated configuration plus where to read inputs and write outputs.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    /// Directory relative paths in the config are resolved against.
    pub config_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl RunContext {
    /// Reads `path`, applies the overrides and validates.
    pub fn from_file(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, CliError> {
        let mut config = ExperimentConfig::load(path)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.validate()?;
        let config_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out_dir = out
            .or_else(|| config.output.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { config, config_dir, out_dir })
    }

    fn header(&self, command: Command, base: Option<&BaseSet>) -> RunHeader {
        let mask = base.map(|b| b.mask().iter().map(|&x| if x { '1' } else { '0' }).collect());
        RunHeader::new(command.name(), &self.config, mask)
    }

    fn grid(&self, half_length: usize) -> Result<GridSpec, CliError> {
        Ok(GridSpec::new(self.config.dimension, half_length, self.config.points_per_unit()?)?)
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions { tol: self.config.tolerance, maxiter: self.config.maxiter, ..SolveOptions::default() }
    }

    fn ensemble(&self, base: BaseSet, grid: GridSpec) -> Result<EnsembleSpec, CliError> {
        let c = &self.config;
        let mut spec = EnsembleSpec::new(base, c.distribution()?, grid, c.samples, c.seed);
        spec.solve = self.solve_options();
        spec.solver = SolverRegistry::builtin().get(&c.solver)?;
        spec.verify_chain = c.verify_chain;
        Ok(spec)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        write_file(&self.out_dir, name, contents)
    }
}

/// Runs one subcommand and returns the files it wrote.
///
/// The config echo is written first, so it exists even when the run fails.
pub fn run_command(command: Command, ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let echo = serde_json::to_string_pretty(&ctx.config.resolved()).expect("config serializes") + "\n";
    let mut written = vec![ctx.write(&format!("{}.config.json", command.name()), &echo)?];
    written.extend(match command {
        Command::Spectrum => run_spectrum(ctx)?,
        Command::Ids => run_ids(ctx)?,
        Command::ThirringVerify => run_thirring(ctx)?,
        Command::Concentration => run_concentration(ctx)?,
        Command::Tailfit => run_tailfit(ctx)?,
    });
    Ok(written)
}

fn box_too_small(grid: &GridSpec) -> Option<CliError> {
    let gamma = free_gap(grid).gamma();
    (gamma > 1.0).then(|| ThirringError::BoxTooSmall { gamma, half_length: grid.half_length(), l0: l0() }.into())
}

/// Per-sample lower-bound reports, in sample order.
fn thirring_reports(ctx: &RunContext, spec: &EnsembleSpec) -> Result<Vec<ThirringReport>, CliError> {
    let results: Vec<Result<ThirringReport, CliError>> = (0..spec.samples)
        .into_par_iter()
        .map(|m| {
            let scales = spec.scales(m)?;
            ground_state_lower_bound_with(&scales, &spec.base, &spec.grid, spec.solver.as_ref(), &ctx.solve_options())
                .map_err(|e| match CliError::from(e) {
                    CliError::Solver(msg) => CliError::Solver(format!("sample {m}: {msg}")),
                    other => other,
                })
        })
        .collect();
    results.into_iter().collect()
}

fn thirring_table(header: &RunHeader, reports: &[ThirringReport]) -> String {
    let mut t = CsvTable::new(header, &["sample", "gamma", "S_grid", "inner", "bound", "E1", "slack"]);
    for (m, r) in reports.iter().enumerate() {
        t.row(&[
            m.to_string(),
            float(r.gamma),
            float(r.s),
            float(r.inner),
            float(r.bound),
            float(r.e1_perturbed),
            float(r.slack),
        ]);
    }
    t.into_string()
}

fn check_reports(reports: &[ThirringReport]) -> Result<(), CliError> {
    let failed: Vec<usize> = reports.iter().enumerate().filter(|(_, r)| !r.verified).map(|(m, _)| m).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("lower-bound chain violated on samples {failed:?}")))
    }
}

fn run_spectrum(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let c = &ctx.config;
    let base = c.load_baseset(&ctx.config_dir)?;
    let grid = ctx.grid(c.half_length()?)?;
    if c.verify_thirring {
        if let Some(err) = box_too_small(&grid) {
            return Err(err);
        }
    }
    let header = ctx.header(Command::Spectrum, Some(&base));
    let spec = ctx.ensemble(base, grid)?;
    let k = c.num_eigenvalues.min(grid.total_points());
    let results: Vec<Result<_, CliError>> = (0..spec.samples)
        .into_par_iter()
        .map(|m| {
            let (_, op) = spec.operator(m)?;
            spec.solver
                .smallest(&op, k, &spec.solve)
                .map_err(|e| match CliError::from(e) {
                    CliError::Solver(msg) => CliError::Solver(format!("sample {m}: {msg}")),
                    other => other,
                })
        })
        .collect();
    let mut table = CsvTable::new(&header, &["sample", "index", "eigenvalue", "residual"]);
    for (m, result) in results.into_iter().enumerate() {
        let r = result?;
        for (i, (value, residual)) in r.eigenvalues.iter().zip(&r.residuals).enumerate() {
            table.row(&[m.to_string(), i.to_string(), float(*value), float(*residual)]);
        }
    }
    let mut written = vec![ctx.write("spectrum.csv", &table.into_string())?];
    if c.verify_thirring {
        let reports = thirring_reports(ctx, &spec)?;
        written.push(ctx.write("spectrum_thirring.csv", &thirring_table(&header, &reports))?);
        check_reports(&reports)?;
    }
    Ok(written)
}

fn run_ids(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let c = &ctx.config;
    let base = c.load_baseset(&ctx.config_dir)?;
    let grid = ctx.grid(c.half_length()?)?;
    let energies = c.energy_list()?;
    let header = ctx.header(Command::Ids, Some(&base));
    let curve = estimate_ids(&ctx.ensemble(base, grid)?, &energies)?;
    Ok(vec![ctx.write("ids.csv", &ids_table(&header, &curve))?])
}

fn run_thirring(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let c = &ctx.config;
    let base = c.load_baseset(&ctx.config_dir)?;
    let grid = ctx.grid(c.half_length()?)?;
    if let Some(err) = box_too_small(&grid) {
        return Err(err);
    }
    let header = ctx.header(Command::ThirringVerify, Some(&base));
    let reports = thirring_reports(ctx, &ctx.ensemble(base, grid)?)?;
    let written = vec![ctx.write("thirring.csv", &thirring_table(&header, &reports))?];
    check_reports(&reports)?;
    Ok(written)
}

#[derive(Debug, Serialize)]
struct ConcentrationSummary {
    mean_s: f64,
    threshold: f64,
    fit: Option<ConcentrationFit>,
    fit_error: Option<String>,
}

fn concentration(
    ctx: &RunContext,
    base: &BaseSet,
    header: &RunHeader,
) -> Result<(String, ConcentrationSummary), CliError> {
    let c = &ctx.config;
    let dist = c.distribution()?;
    let rows = concentration_probability(base, &dist, c.dimension, &c.half_lengths()?, c.samples, c.seed)?;
    let mut t = CsvTable::new(
        header,
        &["L", "two_L_pow_d", "successes", "trials", "estimate", "ci_low", "ci_high"],
    );
    for r in &rows {
        let p = &r.probability;
        t.row(&[
            r.half_length.to_string(),
            r.sites.to_string(),
            p.successes.to_string(),
            p.trials.to_string(),
            float(p.estimate),
            float(p.ci_low),
            float(p.ci_high),
        ]);
    }
    let table: Vec<(usize, f64)> = rows.iter().map(|r| (r.half_length, r.probability.estimate)).collect();
    let expected = mean_s(&dist, base, c.dimension).value;
    let (fit, fit_error) = match bernstein_fit(&table, c.dimension) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok((t.into_string(), ConcentrationSummary { mean_s: expected, threshold: expected / 2.0, fit, fit_error }))
}

fn run_concentration(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let base = ctx.config.load_baseset(&ctx.config_dir)?;
    let header = ctx.header(Command::Concentration, Some(&base));
    let (csv, summary) = concentration(ctx, &base, &header)?;
    Ok(vec![
        ctx.write("concentration.csv", &csv)?,
        ctx.write("concentration_fit.json", &json_document(&header, &summary))?,
    ])
}

#[derive(Debug, Serialize)]
struct ScheduleRow {
    energy: f64,
    #[serde(flatten)]
    schedule: BoxSchedule,
    simulated_half_length: usize,
}

#[derive(Debug, Serialize)]
struct TailfitResult {
    fit: TailFit,
    mean_s: Option<f64>,
    schedule: Vec<ScheduleRow>,
    concentration: Option<ConcentrationSummary>,
    /// `C_ld (C_gap E[S_1] / 8)^{d/2}` from the fitted concentration rate.
    proof_c_exp: Option<f64>,
}

fn run_tailfit(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let c = &ctx.config;
    let estimator = TailEstimatorRegistry::builtin().get(&c.tail_estimator)?;
    let mut written = Vec::new();
    let (curve, base, schedule, expected): (IdsCurve, Option<BaseSet>, Vec<ScheduleRow>, Option<f64>) =
        if let Some(rel) = &c.ids_csv {
            let path = ctx.config_dir.join(rel);
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let curve = parse_ids_csv(&text, c.dimension, c.half_length()?)
                .map_err(|e| CliError::Config(format!("field `ids_csv`: {}: {e}", path.display())))?;
            (curve, None, Vec::new(), None)
        } else {
            let base = c.load_baseset(&ctx.config_dir)?;
            let dist = c.distribution()?;
            let expected = mean_s(&dist, &base, c.dimension);
            if expected.degenerate {
                return Err(CliError::Precondition("degenerate distribution: E[S_1] = 0".into()));
            }
            let energies = c.energy_list()?;
            let schedule = energies
                .iter()
                .map(|&e| {
                    let s = choose_l(e, expected.value)?;
                    Ok(ScheduleRow { energy: e, schedule: s, simulated_half_length: s.simulated() })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let spec = ctx.ensemble(base.clone(), ctx.grid(1)?)?;
            let curve = scheduled_ids(&spec, &energies, expected.value)?;
            let header = ctx.header(Command::Tailfit, Some(&base));
            written.push(ctx.write("tailfit_ids.csv", &ids_table(&header, &curve))?);
            (curve, Some(base), schedule, Some(expected.value))
        };

    let window = c.window.unwrap_or_else(|| {
        let high = curve.points.iter().map(|p| p.energy).fold(f64::NEG_INFINITY, f64::max);
        (c.e0, high)
    });
    let fit = fit_tail_with(&curve, c.e0, c.dimension, window, estimator.as_ref())?;
    let header = ctx.header(Command::Tailfit, base.as_ref());
    let concentration = match (&base, &c.l_list) {
        (Some(base), Some(_)) => {
            let (csv, summary) = concentration(ctx, base, &header)?;
            written.push(ctx.write("tailfit_concentration.csv", &csv)?);
            Some(summary)
        }
        _ => None,
    };
    let proof_c_exp = match (&concentration, expected) {
        (Some(ConcentrationSummary { fit: Some(f), .. }), Some(m)) => Some(proof_c_exp(f.c_ld, m, c.dimension)),
        _ => None,
    };
    let result = TailfitResult { fit, mean_s: expected, schedule, concentration, proof_c_exp };
    written.push(ctx.write("tailfit.json", &json_document(&header, &result))?);
    Ok(written)
}
