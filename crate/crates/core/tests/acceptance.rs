//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs with `harness = false`; the process exits nonzero when any
//! criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;

use breather::analysis::{
    bernstein_fit, fit_tail, fit_tail_with, log_spaced, mean_s, scheduled_ids, ProfileExponent,
};
use breather::discretize::{free_spectrum, neumann_laplacian, GridSpec};
use breather::eigensolve::{
    dense_spectrum, symmetric_eigen_sorted, DenseSolver, Eigensolver, LanczosSolver, SolveOptions,
};
use breather::montecarlo::{concentration_probability, weyl_table, EnsembleSpec, IdsCurve, IdsPoint};
use breather::potential::{site_uniform, BaseSet, ScaleDistribution};
use breather::thirring::{check_thirring, ground_state_lower_bound_with, DiagonalPotential};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn half_mask() -> BaseSet {
    BaseSet::from_bits(1, 4, "0110").unwrap()
}

fn square_mask() -> BaseSet {
    BaseSet::from_bits(2, 4, "0000011001100000").unwrap()
}

fn c1_free_spectrum() -> Outcome {
    let mut worst = [0.0f64; 2];
    let mut cases = 0;
    let grids: Vec<(usize, usize, usize)> = [(1, 1), (1, 2), (2, 4), (4, 2), (4, 8), (8, 4), (1, 32), (16, 2)]
        .iter()
        .map(|&(l, n)| (1, l, n))
        .chain([(1, 2), (2, 2), (2, 4), (4, 4), (4, 8)].iter().map(|&(l, n)| (2, l, n)))
        .collect();
    for (d, l, n) in grids {
        let grid = GridSpec::new(d, l, n).unwrap();
        let computed = dense_spectrum(&neumann_laplacian(&grid)).unwrap();
        let exact = free_spectrum(&grid);
        let scale = exact.last().copied().unwrap();
        // relative per eigenvalue; the zero mode is measured against the spectral radius
        let err = computed
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs() / if *b == 0.0 { scale } else { b.abs() })
            .fold(0.0, f64::max);
        worst[d - 1] = worst[d - 1].max(err);
        cases += 1;
    }
    outcome(
        worst[0] <= 1e-10 && worst[1] <= 1e-9,
        format!("{cases} grids; max relative error d=1 {:.2e} (tol 1e-10), d=2 {:.2e} (tol 1e-9)", worst[0], worst[1]),
    )
}

fn c2_oracle_agreement() -> Outcome {
    let dist = ScaleDistribution::uniform01();
    let opts = SolveOptions { tol: 1e-10, ..SolveOptions::default() };
    let mut worst = 0.0f64;
    let mut largest = 0;
    let mut failures = Vec::new();
    for i in 0..50u64 {
        let (base, grid) = if i % 2 == 0 {
            let l = 2 + (i as usize / 2) % 6;
            let n = [4, 8, 16][(i as usize / 2) % 3];
            (half_mask(), GridSpec::new(1, l, n).unwrap())
        } else {
            let j = i as usize / 2;
            let (l, n) = match j {
                24 => (4, 8),
                7 | 15 => (3, 8),
                _ => [(2, 4), (3, 4), (4, 4), (2, 8), (3, 6), (2, 6)][j % 6],
            };
            (square_mask(), GridSpec::new(2, l, n).unwrap())
        };
        let spec = EnsembleSpec::new(base, dist.clone(), grid, 1, 1000 + i);
        let (_, op) = spec.operator(0).unwrap();
        largest = largest.max(op.size());
        let dense = dense_spectrum(&op).unwrap();
        match LanczosSolver.smallest(&op, 3, &opts) {
            Ok(iter) => {
                let err = dense[..3].iter().zip(&iter.eigenvalues).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(err);
                if err > 1e-8 {
                    failures.push(i);
                }
            }
            Err(e) => {
                failures.push(i);
                eprintln!("instance {i}: {e}");
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("50 instances up to N = {largest}; max |dense - lanczos| {worst:.2e} (tol 1e-8); failing {failures:?}"),
    )
}

fn c3_thirring_random() -> Outcome {
    let seed = 31;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    let mut tested = 0;
    let mut attempt = 0u64;
    while tested < 1000 {
        attempt += 1;
        let size = 2 + (site_uniform(seed, attempt, &[-1]) * 23.0) as usize;
        let mut h = DMatrix::zeros(size, size);
        for r in 0..size {
            for c in 0..=r {
                let x = 2.0 * site_uniform(seed, attempt, &[r as i64, c as i64]) - 1.0;
                h[(r, c)] = x;
                h[(c, r)] = x;
            }
        }
        let (values, _) = symmetric_eigen_sorted(h.clone());
        if values[1] - values[0] < 1e-6 {
            continue;
        }
        let v: Vec<f64> = (0..size).map(|i| 0.05 + 2.0 * site_uniform(seed ^ 0xff, attempt, &[i as i64])).collect();
        let check = check_thirring(&h, &DiagonalPotential::new(v).unwrap()).unwrap();
        min_slack = min_slack.min(check.slack());
        if check.slack() < -1e-10 {
            violations += 1;
        }
        tested += 1;
    }
    outcome(violations == 0, format!("1000 instances; violations {violations}; min slack {min_slack:.3e} (tol -1e-10)"))
}

fn c4_closed_form() -> Outcome {
    let dist = ScaleDistribution::uniform01();
    let opts = SolveOptions::default();
    let mut worst = 0.0f64;
    for i in 0..500u64 {
        let (base, grid) = match i % 4 {
            0 => (half_mask(), GridSpec::new(1, 2, 4).unwrap()),
            1 => (half_mask(), GridSpec::new(1, 4, 8).unwrap()),
            2 => (half_mask(), GridSpec::new(1, 3, 16).unwrap()),
            _ => (square_mask(), GridSpec::new(2, 2, 4).unwrap()),
        };
        let spec = EnsembleSpec::new(base, dist.clone(), grid, 1, 5000 + i);
        let r = ground_state_lower_bound_with(&spec.scales(0).unwrap(), &spec.base, &grid, &DenseSolver::default(), &opts)
            .unwrap();
        worst = worst.max((r.inner - r.inner_direct).abs() / r.inner);
    }
    outcome(worst <= 1e-12, format!("500 instances; max relative difference {worst:.2e} (tol 1e-12)"))
}

fn c5_proof_chain() -> Outcome {
    let grid = GridSpec::new(1, 4, 8).unwrap();
    let mut spec = EnsembleSpec::new(half_mask(), ScaleDistribution::uniform01(), grid, 500, 1);
    spec.verify_chain = false;
    let opts = SolveOptions::default();
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for m in 0..spec.samples {
        let r = ground_state_lower_bound_with(&spec.scales(m).unwrap(), &spec.base, &grid, &DenseSolver::default(), &opts)
            .unwrap();
        let margin = r.e1_perturbed - r.chain_lower();
        min_margin = min_margin.min(margin);
        if margin < -1e-9 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("500 samples; violations {violations}; min E1 - gamma S / 2 = {min_margin:.4e}"))
}

fn c6_weyl() -> Outcome {
    let grid = GridSpec::new(1, 4, 4).unwrap();
    let spec = EnsembleSpec::new(half_mask(), ScaleDistribution::uniform01(), grid, 500, 1);
    // away from the narrow windows between discrete and continuum free levels
    let energies = [0.02, 0.05, 0.1, 0.15, 0.3, 0.5, 0.6, 1.0, 1.3, 2.0, 3.0];
    let rows = weyl_table(&spec, &energies).unwrap();
    let failing: Vec<f64> = rows.iter().filter(|r| !r.holds()).map(|r| r.energy).collect();
    let tightest = rows
        .iter()
        .map(|r| r.bound + 2.0 * r.combined_stderr - r.ids)
        .fold(f64::INFINITY, f64::min);
    outcome(
        failing.is_empty(),
        format!("{} energies; failing {failing:?}; min margin {tightest:.4e}", energies.len()),
    )
}

fn c7_concentration() -> Outcome {
    let rows =
        concentration_probability(&half_mask(), &ScaleDistribution::uniform01(), 1, &[2, 4, 8], 2000, 1).unwrap();
    let p: Vec<f64> = rows.iter().map(|r| r.probability.estimate).collect();
    let decreasing = p.windows(2).all(|w| w[1] < w[0]);
    let table: Vec<(usize, f64)> = rows.iter().map(|r| (r.half_length, r.probability.estimate)).collect();
    let fit = bernstein_fit(&table, 1);
    let fit_text = match &fit {
        Ok(f) => format!("C_ld {:.4}", f.c_ld),
        Err(e) => format!("bernstein_fit error: {e}"),
    };
    let positive = fit.as_ref().map(|f| f.c_ld > 0.0).unwrap_or(false);
    let successes: Vec<u64> = rows.iter().map(|r| r.probability.successes).collect();
    outcome(
        decreasing && positive,
        format!("p = {p:?} (successes {successes:?}); strictly decreasing {decreasing}; {fit_text}"),
    )
}

fn synthetic(f: impl Fn(f64) -> f64) -> IdsCurve {
    IdsCurve {
        points: log_spaced(0.001, 0.1, 41)
            .into_iter()
            .map(|e| IdsPoint { energy: e, estimate: f(e), stderr: 0.0, half_length: 1 })
            .collect(),
        samples: 1,
        dimension: 1,
        points_per_unit: 0,
        seed: 0,
    }
}

fn c8a_tail_exact() -> Outcome {
    let fit = fit_tail(&synthetic(|e| (-e.powf(-0.5)).exp()), 0.0, 1, (0.001, 0.1)).unwrap();
    outcome((fit.slope + 0.5).abs() <= 1e-6, format!("slope {} on {} points (tol 1e-6)", fit.slope, fit.point_count))
}

fn c8b_tail_prefactor() -> Outcome {
    let curve = synthetic(|e| e.sqrt() * (-e.powf(-0.5)).exp());
    let fit = fit_tail(&curve, 0.0, 1, (0.001, 0.1)).unwrap();
    let profile = fit_tail_with(&curve, 0.0, 1, (0.001, 0.1), &ProfileExponent::default()).unwrap();
    outcome(
        (fit.slope + 0.5).abs() <= 1e-2,
        format!(
            "slope {:.6} (tol 1e-2) on {} points; profile estimator gives {:.6}",
            fit.slope, fit.point_count, profile.slope
        ),
    )
}

fn c9_lifshitz() -> Outcome {
    let base = half_mask();
    let dist = ScaleDistribution::uniform01();
    let expected = mean_s(&dist, &base, 1).value;
    let spec = EnsembleSpec::new(base, dist, GridSpec::new(1, 1, 8).unwrap(), 2000, 1);
    let energies = log_spaced(0.02, 0.2, 10);
    let curve = scheduled_ids(&spec, &energies, expected).unwrap();
    let fit = fit_tail(&curve, 0.0, 1, (0.0, 0.2)).unwrap();
    let boxes: Vec<usize> = curve.points.iter().map(|p| p.half_length).collect();
    outcome(
        (-0.8..=-0.2).contains(&fit.slope),
        format!("slope {:.4} in [-0.8, -0.2]; {} points; simulated L {boxes:?}", fit.slope, fit.point_count),
    )
}

fn testdata(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata").join(name)
}

fn run_cli(command: &str, config: &Path, threads: usize, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_breather"))
        .args([command, "--config"])
        .arg(config)
        .args(["--threads", &threads.to_string(), "--out"])
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let commands = [
        ("spectrum", "spectrum.json"),
        ("ids", "ids.json"),
        ("thirring-verify", "thirring.json"),
        ("concentration", "concentration.json"),
        ("tailfit", "tailfit.json"),
    ];
    let mut mismatched = Vec::new();
    let mut file_count = 0;
    for (command, config) in commands {
        let runs: Vec<PathBuf> = [(1, "a"), (8, "b"), (8, "c"), (1, "d")]
            .iter()
            .map(|(threads, tag)| {
                let out = tmp.path().join(format!("{command}-{tag}"));
                assert!(run_cli(command, &testdata(config), *threads, &out), "{command} failed");
                out
            })
            .collect();
        let reference = read_dir_sorted(&runs[0]);
        file_count += reference.len();
        if runs[1..].iter().any(|r| read_dir_sorted(r) != reference) {
            mismatched.push(command);
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("5 subcommands x threads {{1, 8}} x 2 runs; {file_count} files compared; mismatched {mismatched:?}"),
    )
}

/// Id, name and check of one criterion.
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("1", "free-spectrum exactness", c1_free_spectrum),
        ("2", "iterative vs dense oracle", c2_oracle_agreement),
        ("3", "Thirring inequality on random instances", c3_thirring_random),
        ("4", "closed-form inner product", c4_closed_form),
        ("5", "lower-bound chain E1 >= gamma S / 2", c5_proof_chain),
        ("6", "finite-volume Weyl inequality", c6_weyl),
        ("7", "concentration decay and C_ld > 0", c7_concentration),
        ("8a", "tail fit on exp(-E^-1/2)", c8a_tail_exact),
        ("8b", "tail fit on E^1/2 exp(-E^-1/2)", c8b_tail_prefactor),
        ("9", "empirical Lifshitz slope", c9_lifshitz),
        ("10", "byte-identical CLI output", c10_determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let result = run();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>3} {status}: {name}: {} [{:.1}s]", result.detail, start.elapsed().as_secs_f64());
        if !result.pass {
            failed.push(id);
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        println!("failing: {}", failed.join(", "));
        std::process::exit(1);
    }
}
