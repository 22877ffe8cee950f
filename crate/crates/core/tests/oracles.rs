//! Comparisons against independently derived reference values.

use breather::discretize::{free_counting, free_gap, GridSpec};
use breather::eigensolve::{dense_spectrum, Eigensolver, LanczosSolver, SolveOptions};
use breather::montecarlo::{concentration_probability, estimate_ids, ground_state_probability, EnsembleSpec};
use breather::potential::{s_statistic, BaseSet, SMode, ScaleDistribution};
use breather::analysis::mean_s;

fn half_mask() -> BaseSet {
    BaseSet::from_bits(1, 4, "0110").unwrap()
}

/// `P(U_1 + ... + U_n <= x)` for i.i.d. uniforms.
fn irwin_hall_cdf(n: u32, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut factorial = 1.0;
    for k in 1..=n {
        factorial *= k as f64;
    }
    for k in 0..=(x.floor() as u32).min(n) {
        if k > 0 {
            binom *= (n - k + 1) as f64 / k as f64;
        }
        sum += if k % 2 == 0 { 1.0 } else { -1.0 } * binom * (x - k as f64).powi(n as i32);
    }
    sum / factorial
}

#[test]
fn irwin_hall_reference_values() {
    assert!((irwin_hall_cdf(4, 1.0) - 1.0 / 24.0).abs() < 1e-15);
    assert!((irwin_hall_cdf(8, 2.0) - 248.0 / 40320.0).abs() < 1e-15);
    assert!((irwin_hall_cdf(16, 4.0) - 1.7273e-4).abs() < 1e-7);
}

#[test]
fn concentration_matches_irwin_hall() {
    // vol A = 1/2, d = 1: S_L <= E[S_1]/2 iff the 2L uniforms sum to at most L/2
    let trials = 40_000;
    let rows = concentration_probability(&half_mask(), &ScaleDistribution::uniform01(), 1, &[1, 2, 4], trials, 11)
        .unwrap();
    for row in rows {
        let l = row.half_length;
        let exact = irwin_hall_cdf(2 * l as u32, l as f64 / 2.0);
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        let p = row.probability.estimate;
        assert!((p - exact).abs() <= 4.0 * sigma, "L = {l}: {p} vs {exact}");
    }
}

#[test]
fn bernoulli_two_site_quadrature() {
    // lambda = B U with P(B = 1) = 1/2; E[S_1] = 1/8 and the event is lambda_1 + lambda_2 <= 1/4
    let dist = ScaleDistribution::bernoulli_uniform(0.5).unwrap();
    let base = half_mask();
    assert!((mean_s(&dist, &base, 1).value - 0.125).abs() < 1e-15);

    let nodes = 2000;
    let h = 1.0 / nodes as f64;
    let q: Vec<f64> = (0..nodes).map(|i| dist.quantile((i as f64 + 0.5) * h)).collect();
    let mut hits = 0u64;
    for a in &q {
        hits += q.iter().filter(|b| a + *b <= 0.25).count() as u64;
    }
    let quadrature = hits as f64 * h * h;
    // closed form: 1/4 + 2 (1/4)(1/4) + (1/4)(1/32)
    assert!((quadrature - 0.3828125).abs() < 1e-3, "{quadrature}");

    let rows = concentration_probability(&base, &dist, 1, &[1], 4_000_000, 2).unwrap();
    let p = rows[0].probability.estimate;
    assert!((p - quadrature).abs() < 1e-3, "{p} vs {quadrature}");
}

#[test]
fn concentration_decreases_with_box() {
    let rows =
        concentration_probability(&half_mask(), &ScaleDistribution::uniform01(), 1, &[2, 4, 8], 20_000, 5).unwrap();
    let p: Vec<f64> = rows.iter().map(|r| r.probability.estimate).collect();
    assert!(p[0] > p[1] && p[1] > p[2], "{p:?}");
}

#[test]
fn ground_state_event_inside_concentration_event() {
    // E1 >= gamma S_grid / 2, so E1 <= gamma E[S] / 4 forces S_grid <= E[S] / 2 sample by sample
    let grid = GridSpec::new(1, 4, 4).unwrap();
    let samples = 2000;
    let spec = EnsembleSpec::new(half_mask(), ScaleDistribution::uniform01(), grid, samples, 21);
    let expected = mean_s(&spec.distribution, &spec.base, 1).value;
    let gamma = free_gap(&grid).gamma();
    let energy = gamma * expected / 4.0;
    let ground = ground_state_probability(&spec, &[energy]).unwrap();
    let mut grid_hits = 0;
    for m in 0..samples {
        let scales = spec.scales(m).unwrap();
        let s_grid = s_statistic(&scales, &spec.base, SMode::Grid, Some(&grid)).unwrap();
        let (_, op) = spec.operator(m).unwrap();
        let e1 = dense_spectrum(&op).unwrap()[0];
        if e1 <= energy {
            assert!(s_grid <= expected / 2.0, "sample {m}");
        }
        if s_grid <= expected / 2.0 {
            grid_hits += 1;
        }
    }
    assert!(ground[0].successes <= grid_hits);
}

#[test]
fn ids_example_between_zero_and_free() {
    let grid = GridSpec::new(1, 2, 4).unwrap();
    let random = EnsembleSpec::new(half_mask(), ScaleDistribution::uniform01(), grid, 200, 1);
    let free = EnsembleSpec::new(half_mask(), ScaleDistribution::point_mass(0.0).unwrap(), grid, 1, 1);
    let n_random = estimate_ids(&random, &[0.05]).unwrap().points[0].estimate;
    let n_free = estimate_ids(&free, &[0.05]).unwrap().points[0].estimate;
    assert_eq!(n_free, free_counting(1, 2, 0.05) as f64 / 4.0);
    assert!(n_random > 0.0 && n_random < n_free, "{n_random} vs {n_free}");
}

#[test]
fn lanczos_matches_dense_on_2d_instance() {
    let grid = GridSpec::new(2, 4, 4).unwrap();
    let base = BaseSet::from_bits(2, 4, "0000011001100000").unwrap();
    let spec = EnsembleSpec::new(base, ScaleDistribution::uniform01(), grid, 1, 3);
    let (_, op) = spec.operator(0).unwrap();
    let dense = dense_spectrum(&op).unwrap();
    let iter = LanczosSolver.smallest(&op, 2, &SolveOptions::default()).unwrap();
    assert!(iter.eigenvalues[0] >= 0.0);
    for (a, b) in dense.iter().zip(&iter.eigenvalues) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn weyl_prefactor_bounded_in_box_size() {
    // away from E = 0, where the k = 0 mode alone makes the ratio blow up
    for d in 1..=2 {
        let ratio = |l: usize, e: f64| {
            free_counting(d, l, e) as f64 / ((2 * l) as f64).powi(d as i32) / e.powf(d as f64 / 2.0)
        };
        let energies: Vec<f64> = (0..=40).map(|i| 0.01 * 200f64.powf(i as f64 / 40.0)).collect();
        let sup = |ls: std::ops::RangeInclusive<usize>| {
            ls.flat_map(|l| energies.iter().map(move |&e| (l, e))).map(|(l, e)| ratio(l, e)).fold(0.0, f64::max)
        };
        let small = sup(1..=4);
        let large = sup(16..=32);
        assert!(large <= small, "d = {d}: {large} > {small}");
        assert!(small.is_finite());
    }
}
