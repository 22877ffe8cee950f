//! Lanczos with full reorthogonalization and deflation.
//!
//! Eigenpairs are found one at a time: each run builds a Krylov space in
//! the orthogonal complement of the pairs already locked and stops when the
//! lowest Ritz pair meets the residual tolerance. Deflation makes repeated
//! eigenvalues (e.g. the free operator in d >= 2) come out with their full
//! multiplicity.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{residual_norm, Eigensolver, Method, SolveError, SolveOptions, SpectralResult, SymmetricOperator};
use crate::discretize::DiscreteOperator;
use crate::potential::rng::keyed_uniforms;

#[derive(Debug, Clone, Copy, Default)]
pub struct LanczosSolver;

impl Eigensolver for LanczosSolver {
    fn name(&self) -> &'static str {
        "lanczos"
    }

    fn smallest(&self, op: &DiscreteOperator, k: usize, opts: &SolveOptions) -> Result<SpectralResult, SolveError> {
        lanczos_smallest(op, k, opts)
    }
}

struct Pair {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

pub fn lanczos_smallest<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &SolveOptions,
) -> Result<SpectralResult, SolveError> {
    let n = op.size();
    if k == 0 || k > n {
        return Err(SolveError::InvalidRequest(format!("k = {k} for operator of size {n}")));
    }
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidRequest(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if opts.maxiter == 0 {
        return Err(SolveError::InvalidRequest("maxiter must be positive".into()));
    }

    let mut pairs: Vec<Pair> = Vec::with_capacity(k);
    let mut iterations = 0;
    for target in 0..k {
        let locked: Vec<&[f64]> = pairs.iter().map(|p| p.vector.as_slice()).collect();
        match lowest_in_complement(op, &locked, opts, target as u64) {
            Ok((pair, iters)) => {
                iterations += iters;
                pairs.push(pair);
            }
            Err((best, iters)) => {
                let mut residuals: Vec<f64> = pairs.iter().map(|p| p.residual).collect();
                residuals.push(best);
                return Err(SolveError::NotConverged { iterations: iterations + iters, residuals });
            }
        }
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));

    Ok(SpectralResult {
        requested: k,
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
        residuals: pairs.iter().map(|p| p.residual).collect(),
        eigenvectors: pairs.into_iter().map(|p| p.vector).collect(),
        method: Method::Iterative,
        iterations,
        start_seed: Some(opts.seed),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of classical Gram-Schmidt against `locked` and `basis`.
fn orthogonalize(w: &mut [f64], locked: &[&[f64]], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in locked.iter().copied().chain(basis.iter().map(Vec::as_slice)) {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

fn random_unit(
    n: usize,
    seed: u64,
    tag: u64,
    locked: &[&[f64]],
    basis: &[Vec<f64>],
) -> Option<Vec<f64>> {
    let mut v: Vec<f64> = keyed_uniforms(seed, tag, n).map(|u| u - 0.5).collect();
    let before = norm(&v);
    orthogonalize(&mut v, locked, basis);
    let after = norm(&v);
    if after <= 1e-10 * before {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= after);
    Some(v)
}

/// Lowest eigenpair of the tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta`.
fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (theta, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Returns the pair and the iteration count, or the best residual seen.
fn lowest_in_complement<O: SymmetricOperator + ?Sized>(
    op: &O,
    locked: &[&[f64]],
    opts: &SolveOptions,
    target: u64,
) -> Result<(Pair, usize), (f64, usize)> {
    let n = op.size();
    let cap = opts.maxiter.min(n - locked.len());
    let mut tag = target << 32;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    let mut norm_estimate = 0.0f64;
    let mut next_check = cap.min(8);

    let Some(mut v) = random_unit(n, opts.seed, tag, locked, &basis) else {
        return Err((best, 0));
    };
    let mut w = vec![0.0; n];
    loop {
        op.apply(&v, &mut w);
        let a = dot(&v, &w);
        axpy(-a, &v, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(v);
        alpha.push(a);
        orthogonalize(&mut w, locked, &basis);
        let b = norm(&w);
        norm_estimate = norm_estimate.max(a.abs() + b + beta.last().copied().unwrap_or(0.0));

        let m = basis.len();
        let exhausted = m >= cap;
        let breakdown = b <= 1e-12 * norm_estimate.max(f64::MIN_POSITIVE);
        if m >= next_check || exhausted || breakdown {
            let (_, s) = lowest_ritz(&alpha, &beta);
            let estimate = b * s[m - 1].abs();
            if estimate <= opts.tol || exhausted || breakdown {
                let mut x = vec![0.0; n];
                for (coef, q) in s.iter().zip(&basis) {
                    axpy(*coef, q, &mut x);
                }
                orthogonalize(&mut x, locked, &[]);
                let nx = norm(&x);
                x.iter_mut().for_each(|xi| *xi /= nx);
                let mut hx = vec![0.0; n];
                op.apply(&x, &mut hx);
                let value = dot(&x, &hx);
                let residual = residual_norm(op, value, &x);
                best = best.min(residual);
                if residual <= opts.tol {
                    return Ok((Pair { value, vector: x, residual }, m));
                }
            }
            next_check = (m + (m / 4).max(8)).min(cap);
        }
        if exhausted {
            return Err((best, m));
        }
        if breakdown {
            // invariant subspace: continue with a fresh direction, decoupled
            tag += 1;
            match random_unit(n, opts.seed, tag, locked, &basis) {
                Some(fresh) => {
                    beta.push(0.0);
                    v = fresh;
                }
                None => return Err((best, m)),
            }
        } else {
            beta.push(b);
            v = w.iter().map(|x| x / b).collect();
        }
    }
}
