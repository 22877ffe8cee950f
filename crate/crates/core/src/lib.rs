//! Discretization, Monte Carlo and verification tools for random breather
//! Schrödinger operators `H = -Delta + sum_j 1_{lambda_j A}(x - j)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod analysis;
pub mod discretize;
pub mod eigensolve;
pub mod montecarlo;
pub mod potential;
pub mod stats;
pub mod thirring;
pub mod cli;
