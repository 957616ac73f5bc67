//! Tail asymptotics of conditioned Brownian sheets and multivariate
//! Kolmogorov–Smirnov statistics.
//!
//! The pinned sheet `W_F` has covariance `F(x ∧ y) - F(x) F(y)` for a df `F`
//! on `[0,1]^n`. This crate evaluates the asymptotic and exact laws of
//! `P(sup (W_F + F w) > u)`, computes the level-set constant by quadrature,
//! simulates the field and the finite-sample statistics, and estimates the
//! associated Pickands-type constant.

pub mod asymptotics;
pub mod copula;
pub mod error;
pub mod field_sim;
pub mod ks_sim;
pub mod levelset;
pub mod pickands;
mod quad;
pub mod rng;
pub mod tail_mc;

pub use error::{Error, Result};
