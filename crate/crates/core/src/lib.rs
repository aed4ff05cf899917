//! Forecast comparison tests that remain valid when loss differentials are
//! heavy-tailed.
//!
//! The core objects are the self-normalized statistic
//! `T_n = sum(x) / sqrt(sum(x^2))` and its subsampling distribution over
//! all overlapping windows of length `b`, which yield tests of equal
//! predictive ability, superior predictive ability, and confidence
//! intervals without estimating a long-run variance or a tail index.
//! Alongside sit the classical Diebold-Mariano test, heavy-tailed
//! simulators, VaR forecasters, limit-theory closed forms, and a
//! deterministic Monte Carlo harness.

pub mod dgp;
pub mod dist;
pub mod error;
pub mod exec;
pub mod harness;
pub mod limit;
pub mod losses;
pub mod optim;
pub mod prefix;
pub mod rng;
pub mod series;
pub mod special;
pub mod stats;
pub mod subsampling;

pub use error::{Error, Result};
pub use exec::Execution;
pub use rng::RngStream;
pub use series::TimeSeries;
