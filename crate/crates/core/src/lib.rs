//! Barabasi-Albert networks under an attachment scheme that realizes the
//! `m Pi` rule exactly, the exact finite-time degree law of the resulting
//! Markov chain, and its convergence to `P(k) = 2m(m+1) / (k(k+1)(k+2))`.
//!
//! * [`graph_model`]: growing graphs, attachment schemes, exact enumeration
//!   of one-step receive probabilities.
//! * [`exact_chain`]: per-vertex laws `P(k, i, t)`, first-passage
//!   decomposition, network mixture `P(k, t)`.
//! * [`analytic`]: steady state, limit recursion, convergence diagnostics,
//!   log-log tail fits.
//! * [`ensemble`]: parallel replicate runs and goodness-of-fit reports.
//! * [`cli`] and [`export`]: the `scalefree` command and its file formats.

pub mod analytic;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod exact_chain;
pub mod export;
pub mod graph_model;
pub mod rng;

pub use error::{Error, Result};
