//! Monte Carlo ensembles of generated graphs and their comparison with the
//! exact finite-time law and the steady state.
//!
//! Replicate `r` runs on random stream `r` of the configured seed (see
//! [`crate::rng`]). Replicates run in parallel, results are gathered in
//! replicate order, and the pooled statistics are built from integer counts,
//! so the output does not depend on the worker count.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytic::{steady_state_f64, tail_exponent};
use crate::error::{Error, Result};
use crate::exact_chain::{network_distribution, ChainParams, MixtureDistribution};
use crate::graph_model::{generate_stream, AttachmentScheme, RunConfig};

/// Minimum expected count for a chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Default chi-square acceptance quantile.
pub const DEFAULT_LEVEL: f64 = 0.999;

/// Pooled degree statistics over `R` replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub m0: usize,
    pub m: usize,
    pub t: usize,
    pub scheme: AttachmentScheme,
    pub seed: u64,
    pub replicates: usize,
    /// `counts[k]`: vertices of degree `k` across all replicates.
    pub counts: Vec<u64>,
    /// `se[k]`: between-replicate standard error of the degree-`k` frequency.
    pub se: Vec<f64>,
}

impl EnsembleStats {
    /// Vertices per replicate, `m0 + t`.
    pub fn vertices_per_replicate(&self) -> usize {
        self.m0 + self.t
    }

    pub fn total_vertices(&self) -> u64 {
        (self.replicates * self.vertices_per_replicate()) as u64
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    pub fn freq(&self, k: usize) -> f64 {
        self.count(k) as f64 / self.total_vertices() as f64
    }

    pub fn se(&self, k: usize) -> f64 {
        self.se.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.counts.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    /// `sum_k k counts(k)`.
    pub fn degree_sum(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| k as u64 * c)
            .sum()
    }
}

/// Runs the ensemble on the global rayon pool.
pub fn run_replicates(config: &RunConfig) -> Result<EnsembleStats> {
    let histograms: Vec<Vec<u64>> = (0..config.replicates() as u64)
        .into_par_iter()
        .map(|r| generate_stream(config, r).map(|g| g.degree_counts()))
        .collect::<Result<_>>()?;
    Ok(aggregate(config, &histograms))
}

/// Runs the ensemble on a dedicated pool of `threads` workers.
pub fn run_replicates_with_threads(config: &RunConfig, threads: usize) -> Result<EnsembleStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(|| run_replicates(config))
}

fn aggregate(config: &RunConfig, histograms: &[Vec<u64>]) -> EnsembleStats {
    let width = histograms.iter().map(Vec::len).max().unwrap_or(0);
    let mut counts = vec![0u64; width];
    for hist in histograms {
        for (k, &c) in hist.iter().enumerate() {
            counts[k] += c;
        }
    }
    let r = histograms.len();
    let per = (config.m0() + config.t()) as f64;
    let se = (0..width)
        .map(|k| {
            if r < 2 {
                return 0.0;
            }
            let freqs = histograms
                .iter()
                .map(|h| h.get(k).copied().unwrap_or(0) as f64 / per);
            let mean = counts[k] as f64 / (r as f64 * per);
            let var = freqs.map(|f| (f - mean) * (f - mean)).sum::<f64>() / (r - 1) as f64;
            (var / r as f64).sqrt()
        })
        .collect();
    EnsembleStats {
        m0: config.m0(),
        m: config.m(),
        t: config.t(),
        scheme: config.scheme(),
        seed: config.seed(),
        replicates: r,
        counts,
        se,
    }
}

/// One chi-square cell: degrees `k_lo..=k_hi` (`None` for an open tail).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub k_lo: usize,
    pub k_hi: Option<usize>,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub chi2: f64,
    pub dof: usize,
    /// Chi-square quantile at `level` for `dof` degrees of freedom.
    pub threshold: f64,
    pub level: f64,
    pub pass: bool,
    /// Tail exponent `gamma` (negated log-log slope) of the empirical law,
    /// when the fit range has positive counts.
    pub exponent: Option<f64>,
    /// `max_k |freq(k) - P(k, t)|` over the exact law's degree range.
    pub max_gap: f64,
    pub cells: Vec<Cell>,
}

/// The JSON shape of a report on disk.
#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub chi2: f64,
    pub dof: usize,
    pub threshold: f64,
    pub pass: bool,
    pub exponent: Option<f64>,
    pub max_gap: f64,
}

impl From<&FitReport> for ReportJson {
    fn from(r: &FitReport) -> Self {
        ReportJson {
            chi2: r.chi2,
            dof: r.dof,
            threshold: r.threshold,
            pass: r.pass,
            exponent: r.exponent,
            max_gap: r.max_gap,
        }
    }
}

/// Groups degree cells so each has expected count at least
/// [`MIN_EXPECTED`]: cells are taken one degree at a time until the first
/// degree whose expectation falls short, and everything from there on
/// (including the truncated tail) is merged into one bucket. A short final
/// bucket is folded into its predecessor.
pub fn chi_square_cells(stats: &EnsembleStats, exact: &MixtureDistribution) -> Vec<Cell> {
    let n = stats.total_vertices() as f64;
    let mut cells = Vec::new();
    let mut k = exact.k_min();
    while k <= exact.k_max() {
        let expected = n * exact.prob(k);
        if expected < MIN_EXPECTED {
            break;
        }
        cells.push(Cell {
            k_lo: k,
            k_hi: Some(k),
            observed: stats.count(k),
            expected,
        });
        k += 1;
    }
    let tail_expected = n * ((k..=exact.k_max()).map(|j| exact.prob(j)).sum::<f64>() + exact.tail_mass);
    let tail_observed: u64 = stats.counts.iter().skip(k).sum();
    let tail = Cell {
        k_lo: k,
        k_hi: None,
        observed: tail_observed,
        expected: tail_expected,
    };
    if tail.expected >= MIN_EXPECTED || cells.is_empty() {
        cells.push(tail);
    } else if let Some(last) = cells.last_mut() {
        last.k_hi = None;
        last.observed += tail.observed;
        last.expected += tail.expected;
    }
    cells
}

fn chi_square_threshold(dof: usize, level: f64) -> Result<f64> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::config("level", format!("level must lie in (0, 1), got {level}")));
    }
    let law = ChiSquared::new(dof as f64).map_err(|e| Error::domain(e.to_string()))?;
    Ok(law.inverse_cdf(level))
}

/// Pearson chi-square of the pooled counts against `P(k, t)`.
pub fn compare_to_exact(
    stats: &EnsembleStats,
    exact: &MixtureDistribution,
    level: f64,
    exponent_range: RangeInclusive<u64>,
) -> Result<FitReport> {
    if stats.m != exact.m || stats.m0 != exact.m0 || stats.t != exact.time {
        return Err(Error::domain(format!(
            "ensemble (m={}, m0={}, t={}) and exact law (m={}, m0={}, t={}) differ",
            stats.m, stats.m0, stats.t, exact.m, exact.m0, exact.time
        )));
    }
    let cells = chi_square_cells(stats, exact);
    if cells.len() < 2 {
        return Err(Error::domain(
            "fewer than two chi-square cells; the ensemble is too small",
        ));
    }
    let chi2 = cells
        .iter()
        .map(|c| {
            let diff = c.observed as f64 - c.expected;
            diff * diff / c.expected
        })
        .sum();
    let dof = cells.len() - 1;
    let threshold = chi_square_threshold(dof, level)?;
    let max_gap = exact
        .iter()
        .map(|(k, p)| (stats.freq(k) - p).abs())
        .fold(0.0, f64::max);
    let exponent = tail_exponent(|k| stats.freq(k as usize), exponent_range)
        .ok()
        .map(|s| -s);
    Ok(FitReport {
        chi2,
        dof,
        threshold,
        level,
        pass: chi2 <= threshold,
        exponent,
        max_gap,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The exact finite-t law is itself too far from the limit to judge.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    /// `(k, |freq(k) - P(k)| / P(k))` over the requested range.
    pub relative_gaps: Vec<(usize, f64)>,
    pub max_relative_gap: f64,
    /// `max_k |P(k, t) - P(k)|` over the range, from the exact solver.
    pub exact_gap: f64,
    pub exponent: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Relative gaps between the pooled frequencies and the steady state.
///
/// The comparison is inconclusive when, for some `k` in range, the exact
/// finite-time law still differs from the steady state by more than three
/// standard errors of the ensemble frequency (binomial error when `R = 1`).
pub fn compare_to_limit(
    stats: &EnsembleStats,
    k_range: RangeInclusive<usize>,
    exponent_range: RangeInclusive<u64>,
    tolerance: f64,
) -> Result<LimitReport> {
    if *k_range.start() < stats.m || k_range.is_empty() {
        return Err(Error::domain(format!(
            "limit comparison range {k_range:?} must be nonempty and start at k >= m={}",
            stats.m
        )));
    }
    if stats.t < 1 {
        return Err(Error::domain("limit comparison needs t >= 1"));
    }
    let params = ChainParams::new(stats.m, stats.m0)?;
    let k_max = params.default_k_max(stats.t).max(*k_range.end());
    let exact = network_distribution(stats.t, &params, k_max)?;
    let n = stats.total_vertices() as f64;
    let mut relative_gaps = Vec::new();
    let mut exact_gap: f64 = 0.0;
    let mut inconclusive = false;
    for k in k_range {
        let limit = steady_state_f64(k as u64, stats.m as u64);
        let freq = stats.freq(k);
        relative_gaps.push((k, (freq - limit).abs() / limit));
        let gap = (exact.prob(k) - limit).abs();
        exact_gap = exact_gap.max(gap);
        let resolution = if stats.replicates > 1 {
            3.0 * stats.se(k)
        } else {
            3.0 * (limit * (1.0 - limit) / n).sqrt()
        };
        if gap > resolution {
            inconclusive = true;
        }
    }
    let max_relative_gap = relative_gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    let exponent = tail_exponent(|k| stats.freq(k as usize), exponent_range)
        .ok()
        .map(|s| -s);
    let verdict = if inconclusive {
        Verdict::Inconclusive
    } else if max_relative_gap < tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(LimitReport {
        relative_gaps,
        max_relative_gap,
        exact_gap,
        exponent,
        tolerance,
        verdict,
    })
}
