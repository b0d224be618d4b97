//! Text and JSON emitters for every file the tool writes.
//!
//! CSV and edge-list files start with one `#` comment line carrying the full
//! parameter set and the tool version; JSON files carry the same data under
//! a `meta` object.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::analytic::{steady_state_f64, CesaroDiagnostic, SteadyState};
use crate::ensemble::{EnsembleStats, FitReport, ReportJson};
use crate::error::Result;
use crate::exact_chain::MixtureDistribution;
use crate::graph_model::GraphState;

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), "/", env!("CARGO_PKG_VERSION"));

/// Ordered `key=value` parameters plus the tool version.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    params: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_owned(), value.to_string()));
        self
    }

    /// `# k1=v1 k2=v2 ... tool=name/version`
    pub fn header_line(&self) -> String {
        let mut line = String::from("#");
        for (k, v) in &self.params {
            line.push_str(&format!(" {k}={v}"));
        }
        line.push_str(&format!(" tool={TOOL}"));
        line
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in &self.params {
            map.insert(k.clone(), Value::String(v.clone()));
        }
        map.insert("tool".into(), Value::String(TOOL.into()));
        Value::Object(map)
    }
}

/// Plain decimal in the everyday range, exponent form outside it. Both
/// round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `u v` per line, signed labels, insertion order.
pub fn write_edge_list<W: Write + ?Sized>(w: &mut W, meta: &Metadata, state: &GraphState) -> Result<()> {
    writeln!(w, "{}", meta.header_line())?;
    for (u, v) in state.labeled_edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn write_histogram_csv<W: Write + ?Sized>(
    w: &mut W,
    meta: &Metadata,
    hist: &BTreeMap<usize, usize>,
) -> Result<()> {
    writeln!(w, "{}", meta.header_line())?;
    writeln!(w, "k,count")?;
    for (k, c) in hist {
        writeln!(w, "{k},{c}")?;
    }
    Ok(())
}

pub fn graph_json(meta: &Metadata, state: &GraphState) -> Value {
    let edges: Vec<[i64; 2]> = state.labeled_edges().map(|(u, v)| [u.0, v.0]).collect();
    let hist = state.degree_histogram();
    json!({
        "meta": meta.to_json(),
        "edges": edges,
        "histogram": {
            "k": hist.keys().collect::<Vec<_>>(),
            "count": hist.values().collect::<Vec<_>>(),
        },
    })
}

/// Rows `(k, p_exact, p_analytic, abs_gap)` for `m <= k <= k_max`.
pub fn distribution_rows(dist: &MixtureDistribution) -> Vec<(usize, f64, f64, f64)> {
    dist.iter()
        .map(|(k, p)| {
            let a = steady_state_f64(k as u64, dist.m as u64);
            (k, p, a, (p - a).abs())
        })
        .collect()
}

pub fn write_distribution_csv<W: Write + ?Sized>(
    w: &mut W,
    meta: &Metadata,
    dist: &MixtureDistribution,
) -> Result<()> {
    writeln!(w, "{}", meta.header_line())?;
    writeln!(w, "k,p_exact,p_analytic,abs_gap")?;
    for (k, p, a, g) in distribution_rows(dist) {
        writeln!(w, "{k},{},{},{}", fmt_f64(p), fmt_f64(a), fmt_f64(g))?;
    }
    Ok(())
}

pub fn distribution_json(meta: &Metadata, dist: &MixtureDistribution) -> Value {
    let rows = distribution_rows(dist);
    json!({
        "meta": meta.to_json(),
        "k": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        "p_exact": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        "p_analytic": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
        "abs_gap": rows.iter().map(|r| r.3).collect::<Vec<_>>(),
        "tail_mass": dist.tail_mass,
    })
}

pub fn write_steady_csv<W: Write + ?Sized>(w: &mut W, meta: &Metadata, table: &SteadyState) -> Result<()> {
    writeln!(w, "{}", meta.header_line())?;
    writeln!(w, "k,p,ratio_to_prev")?;
    for (k, p, ratio) in table.rows() {
        let ratio = ratio.map(fmt_f64).unwrap_or_default();
        writeln!(w, "{k},{},{ratio}", fmt_f64(p))?;
    }
    Ok(())
}

pub fn steady_json(meta: &Metadata, table: &SteadyState) -> Value {
    let rows: Vec<_> = table.rows().collect();
    json!({
        "meta": meta.to_json(),
        "k": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        "p": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        "ratio_to_prev": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
    })
}

pub fn write_cesaro_csv<W: Write + ?Sized>(w: &mut W, meta: &Metadata, diag: &CesaroDiagnostic) -> Result<()> {
    writeln!(w, "{}", meta.header_line())?;
    writeln!(w, "n,ratio,gap")?;
    for &(n, r, g) in &diag.rows {
        writeln!(w, "{n},{},{}", fmt_f64(r), fmt_f64(g))?;
    }
    Ok(())
}

pub fn cesaro_json(meta: &Metadata, diag: &CesaroDiagnostic) -> Value {
    json!({
        "meta": meta.to_json(),
        "limit": diag.limit,
        "n": diag.rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        "ratio": diag.rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        "gap": diag.rows.iter().map(|r| r.2).collect::<Vec<_>>(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub k: usize,
    pub count: u64,
    pub freq: f64,
    pub se: f64,
    pub p_exact: f64,
    pub p_limit: f64,
}

/// One row per degree from `m` to the larger of the observed maximum and
/// the exact law's `k_max`.
pub fn stats_rows(stats: &EnsembleStats, exact: &MixtureDistribution) -> Vec<StatsRow> {
    let lo = stats.m.min(stats.m0 - 1);
    let hi = stats.max_degree().max(exact.k_max());
    (lo..=hi)
        .filter(|&k| k >= stats.m || stats.count(k) > 0)
        .map(|k| StatsRow {
            k,
            count: stats.count(k),
            freq: stats.freq(k),
            se: stats.se(k),
            p_exact: exact.prob(k),
            p_limit: steady_state_f64(k as u64, stats.m as u64),
        })
        .collect()
}

pub fn write_stats_csv<W: Write + ?Sized>(
    w: &mut W,
    meta: &Metadata,
    stats: &EnsembleStats,
    exact: &MixtureDistribution,
) -> Result<()> {
    writeln!(w, "{}", meta.header_line())?;
    writeln!(w, "k,count,freq,se,p_exact,p_limit")?;
    for r in stats_rows(stats, exact) {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.k,
            r.count,
            fmt_f64(r.freq),
            fmt_f64(r.se),
            fmt_f64(r.p_exact),
            fmt_f64(r.p_limit)
        )?;
    }
    Ok(())
}

pub fn stats_json(meta: &Metadata, stats: &EnsembleStats, exact: &MixtureDistribution) -> Value {
    let rows = stats_rows(stats, exact);
    json!({
        "meta": meta.to_json(),
        "k": rows.iter().map(|r| r.k).collect::<Vec<_>>(),
        "count": rows.iter().map(|r| r.count).collect::<Vec<_>>(),
        "freq": rows.iter().map(|r| r.freq).collect::<Vec<_>>(),
        "se": rows.iter().map(|r| r.se).collect::<Vec<_>>(),
        "p_exact": rows.iter().map(|r| r.p_exact).collect::<Vec<_>>(),
        "p_limit": rows.iter().map(|r| r.p_limit).collect::<Vec<_>>(),
    })
}

/// `{chi2, dof, threshold, pass, exponent, max_gap}` plus `meta`.
pub fn report_json(meta: &Metadata, report: &FitReport) -> Result<Value> {
    let mut value = serde_json::to_value(ReportJson::from(report))?;
    if let Value::Object(map) = &mut value {
        map.insert("meta".into(), meta.to_json());
    }
    Ok(value)
}
