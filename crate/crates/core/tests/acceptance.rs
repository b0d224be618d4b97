//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints one status line even when all of them pass.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use scalefree::analytic::{partial_sum_closed_form, steady_state_exact};
use scalefree::cli::{proposition_suite, verify_case};
use scalefree::ensemble::{compare_to_exact, run_replicates, run_replicates_with_threads, DEFAULT_LEVEL};
use scalefree::exact_chain::{evolve_vertex, first_passage_table, network_distribution, p_via_first_passage, ChainParams};
use scalefree::export::{write_edge_list, write_stats_csv, Metadata};
use scalefree::graph_model::{generate, AttachmentScheme, RunConfig, DEFAULT_ENUMERATION_BOUND};

type Check = fn() -> Result<String, String>;

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn steady_state_values() -> Result<String, String> {
    for (k, want) in [(1, ratio(2, 3)), (2, ratio(1, 6)), (3, ratio(1, 15))] {
        let got = steady_state_exact(k, 1).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("P({k}) = {got}, want {want}"))?;
    }
    for m in 1..=10u64 {
        let got = steady_state_exact(m, m).map_err(|e| e.to_string())?;
        ensure(got == ratio(2, m + 2), || format!("P({m}) at m={m} is {got}"))?;
    }
    Ok("P(1..3) at m=1 and P(m) = 2/(m+2) for m=1..10 exact".into())
}

fn oracle_equivalence() -> Result<String, String> {
    const T: usize = 200;
    let mut worst: f64 = 0.0;
    let mut entries = 0usize;
    for (m, m0) in [(1, 3), (2, 5)] {
        let p = ChainParams::new(m, m0).map_err(|e| e.to_string())?;
        let labels = (-(m0 as i64)..=-1).chain(1..=T as i64);
        for label in labels {
            let forward = evolve_vertex(label, T, &p).map_err(|e| e.to_string())?;
            let passage = first_passage_table(label, T, &p).map_err(|e| e.to_string())?;
            for row in forward.rows() {
                for k in row.k_min..=row.k_max() + 1 {
                    let gap = (row.prob(k) - passage.prob(k, row.time)).abs();
                    worst = worst.max(gap);
                    entries += 1;
                }
            }
            // The public single-entry route, on a few entries per vertex.
            let k0 = p.start_degree(label);
            for (k, t) in [(k0 + 1, T), (k0 + 3, T), (k0 + 2, T / 2 + 1)] {
                if t < p.start_time(label) {
                    continue;
                }
                let a = p_via_first_passage(k, label, t, &p).map_err(|e| e.to_string())?;
                worst = worst.max((a - forward.prob(k, t)).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max entrywise gap {worst:e} exceeds 1e-12"))?;
    Ok(format!("{entries} entries, max gap {worst:.2e}"))
}

fn exact_convergence() -> Result<String, String> {
    let p13 = ChainParams::new(1, 3).map_err(|e| e.to_string())?;
    let gap = |t: usize, p: &ChainParams, k: usize, limit: f64| -> Result<f64, String> {
        let d = network_distribution(t, p, p.default_k_max(t)).map_err(|e| e.to_string())?;
        Ok((d.prob(k) - limit).abs())
    };
    let g2000 = gap(2000, &p13, 1, 2.0 / 3.0)?;
    let g4000 = gap(4000, &p13, 1, 2.0 / 3.0)?;
    ensure(g2000 < 0.01, || format!("|P(1,2000) - 2/3| = {g2000:e}"))?;
    ensure(g4000 < g2000, || format!("gap grew: {g2000:e} -> {g4000:e}"))?;
    let p25 = ChainParams::new(2, 5).map_err(|e| e.to_string())?;
    let g25 = gap(4000, &p25, 2, 0.5)?;
    ensure(g25 < 0.01, || format!("|P(2,4000) - 1/2| = {g25:e}"))?;
    Ok(format!(
        "m=1: gap {g2000:.2e} at t=2000, {g4000:.2e} at t=4000; m=2: gap {g25:.2e} at t=4000"
    ))
}

fn proposition() -> Result<String, String> {
    let mut n = 0;
    for case in proposition_suite().map_err(|e| e.to_string())? {
        for o in verify_case(&case, DEFAULT_ENUMERATION_BOUND).map_err(|e| e.to_string())? {
            ensure(o.pass(), || format!("{} m={} fails", o.name, o.m))?;
            n += 1;
        }
    }
    Ok(format!("{n} (state, m) cases exact"))
}

fn monte_carlo() -> Result<String, String> {
    const T: usize = 10_000;
    let cfg = RunConfig::new(3, 1, T, AttachmentScheme::HolmeKimSpecial, 20_240_601, 200)
        .map_err(|e| e.to_string())?;
    let stats = run_replicates(&cfg).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 1..=8u64 {
        let limit = scalefree::analytic::steady_state_f64(k, 1);
        let rel = (stats.freq(k as usize) - limit).abs() / limit;
        ensure(rel < 0.05, || format!("relative gap {rel:.4} at k={k}"))?;
        worst = worst.max(rel);
    }
    let p = ChainParams::new(1, 3).map_err(|e| e.to_string())?;
    let exact = network_distribution(T, &p, p.default_k_max(T)).map_err(|e| e.to_string())?;
    let report = compare_to_exact(&stats, &exact, DEFAULT_LEVEL, 5..=50).map_err(|e| e.to_string())?;
    ensure(report.pass, || {
        format!("chi2 {:.2} > {:.2} on {} dof", report.chi2, report.threshold, report.dof)
    })?;
    let gamma = report.exponent.ok_or("no positive counts over k=5..50")?;
    ensure((2.6..=3.4).contains(&gamma), || format!("tail exponent {gamma:.3}"))?;
    Ok(format!(
        "max rel gap {worst:.4}, chi2 {:.2} <= {:.2} (dof {}), gamma {gamma:.3}",
        report.chi2, report.threshold, report.dof
    ))
}

fn telescoping() -> Result<String, String> {
    for m in 1..=3u64 {
        let mut sum = BigRational::zero();
        for k in m..=10_000 {
            sum += steady_state_exact(k, m).map_err(|e| e.to_string())?;
            ensure(sum == partial_sum_closed_form(k, m), || format!("mismatch at m={m}, K={k}"))?;
        }
    }
    Ok("every K in m..=10^4 for m=1,2,3".into())
}

fn determinism() -> Result<String, String> {
    let graph_cfg = RunConfig::new(4, 2, 5_000, AttachmentScheme::HolmeKimSpecial, 77, 1)
        .map_err(|e| e.to_string())?;
    let ens_cfg = RunConfig::new(3, 1, 2_000, AttachmentScheme::HolmeKimSpecial, 78, 64)
        .map_err(|e| e.to_string())?;
    let p = ChainParams::new(1, 3).map_err(|e| e.to_string())?;
    let exact = network_distribution(2_000, &p, 80).map_err(|e| e.to_string())?;
    let mut outputs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for threads in [1, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let graph = pool.install(|| generate(&graph_cfg)).map_err(|e| e.to_string())?;
        let mut edges = Vec::new();
        write_edge_list(&mut edges, &Metadata::new(), &graph).map_err(|e| e.to_string())?;
        let stats = run_replicates_with_threads(&ens_cfg, threads).map_err(|e| e.to_string())?;
        let mut table = Vec::new();
        write_stats_csv(&mut table, &Metadata::new(), &stats, &exact).map_err(|e| e.to_string())?;
        outputs.push((edges, table));
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
        "outputs differ between thread counts".into()
    })?;
    Ok(format!(
        "edge list ({} bytes) and ensemble table ({} bytes) identical on 1, 4, 8 threads",
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, Check, Duration); 7] = [
        ("steady-state values", steady_state_values, Duration::from_secs(1)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(30)),
        ("exact-law convergence", exact_convergence, Duration::from_secs(120)),
        ("exact mPi attachment", proposition, Duration::from_secs(5)),
        ("Monte Carlo agreement", monte_carlo, Duration::from_secs(300)),
        ("telescoping normalization", telescoping, Duration::from_secs(1)),
        ("thread-count determinism", determinism, Duration::from_secs(60)),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check, budget)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > *budget => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{elapsed:.2?}] {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {}: FAIL  {name} [{elapsed:.2?}] {why}", i + 1);
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
