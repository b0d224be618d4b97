use proptest::prelude::*;
use rand::Rng;

use scalefree::ensemble::{
    compare_to_exact, compare_to_limit, run_replicates, run_replicates_with_threads, EnsembleStats, Verdict,
    DEFAULT_LEVEL,
};
use scalefree::exact_chain::{network_distribution, ChainParams, MixtureDistribution};
use scalefree::graph_model::{AttachmentScheme, RunConfig};
use scalefree::rng::stream;

fn config(m0: usize, m: usize, t: usize, scheme: AttachmentScheme, seed: u64, r: usize) -> RunConfig {
    RunConfig::new(m0, m, t, scheme, seed, r).unwrap()
}

fn exact_law(m: usize, m0: usize, t: usize) -> MixtureDistribution {
    let p = ChainParams::new(m, m0).unwrap();
    network_distribution(t, &p, p.default_k_max(t)).unwrap()
}

// Pooled iid draws from the exact law, shaped like an ensemble.
fn multinomial_stats(law: &MixtureDistribution, replicates: usize, seed: u64) -> EnsembleStats {
    let mut cdf = Vec::new();
    let mut acc = 0.0;
    for (_, p) in law.iter() {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = vec![0u64; law.k_max() + 2];
    let mut rng = stream(seed, 0);
    for _ in 0..replicates * (law.m0 + law.time) {
        let u: f64 = rng.gen();
        let j = cdf.partition_point(|&c| c <= u);
        counts[law.m + j] += 1;
    }
    let se = vec![0.0; counts.len()];
    EnsembleStats {
        m0: law.m0,
        m: law.m,
        t: law.time,
        scheme: AttachmentScheme::HolmeKimSpecial,
        seed,
        replicates,
        counts,
        se,
    }
}

#[test]
fn chi_square_false_alarm_rate_under_the_null() {
    let law = exact_law(1, 3, 400);
    let failures = (0..500)
        .filter(|&trial| {
            let stats = multinomial_stats(&law, 25, 1000 + trial);
            !compare_to_exact(&stats, &law, DEFAULT_LEVEL, 3..=8).unwrap().pass
        })
        .count();
    // Expected 0.5 failures at the 99.9% level.
    assert!(failures <= 3, "{failures} of 500 null trials rejected");
}

#[test]
fn chi_square_rejects_a_different_law() {
    let law = exact_law(1, 3, 400);
    let other = exact_law(1, 3, 40);
    let mut stats = multinomial_stats(&other, 25, 9);
    stats.t = 400;
    assert!(!compare_to_exact(&stats, &law, DEFAULT_LEVEL, 3..=8).unwrap().pass);
}

#[test]
fn holme_kim_ensemble_fits_exact_law_m2() {
    let cfg = config(5, 2, 5000, AttachmentScheme::HolmeKimSpecial, 4242, 200);
    let stats = run_replicates(&cfg).unwrap();
    let report = compare_to_exact(&stats, &exact_law(2, 5, 5000), DEFAULT_LEVEL, 10..=100).unwrap();
    assert!(report.pass, "chi2 {} > {} (dof {})", report.chi2, report.threshold, report.dof);
    assert!(report.chi2 >= 0.0);
    let gamma = report.exponent.unwrap();
    assert!((2.6..=3.4).contains(&gamma), "gamma {gamma}");
}

#[test]
fn sequential_baseline_has_cubic_tail() {
    let cfg = config(3, 2, 10_000, AttachmentScheme::SequentialPreferential, 31, 60);
    let stats = run_replicates(&cfg).unwrap();
    let slope = scalefree::analytic::tail_exponent(|k| stats.freq(k as usize), 10..=60).unwrap();
    assert!((2.6..=3.4).contains(&-slope), "gamma {}", -slope);
}

#[test]
fn limit_comparison_verdicts() {
    let stats = run_replicates(&config(3, 1, 10_000, AttachmentScheme::HolmeKimSpecial, 5, 200)).unwrap();
    let report = compare_to_limit(&stats, 1..=8, 5..=50, 0.05).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{report:?}");
    assert!(report.max_relative_gap < 0.05);

    // Short runs: the finite-t law is still visibly off the limit, and a
    // large ensemble resolves that gap.
    let short = run_replicates(&config(3, 1, 20, AttachmentScheme::HolmeKimSpecial, 5, 4000)).unwrap();
    let report = compare_to_limit(&short, 1..=4, 1..=4, 0.05).unwrap();
    assert_eq!(report.verdict, Verdict::Inconclusive, "{report:?}");
}

#[test]
fn stats_identical_across_worker_counts() {
    for scheme in [AttachmentScheme::HolmeKimSpecial, AttachmentScheme::SequentialPreferential] {
        let cfg = config(4, 2, 800, scheme, 1234, 33);
        let one = run_replicates_with_threads(&cfg, 1).unwrap();
        for threads in [2, 4, 8] {
            assert_eq!(run_replicates_with_threads(&cfg, threads).unwrap(), one);
        }
    }
}

#[test]
fn seeds_change_the_ensemble() {
    let a = run_replicates(&config(3, 1, 300, AttachmentScheme::HolmeKimSpecial, 1, 4)).unwrap();
    let b = run_replicates(&config(3, 1, 300, AttachmentScheme::HolmeKimSpecial, 2, 4)).unwrap();
    assert_ne!(a.counts, b.counts);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn degree_conservation(
        m in 1usize..4,
        extra in 0usize..3,
        t in 0usize..200,
        r in 1usize..6,
        seed in any::<u64>(),
        sequential in any::<bool>(),
    ) {
        let m0 = (m + extra).max(2);
        let scheme = if sequential {
            AttachmentScheme::SequentialPreferential
        } else {
            AttachmentScheme::HolmeKimSpecial
        };
        let stats = run_replicates(&config(m0, m, t, scheme, seed, r)).unwrap();
        prop_assert_eq!(stats.counts.iter().sum::<u64>(), (r * (m0 + t)) as u64);
        prop_assert_eq!(stats.degree_sum(), (r * (m0 * (m0 - 1) + 2 * m * t)) as u64);
        let total: f64 = (0..=stats.max_degree()).map(|k| stats.freq(k)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(stats.se.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn exponent_ignores_frequency_scale(seed in 0u64..1000) {
        let stats = run_replicates(&config(3, 1, 2000, AttachmentScheme::HolmeKimSpecial, seed, 3)).unwrap();
        let law = |c: f64| {
            scalefree::analytic::tail_exponent(|k| c * stats.freq(k as usize), 2..=6)
        };
        if let (Ok(a), Ok(b)) = (law(1.0), law(2.0)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
