//! Exact finite-time degree laws of the preferential-attachment chain.
//!
//! Under the `m Pi` rule the degree `k_i(t)` of every vertex is a
//! nonhomogeneous birth chain: from degree `k` at time `t` it moves to `k + 1`
//! with probability `k / (2t + N0/m)` and stays otherwise. Everything here is
//! computed from that transition alone, along two independent routes:
//!
//! * the two-term master recursion ([`evolve_vertex`], [`network_distribution`]);
//! * the first-passage decomposition, a sum over first-hitting times of
//!   survival products ([`first_passage`], [`p_via_first_passage`]).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Factors `1 - x` with `x` below this are accumulated with `ln_1p(-x)`.
const LOG1P_THRESHOLD: f64 = 0.5;

/// `(m, m0)` together with the derived `N0 = m0 (m0 - 1)` and offset `N0/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainParams {
    m: usize,
    m0: usize,
    n0: usize,
    offset: f64,
}

impl ChainParams {
    pub fn new(m: usize, m0: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::config("m", format!("m >= 1 required (got m={m})")));
        }
        if m0 < 2 {
            return Err(Error::config("m0", format!("m0 >= 2 required (got m0={m0})")));
        }
        if m > m0 {
            return Err(Error::config(
                "m",
                format!("1 <= m <= m0 required (got m={m}, m0={m0})"),
            ));
        }
        let n0 = m0 * (m0 - 1);
        // N0/m is exact in f64 whenever m divides N0; otherwise it is the
        // correctly rounded quotient.
        let offset = n0 as f64 / m as f64;
        Ok(ChainParams { m, m0, n0, offset })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn m0(&self) -> usize {
        self.m0
    }
    pub fn n0(&self) -> usize {
        self.n0
    }

    /// `N0 / m`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn offset_exact(&self) -> BigRational {
        BigRational::new(BigInt::from(self.n0), BigInt::from(self.m))
    }

    /// `2t + N0/m`, the transition denominator at time `t`.
    pub fn denominator(&self, t: usize) -> f64 {
        2.0 * t as f64 + self.offset
    }

    pub fn denominator_exact(&self, t: usize) -> BigRational {
        BigRational::from_integer(BigInt::from(2 * t)) + self.offset_exact()
    }

    /// Time at which vertex `label` enters: `label` for new vertices, 0 for
    /// the initial clique.
    pub fn start_time(&self, label: i64) -> usize {
        label.max(0) as usize
    }

    /// Degree of vertex `label` at its start time.
    pub fn start_degree(&self, label: i64) -> usize {
        if label > 0 {
            self.m
        } else {
            self.m0 - 1
        }
    }

    fn check_label(&self, label: i64) -> Result<()> {
        if label == 0 || label < -(self.m0 as i64) {
            return Err(Error::domain(format!(
                "vertex label {label} is not in -{}..=-1 or 1..",
                self.m0
            )));
        }
        Ok(())
    }

    /// Default truncation `m + ceil(10 sqrt(t))`.
    pub fn default_k_max(&self, t: usize) -> usize {
        self.m + (10.0 * (t as f64).sqrt()).ceil() as usize
    }
}

/// `(p_stay, p_up)` for a vertex of degree `k` at time `t`.
///
/// Time 0 is accepted: it is the step the initial clique takes when the
/// first new vertex arrives.
pub fn transition(k: usize, t: usize, params: &ChainParams) -> Result<(f64, f64)> {
    let denom = params.denominator(t);
    if k == 0 || k as f64 > denom {
        return Err(Error::domain(format!(
            "degree {k} is unreachable at time {t} (denominator {denom})"
        )));
    }
    let p_up = k as f64 / denom;
    Ok((1.0 - p_up, p_up))
}

/// A contiguous slice of a degree law at one time: `probs[j]` is the
/// probability of degree `k_min + j`.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub time: usize,
    pub k_min: usize,
    pub probs: &'a [f64],
}

impl Row<'_> {
    pub fn prob(&self, k: usize) -> f64 {
        k.checked_sub(self.k_min)
            .and_then(|j| self.probs.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn k_max(&self) -> usize {
        self.k_min + self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// `P(k, i, t)` for one vertex over `start_time..=t_max`. Row `r` holds the
/// law at time `start_time + r` over degrees `start_degree..=start_degree + r`,
/// so the support bound is structural.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeLaw {
    vertex: i64,
    start_time: usize,
    start_degree: usize,
    rows: Vec<Vec<f64>>,
}

impl DegreeLaw {
    pub fn vertex(&self) -> i64 {
        self.vertex
    }
    pub fn start_time(&self) -> usize {
        self.start_time
    }
    pub fn start_degree(&self) -> usize {
        self.start_degree
    }
    pub fn t_max(&self) -> usize {
        self.start_time + self.rows.len() - 1
    }

    pub fn row(&self, t: usize) -> Option<Row<'_>> {
        let r = t.checked_sub(self.start_time)?;
        self.rows.get(r).map(|probs| Row {
            time: t,
            k_min: self.start_degree,
            probs,
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.rows.iter().enumerate().map(move |(r, probs)| Row {
            time: self.start_time + r,
            k_min: self.start_degree,
            probs,
        })
    }

    /// `P(k, i, t)`; zero outside the support or the covered time range.
    pub fn prob(&self, k: usize, t: usize) -> f64 {
        self.row(t).map_or(0.0, |row| row.prob(k))
    }
}

/// Rolls one vertex's law forward without keeping history.
#[derive(Debug, Clone)]
pub struct LawStepper {
    params: ChainParams,
    time: usize,
    k_min: usize,
    probs: Vec<f64>,
}

impl LawStepper {
    pub fn new(label: i64, params: &ChainParams) -> Result<Self> {
        params.check_label(label)?;
        Ok(LawStepper {
            params: *params,
            time: params.start_time(label),
            k_min: params.start_degree(label),
            probs: vec![1.0],
        })
    }

    pub fn row(&self) -> Row<'_> {
        Row {
            time: self.time,
            k_min: self.k_min,
            probs: &self.probs,
        }
    }

    /// Advances from time `t` to `t + 1`.
    pub fn step(&mut self) {
        advance_row(&mut self.probs, self.k_min, self.params.denominator(self.time));
        self.time += 1;
    }
}

// P(k, t+1) = (1 - k/D) P(k, t) + ((k-1)/D) P(k-1, t), D = 2t + N0/m.
// The row grows by one entry on the right.
fn advance_row(probs: &mut Vec<f64>, k_min: usize, denom: f64) {
    let len = probs.len();
    probs.push(0.0);
    let mut carry = 0.0;
    for (j, slot) in probs[..len].iter_mut().enumerate() {
        let k = (k_min + j) as f64;
        let p = *slot;
        let up = p * (k / denom);
        *slot = p - up + carry;
        carry = up;
    }
    probs[len] = carry;
}

/// `P(k, i, t)` for `t` from the start time of `label` through `t_max`.
pub fn evolve_vertex(label: i64, t_max: usize, params: &ChainParams) -> Result<DegreeLaw> {
    let mut stepper = LawStepper::new(label, params)?;
    let start_time = stepper.time;
    if t_max < start_time {
        return Err(Error::domain(format!(
            "t_max={t_max} precedes the start time {start_time} of vertex {label}"
        )));
    }
    let mut rows = Vec::with_capacity(t_max - start_time + 1);
    rows.push(stepper.probs.clone());
    for _ in start_time..t_max {
        stepper.step();
        rows.push(stepper.probs.clone());
    }
    Ok(DegreeLaw {
        vertex: label,
        start_time,
        start_degree: stepper.k_min,
        rows,
    })
}

/// Probability that vertex `label` first reaches degree `k` at time `s`:
/// `P(k-1, i, s-1) (k-1) / (2(s-1) + N0/m)`.
pub fn first_passage(
    k: usize,
    label: i64,
    s: usize,
    law: &DegreeLaw,
    params: &ChainParams,
) -> Result<f64> {
    params.check_label(label)?;
    if law.vertex() != label {
        return Err(Error::domain(format!(
            "law is for vertex {}, not {label}",
            law.vertex()
        )));
    }
    let k0 = params.start_degree(label);
    if k <= k0 {
        return Err(Error::domain(format!(
            "first passage needs k > {k0} for vertex {label} (got k={k})"
        )));
    }
    let earliest = params.start_time(label) + k - k0;
    if s < earliest {
        return Ok(0.0);
    }
    if s - 1 > law.t_max() {
        return Err(Error::domain(format!(
            "law covers t <= {}, first passage at s={s} needs t={}",
            law.t_max(),
            s - 1
        )));
    }
    Ok(law.prob(k - 1, s - 1) * (k - 1) as f64 / params.denominator(s - 1))
}

/// `prod_{j=from}^{to-1} (1 - k / (2j + N0/m))`, accumulated as a sum of logs.
pub fn survival(k: usize, from: usize, to: usize, params: &ChainParams) -> f64 {
    let mut log_sum = 0.0;
    for j in from..to {
        let x = k as f64 / params.denominator(j);
        match log_factor(x) {
            Some(l) => log_sum += l,
            None => return 0.0,
        }
    }
    log_sum.exp()
}

// ln(1 - x), or None when the factor vanishes.
fn log_factor(x: f64) -> Option<f64> {
    debug_assert!(x <= 1.0, "survival factor below zero: x={x}");
    if x >= 1.0 {
        None
    } else if x < LOG1P_THRESHOLD {
        Some((-x).ln_1p())
    } else {
        Some((1.0 - x).ln())
    }
}

/// The full law of vertex `label` through `t_max`, built only from the
/// first-passage decomposition: the base degree survives by a product, and
/// each higher degree is the sum over first-passage times `s` of
/// `f(k, i, s)` times the survival product from `s` to `t`.
pub fn first_passage_table(label: i64, t_max: usize, params: &ChainParams) -> Result<DegreeLaw> {
    params.check_label(label)?;
    let start = params.start_time(label);
    let k0 = params.start_degree(label);
    if t_max < start {
        return Err(Error::domain(format!(
            "t_max={t_max} precedes the start time {start} of vertex {label}"
        )));
    }
    let horizon = t_max - start;
    // levels[d][r]: P(k0 + d, i, start + r); valid for r >= d.
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(horizon + 1);
    levels.push(
        (0..=horizon)
            .map(|r| survival(k0, start, start + r, params))
            .collect(),
    );
    for d in 1..=horizon {
        let k = k0 + d;
        let prev = &levels[d - 1];
        // f(k, i, s) for s = start + d ..= t_max, indexed by r = s - start.
        let passage: Vec<f64> = (0..=horizon)
            .map(|r| {
                if r < d {
                    0.0
                } else {
                    let s = start + r;
                    prev[r - 1] * (k - 1) as f64 / params.denominator(s - 1)
                }
            })
            .collect();
        let mut level = vec![0.0; horizon + 1];
        for (r_end, slot) in level.iter_mut().enumerate().skip(d) {
            // Walk s downward from t so the survival product grows one factor
            // at a time.
            let mut log_surv = 0.0;
            let mut acc = passage[r_end];
            for r in (d..r_end).rev() {
                let x = k as f64 / params.denominator(start + r);
                match log_factor(x) {
                    Some(l) => log_surv += l,
                    None => break,
                }
                acc += passage[r] * log_surv.exp();
            }
            *slot = acc;
        }
        levels.push(level);
    }
    let rows = (0..=horizon)
        .map(|r| (0..=r).map(|d| levels[d][r]).collect())
        .collect();
    Ok(DegreeLaw {
        vertex: label,
        start_time: start,
        start_degree: k0,
        rows,
    })
}

/// `P(k, i, t)` through the first-passage decomposition, for `k` above the
/// starting degree of vertex `label`.
pub fn p_via_first_passage(k: usize, label: i64, t: usize, params: &ChainParams) -> Result<f64> {
    params.check_label(label)?;
    let k0 = params.start_degree(label);
    let start = params.start_time(label);
    if k <= k0 {
        return Err(Error::domain(format!(
            "first-passage route needs k > {k0} for vertex {label} (got k={k})"
        )));
    }
    if t < start {
        return Err(Error::domain(format!(
            "t={t} precedes the start time {start} of vertex {label}"
        )));
    }
    if k > k0 + (t - start) {
        return Ok(0.0);
    }
    Ok(first_passage_table(label, t, params)?.prob(k, t))
}

/// The network law `P(k, t)`: the average of all `t + m0` vertex laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureDistribution {
    pub time: usize,
    pub m: usize,
    pub m0: usize,
    /// `probs[j]` is `P(m + j, t)`, for degrees `m..=k_max`.
    pub probs: Vec<f64>,
    /// Mass above `k_max`.
    pub tail_mass: f64,
    /// `sum_{k > k_max} k P(k, t)`.
    pub tail_moment: f64,
    /// New-vertex average over degrees `m..=k_max`.
    pub pbar: Option<Vec<f64>>,
    pub pbar_tail_mass: f64,
}

impl MixtureDistribution {
    pub fn k_min(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> usize {
        self.m + self.probs.len() - 1
    }

    pub fn prob(&self, k: usize) -> f64 {
        k.checked_sub(self.m)
            .and_then(|j| self.probs.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn pbar(&self, k: usize) -> Option<f64> {
        let pbar = self.pbar.as_ref()?;
        Some(
            k.checked_sub(self.m)
                .and_then(|j| pbar.get(j))
                .copied()
                .unwrap_or(0.0),
        )
    }

    /// Degree/probability pairs over `m..=k_max`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(j, &p)| (self.m + j, p))
    }

    /// Sum of the reported cells plus the tail bucket.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.tail_mass
    }

    pub fn mean_degree(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum::<f64>() + self.tail_moment
    }

    /// `(N0 + 2mt) / (t + m0)`.
    pub fn expected_mean_degree(&self) -> f64 {
        let n0 = (self.m0 * (self.m0 - 1)) as f64;
        (n0 + 2.0 * (self.m * self.time) as f64) / (self.time + self.m0) as f64
    }
}

// Degree-indexed mass vector truncated at k_max, with an absorbing tail that
// tracks its mass and first moment. The expected degree of a vertex in the
// tail grows by the factor (1 + 1/D) per step, which the moment follows
// exactly.
#[derive(Debug, Clone)]
struct TruncatedMass {
    k_lo: usize,
    cells: Vec<f64>,
    tail_mass: f64,
    tail_moment: f64,
}

impl TruncatedMass {
    fn new(k_lo: usize, k_max: usize) -> Self {
        TruncatedMass {
            k_lo,
            cells: vec![0.0; k_max + 1 - k_lo],
            tail_mass: 0.0,
            tail_moment: 0.0,
        }
    }

    fn k_max(&self) -> usize {
        self.k_lo + self.cells.len() - 1
    }

    fn add(&mut self, k: usize, mass: f64) {
        if k > self.k_max() {
            self.tail_mass += mass;
            self.tail_moment += k as f64 * mass;
        } else {
            self.cells[k - self.k_lo] += mass;
        }
    }

    fn step(&mut self, denom: f64) {
        let k_max = self.k_max();
        let mut carry = 0.0;
        for (j, cell) in self.cells.iter_mut().enumerate() {
            let k = (self.k_lo + j) as f64;
            let p = *cell;
            let up = p * (k / denom);
            *cell = p - up + carry;
            carry = up;
        }
        self.tail_moment = self.tail_moment * (1.0 + 1.0 / denom) + (k_max + 1) as f64 * carry;
        self.tail_mass += carry;
    }

    fn scaled_from(&self, k: usize, scale: f64) -> Vec<f64> {
        self.cells[k - self.k_lo..].iter().map(|p| p * scale).collect()
    }
}

fn check_mixture_args(t: usize, params: &ChainParams, k_max: usize) -> Result<()> {
    if t < 1 {
        return Err(Error::config("t", "the exact network law needs t >= 1"));
    }
    if k_max < params.m() {
        return Err(Error::domain(format!(
            "k_max={k_max} is below m={}",
            params.m()
        )));
    }
    Ok(())
}

/// `P(k, t)` in `O(t k_max)` time.
///
/// The transition at time `tau` is the same for every vertex, so the sum of
/// all new-vertex laws obeys the master recursion itself, plus a unit point
/// mass injected at `k = m` for each arriving vertex. The `m0` initial
/// vertices share a single law.
pub fn network_distribution(t: usize, params: &ChainParams, k_max: usize) -> Result<MixtureDistribution> {
    check_mixture_args(t, params, k_max)?;
    let m = params.m();
    let m0 = params.m0();
    let k_lo = m.min(m0 - 1);
    let mut initial = TruncatedMass::new(k_lo, k_max);
    initial.add(m0 - 1, 1.0);
    let mut arrivals = TruncatedMass::new(k_lo, k_max);
    for tau in 0..t {
        let denom = params.denominator(tau);
        initial.step(denom);
        arrivals.step(denom);
        arrivals.add(m, 1.0);
    }
    debug_assert!(k_lo == m || initial.cells[0] == 0.0);
    let n = (t + m0) as f64;
    let probs = initial
        .scaled_from(m, m0 as f64 / n)
        .into_iter()
        .zip(arrivals.scaled_from(m, 1.0 / n))
        .map(|(a, b)| a + b)
        .collect();
    Ok(MixtureDistribution {
        time: t,
        m,
        m0,
        probs,
        tail_mass: (m0 as f64 * initial.tail_mass + arrivals.tail_mass) / n,
        tail_moment: (m0 as f64 * initial.tail_moment + arrivals.tail_moment) / n,
        pbar: Some(arrivals.scaled_from(m, 1.0 / t as f64)),
        pbar_tail_mass: arrivals.tail_mass / t as f64,
    })
}

/// Reference `P(k, t)`: evolves every vertex separately (in parallel) and
/// averages in ascending label order. `O(t^2 k)`; for cross-checking.
pub fn network_distribution_naive(
    t: usize,
    params: &ChainParams,
    k_max: usize,
) -> Result<MixtureDistribution> {
    check_mixture_args(t, params, k_max)?;
    let m = params.m();
    let m0 = params.m0() as i64;
    let labels: Vec<i64> = (-m0..=-1).chain(1..=t as i64).collect();
    let finals: Vec<(i64, Vec<f64>, usize)> = labels
        .par_iter()
        .map(|&label| {
            let mut stepper = LawStepper::new(label, params)?;
            while stepper.time < t {
                stepper.step();
            }
            Ok((label, stepper.probs, stepper.k_min))
        })
        .collect::<Result<_>>()?;
    let width = k_max - m + 1;
    let mut all = vec![0.0; width];
    let mut fresh = vec![0.0; width];
    let (mut tail_mass, mut tail_moment, mut fresh_tail) = (0.0, 0.0, 0.0);
    for (label, probs, k_min) in &finals {
        for (j, &p) in probs.iter().enumerate() {
            let k = k_min + j;
            if k < m {
                debug_assert!(p == 0.0);
                continue;
            }
            if k > k_max {
                tail_mass += p;
                tail_moment += k as f64 * p;
                if *label > 0 {
                    fresh_tail += p;
                }
            } else {
                all[k - m] += p;
                if *label > 0 {
                    fresh[k - m] += p;
                }
            }
        }
    }
    let n = labels.len() as f64;
    Ok(MixtureDistribution {
        time: t,
        m,
        m0: params.m0(),
        probs: all.into_iter().map(|p| p / n).collect(),
        tail_mass: tail_mass / n,
        tail_moment: tail_moment / n,
        pbar: Some(fresh.into_iter().map(|p| p / t as f64).collect()),
        pbar_tail_mass: fresh_tail / t as f64,
    })
}

/// `P(m, 1)`: the arriving vertex has degree `m`, and an initial vertex has
/// degree `m` at `t = 1` if it started there and stayed, or started at
/// `m - 1` (only when `m0 = m`) and moved up.
pub fn initial_pm1(params: &ChainParams) -> f64 {
    let m = params.m();
    let m0 = params.m0();
    let up = m as f64 / m0 as f64;
    let initial_at_m = if m0 - 1 == m {
        1.0 - up
    } else if m0 == m {
        up
    } else {
        0.0
    };
    (1.0 + m0 as f64 * initial_at_m) / (1.0 + m0 as f64)
}

/// Closed product-sum form of `P(m, t)`:
///
/// `P(m,t) = 1/(t+m0) prod_{i=1}^{t-1} (1 - m/(2i+d)) [ (1+m0) P(m,1)
///           + sum_{l=1}^{t-1} prod_{j=1}^{l} (1 - m/(2j+d))^{-1} ]`
///
/// with `d = N0/m`, evaluated with log-space products.
pub fn closed_form_pmt(t: usize, params: &ChainParams) -> Result<f64> {
    if t < 1 {
        return Err(Error::config("t", "P(m, t) needs t >= 1"));
    }
    let m = params.m();
    let m0 = params.m0() as f64;
    // log_prod[l] = sum_{j=1}^{l} ln(1 - m/(2j+d)); factors are positive for j >= 1.
    let mut log_prod = Vec::with_capacity(t);
    log_prod.push(0.0);
    for j in 1..t {
        let x = m as f64 / params.denominator(j);
        let l = log_factor(x).ok_or_else(|| Error::domain("vanishing survival factor"))?;
        log_prod.push(log_prod[j - 1] + l);
    }
    let total = log_prod[t - 1];
    let head = (1.0 + m0) * initial_pm1(params) * total.exp();
    let sum: f64 = log_prod[1..].iter().map(|&l| (total - l).exp()).sum();
    Ok((head + sum) / (t as f64 + m0))
}

/// Exact-rational version of [`evolve_vertex`], restricted to short horizons.
pub fn evolve_vertex_exact(label: i64, t_max: usize, params: &ChainParams) -> Result<Vec<Vec<BigRational>>> {
    const MAX_EXACT_T: usize = 64;
    params.check_label(label)?;
    if t_max > MAX_EXACT_T {
        return Err(Error::domain(format!(
            "exact mode is limited to t <= {MAX_EXACT_T} (got {t_max})"
        )));
    }
    let start = params.start_time(label);
    let k0 = params.start_degree(label);
    if t_max < start {
        return Err(Error::domain(format!(
            "t_max={t_max} precedes the start time {start} of vertex {label}"
        )));
    }
    let mut rows = vec![vec![BigRational::one()]];
    for tau in start..t_max {
        let denom = params.denominator_exact(tau);
        let cur = rows.last().expect("nonempty");
        let mut next = vec![BigRational::zero(); cur.len() + 1];
        for (j, p) in cur.iter().enumerate() {
            let up = p * BigRational::from_integer(BigInt::from(k0 + j)) / &denom;
            next[j] += p - &up;
            next[j + 1] += up;
        }
        rows.push(next);
    }
    Ok(rows)
}
