//! Closed-form steady state `P(k) = 2m(m+1) / (k(k+1)(k+2))` and the
//! diagnostics that go with it.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_chain::ChainParams;

/// A probability carried both exactly and as a double.
#[derive(Debug, Clone, PartialEq)]
pub struct Probability {
    pub exact: BigRational,
    pub value: f64,
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn steady_state(k: u64, m: u64) -> Result<Probability> {
    let exact = steady_state_exact(k, m)?;
    let value = exact.to_f64().unwrap_or(f64::NAN);
    Ok(Probability { exact, value })
}

pub fn steady_state_exact(k: u64, m: u64) -> Result<BigRational> {
    if m < 1 || k < m {
        return Err(Error::domain(format!(
            "steady state is defined for k >= m >= 1 (got k={k}, m={m})"
        )));
    }
    let num = BigInt::from(2 * m * (m + 1));
    let den = BigInt::from(k) * BigInt::from(k + 1) * BigInt::from(k + 2);
    Ok(BigRational::new(num, den))
}

/// Double-precision `P(k)`; zero below `m`.
pub fn steady_state_f64(k: u64, m: u64) -> f64 {
    if k < m || m == 0 {
        return 0.0;
    }
    let (k, m) = (k as f64, m as f64);
    2.0 * m * (m + 1.0) / (k * (k + 1.0) * (k + 2.0))
}

/// `P(k) = (k-1)/(k+2) P(k-1)`.
pub fn limit_recursion(prev: f64, k: u64) -> f64 {
    (k as f64 - 1.0) / (k as f64 + 2.0) * prev
}

pub fn limit_recursion_exact(prev: &BigRational, k: u64) -> BigRational {
    prev * ratio(k - 1, k + 2)
}

/// `sum_{k=m}^{K} P(k) = 1 - m(m+1)/((K+1)(K+2))`.
pub fn partial_sum_closed_form(upper: u64, m: u64) -> BigRational {
    let one = BigRational::from_integer(BigInt::from(1));
    one - ratio(m * (m + 1), (upper + 1) * (upper + 2))
}

/// Tabulated steady state over `m..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    pub m: u64,
    /// `values[j]` is `P(m + j)`.
    pub values: Vec<f64>,
}

impl SteadyState {
    pub fn new(m: u64, k_max: u64) -> Result<Self> {
        if m < 1 || k_max < m {
            return Err(Error::domain(format!(
                "steady-state table needs k_max >= m >= 1 (got m={m}, k_max={k_max})"
            )));
        }
        let values = (m..=k_max).map(|k| steady_state_f64(k, m)).collect();
        Ok(SteadyState { m, values })
    }

    pub fn get(&self, k: u64) -> Option<f64> {
        k.checked_sub(self.m)
            .and_then(|j| self.values.get(j as usize))
            .copied()
    }

    /// Rows `(k, P(k), P(k)/P(k-1))`; the ratio is absent at `k = m`.
    pub fn rows(&self) -> impl Iterator<Item = (u64, f64, Option<f64>)> + '_ {
        self.values.iter().enumerate().map(move |(j, &p)| {
            let ratio = (j > 0).then(|| p / self.values[j - 1]);
            (self.m + j as u64, p, ratio)
        })
    }

    /// Mass beyond the table, from the telescoping closed form.
    pub fn tail_mass(&self) -> f64 {
        let upper = (self.m + self.values.len() as u64 - 1) as f64;
        let m = self.m as f64;
        m * (m + 1.0) / ((upper + 1.0) * (upper + 2.0))
    }
}

/// Difference ratios `(x_{n+1}-x_n)/(y_{n+1}-y_n)` from the Stolz-Cesaro
/// argument for `P(m, t)`, in closed form:
/// `(2n + N0/m) / ((m+2) n + N0/m + m m0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CesaroDiagnostic {
    pub limit: f64,
    /// `(n, ratio_n, |ratio_n - 2/(m+2)|)` for `n = 1..=n_max`.
    pub rows: Vec<(u64, f64, f64)>,
}

pub fn cesaro_ratio_exact(n: u64, params: &ChainParams) -> BigRational {
    // Multiply through by m to stay integral.
    let m = params.m() as u64;
    let m0 = params.m0() as u64;
    let n0 = params.n0() as u64;
    ratio(2 * n * m + n0, (m + 2) * n * m + n0 + m * m * m0)
}

pub fn cesaro_ratio(n: u64, params: &ChainParams) -> f64 {
    let m = params.m() as f64;
    let d = params.offset();
    let n = n as f64;
    (2.0 * n + d) / ((m + 2.0) * n + d + m * params.m0() as f64)
}

pub fn cesaro_ratios(n_max: u64, params: &ChainParams) -> Result<CesaroDiagnostic> {
    if n_max < 1 {
        return Err(Error::domain("cesaro diagnostics need n_max >= 1"));
    }
    let limit = 2.0 / (params.m() as f64 + 2.0);
    let rows = (1..=n_max)
        .map(|n| {
            let r = cesaro_ratio(n, params);
            (n, r, (r - limit).abs())
        })
        .collect();
    Ok(CesaroDiagnostic { limit, rows })
}

/// Least-squares slope of `ln p(k)` against `ln k` over `k_range`.
///
/// Returns the slope itself, negative for a decaying law; the tail exponent
/// `gamma` is its negation.
pub fn tail_exponent<F>(values: F, k_range: RangeInclusive<u64>) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    let mut points = Vec::new();
    for k in k_range.clone() {
        let p = values(k);
        if p.is_nan() || p <= 0.0 || k == 0 {
            return Err(Error::domain(format!(
                "log-log fit needs positive values; got p({k})={p}"
            )));
        }
        points.push(((k as f64).ln(), p.ln()));
    }
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "log-log fit needs at least 3 points, range {k_range:?} has {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in &points {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_m1_values() {
        assert_eq!(steady_state(1, 1).unwrap().exact, ratio(2, 3));
        assert_eq!(steady_state(2, 1).unwrap().exact, ratio(1, 6));
        assert_eq!(steady_state(3, 1).unwrap().exact, ratio(1, 15));
    }

    #[test]
    fn steady_state_m2_head() {
        let p = steady_state(2, 2).unwrap();
        assert_eq!(p.exact, ratio(1, 2));
        assert_eq!(p.value, 0.5);
    }

    #[test]
    fn steady_state_below_m_is_error() {
        assert!(steady_state(1, 2).is_err());
        assert!(steady_state(3, 0).is_err());
    }

    #[test]
    fn recursion_from_head() {
        assert_eq!(limit_recursion_exact(&ratio(2, 3), 2), ratio(1, 6));
        let mut p = ratio(1, 2);
        for k in 3..=10 {
            p = limit_recursion_exact(&p, k);
        }
        assert_eq!(p, ratio(1, 110));
        assert!((limit_recursion(2.0 / 3.0, 2) - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn table_rows_and_tail() {
        let table = SteadyState::new(1, 50).unwrap();
        let rows: Vec<_> = table.rows().collect();
        assert_eq!(rows[0], (1, 2.0 / 3.0, None));
        let (k, _, r) = rows[1];
        assert_eq!(k, 2);
        assert!((r.unwrap() - 0.25).abs() < 1e-15);
        let total: f64 = table.values.iter().sum::<f64>() + table.tail_mass();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(SteadyState::new(3, 2).is_err());
    }

    #[test]
    fn cesaro_examples() {
        let p13 = ChainParams::new(1, 3).unwrap();
        for n in 1..20 {
            assert_eq!(cesaro_ratio_exact(n, &p13), ratio(2, 3));
        }
        let p25 = ChainParams::new(2, 5).unwrap();
        assert_eq!(cesaro_ratio_exact(7, &p25), ratio(1, 2));
        let p24 = ChainParams::new(2, 4).unwrap();
        assert_eq!(cesaro_ratio_exact(1, &p24), ratio(4, 9));
        assert_eq!(cesaro_ratio_exact(3, &p24), ratio(6, 13));
        let diag = cesaro_ratios(100_000, &p24).unwrap();
        assert_eq!(diag.limit, 0.5);
        let gaps: Vec<f64> = diag.rows.iter().map(|r| r.2).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
        assert!(gaps.last().unwrap() < &1e-5);
        assert!(cesaro_ratios(0, &p24).is_err());
    }

    #[test]
    fn exact_power_law_slope() {
        let slope = tail_exponent(|k| 7.0 * (k as f64).powi(-3), 2..=40).unwrap();
        assert!((slope + 3.0).abs() < 1e-10);
    }

    #[test]
    fn slope_rejects_nonpositive_and_short_ranges() {
        assert!(tail_exponent(|k| if k == 5 { 0.0 } else { 1.0 }, 1..=10).is_err());
        assert!(tail_exponent(|_| 1.0, 1..=2).is_err());
    }
}
