//! Error terms of a representation table against a constant `c`.
//!
//! `e_n = Σ_{j≤n} (r(j) − c)` and `E_n = (1/n) Σ_{j≤n} (r(j) − c)²` are kept
//! as exact rationals; only the normalized statistic
//! `|e_n| · sqrt(ln n) / n^{1/4}` and exponent fits use floating point.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::compositions::Order;
use crate::error::{Error, Result};
use crate::intset::IntegerSet;
use crate::repcount::{count_ordered_le, count_ordered_lt, gf_series, RepTable};
use crate::series::TruncatedSeries;

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorProfile {
    pub c: BigRational,
    /// `e[n]` for `0 <= n <= N`.
    pub e: Vec<BigRational>,
    /// `mse[n - 1] = E_n` for `1 <= n <= N`; empty unless requested.
    pub mse: Vec<BigRational>,
    /// `ef_stat[n - 2]` for `2 <= n <= N`.
    pub ef_stat: Vec<f64>,
    /// Digest of the set the table was computed from.
    pub source: String,
}

impl ErrorProfile {
    pub fn limit(&self) -> usize {
        self.e.len() - 1
    }

    pub fn mse_at(&self, n: usize) -> Option<&BigRational> {
        n.checked_sub(1).and_then(|i| self.mse.get(i))
    }

    pub fn ef_stat_at(&self, n: usize) -> Option<f64> {
        n.checked_sub(2).and_then(|i| self.ef_stat.get(i).copied())
    }

    /// CSV with columns `n,e_n,E_n,ef_stat`; exact values written as `num/den`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,e_n,E_n,ef_stat\n");
        for n in 0..self.e.len() {
            let mse = self.mse_at(n).map(fraction).unwrap_or_default();
            let ef = self.ef_stat_at(n).map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = writeln!(out, "{n},{},{mse},{ef}", fraction(&self.e[n]));
        }
        out
    }
}

fn fraction(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Extremes of `E_n` and `ef_stat` over the tail window `[N/2, N]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailStats {
    pub from: usize,
    pub to: usize,
    pub min_mse: Option<String>,
    pub max_mse: Option<String>,
    pub min_ef_stat: Option<f64>,
    pub max_ef_stat: Option<f64>,
    /// `min{(c − ⌊c⌋)², (⌈c⌉ − c)²}`, a lower bound for every term `(r − c)²`.
    pub integrality_gap: String,
}

fn check_c(c: &BigRational) -> Result<()> {
    if c.is_negative() {
        return Err(Error::InvalidParameter(format!("constant {c} is negative")));
    }
    Ok(())
}

/// `(r − c) · q` as an integer, where `c = p/q`.
fn scaled_deviations<'a>(table: &'a RepTable, c: &'a BigRational) -> impl Iterator<Item = BigInt> + 'a {
    table
        .counts
        .iter()
        .map(move |r| BigInt::from(r.clone()) * c.denom() - c.numer())
}

fn ef_stat(e: &BigRational, n: usize) -> f64 {
    let e = e.abs().to_f64().unwrap_or(f64::INFINITY);
    let n = n as f64;
    e * n.ln().sqrt() / n.powf(0.25)
}

/// Exact partial sums `e_n` and the normalized statistic.
pub fn error_partial_sums(table: &RepTable, c: &BigRational) -> Result<ErrorProfile> {
    check_c(c)?;
    let q = c.denom().clone();
    let mut running = BigInt::zero();
    let e: Vec<BigRational> = scaled_deviations(table, c)
        .map(|d| {
            running += d;
            BigRational::new(running.clone(), q.clone())
        })
        .collect();
    let ef_stat = (2..e.len()).map(|n| ef_stat(&e[n], n)).collect();
    Ok(ErrorProfile {
        c: c.clone(),
        e,
        mse: Vec::new(),
        ef_stat,
        source: table.set_digest.clone(),
    })
}

/// Full profile including `E_n`, plus tail-window extremes.
pub fn mean_squared_error(table: &RepTable, c: &BigRational) -> Result<(ErrorProfile, TailStats)> {
    let mut profile = error_partial_sums(table, c)?;
    let q2 = c.denom() * c.denom();
    let mut running = BigInt::zero();
    profile.mse = scaled_deviations(table, c)
        .enumerate()
        .filter_map(|(n, d)| {
            running += &d * &d;
            (n >= 1).then(|| BigRational::new(running.clone(), &q2 * BigInt::from(n)))
        })
        .collect();
    let tail = tail_stats(&profile);
    Ok((profile, tail))
}

/// `min{(c − ⌊c⌋)², (⌈c⌉ − c)²}`.
pub fn integrality_gap(c: &BigRational) -> BigRational {
    let below = c - c.floor();
    let above = c.ceil() - c;
    let d = below.min(above);
    &d * &d
}

fn tail_stats(profile: &ErrorProfile) -> TailStats {
    let n = profile.limit();
    let from = n / 2;
    let window = from.max(1)..=n;
    let mse: Vec<&BigRational> = window.clone().filter_map(|i| profile.mse_at(i)).collect();
    let ef: Vec<f64> = window.filter_map(|i| profile.ef_stat_at(i)).collect();
    TailStats {
        from,
        to: n,
        min_mse: mse.iter().min().map(|q| fraction(q)),
        max_mse: mse.iter().max().map(|q| fraction(q)),
        min_ef_stat: ef.iter().copied().reduce(f64::min),
        max_ef_stat: ef.iter().copied().reduce(f64::max),
        integrality_gap: fraction(&integrality_gap(&profile.c)),
    }
}

fn check_window(table: &RepTable, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("window end must be >= 1".into()));
    }
    if n > table.limit() {
        return Err(Error::BeyondTruncation {
            requested: n as u64,
            limit: table.limit() as u64,
        });
    }
    Ok(())
}

/// Mean of `r(0..=n)`: the constant minimizing `Σ_{j≤n} (r(j) − c)²`.
pub fn best_constant(table: &RepTable, n: usize) -> Result<BigRational> {
    check_window(table, n)?;
    let total: BigInt = table.counts[..=n].iter().map(|r| BigInt::from(r.clone())).sum();
    Ok(BigRational::new(total, BigInt::from(n + 1)))
}

/// `E_n` at a single window end for an arbitrary constant.
pub fn mean_squared_error_at(table: &RepTable, c: &BigRational, n: usize) -> Result<BigRational> {
    check_window(table, n)?;
    let sum: BigInt = scaled_deviations(table, c).take(n + 1).map(|d| &d * &d).sum();
    Ok(BigRational::new(sum, c.denom() * c.denom() * BigInt::from(n)))
}

/// `(1 − z) Σ e_n z^n + c/(1 − z)`, truncated at the profile's limit.
pub fn main_identity_lhs(profile: &ErrorProfile) -> Result<TruncatedSeries> {
    let n = profile.limit();
    let e = TruncatedSeries::from_rationals(&profile.e);
    let mut one_minus_z = vec![BigInt::zero(); n + 1];
    one_minus_z[0] = 1.into();
    if n >= 1 {
        one_minus_z[1] = (-1).into();
    }
    let diff = e.multiply(&TruncatedSeries::from_integers(one_minus_z), n)?;
    diff.add_scaled(&profile.c, &TruncatedSeries::geometric(n), n)
}

/// First index where two series differ.
pub fn first_mismatch(a: &TruncatedSeries, b: &TruncatedSeries) -> Option<usize> {
    let len = a.order().max(b.order()) + 1;
    (0..len).find(|&n| {
        let x = (n <= a.order()).then(|| a.coeff(n));
        let y = (n <= b.order()).then(|| b.coeff(n));
        x != y
    })
}

#[derive(Clone, Debug)]
pub struct MainIdentityReport {
    pub k: u32,
    pub order: Order,
    pub c: BigRational,
    pub limit: usize,
    pub first_mismatch: Option<usize>,
}

impl MainIdentityReport {
    pub fn holds(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Builds the left side from DP counts and the right side from the weighted
/// dilation products, and compares them exactly.
pub fn check_main_identity(
    set: &IntegerSet,
    k: u32,
    order: Order,
    c: &BigRational,
    n: usize,
) -> Result<MainIdentityReport> {
    let (table, rhs) = rayon::join(
        || match order {
            Order::Le => count_ordered_le(set, k, n),
            Order::Lt => count_ordered_lt(set, k, n),
        },
        || gf_series(set, k, order, n),
    );
    let profile = error_partial_sums(&table?, c)?;
    let lhs = main_identity_lhs(&profile)?;
    Ok(MainIdentityReport {
        k,
        order,
        c: c.clone(),
        limit: n,
        first_mismatch: first_mismatch(&lhs, &rhs?),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub alpha: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `ln seq[n]` against `ln n` for `n` in `window`.
pub fn fit_exponent(seq: &[f64], window: RangeInclusive<usize>) -> Result<ExponentFit> {
    let (from, to) = (*window.start(), *window.end());
    if from == 0 || to <= from || to >= seq.len() {
        return Err(Error::InvalidParameter(format!(
            "fit window {from}:{to} must satisfy 1 <= from < to < {}",
            seq.len()
        )));
    }
    let mut points = Vec::with_capacity(to - from + 1);
    for n in window {
        let v = seq[n];
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "value {v} at index {n} is not positive"
            )));
        }
        points.push(((n as f64).ln(), v.ln()));
    }
    let len = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / len;
    let my = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let alpha = sxy / sxx;
    let ss_res = syy - alpha * sxy;
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ExponentFit { alpha, r_squared })
}

/// Parses `p/q` or a decimal such as `1.25` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Syntax(format!("{s:?} as a rational"));
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|ch| ch.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let q = BigRational::new(digits, scale);
    Ok(if neg { -q } else { q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intset::{construct_family, Family, FamilySpec};
    use crate::repcount::{count_linear_form, Method, Star};
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn table(counts: &[u64]) -> RepTable {
        RepTable {
            counts: counts.iter().map(|&c| BigUint::from(c)).collect(),
            k: 2,
            star: Star::Le,
            method: Method::Dp,
            set_digest: "test".into(),
            family_tag: None,
        }
    }

    #[test]
    fn naturals_partial_sums_are_quarter_squares() {
        let nat = construct_family(&FamilySpec::new(Family::Naturals, 500)).unwrap();
        let t = count_ordered_le(&nat, 2, 500).unwrap();
        let p = error_partial_sums(&t, &q(1, 1)).unwrap();
        for (n, e) in p.e.iter().enumerate() {
            assert_eq!(*e, q((n * n / 4) as i64, 1));
        }
    }

    #[test]
    fn moser_form_has_no_error() {
        let moser = construct_family(&FamilySpec::new(Family::Moser { k: 2 }, 400)).unwrap();
        let t = count_linear_form(&moser, &[1, 2], 400).unwrap();
        let p = error_partial_sums(&t, &q(1, 1)).unwrap();
        assert!(p.e.iter().all(Zero::is_zero));
        assert!(p.ef_stat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_table() {
        let p = error_partial_sums(&table(&[0; 6]), &q(1, 1)).unwrap();
        for (n, e) in p.e.iter().enumerate() {
            assert_eq!(*e, q(-(n as i64) - 1, 1));
        }
        assert_eq!(p.ef_stat.len(), 4);
        let expected = 3.0 * 2f64.ln().sqrt() / 2f64.powf(0.25);
        assert!((p.ef_stat_at(2).unwrap() - expected).abs() < 1e-15);
        assert!(error_partial_sums(&table(&[1]), &q(-1, 2)).is_err());
    }

    #[test]
    fn mean_squared_error_examples() {
        let (p, tail) = mean_squared_error(&table(&[2; 9]), &q(2, 1)).unwrap();
        assert!(p.mse.iter().all(Zero::is_zero));
        assert_eq!(tail.min_mse.as_deref(), Some("0/1"));

        let alternating: Vec<u64> = (0..21).map(|n| (n + 1) % 2).collect();
        let (p, tail) = mean_squared_error(&table(&alternating), &q(1, 2)).unwrap();
        for n in 1..=20i64 {
            assert_eq!(*p.mse_at(n as usize).unwrap(), q(n + 1, 4 * n));
        }
        assert_eq!(tail.integrality_gap, "1/4");
        assert_eq!((tail.from, tail.to), (10, 20));
        assert_eq!(tail.max_mse.as_deref(), Some("11/40"));
    }

    #[test]
    fn integrality_gap_bound() {
        assert_eq!(integrality_gap(&q(3, 2)), q(1, 4));
        assert_eq!(integrality_gap(&q(7, 3)), q(1, 9));
        assert_eq!(integrality_gap(&q(2, 1)), q(0, 1));
        let t = table(&[0, 3, 1, 4, 1, 5, 9, 2, 6]);
        let c = q(7, 3);
        let (p, _) = mean_squared_error(&t, &c).unwrap();
        for n in 1..=8usize {
            let bound = integrality_gap(&c) * q(n as i64 + 1, n as i64);
            assert!(*p.mse_at(n).unwrap() >= bound);
        }
    }

    #[test]
    fn best_constant_examples() {
        assert_eq!(best_constant(&table(&[1, 1, 1, 1]), 3).unwrap(), q(1, 1));
        assert_eq!(best_constant(&table(&[0, 2]), 1).unwrap(), q(1, 1));
        assert_eq!(best_constant(&table(&[1, 2, 3]), 2).unwrap(), q(2, 1));
        assert!(best_constant(&table(&[1, 2, 3]), 0).is_err());
        assert!(best_constant(&table(&[1, 2, 3]), 3).is_err());
    }

    #[test]
    fn main_identity_small() {
        let a = IntegerSet::finite(vec![0, 1, 3]);
        assert!(check_main_identity(&a, 2, Order::Le, &q(1, 1), 6).unwrap().holds());
        let b = IntegerSet::finite(vec![1, 4, 5, 11]);
        for order in [Order::Le, Order::Lt] {
            let r = check_main_identity(&b, 3, order, &q(0, 1), 30).unwrap();
            assert!(r.holds());
        }
    }

    #[test]
    fn corrupted_partial_sums_are_caught() {
        let a = IntegerSet::finite(vec![0, 2, 3, 7, 8]);
        let t = count_ordered_lt(&a, 2, 20).unwrap();
        let c = q(3, 2);
        let mut p = error_partial_sums(&t, &c).unwrap();
        let rhs = gf_series(&a, 2, Order::Lt, 20).unwrap();
        assert_eq!(first_mismatch(&main_identity_lhs(&p).unwrap(), &rhs), None);
        p.e[9] += q(1, 3);
        assert_eq!(first_mismatch(&main_identity_lhs(&p).unwrap(), &rhs), Some(9));
    }

    #[test]
    fn exponent_fits() {
        let square: Vec<f64> = (0..200).map(|n| (n * n) as f64).collect();
        let fit = fit_exponent(&square, 1..=199).unwrap();
        assert!((fit.alpha - 2.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let quartic: Vec<f64> = (0..200).map(|n| 5.0 * (n as f64).powf(0.25)).collect();
        assert!((fit_exponent(&quartic, 10..=150).unwrap().alpha - 0.25).abs() < 1e-9);
        let flat = vec![3.0; 50];
        assert!(fit_exponent(&flat, 1..=49).unwrap().alpha.abs() < 1e-9);
        assert!(fit_exponent(&square, 0..=10).is_err());
        let mut holes = square.clone();
        holes[5] = 0.0;
        assert!(fit_exponent(&holes, 1..=10).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/2").unwrap(), q(3, 2));
        assert_eq!(parse_rational("1.25").unwrap(), q(5, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        for bad in ["", "1/0", "x", "1.2.3", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn recurrence_and_padding(
            counts in prop::collection::vec(0u64..6, 2..40),
            p in 0i64..12, d in 1i64..5,
        ) {
            let c = q(p, d);
            let prof = error_partial_sums(&table(&counts), &c).unwrap();
            for (n, &count) in counts.iter().enumerate().skip(1) {
                prop_assert_eq!(&prof.e[n] - &prof.e[n - 1], q(count as i64, 1) - &c);
            }
            // Appending r(n) = c leaves e frozen.
            if c.is_integer() {
                let mut padded = counts.clone();
                padded.extend(std::iter::repeat_n(c.to_integer().to_u64().unwrap(), 5));
                let longer = error_partial_sums(&table(&padded), &c).unwrap();
                prop_assert_eq!(&longer.e[..counts.len()], &prof.e[..]);
                let last = prof.e.last().unwrap();
                prop_assert!(longer.e[counts.len()..].iter().all(|e| e == last));
            }
        }

        #[test]
        fn mean_minimizes_squared_error(counts in prop::collection::vec(0u64..9, 2..30)) {
            let t = table(&counts);
            let n = counts.len() - 1;
            let best = best_constant(&t, n).unwrap();
            let at_best = mean_squared_error_at(&t, &best, n).unwrap();
            for shift in [q(1, 1), q(-1, 1), q(1, 7)] {
                let other = &best + shift;
                if !other.is_negative() {
                    prop_assert!(at_best <= mean_squared_error_at(&t, &other, n).unwrap());
                }
            }
        }
    }
}
