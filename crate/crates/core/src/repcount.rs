//! Ordered representation counts, computed two independent ways.
//!
//! The dynamic-programming route walks the elements of the set once, as a
//! bounded (`<`) or unbounded (`≤`) knapsack over `(parts used, sum)` states.
//! The generating-function route evaluates
//! `Σ_λ w_λ ∏_{p ∈ λ} f_A(z^p)` over partitions `λ` of `k`, using the grouped
//! weights from [`crate::compositions`]. Agreement of the two is checked by
//! [`verify_identity`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::compositions::{group_by_partition, GroupedPartitionTerm, Order};
use crate::error::{Error, Result};
use crate::intset::{indicator, IntegerSet};
use crate::series::TruncatedSeries;

/// Version of the persisted [`RepTable`] JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Which representation function a table holds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Star {
    Le,
    Lt,
    /// Ordered `k`-tuples without constraint, `r_k`.
    Full,
    /// `#{(a_1..a_l) : Σ k_i a_i = n}` for the given coefficients.
    LinearForm(Vec<u32>),
}

impl From<Order> for Star {
    fn from(o: Order) -> Self {
        match o {
            Order::Le => Star::Le,
            Order::Lt => Star::Lt,
        }
    }
}

impl fmt::Display for Star {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Star::Le => f.write_str("le"),
            Star::Lt => f.write_str("lt"),
            Star::Full => f.write_str("full"),
            Star::LinearForm(c) => {
                let parts: Vec<String> = c.iter().map(u32::to_string).collect();
                write!(f, "form:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for Star {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "le" => Ok(Star::Le),
            "lt" => Ok(Star::Lt),
            "full" => Ok(Star::Full),
            _ => {
                let coeffs = s
                    .strip_prefix("form:")
                    .ok_or_else(|| Error::Syntax(format!("star {s:?}")))?;
                Ok(Star::LinearForm(parse_coeffs(coeffs)?))
            }
        }
    }
}

pub fn parse_coeffs(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<u32>()
                .map_err(|_| Error::Syntax(format!("coefficient {c:?}")))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Dp,
    Gf,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dp => "dp",
            Method::Gf => "gf",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dp" => Ok(Method::Dp),
            "gf" => Ok(Method::Gf),
            other => Err(Error::Syntax(format!("method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepTable {
    /// `counts[n]` for `0 <= n <= limit`.
    pub counts: Vec<BigUint>,
    pub k: u32,
    pub star: Star,
    pub method: Method,
    pub set_digest: String,
    pub family_tag: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RepTableRecord {
    counts: Vec<String>,
    family_tag: Option<String>,
    k: u32,
    limit: usize,
    method: String,
    schema_version: u32,
    set_digest: String,
    star: String,
}

impl RepTable {
    fn new(counts: Vec<BigUint>, k: u32, star: Star, method: Method, set: &IntegerSet) -> Self {
        RepTable {
            counts,
            k,
            star,
            method,
            set_digest: set.digest(),
            family_tag: set.family_tag().map(str::to_string),
        }
    }

    pub fn limit(&self) -> usize {
        self.counts.len() - 1
    }

    /// First index where the counts differ, if any.
    pub fn first_difference(&self, other: &RepTable) -> Option<usize> {
        let len = self.counts.len().max(other.counts.len());
        (0..len).find(|&n| self.counts.get(n) != other.counts.get(n))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,count\n");
        for (n, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{n},{c}\n"));
        }
        out
    }

    /// Canonical JSON (sorted keys). Counts are decimal strings so no
    /// magnitude is lost.
    pub fn to_json(&self) -> String {
        let record = RepTableRecord {
            counts: self.counts.iter().map(BigUint::to_string).collect(),
            family_tag: self.family_tag.clone(),
            k: self.k,
            limit: self.limit(),
            method: self.method.to_string(),
            schema_version: SCHEMA_VERSION,
            set_digest: self.set_digest.clone(),
            star: self.star.to_string(),
        };
        let value = serde_json::to_value(record).expect("record serializes");
        serde_json::to_string_pretty(&value).expect("value serializes") + "\n"
    }

    /// Parses and validates the persisted form. Rejects other schema versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let record: RepTableRecord = serde_json::from_str(text)?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                record.schema_version
            )));
        }
        if record.counts.len() != record.limit + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} counts for limit {}",
                record.counts.len(),
                record.limit
            )));
        }
        let counts = record
            .counts
            .iter()
            .map(|c| {
                c.parse::<BigUint>()
                    .map_err(|_| Error::InvalidParameter(format!("bad count {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RepTable {
            counts,
            k: record.k,
            star: record.star.parse()?,
            method: record.method.parse()?,
            set_digest: record.set_digest,
            family_tag: record.family_tag,
        })
    }
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    Ok(())
}

fn bound(n: usize) -> u64 {
    n as u64
}

/// Counter cell for the DP tables: `u64` first, promoted to `BigUint` on overflow.
trait Counter: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    /// Returns false on overflow.
    fn add_from(&mut self, other: &Self) -> bool;
    fn into_big(self) -> BigUint;
}

impl Counter for u64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn add_from(&mut self, other: &Self) -> bool {
        match self.checked_add(*other) {
            Some(v) => {
                *self = v;
                true
            }
            None => false,
        }
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Counter for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add_from(&mut self, other: &Self) -> bool {
        *self += other;
        true
    }
    fn into_big(self) -> BigUint {
        self
    }
}

/// Knapsack over `(parts used j <= k, sum s <= n)`, one pass over the elements.
/// `Le` reads the row below after it has absorbed the current element
/// (unlimited repetition); `Lt` reads it before (each element at most once).
fn ordered_dp<C: Counter>(elements: &[u64], k: usize, n: usize, order: Order) -> Option<Vec<C>> {
    let width = n + 1;
    let mut dp = vec![C::zero(); (k + 1) * width];
    dp[0] = C::one();
    let rows: Vec<usize> = match order {
        Order::Le => (1..=k).collect(),
        Order::Lt => (1..=k).rev().collect(),
    };
    for &a in elements {
        let a = a as usize;
        if a > n {
            break;
        }
        for &j in &rows {
            let (lo, hi) = dp.split_at_mut(j * width);
            let prev = &lo[(j - 1) * width..];
            let cur = &mut hi[..width];
            for s in a..=n {
                if !cur[s].add_from(&prev[s - a]) {
                    return None;
                }
            }
        }
    }
    Some(dp.split_off(k * width))
}

fn full_dp<C: Counter>(elements: &[u64], k: usize, n: usize) -> Option<Vec<C>> {
    let mut row = vec![C::zero(); n + 1];
    row[0] = C::one();
    for _ in 0..k {
        let mut next = vec![C::zero(); n + 1];
        for (s, v) in row.iter().enumerate() {
            for &a in elements {
                let t = s + a as usize;
                if t > n {
                    break;
                }
                if !next[t].add_from(v) {
                    return None;
                }
            }
        }
        row = next;
    }
    Some(row)
}

fn promote<F, G>(fast: F, slow: G) -> Vec<BigUint>
where
    F: FnOnce() -> Option<Vec<u64>>,
    G: FnOnce() -> Option<Vec<BigUint>>,
{
    match fast() {
        Some(v) => v.into_iter().map(Counter::into_big).collect(),
        None => slow().expect("big-integer counters never overflow"),
    }
}

fn count_ordered(set: &IntegerSet, k: u32, n: usize, order: Order) -> Result<RepTable> {
    check_k(k)?;
    let elements = set.elements_up_to(bound(n))?;
    let ku = k as usize;
    let counts = promote(
        || ordered_dp::<u64>(elements, ku, n, order),
        || ordered_dp::<BigUint>(elements, ku, n, order),
    );
    Ok(RepTable::new(counts, k, order.into(), Method::Dp, set))
}

/// `r≤_k(A, n)` for `0 <= n <= N` by dynamic programming.
pub fn count_ordered_le(set: &IntegerSet, k: u32, n: usize) -> Result<RepTable> {
    count_ordered(set, k, n, Order::Le)
}

/// `r<_k(A, n)` for `0 <= n <= N` by dynamic programming.
pub fn count_ordered_lt(set: &IntegerSet, k: u32, n: usize) -> Result<RepTable> {
    count_ordered(set, k, n, Order::Lt)
}

/// `r_k(A, n)` as the coefficients of `f_A(z)^k`.
pub fn count_full(set: &IntegerSet, k: u32, n: usize) -> Result<RepTable> {
    check_k(k)?;
    let f = set_series(set, n)?;
    let mut acc = f.clone();
    for _ in 1..k {
        acc = acc.multiply(&f, n)?;
    }
    Ok(RepTable::new(series_counts(&acc)?, k, Star::Full, Method::Gf, set))
}

/// `r_k(A, n)` by iterated sumset DP, independent of the series code.
pub fn count_full_dp(set: &IntegerSet, k: u32, n: usize) -> Result<RepTable> {
    check_k(k)?;
    let elements = set.elements_up_to(bound(n))?;
    let ku = k as usize;
    let counts = promote(
        || full_dp::<u64>(elements, ku, n),
        || full_dp::<BigUint>(elements, ku, n),
    );
    Ok(RepTable::new(counts, k, Star::Full, Method::Dp, set))
}

/// `f_A(z)` truncated at `n`.
pub fn set_series(set: &IntegerSet, n: usize) -> Result<TruncatedSeries> {
    TruncatedSeries::from_indicator(&indicator(set, bound(n))?, n)
}

/// `Σ_λ w_λ ∏_{p ∈ λ} f_A(z^p)` for the grouped weights of `(k, order)`.
pub fn gf_series(set: &IntegerSet, k: u32, order: Order, n: usize) -> Result<TruncatedSeries> {
    gf_series_with_terms(set, &group_by_partition(k, order)?, n)
}

/// Same as [`gf_series`] with caller-supplied weighted terms.
pub fn gf_series_with_terms(
    set: &IntegerSet,
    terms: &[GroupedPartitionTerm],
    n: usize,
) -> Result<TruncatedSeries> {
    let f = set_series(set, n)?;
    let mut products = ProductCache::new(&f, n);
    let mut acc = TruncatedSeries::zero(n);
    for term in terms {
        let product = products.product(&term.flat_parts())?;
        acc = acc.add_scaled(&term.weight, &product, n)?;
    }
    Ok(acc)
}

/// Dilations `f(z^i)` and products of them, keyed by ascending part lists so
/// that a partition reuses the product of its prefix.
struct ProductCache<'a> {
    f: &'a TruncatedSeries,
    n: usize,
    dilations: BTreeMap<u32, TruncatedSeries>,
    products: HashMap<Vec<u32>, TruncatedSeries>,
}

impl<'a> ProductCache<'a> {
    fn new(f: &'a TruncatedSeries, n: usize) -> Self {
        ProductCache {
            f,
            n,
            dilations: BTreeMap::new(),
            products: HashMap::new(),
        }
    }

    fn dilation(&mut self, i: u32) -> Result<TruncatedSeries> {
        if let Some(d) = self.dilations.get(&i) {
            return Ok(d.clone());
        }
        let d = self.f.dilate(i as usize, self.n)?;
        self.dilations.insert(i, d.clone());
        Ok(d)
    }

    fn product(&mut self, parts: &[u32]) -> Result<TruncatedSeries> {
        if let Some(p) = self.products.get(parts) {
            return Ok(p.clone());
        }
        let (&last, prefix) = parts.split_last().expect("partitions are nonempty");
        let value = if prefix.is_empty() {
            self.dilation(last)?
        } else {
            let head = self.product(prefix)?;
            head.multiply(&self.dilation(last)?, self.n)?
        };
        self.products.insert(parts.to_vec(), value.clone());
        Ok(value)
    }
}

/// Reads a series as a table of counts, refusing anything that is not a
/// non-negative integer.
fn series_counts(series: &TruncatedSeries) -> Result<Vec<BigUint>> {
    series
        .numerators()
        .iter()
        .enumerate()
        .map(|(n, c)| {
            if !series.is_integral() || c.is_negative() {
                return Err(Error::NotACount {
                    n,
                    value: series.coeff(n).to_string(),
                });
            }
            Ok(c.magnitude().clone())
        })
        .collect()
}

/// `r⋆_k(A, n)` through the generating-function encoding.
pub fn count_gf(set: &IntegerSet, k: u32, order: Order, n: usize) -> Result<RepTable> {
    check_k(k)?;
    let series = gf_series(set, k, order, n)?;
    Ok(RepTable::new(series_counts(&series)?, k, order.into(), Method::Gf, set))
}

/// `r_{k_1..k_l}(A, n)` as the truncated product `∏ f_A(z^{k_i})`.
pub fn count_linear_form(set: &IntegerSet, coeffs: &[u32], n: usize) -> Result<RepTable> {
    if coeffs.is_empty() {
        return Err(Error::InvalidParameter("need at least one coefficient".into()));
    }
    if coeffs.contains(&0) {
        return Err(Error::InvalidParameter("coefficients must be >= 1".into()));
    }
    let f = set_series(set, n)?;
    let mut cache = ProductCache::new(&f, n);
    let mut acc = TruncatedSeries::one(n);
    for &c in coeffs {
        acc = acc.multiply(&cache.dilation(c)?, n)?;
    }
    Ok(RepTable::new(
        series_counts(&acc)?,
        coeffs.len() as u32,
        Star::LinearForm(coeffs.to_vec()),
        Method::Gf,
        set,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub n: usize,
    pub dp: BigUint,
    pub gf: BigRational,
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub k: u32,
    pub order: Order,
    pub limit: usize,
    pub dp: RepTable,
    pub first_mismatch: Option<Mismatch>,
}

impl IdentityReport {
    pub fn agrees(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Compares the DP counts against the generating-function encoding coefficient by coefficient.
pub fn verify_identity(set: &IntegerSet, k: u32, order: Order, n: usize) -> Result<IdentityReport> {
    verify_identity_with_terms(set, k, order, &group_by_partition(k, order)?, n)
}

/// [`verify_identity`] against arbitrary weighted terms (e.g. deliberately corrupted ones).
pub fn verify_identity_with_terms(
    set: &IntegerSet,
    k: u32,
    order: Order,
    terms: &[GroupedPartitionTerm],
    n: usize,
) -> Result<IdentityReport> {
    let (dp, gf) = rayon::join(
        || count_ordered(set, k, n, order),
        || gf_series_with_terms(set, terms, n),
    );
    let (dp, gf) = (dp?, gf?);
    let first_mismatch = (0..=n).find_map(|i| {
        let expected = BigRational::from_integer(BigInt::from(dp.counts[i].clone()));
        let got = gf.coeff(i);
        (expected != got).then(|| Mismatch {
            n: i,
            dp: dp.counts[i].clone(),
            gf: got,
        })
    });
    Ok(IdentityReport {
        k,
        order,
        limit: n,
        dp,
        first_mismatch,
    })
}
