//! Integrals over circles `|z| = r` with normalized arc measure, and finite
//! checks of the integral inequalities built from them.
//!
//! Integrands are products of polynomials (evaluated in double precision by
//! Horner from exact coefficients), the smoothing kernel
//! `h_M(z) = 1 + z + … + z^{M−1}` and powers of `1/(1 − z)`. The integral is
//! the uniform-node average; nodes are evaluated in parallel and summed in a
//! fixed order with compensation, so results do not depend on thread count.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::intset::IntegerSet;
use crate::repcount::set_series;
use crate::series::TruncatedSeries;

/// Node floor for integrands that are not trigonometric polynomials.
const SINGULAR_NODES_PER_GAP: f64 = 64.0;

/// `h_M(z) = (1 − z^M)/(1 − z)`, with value `M` at `z = 1`.
pub fn kernel_eval(m: u64, z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let gap = (one - z).norm();
    if gap == 0.0 {
        return Complex64::new(m as f64, 0.0);
    }
    if gap < 1e-6 || m <= 8 {
        // Direct sum where the closed form would cancel badly.
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..m {
            acc = acc * z + one;
        }
        return acc;
    }
    (one - z.powu(m as u32)) / (one - z)
}

/// `h_M` as an exact truncated series.
pub fn kernel_series(m: u64, order: usize) -> TruncatedSeries {
    let coeffs = (0..=order)
        .map(|n| BigInt::from(u8::from((n as u64) < m)))
        .collect();
    TruncatedSeries::from_integers(coeffs)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("radius {r} outside (0, 1)")));
    }
    Ok(())
}

fn check_smoothing_radius(r: f64) -> Result<()> {
    if !(r > 0.5 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("radius {r} outside (1/2, 1)")));
    }
    Ok(())
}

/// `k! · ⌈eps · (−1/ln(1 − r)) / (1 − r)^{1/2}⌉`.
pub fn smoothing_length(r: f64, k: u32, eps: f64) -> Result<u64> {
    check_smoothing_radius(r)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps {eps} must be positive")));
    }
    let inner = eps * (-1.0 / (1.0 - r).ln()) / (1.0 - r).sqrt();
    let fact: u64 = (1..=k as u64).product();
    Ok(fact * inner.ceil() as u64)
}

/// Smallest `N` with `r^{N+1}/(1 − r) < tail`, the truncation at which a
/// series with coefficients in `{0, 1}` is within `tail` of its full value on `|z| = r`.
pub fn truncation_order(r: f64, tail: f64) -> usize {
    ((tail * (1.0 - r)).ln() / r.ln()).ceil().max(1.0) as usize
}

/// Coefficients of an exactly known polynomial, rounded once to `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(Vec<f64>);

impl Poly {
    pub fn from_series(s: &TruncatedSeries) -> Self {
        Poly(
            s.coeffs()
                .iter()
                .map(|c| c.to_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

#[derive(Clone, Debug)]
pub enum Factor {
    /// `P(z^dilation)^power`.
    Series { poly: Poly, dilation: u32, power: u32 },
    /// `h_M(z)^power`.
    Kernel { m: u64, power: u32 },
    /// `(1 − z)^{−power}`.
    SingularAtOne { power: u32 },
}

impl Factor {
    fn degree(&self) -> Option<usize> {
        match self {
            Factor::Series { poly, dilation, power } => {
                Some(poly.degree() * *dilation as usize * *power as usize)
            }
            Factor::Kernel { m, power } => Some(m.saturating_sub(1) as usize * *power as usize),
            Factor::SingularAtOne { .. } => None,
        }
    }

    fn eval(&self, r: f64, theta: f64) -> Complex64 {
        match self {
            Factor::Series { poly, dilation, power } => {
                let i = *dilation as i32;
                let w = Complex64::from_polar(r.powi(i), theta * i as f64);
                poly.eval(w).powu(*power)
            }
            Factor::Kernel { m, power } => {
                kernel_eval(*m, Complex64::from_polar(r, theta)).powu(*power)
            }
            Factor::SingularAtOne { power } => {
                (Complex64::new(1.0, 0.0) - Complex64::from_polar(r, theta))
                    .powu(*power)
                    .inv()
            }
        }
    }
}

/// `∫_{|z|=r} |∏ factors|^abs_power dμ` on `nodes` uniform nodes.
#[derive(Clone, Debug)]
pub struct QuadratureSpec {
    pub r: f64,
    pub nodes: usize,
    pub factors: Vec<Factor>,
    pub abs_power: f64,
    /// Demand the trigonometric-polynomial exactness regime.
    pub exact: bool,
}

impl QuadratureSpec {
    /// Uses [`default_nodes`] for the node count.
    pub fn new(r: f64, factors: Vec<Factor>, abs_power: f64) -> Result<Self> {
        check_radius(r)?;
        let mut spec = QuadratureSpec {
            r,
            nodes: 1,
            factors,
            abs_power,
            exact: false,
        };
        spec.nodes = default_nodes(r, spec.degree());
        Ok(spec)
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn exact(mut self) -> Self {
        self.exact = true;
        self
    }

    /// Total polynomial degree of the product, or `None` with a singular factor.
    pub fn degree(&self) -> Option<usize> {
        self.factors.iter().map(Factor::degree).sum()
    }

    fn value(&self, theta: f64) -> f64 {
        let product = self
            .factors
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.eval(self.r, theta));
        if self.abs_power == 2.0 {
            product.norm_sqr()
        } else {
            product.norm().powf(self.abs_power)
        }
    }
}

/// `max(2·degree + 1, ⌈64/(1 − r)⌉)`.
pub fn default_nodes(r: f64, degree: Option<usize>) -> usize {
    let floor = (SINGULAR_NODES_PER_GAP / (1.0 - r)).ceil() as usize;
    match degree {
        Some(d) => (2 * d + 1).max(floor),
        None => floor,
    }
}

/// Neumaier-compensated sum in slice order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn node_angle(q: usize, nodes: usize) -> f64 {
    2.0 * PI * q as f64 / nodes as f64
}

/// Uniform-node average of several per-node quantities at once.
fn average_many<const K: usize, F>(nodes: usize, f: F) -> [f64; K]
where
    F: Fn(f64) -> [f64; K] + Sync,
{
    let values: Vec<[f64; K]> = (0..nodes)
        .into_par_iter()
        .map(|q| f(node_angle(q, nodes)))
        .collect();
    std::array::from_fn(|j| {
        let column: Vec<f64> = values.iter().map(|v| v[j]).collect();
        compensated_sum(&column) / nodes as f64
    })
}

pub fn circle_integral(spec: &QuadratureSpec) -> Result<f64> {
    check_radius(spec.r)?;
    if spec.nodes == 0 {
        return Err(Error::InvalidParameter("need at least one node".into()));
    }
    if spec.exact {
        let degree = spec.degree().ok_or_else(|| {
            Error::InvalidParameter("exact quadrature needs a polynomial integrand".into())
        })?;
        if spec.abs_power != 2.0 {
            return Err(Error::InvalidParameter(
                "exact quadrature needs abs_power = 2".into(),
            ));
        }
        if spec.nodes < 2 * degree + 1 {
            return Err(Error::QuadratureTooCoarse {
                q: spec.nodes,
                degree,
                need: 2 * degree + 1,
            });
        }
    }
    let [v] = average_many(spec.nodes, |t| [spec.value(t)]);
    Ok(v)
}

/// One evaluated grid point of a check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub label: String,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Check-specific secondary quantity (see each check).
    pub aux: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub params: BTreeMap<String, String>,
    pub rows: Vec<CheckRow>,
    /// False for report-only checks, whose verdict is always true.
    pub asserted: bool,
    pub passed: bool,
    pub note: Option<String>,
}

impl CheckReport {
    fn new(check: &str, params: &[(&str, String)], rows: Vec<CheckRow>, asserted: bool) -> Self {
        let passed = !asserted || rows.iter().all(|r| r.pass);
        CheckReport {
            check: check.to_string(),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            rows,
            asserted,
            passed,
            note: None,
        }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }

    fn with_trend(mut self, trend_ok: bool, what: &str) -> Self {
        if self.asserted && !trend_ok {
            self.passed = false;
        }
        self.note = Some(format!(
            "{what}: {}",
            if trend_ok { "decreasing" } else { "not decreasing" }
        ));
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,label,r,lhs,rhs,ratio,aux,verdict\n");
        for row in &self.rows {
            let verdict = match (self.asserted, row.pass) {
                (false, _) => "report",
                (true, true) => "pass",
                (true, false) => "fail",
            };
            let aux = row.aux.map(|a| format!("{a:e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{aux},{verdict}",
                self.check, row.label, row.r, row.lhs, row.rhs, row.ratio
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("value serializes") + "\n"
    }
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Exact `Σ b_n² s^n` for a rational `s` in `(0, 1)`.
fn squared_coefficients_at(g: &TruncatedSeries, s: &BigRational) -> Result<f64> {
    let squares: Vec<BigRational> = g.coeffs().iter().map(|c| c * c).collect();
    let value = TruncatedSeries::from_rationals(&squares).eval_real(s)?;
    Ok(value.to_f64().unwrap_or(f64::NAN))
}

fn exact_radius(r: f64) -> Result<BigRational> {
    BigRational::from_float(r)
        .ok_or_else(|| Error::InvalidParameter(format!("radius {r} is not finite")))
}

pub const PARSEVAL_TOL: f64 = 1e-9;

/// `∫|g|² dμ = Σ b_n² r^{2n}` with `nodes >= 2·order + 1`, plus the lower
/// bound `∫|g|^k dμ ≥ g(r²)^{k/2}` for each requested `k >= 2`.
///
/// The lower-bound integrals use `max(nodes, k·(order+1)+1, ⌈64/(1−r)⌉)` nodes.
pub fn check_parseval(g: &TruncatedSeries, r: f64, nodes: usize, ks: &[u32]) -> Result<CheckReport> {
    check_radius(r)?;
    if g.coeffs().iter().any(|c| c < &BigRational::from_integer(0.into())) {
        return Err(Error::InvalidParameter("coefficients must be non-negative".into()));
    }
    let order = g.order();
    let poly = Poly::from_series(g);
    let spec = QuadratureSpec {
        r,
        nodes,
        factors: vec![Factor::Series { poly: poly.clone(), dilation: 1, power: 1 }],
        abs_power: 2.0,
        exact: true,
    };
    let lhs = circle_integral(&spec)?;
    let r_exact = exact_radius(r)?;
    let r2 = &r_exact * &r_exact;
    let rhs = squared_coefficients_at(g, &r2)?;
    let rel = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
    let mut rows = vec![CheckRow {
        label: "parseval".into(),
        r,
        lhs,
        rhs,
        ratio: lhs / rhs,
        aux: Some(rel),
        pass: rel <= PARSEVAL_TOL,
    }];
    let g_r2 = g.eval_real(&r2)?.to_f64().unwrap_or(f64::NAN);
    for &k in ks {
        if k < 2 {
            return Err(Error::InvalidParameter("lower bound needs k >= 2".into()));
        }
        let nodes_k = nodes
            .max(k as usize * (order + 1) + 1)
            .max(default_nodes(r, None));
        let spec_k = QuadratureSpec {
            r,
            nodes: nodes_k,
            factors: spec.factors.clone(),
            abs_power: k as f64,
            exact: false,
        };
        let lhs = circle_integral(&spec_k)?;
        let rhs = g_r2.powf(k as f64 / 2.0);
        rows.push(CheckRow {
            label: format!("lower k={k}"),
            r,
            lhs,
            rhs,
            ratio: lhs / rhs,
            aux: None,
            pass: lhs >= rhs * (1.0 - PARSEVAL_TOL),
        });
    }
    Ok(CheckReport::new(
        "parseval",
        &[("order", order.to_string()), ("nodes", nodes.to_string())],
        rows,
        true,
    ))
}

pub const PRODUCT_TOL: f64 = 1e-6;
/// Truncation target for series entering the inequality checks.
pub const SERIES_TAIL: f64 = 1e-18;

/// Parameters of one product-inequality evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductParams {
    pub m_kernel: u64,
    pub k: u32,
    pub m: u32,
    pub i: u32,
}

/// `∫|f(z^i)^m h_M²| ≤ (∫|f^k h_M²|) · i² · (∫|f|²)^{−(k−m)/2}` at radius `r`.
///
/// `aux` holds `lhs / ∫|f^k h_M²|`. The set is truncated at
/// [`truncation_order`]`(r, SERIES_TAIL)`, which must not exceed its limit.
pub fn check_product_inequality(set: &IntegerSet, p: ProductParams, r: f64) -> Result<CheckRow> {
    check_smoothing_radius(r)?;
    let ProductParams { m_kernel, k, m, i } = p;
    if i == 0 || m_kernel == 0 || m_kernel % i as u64 != 0 {
        return Err(Error::InvalidParameter(format!("i = {i} must divide M = {m_kernel}")));
    }
    if m == 0 || m > k {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= k, got m = {m}, k = {k}")));
    }
    let n = truncation_order(r, SERIES_TAIL);
    let poly = Poly::from_series(&set_series(set, n)?);
    let degree = (k as usize * n).max(m as usize * i as usize * n) + 2 * (m_kernel as usize - 1);
    let nodes = default_nodes(r, Some(degree));
    let [lhs, a, b] = average_many(nodes, |theta| {
        let z = Complex64::from_polar(r, theta);
        let zi = Complex64::from_polar(r.powi(i as i32), theta * i as f64);
        let h2 = kernel_eval(m_kernel, z).norm_sqr();
        let fz = poly.eval(z).norm();
        let fi = poly.eval(zi).norm();
        [fi.powi(m as i32) * h2, fz.powi(k as i32) * h2, fz * fz]
    });
    let rhs = a * (i as f64).powi(2) * b.powf(-((k - m) as f64) / 2.0);
    // Each truncated factor is within SERIES_TAIL of the full series.
    let allowance = PRODUCT_TOL + (k + m) as f64 * SERIES_TAIL;
    Ok(CheckRow {
        label: format!("M={m_kernel} k={k} m={m} i={i}"),
        r,
        lhs,
        rhs,
        ratio: lhs / rhs,
        aux: Some(lhs / a),
        pass: lhs <= rhs * (1.0 + allowance),
    })
}

/// [`check_product_inequality`] along a radius grid at fixed `M`. With
/// `trend`, also requires `lhs/∫|f^k h_M²|` to decrease; the trend of
/// `lhs/rhs` is only noted.
pub fn check_product_grid(
    set: &IntegerSet,
    p: ProductParams,
    grid: &[f64],
    trend: bool,
) -> Result<CheckReport> {
    let rows = grid
        .iter()
        .map(|&r| check_product_inequality(set, p, r))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let normalized: Vec<f64> = rows.iter().filter_map(|r| r.aux).collect();
    let report = CheckReport::new("product", &params_of(set, p), rows, true);
    if !trend {
        return Ok(report);
    }
    let mut report = report.with_trend(strictly_decreasing(&normalized), "lhs/∫|f^k h²|");
    let slack = if strictly_decreasing(&ratios) { "decreasing" } else { "not decreasing" };
    if let Some(note) = report.note.as_mut() {
        note.push_str(&format!("; lhs/rhs: {slack}"));
    }
    Ok(report)
}

/// Whether `lhs/rhs` strictly decreases along the report's rows.
pub fn ratio_decreasing(report: &CheckReport) -> bool {
    strictly_decreasing(&report.rows.iter().map(|r| r.ratio).collect::<Vec<_>>())
}

fn params_of(set: &IntegerSet, p: ProductParams) -> Vec<(&'static str, String)> {
    vec![
        ("set", set.family_tag().unwrap_or("file").to_string()),
        ("M", p.m_kernel.to_string()),
        ("k", p.k.to_string()),
        ("m", p.m.to_string()),
        ("i", p.i.to_string()),
    ]
}

/// Ratio `∫|f(z^i)^m| / ∫|f^k|` along the grid; asserted to decrease.
pub fn check_no_kernel_inequality(set: &IntegerSet, k: u32, m: u32, i: u32, grid: &[f64]) -> Result<CheckReport> {
    if m >= k {
        return Err(Error::InvalidParameter(format!("need m < k, got m = {m}, k = {k}")));
    }
    if i == 0 {
        return Err(Error::InvalidParameter("i must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &r in grid {
        check_smoothing_radius(r)?;
        let n = truncation_order(r, SERIES_TAIL);
        let poly = Poly::from_series(&set_series(set, n)?);
        let nodes = default_nodes(r, Some(k as usize * n));
        let [lhs, rhs] = average_many(nodes, |theta| {
            let z = Complex64::from_polar(r, theta);
            let zi = Complex64::from_polar(r.powi(i as i32), theta * i as f64);
            [poly.eval(zi).norm().powi(m as i32), poly.eval(z).norm().powi(k as i32)]
        });
        rows.push(CheckRow {
            label: format!("k={k} m={m} i={i}"),
            r,
            lhs,
            rhs,
            ratio: lhs / rhs,
            aux: None,
            pass: true,
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    Ok(CheckReport::new(
        "nokernel",
        &[
            ("set", set.family_tag().unwrap_or("file").to_string()),
            ("k", k.to_string()),
            ("m", m.to_string()),
            ("i", i.to_string()),
        ],
        rows,
        true,
    )
    .with_trend(strictly_decreasing(&ratios), "ratio"))
}

/// `g(r^i) / g(r)^i` along the grid, asserted `<= 1`. `aux` holds `g(r)`.
pub fn check_dilated_eval(g: &TruncatedSeries, i: u32, grid: &[f64]) -> Result<CheckReport> {
    if i == 0 {
        return Err(Error::InvalidParameter("i must be >= 1".into()));
    }
    let poly = Poly::from_series(g);
    let rows = grid
        .iter()
        .map(|&r| {
            check_radius(r)?;
            let g_r = poly.eval_real(r);
            let lhs = poly.eval_real(r.powi(i as i32));
            let rhs = g_r.powi(i as i32);
            Ok(CheckRow {
                label: format!("i={i}"),
                r,
                lhs,
                rhs,
                ratio: lhs / rhs,
                aux: Some(g_r),
                pass: lhs <= rhs * (1.0 + 1e-12),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::new(
        "dilated",
        &[("i", i.to_string()), ("order", g.order().to_string())],
        rows,
        true,
    ))
}

/// Explicit bound on `∫ dμ/|1 − z|` over `|z| = r` obtained from
/// `|sin t| >= |t|/2` style estimates: `(2√2/(π r²)) · ln(π/(4(1−r)) + 1) + 1`.
pub fn elliptic_bound(r: f64) -> f64 {
    2.0 * 2f64.sqrt() / (PI * r * r) * (PI / (4.0 * (1.0 - r)) + 1.0).ln() + 1.0
}

pub const ELLIPTIC_RATIO_CAP: f64 = 3.0;
pub const ELLIPTIC_REFINE_TOL: f64 = 1e-4;

/// `I(r) = ∫ dμ/|1 − z|` against [`elliptic_bound`] and `I(r)/(−ln(1−r)) < 3`.
/// `aux` holds the relative change of `I` when the node count is doubled.
pub fn check_elliptic(grid: &[f64], nodes: Option<usize>) -> Result<CheckReport> {
    let mut rows = Vec::with_capacity(grid.len());
    for &r in grid {
        check_smoothing_radius(r)?;
        let spec = QuadratureSpec::new(r, vec![Factor::SingularAtOne { power: 1 }], 1.0)?;
        let q = nodes.unwrap_or_else(|| spec.nodes.max(1 << 16));
        let coarse = circle_integral(&spec.clone().with_nodes(q))?;
        let fine = circle_integral(&spec.with_nodes(2 * q))?;
        let drift = (fine - coarse).abs() / fine;
        let bound = elliptic_bound(r);
        let ratio = coarse / -(1.0 - r).ln();
        rows.push(CheckRow {
            label: format!("Q={q}"),
            r,
            lhs: coarse,
            rhs: bound,
            ratio,
            aux: Some(drift),
            pass: coarse <= bound && ratio < ELLIPTIC_RATIO_CAP && drift <= ELLIPTIC_REFINE_TOL,
        });
    }
    Ok(CheckReport::new("elliptic", &[], rows, true)
        .with_note("rhs is a closed-form bound extracted from the derivation, not a stated constant"))
}

/// `∫_1^∞ e^{−y^k} dy = Γ(1/k, 1)/k`.
pub fn tail_gaussian_integral(k: u32) -> f64 {
    let a = 1.0 / k as f64;
    statrs::function::gamma::gamma_ur(a, 1.0) * statrs::function::gamma::gamma(a) / k as f64
}

pub const POWER_SUM_TOL: f64 = 1e-3;

/// `Σ_{s≥1} r^{D s^k}`, stopping at the first term below `1e−18`. Also returns
/// a bound on the omitted tail.
pub fn power_sum(r: f64, d: f64, k: u32) -> (f64, f64) {
    let mut terms = Vec::new();
    let mut s = 1u64;
    loop {
        let term = r.powf(d * (s as f64).powi(k as i32));
        if term < 1e-18 {
            // Exponents grow at least linearly in s, so the tail is dominated
            // by a geometric series with ratio r^D.
            return (compensated_sum(&terms), term / (1.0 - r.powf(d)));
        }
        terms.push(term);
        s += 1;
    }
}

/// `(Σ r^{D s^k}) · (1−r)^{1/k}` along the grid, asserted above
/// `(∫_1^∞ e^{−y^k} dy) / D^{1/k} · (1 − 1e−3)`. `aux` holds the constant
/// with the extra factor `r^{1/k}` that bounding `|ln r|` by `(1−r)/r` yields.
pub fn check_power_sum_lower(d: &BigRational, k: u32, grid: &[f64]) -> Result<CheckReport> {
    let df = d.to_f64().unwrap_or(f64::NAN);
    if df.is_nan() || df <= 0.0 {
        return Err(Error::InvalidParameter(format!("D = {d} must be positive")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let constant = tail_gaussian_integral(k) / df.powf(1.0 / k as f64);
    let rows = grid
        .iter()
        .map(|&r| {
            check_radius(r)?;
            let (sum, _) = power_sum(r, df, k);
            let lhs = sum * (1.0 - r).powf(1.0 / k as f64);
            Ok(CheckRow {
                label: format!("D={d} k={k}"),
                r,
                lhs,
                rhs: constant,
                ratio: lhs / constant,
                aux: Some(constant * r.powf(1.0 / k as f64)),
                pass: lhs >= constant * (1.0 - POWER_SUM_TOL),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::new(
        "powersum",
        &[("D", d.to_string()), ("k", k.to_string())],
        rows,
        true,
    )
    .with_note("rhs is a constant extracted from the bound's derivation, not a stated one"))
}

/// Sequences fed to [`check_log_weighted_sum`].
#[derive(Clone, Debug)]
pub enum LogSequence {
    Zero,
    /// `n^{1/4} / ln n` for `n >= 2`, zero below.
    QuarterOverLog,
    /// `n^{1/4} / sqrt(ln n)` for `n >= 2`, zero below.
    Boundary,
    /// Explicit values; zero past the end.
    Values(Vec<f64>),
}

impl LogSequence {
    fn at(&self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            LogSequence::Zero => 0.0,
            LogSequence::QuarterOverLog if n >= 2 => x.powf(0.25) / x.ln(),
            LogSequence::Boundary if n >= 2 => x.powf(0.25) / x.ln().sqrt(),
            LogSequence::Values(v) => v.get(n).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            LogSequence::Zero => "zero",
            LogSequence::QuarterOverLog => "quarter-over-log",
            LogSequence::Boundary => "boundary",
            LogSequence::Values(_) => "values",
        }
    }
}

/// `(Σ e_n² r^{2n}) · (1−r)^{3/2} · (−ln(1−r))`.
pub fn log_weighted_sum(seq: &LogSequence, r: f64) -> f64 {
    // Terms past this point are below 1e-24 relative to e_n².
    let cutoff = ((1e-24f64).ln() / (2.0 * r.ln())).ceil() as usize;
    let cutoff = match seq {
        LogSequence::Values(v) => cutoff.min(v.len()),
        _ => cutoff,
    };
    let r2 = r * r;
    let mut weight = 1.0;
    let mut terms = Vec::with_capacity(cutoff + 1);
    for n in 0..=cutoff {
        let e = seq.at(n);
        terms.push(e * e * weight);
        weight *= r2;
    }
    compensated_sum(&terms) * (1.0 - r).powf(1.5) * -(1.0 - r).ln()
}

/// Normalized weighted sums along the grid. With `assert_decrease` the
/// values must strictly decrease; otherwise the trend is only reported.
pub fn check_log_weighted_sum(seq: &LogSequence, grid: &[f64], assert_decrease: bool) -> Result<CheckReport> {
    let rows = grid
        .iter()
        .map(|&r| {
            check_radius(r)?;
            let v = log_weighted_sum(seq, r);
            Ok(CheckRow {
                label: seq.name().to_string(),
                r,
                lhs: v,
                rhs: 0.0,
                ratio: v,
                aux: None,
                pass: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.lhs).collect();
    let trend = strictly_decreasing(&values) || values.iter().all(|&v| v == 0.0);
    Ok(CheckReport::new(
        "logsum",
        &[("sequence", seq.name().to_string())],
        rows,
        assert_decrease,
    )
    .with_trend(trend, "normalized sum"))
}
