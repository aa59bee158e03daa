//! Finite truncations of sets of non-negative integers.
//!
//! A set is either a *truncation* of an infinite family, in which case
//! membership is only known for `n <= limit`, or an explicitly *finite* set,
//! in which case everything above the largest element is known to be absent.
//! Every bounded query goes through [`IntegerSet::check_bound`].

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Name and version of the generator behind [`Family::Bernoulli`].
pub const BERNOULLI_RNG: &str = "chacha20-rand0.8-v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerSet {
    elements: Vec<u64>,
    limit: u64,
    finite: bool,
    family_tag: Option<String>,
}

impl IntegerSet {
    /// An explicitly finite set. Membership is known for every `n`.
    pub fn finite(mut elements: Vec<u64>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        let limit = elements.last().copied().unwrap_or(0);
        IntegerSet {
            elements,
            limit,
            finite: true,
            family_tag: None,
        }
    }

    /// A truncation at `limit` of some (possibly infinite) set.
    pub fn truncation(
        elements: Vec<u64>,
        limit: u64,
        family_tag: Option<String>,
    ) -> Result<Self> {
        check_strictly_increasing(&elements)?;
        if let Some(&last) = elements.last() {
            if last > limit {
                return Err(Error::InvalidParameter(format!(
                    "element {last} exceeds truncation limit {limit}"
                )));
            }
        }
        Ok(IntegerSet {
            elements,
            limit,
            finite: false,
            family_tag,
        })
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.family_tag = Some(tag.into());
        self
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn is_finite(&self) -> bool {
        self.finite
    }

    pub fn family_tag(&self) -> Option<&str> {
        self.family_tag.as_deref()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.elements.binary_search(&n).is_ok()
    }

    /// `a_s` in the 1-based enumeration `a_1 < a_2 < ...`.
    pub fn position(&self, s: usize) -> Option<u64> {
        s.checked_sub(1).and_then(|i| self.elements.get(i).copied())
    }

    /// Refuses bounds whose membership information the set does not carry.
    pub fn check_bound(&self, n: u64) -> Result<()> {
        if !self.finite && n > self.limit {
            return Err(Error::BeyondTruncation {
                requested: n,
                limit: self.limit,
            });
        }
        Ok(())
    }

    /// Elements `<= n`, after checking that `n` is within the truncation.
    pub fn elements_up_to(&self, n: u64) -> Result<&[u64]> {
        self.check_bound(n)?;
        let end = self.elements.partition_point(|&a| a <= n);
        Ok(&self.elements[..end])
    }

    /// Content hash of the truncation (elements, limit and finiteness).
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("limit={};finite={};", self.limit, self.finite).as_bytes());
        for a in &self.elements {
            hasher.update(a.to_string().as_bytes());
            hasher.update(b",");
        }
        hex::encode(hasher.finalize())
    }

    /// Parses the set file format: one decimal integer per line, strictly
    /// increasing, `#` comments. A `# limit: N` header marks a truncation.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut elements: Vec<u64> = Vec::new();
        let mut header_limit: Option<(u64, bool)> = None;
        let mut tag: Option<String> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(rest) = comment.strip_prefix("limit:") {
                    header_limit = Some(parse_limit_header(rest, path, line_no)?);
                } else if let Some(rest) = comment.strip_prefix("family:") {
                    tag = Some(rest.trim().to_string());
                }
                continue;
            }
            if line.starts_with('-') {
                return Err(Error::Negative {
                    path: path.to_path_buf(),
                    line: line_no,
                    value: line.to_string(),
                });
            }
            let value: u64 = line.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("expected a non-negative integer, found {line:?}"),
            })?;
            if let Some(&prev) = elements.last() {
                if value == prev {
                    return Err(Error::Duplicate {
                        path: path.to_path_buf(),
                        line: line_no,
                        value,
                    });
                }
                if value < prev {
                    return Err(Error::Unsorted {
                        path: path.to_path_buf(),
                        line: line_no,
                        value,
                        prev,
                    });
                }
            }
            elements.push(value);
        }

        match header_limit {
            Some((limit, _)) if elements.last().is_some_and(|&l| l > limit) => {
                Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    msg: format!("element above the declared limit {limit}"),
                })
            }
            Some((limit, finite)) => Ok(IntegerSet {
                elements,
                limit,
                finite,
                family_tag: tag,
            }),
            None => {
                let mut set = IntegerSet::finite(elements);
                set.family_tag = tag;
                Ok(set)
            }
        }
    }

    /// Serializes in the set file format, header first.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        if let Some(tag) = &self.family_tag {
            out.push_str(&format!("# family: {tag}\n"));
        }
        if self.finite {
            out.push_str(&format!("# limit: {} finite\n", self.limit));
        } else {
            out.push_str(&format!("# limit: {}\n", self.limit));
        }
        for a in &self.elements {
            out.push_str(&a.to_string());
            out.push('\n');
        }
        out
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_file_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

fn parse_limit_header(rest: &str, path: &Path, line: usize) -> Result<(u64, bool)> {
    let mut words = rest.split_whitespace();
    let limit = words
        .next()
        .and_then(|w| w.parse::<u64>().ok())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: "malformed limit header".into(),
        })?;
    let finite = matches!(words.next(), Some("finite"));
    Ok((limit, finite))
}

fn check_strictly_increasing(elements: &[u64]) -> Result<()> {
    if let Some(w) = elements.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "elements must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Naturals,
    Arithmetic { start: u64, step: u64 },
    Powers { exponent: u32 },
    MianChowla,
    /// Integers whose base-`k²` digits all lie in `0..k`.
    Moser { k: u64 },
    /// Each `n >= 1` included independently with probability `min(1, C n^{1/k - 1})`; 0 always included.
    Bernoulli { k: u32, c: f64, seed: u64 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Naturals => write!(f, "naturals"),
            Family::Arithmetic { start, step } => write!(f, "arithmetic(a0={start},d={step})"),
            Family::Powers { exponent } => write!(f, "powers(p={exponent})"),
            Family::MianChowla => write!(f, "mian_chowla"),
            Family::Moser { k } => write!(f, "moser(k={k})"),
            Family::Bernoulli { k, c, seed } => {
                write!(f, "bernoulli(k={k},C={c},seed={seed},rng={BERNOULLI_RNG})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub limit: u64,
}

impl FamilySpec {
    pub fn new(family: Family, limit: u64) -> Self {
        FamilySpec { family, limit }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        match self.family {
            Family::Arithmetic { step, .. } if step < 1 => bad("arithmetic step d must be >= 1"),
            Family::Powers { exponent } if exponent < 1 => bad("power p must be >= 1"),
            Family::Moser { k } if k < 2 => bad("moser k must be >= 2"),
            Family::Bernoulli { k, .. } if k < 2 => bad("bernoulli k must be >= 2"),
            Family::Bernoulli { c, .. } if !(c > 0.0 && c.is_finite()) => {
                bad("bernoulli C must be a positive finite number")
            }
            _ => Ok(()),
        }
    }
}

/// Builds the family truncated at `spec.limit`.
pub fn construct_family(spec: &FamilySpec) -> Result<IntegerSet> {
    spec.validate()?;
    let limit = spec.limit;
    let elements = match spec.family {
        Family::Naturals => (0..=limit).collect(),
        Family::Arithmetic { start, step } => {
            if start > limit {
                Vec::new()
            } else {
                (0..=(limit - start) / step).map(|j| start + j * step).collect()
            }
        }
        Family::Powers { exponent } => powers(exponent, limit),
        Family::MianChowla => mian_chowla(limit),
        Family::Moser { k } => moser(k, limit),
        Family::Bernoulli { k, c, seed } => bernoulli(k, c, seed, limit),
    };
    IntegerSet::truncation(elements, limit, Some(spec.family.to_string()))
}

fn powers(exponent: u32, limit: u64) -> Vec<u64> {
    let mut out = vec![0];
    for s in 1u64.. {
        match s.checked_pow(exponent) {
            Some(v) if v <= limit => out.push(v),
            _ => break,
        }
    }
    out
}

/// Greedy B₂ sequence starting at 1: each new element keeps every sum `a + b`
/// (`a <= b`) distinct.
fn mian_chowla(limit: u64) -> Vec<u64> {
    let mut elements: Vec<u64> = Vec::new();
    let mut sums = vec![false; 2 * limit as usize + 1];
    for x in 1..=limit {
        let clash = sums[2 * x as usize] || elements.iter().any(|&a| sums[(a + x) as usize]);
        if clash {
            continue;
        }
        for &a in &elements {
            sums[(a + x) as usize] = true;
        }
        sums[2 * x as usize] = true;
        elements.push(x);
    }
    elements
}

/// The `t`-th Moser element is `t` written in base `k` and read back in base `k²`,
/// which is order preserving.
fn moser(k: u64, limit: u64) -> Vec<u64> {
    let base = k * k;
    let mut out = Vec::new();
    for t in 0u64.. {
        let mut rest = t;
        let mut value: u64 = 0;
        let mut place: u64 = 1;
        let mut overflow = false;
        while rest > 0 {
            let digit = rest % k;
            match digit.checked_mul(place).and_then(|d| value.checked_add(d)) {
                Some(v) => value = v,
                None => {
                    overflow = true;
                    break;
                }
            }
            rest /= k;
            if rest > 0 {
                match place.checked_mul(base) {
                    Some(p) => place = p,
                    None => {
                        overflow = true;
                        break;
                    }
                }
            }
        }
        if overflow || value > limit {
            break;
        }
        out.push(value);
    }
    out
}

fn bernoulli(k: u32, c: f64, seed: u64, limit: u64) -> Vec<u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let exponent = 1.0 / f64::from(k) - 1.0;
    let mut out = vec![0];
    for n in 1..=limit {
        let p = (c * (n as f64).powf(exponent)).min(1.0);
        let u: f64 = rng.gen();
        if u < p {
            out.push(n);
        }
    }
    out
}

/// Indicator bits `δ_0 … δ_n` of the set.
pub fn indicator(set: &IntegerSet, n: u64) -> Result<Vec<bool>> {
    let elements = set.elements_up_to(n)?;
    let mut bits = vec![false; n as usize + 1];
    for &a in elements {
        bits[a as usize] = true;
    }
    Ok(bits)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    /// `ratios[s - 1] = a_s / s^k`.
    pub ratios: Vec<BigRational>,
    pub max: BigRational,
    /// 1-based position of the first maximal ratio.
    pub argmax: usize,
}

impl GrowthReport {
    /// Whether the largest ratio sits at the end of the observed window,
    /// the signature of an unbounded ratio sequence.
    pub fn max_at_end(&self) -> bool {
        self.argmax == self.ratios.len()
    }
}

/// `a_s / s^k` for the 1-based enumeration of the truncation.
pub fn growth_ratios(set: &IntegerSet, k: u32) -> Result<GrowthReport> {
    if set.is_empty() {
        return Err(Error::InvalidParameter("growth ratios need a nonempty set".into()));
    }
    let ratios: Vec<BigRational> = set
        .elements()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let s = BigInt::from(i as u64 + 1);
            BigRational::new(BigInt::from(a), num_traits::pow(s, k as usize))
        })
        .collect();
    let mut max = BigRational::zero();
    let mut argmax = 1;
    for (i, r) in ratios.iter().enumerate() {
        if i == 0 || *r > max {
            max = r.clone();
            argmax = i + 1;
        }
    }
    Ok(GrowthReport {
        ratios,
        max,
        argmax,
    })
}
