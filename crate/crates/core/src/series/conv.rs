//! Exact truncated integer convolution.
//!
//! All kernels compute the same thing, the first `len` coefficients of the
//! Cauchy product of two integer sequences. [`Algorithm::Auto`] picks one by a
//! rough cost model:
//!
//! - `Sparse` when both operands have few nonzero coefficients,
//! - machine-word (`i128`) `Naive` / `Karatsuba` when the result provably fits,
//! - `Kronecker` substitution onto one big integer product otherwise.
//!
//! [`naive_bigint`] is the reference the others are tested against.

use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

pub const DEFAULT_KARATSUBA_THRESHOLD: usize = 512;

/// Below this operand length big-integer products stay quadratic.
const KRONECKER_MIN_LEN: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Auto,
    Naive,
    Karatsuba,
    Sparse,
    Kronecker,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvolutionConfig {
    pub algorithm: Algorithm,
    /// Operand length at or below which Karatsuba falls back to the schoolbook loop.
    pub karatsuba_threshold: usize,
}

impl Default for ConvolutionConfig {
    fn default() -> Self {
        ConvolutionConfig {
            algorithm: Algorithm::Auto,
            karatsuba_threshold: DEFAULT_KARATSUBA_THRESHOLD,
        }
    }
}

impl ConvolutionConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        ConvolutionConfig {
            algorithm,
            ..Default::default()
        }
    }
}

/// First `len` coefficients of `a * b`.
pub fn convolve(a: &[BigInt], b: &[BigInt], len: usize, cfg: &ConvolutionConfig) -> Vec<BigInt> {
    let a = trim(&a[..a.len().min(len)]);
    let b = trim(&b[..b.len().min(len)]);
    if a.is_empty() || b.is_empty() || len == 0 {
        return vec![BigInt::zero(); len];
    }
    let threshold = cfg.karatsuba_threshold.max(1);
    match cfg.algorithm {
        Algorithm::Naive => match small_operands(a, b, 0) {
            Some((x, y)) => widen(naive(&x, &y, len), len),
            None => naive_bigint(a, b, len),
        },
        Algorithm::Karatsuba => {
            let levels = karatsuba_levels(a.len().max(b.len()), threshold);
            match small_operands(a, b, levels) {
                Some((x, y)) => widen(karatsuba_truncated(&x, &y, len, threshold), len),
                None => karatsuba_truncated(a, b, len, threshold),
            }
        }
        Algorithm::Sparse => sparse(a, b, len),
        Algorithm::Kronecker => kronecker(a, b, len),
        Algorithm::Auto => auto(a, b, len, threshold),
    }
}

fn auto(a: &[BigInt], b: &[BigInt], len: usize, threshold: usize) -> Vec<BigInt> {
    let (la, lb) = (a.len() as f64, b.len() as f64);
    let naive_cost = la * lb;
    let n = la.max(lb);
    let t = threshold as f64;
    let kara_cost = if n <= t {
        naive_cost
    } else {
        t * t * (n / t).powf(3f64.log2())
    };
    let nnz_a = a.iter().filter(|c| !c.is_zero()).count() as f64;
    let nnz_b = b.iter().filter(|c| !c.is_zero()).count() as f64;
    // The sparse loop chases indices, so it only wins with a clear margin.
    if 4.0 * nnz_a * nnz_b < naive_cost.min(kara_cost) {
        return sparse(a, b, len);
    }
    let use_kara = kara_cost < naive_cost;
    let levels = if use_kara {
        karatsuba_levels(a.len().max(b.len()), threshold)
    } else {
        0
    };
    if let Some((x, y)) = small_operands(a, b, levels) {
        let out = if use_kara {
            karatsuba_truncated(&x, &y, len, threshold)
        } else {
            naive(&x, &y, len)
        };
        return widen(out, len);
    }
    if a.len().min(b.len()) < KRONECKER_MIN_LEN {
        naive_bigint(a, b, len)
    } else {
        kronecker(a, b, len)
    }
}

fn trim(a: &[BigInt]) -> &[BigInt] {
    let end = a.iter().rposition(|c| !c.is_zero()).map_or(0, |i| i + 1);
    &a[..end]
}

fn widen(v: Vec<i128>, len: usize) -> Vec<BigInt> {
    let mut out: Vec<BigInt> = v.into_iter().map(BigInt::from).collect();
    out.resize(len, BigInt::zero());
    out
}

fn max_bits(a: &[BigInt]) -> u64 {
    a.iter().map(|c| c.bits()).max().unwrap_or(0)
}

fn bit_length(n: usize) -> u64 {
    (usize::BITS - n.leading_zeros()) as u64
}

fn karatsuba_levels(n: usize, threshold: usize) -> u64 {
    let mut levels = 0;
    let mut size = n;
    while size > threshold {
        size = size.div_ceil(2);
        levels += 1;
    }
    levels
}

/// Converts both operands to `i128` when every partial sum of the product,
/// including Karatsuba's `(lo + hi)` intermediates at the given depth, fits.
fn small_operands(a: &[BigInt], b: &[BigInt], levels: u64) -> Option<(Vec<i128>, Vec<i128>)> {
    let budget = max_bits(a) + max_bits(b) + bit_length(a.len().min(b.len())) + 2 * levels + 2;
    if budget > 126 {
        return None;
    }
    let x = a.iter().map(|c| c.to_i128()).collect::<Option<Vec<_>>>()?;
    let y = b.iter().map(|c| c.to_i128()).collect::<Option<Vec<_>>>()?;
    Some((x, y))
}

/// Schoolbook product of big integers, truncated. Reference implementation.
pub fn naive_bigint(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn naive<T: Coeff>(a: &[T], b: &[T], len: usize) -> Vec<T> {
    let mut out = vec![T::zero(); len.min(a.len() + b.len() - 1)];
    naive_into(a, b, &mut out);
    out
}

/// `out[i + j] += a[i] * b[j]` for every `i + j < out.len()`.
fn naive_into<T: Coeff>(a: &[T], b: &[T], out: &mut [T]) {
    let len = out.len();
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        let span = b.len().min(len - i);
        for (o, y) in out[i..i + span].iter_mut().zip(&b[..span]) {
            *o += x.clone() * y.clone();
        }
    }
}

/// Ring operations the generic kernels need; implemented for `i128` and `BigInt`.
pub trait Coeff:
    Clone
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + SubAssign
{
}

impl Coeff for i128 {}
impl Coeff for BigInt {}

fn karatsuba_truncated<T: Coeff>(a: &[T], b: &[T], len: usize, threshold: usize) -> Vec<T> {
    let n = a.len().max(b.len());
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.resize(n, T::zero());
    y.resize(n, T::zero());
    let mut out = vec![T::zero(); 2 * n - 1];
    karatsuba(&x, &y, &mut out, threshold);
    out.truncate(len.min(a.len() + b.len() - 1));
    out
}

/// Adds the full product of equal-length `a` and `b` into `out` (length `2n - 1`).
fn karatsuba<T: Coeff>(a: &[T], b: &[T], out: &mut [T], threshold: usize) {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n <= threshold || n < 2 {
        naive_into(a, b, out);
        return;
    }
    let h = n / 2;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);

    let mut z0 = vec![T::zero(); 2 * h - 1];
    karatsuba(a0, b0, &mut z0, threshold);

    let hi = n - h;
    let mut z2 = vec![T::zero(); 2 * hi - 1];
    karatsuba(a1, b1, &mut z2, threshold);

    let mut sa: Vec<T> = a1.to_vec();
    let mut sb: Vec<T> = b1.to_vec();
    for (s, x) in sa.iter_mut().zip(a0) {
        *s += x.clone();
    }
    for (s, x) in sb.iter_mut().zip(b0) {
        *s += x.clone();
    }
    let mut z1 = vec![T::zero(); 2 * hi - 1];
    karatsuba(&sa, &sb, &mut z1, threshold);
    for (s, x) in z1.iter_mut().zip(&z0) {
        *s -= x.clone();
    }
    for (s, x) in z1.iter_mut().zip(&z2) {
        *s -= x.clone();
    }

    for (o, x) in out.iter_mut().zip(z0) {
        *o += x;
    }
    for (o, x) in out[2 * h..].iter_mut().zip(z2) {
        *o += x;
    }
    for (o, x) in out[h..].iter_mut().zip(z1) {
        *o += x;
    }
}

fn sparse(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let nz = |v: &[BigInt]| -> Vec<(usize, BigInt)> {
        v.iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, c.clone()))
            .collect()
    };
    let (na, nb) = (nz(a), nz(b));
    if let Some((x, y)) = small_operands(a, b, 0) {
        let sa: Vec<(usize, i128)> = na.iter().map(|&(i, _)| (i, x[i])).collect();
        let sb: Vec<(usize, i128)> = nb.iter().map(|&(j, _)| (j, y[j])).collect();
        let mut out = vec![0i128; len];
        for &(i, u) in &sa {
            for &(j, v) in &sb {
                if i + j >= len {
                    break;
                }
                out[i + j] += u * v;
            }
        }
        return widen(out, len);
    }
    let mut out = vec![BigInt::zero(); len];
    for (i, u) in &na {
        for (j, v) in &nb {
            if i + j >= len {
                break;
            }
            out[i + j] += u * v;
        }
    }
    out
}

/// Packs non-negative coefficients into `width`-bit slots of one integer.
fn pack(values: &[BigUint], width: u64) -> BigUint {
    let total_bits = width as usize * values.len();
    let mut words = vec![0u32; total_bits / 32 + 2];
    for (i, v) in values.iter().enumerate() {
        let offset = i * width as usize;
        for (j, d) in v.iter_u32_digits().enumerate() {
            let pos = offset + 32 * j;
            let (w, s) = (pos / 32, pos % 32);
            words[w] |= d << s;
            if s > 0 {
                words[w + 1] |= d >> (32 - s);
            }
        }
    }
    BigUint::new(words)
}

fn unpack(value: &BigUint, width: u64, count: usize) -> Vec<BigUint> {
    let words = value.to_u32_digits();
    let word = |i: usize| words.get(i).copied().unwrap_or(0);
    let slot_words = (width as usize).div_ceil(32);
    (0..count)
        .map(|i| {
            let offset = i * width as usize;
            let mut digits = Vec::with_capacity(slot_words);
            for j in 0..slot_words {
                let pos = offset + 32 * j;
                let (w, s) = (pos / 32, pos % 32);
                let mut d = word(w) >> s;
                if s > 0 {
                    d |= word(w + 1) << (32 - s);
                }
                let remaining = width as usize - 32 * j;
                if remaining < 32 {
                    d &= (1u32 << remaining) - 1;
                }
                digits.push(d);
            }
            BigUint::new(digits)
        })
        .collect()
}

/// Kronecker substitution: evaluate both operands at `2^width`, multiply once,
/// read the coefficients back from the slots. Signs are handled by splitting
/// each operand into positive and negative parts.
fn kronecker(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let split = |v: &[BigInt]| -> (Vec<BigUint>, Vec<BigUint>) {
        let mut pos = Vec::with_capacity(v.len());
        let mut neg = Vec::with_capacity(v.len());
        for c in v {
            let mag = c.magnitude().clone();
            if c.sign() == Sign::Minus {
                pos.push(BigUint::zero());
                neg.push(mag);
            } else {
                pos.push(mag);
                neg.push(BigUint::zero());
            }
        }
        (pos, neg)
    };
    let width = max_bits(a) + max_bits(b) + bit_length(a.len().min(b.len())) + 1;
    let (ap, an) = split(a);
    let (bp, bn) = split(b);
    let a_neg = a.iter().any(|c| c.is_negative());
    let b_neg = b.iter().any(|c| c.is_negative());
    let count = len.min(a.len() + b.len() - 1);

    let product = |x: &[BigUint], y: &[BigUint]| -> Vec<BigUint> {
        unpack(&(pack(x, width) * pack(y, width)), width, count)
    };

    let mut out: Vec<BigInt> = product(&ap, &bp).into_iter().map(BigInt::from).collect();
    let mut accumulate = |terms: Vec<BigUint>, negate: bool| {
        for (o, t) in out.iter_mut().zip(terms) {
            let t = BigInt::from(t);
            if negate {
                *o -= t;
            } else {
                *o += t;
            }
        }
    };
    if a_neg && b_neg {
        accumulate(product(&an, &bn), false);
    }
    if b_neg {
        accumulate(product(&ap, &bn), true);
    }
    if a_neg {
        accumulate(product(&an, &bp), true);
    }
    out.resize(len, BigInt::zero());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    const ALL: [Algorithm; 5] = [
        Algorithm::Auto,
        Algorithm::Naive,
        Algorithm::Karatsuba,
        Algorithm::Sparse,
        Algorithm::Kronecker,
    ];

    #[test]
    fn small_products() {
        for alg in ALL {
            let cfg = ConvolutionConfig {
                algorithm: alg,
                karatsuba_threshold: 1,
            };
            assert_eq!(convolve(&big(&[1, 1]), &big(&[1, 1]), 3, &cfg), big(&[1, 2, 1]));
            let a = big(&[1, 1, 0, 1]);
            assert_eq!(
                convolve(&a, &a, 7, &cfg),
                big(&[1, 2, 1, 2, 2, 0, 1]),
                "{alg:?}"
            );
            assert_eq!(convolve(&a, &big(&[0, 0]), 4, &cfg), big(&[0, 0, 0, 0]));
            assert_eq!(convolve(&big(&[-3, 2]), &big(&[5, -7, 1]), 3, &cfg), big(&[-15, 31, -17]));
        }
    }

    #[test]
    fn pack_roundtrip() {
        let vals: Vec<BigUint> = [0u64, 1, 255, 256, u64::MAX, 12345]
            .iter()
            .map(|&v| BigUint::from(v))
            .collect();
        for width in [9u64, 31, 32, 33, 64, 65, 100] {
            let fit: Vec<BigUint> = vals.iter().filter(|v| v.bits() <= width).cloned().collect();
            assert_eq!(unpack(&pack(&fit, width), width, fit.len()), fit);
        }
    }

    #[test]
    fn huge_coefficients_take_big_paths() {
        let a: Vec<BigInt> = (0..200)
            .map(|i| (BigInt::from(1) << (100 + i % 7)) - BigInt::from(i * 3))
            .collect();
        let b: Vec<BigInt> = (0..150).map(|i| BigInt::from(-(i as i64) * 1_000_003) << 90).collect();
        let expect = naive_bigint(&a, &b, 300);
        for alg in ALL {
            let cfg = ConvolutionConfig {
                algorithm: alg,
                karatsuba_threshold: 8,
            };
            assert_eq!(convolve(&a, &b, 300, &cfg), expect, "{alg:?}");
        }
    }

    proptest! {
        #[test]
        fn every_kernel_matches_reference(
            a in prop::collection::vec(-1000i64..1000, 0..80),
            b in prop::collection::vec(-1000i64..1000, 0..80),
            density in 0u8..4,
            len in 0usize..170,
            threshold in 1usize..20,
        ) {
            // Zero out some coefficients to exercise the sparse paths.
            let thin = |v: Vec<i64>| -> Vec<BigInt> {
                v.into_iter().enumerate()
                    .map(|(i, x)| if (i as u8) % 4 < density { BigInt::zero() } else { BigInt::from(x) })
                    .collect()
            };
            let (a, b) = (thin(a), thin(b));
            let expect = naive_bigint(&a, &b, len);
            for alg in ALL {
                let cfg = ConvolutionConfig { algorithm: alg, karatsuba_threshold: threshold };
                prop_assert_eq!(&convolve(&a, &b, len, &cfg), &expect, "{:?}", alg);
            }
        }
    }
}
