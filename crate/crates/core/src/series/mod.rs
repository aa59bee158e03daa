//! Exact truncated formal power series.
//!
//! A [`TruncatedSeries`] of order `N` holds `c_0 … c_N` as big-integer
//! numerators over one shared positive denominator, kept in lowest terms.
//! Every operation takes its truncation bound explicitly and fails rather
//! than silently extending or shortening an operand.

pub mod conv;

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
pub use conv::{Algorithm, ConvolutionConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    numer: Vec<BigInt>,
    denom: BigInt,
}

impl TruncatedSeries {
    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            numer: vec![BigInt::zero(); order + 1],
            denom: BigInt::one(),
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.numer[0] = BigInt::one();
        s
    }

    /// `Σ_{n ≤ order} z^n`, the truncation of `1/(1 - z)`.
    pub fn geometric(order: usize) -> Self {
        TruncatedSeries {
            numer: vec![BigInt::one(); order + 1],
            denom: BigInt::one(),
        }
    }

    /// `coeff · z^power`, or zero if `power > order`.
    pub fn monomial(coeff: BigRational, power: usize, order: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); order + 1];
        if power <= order {
            coeffs[power] = coeff;
        }
        Self::from_rationals(&coeffs)
    }

    /// Integer coefficients; the order is `coeffs.len() - 1`.
    pub fn from_integers(coeffs: Vec<BigInt>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least one coefficient");
        TruncatedSeries {
            numer: coeffs,
            denom: BigInt::one(),
        }
    }

    pub fn from_rationals(coeffs: &[BigRational]) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least one coefficient");
        let denom = coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let numer = coeffs
            .iter()
            .map(|c| c.numer() * (&denom / c.denom()))
            .collect();
        let mut s = TruncatedSeries { numer, denom };
        s.normalize();
        s
    }

    /// `Σ δ_n z^n` for `n ≤ order`.
    pub fn from_indicator(bits: &[bool], order: usize) -> Result<Self> {
        if bits.len() < order + 1 {
            return Err(Error::OrderTooSmall {
                have: bits.len().saturating_sub(1),
                need: order,
            });
        }
        Ok(TruncatedSeries {
            numer: bits[..=order]
                .iter()
                .map(|&b| if b { BigInt::one() } else { BigInt::zero() })
                .collect(),
            denom: BigInt::one(),
        })
    }

    pub fn order(&self) -> usize {
        self.numer.len() - 1
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.numer
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denom
    }

    pub fn coeff(&self, n: usize) -> BigRational {
        BigRational::new(self.numer[n].clone(), self.denom.clone())
    }

    pub fn coeffs(&self) -> Vec<BigRational> {
        (0..self.numer.len()).map(|n| self.coeff(n)).collect()
    }

    pub fn is_integral(&self) -> bool {
        self.denom.is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.numer.iter().all(Zero::is_zero)
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        self.require(order)?;
        let mut s = TruncatedSeries {
            numer: self.numer[..=order].to_vec(),
            denom: self.denom.clone(),
        };
        s.normalize();
        Ok(s)
    }

    fn require(&self, order: usize) -> Result<()> {
        if self.order() < order {
            return Err(Error::OrderTooSmall {
                have: self.order(),
                need: order,
            });
        }
        Ok(())
    }

    fn normalize(&mut self) {
        if self.denom.is_one() {
            return;
        }
        if self.denom.is_negative() {
            self.denom = -&self.denom;
            for c in &mut self.numer {
                *c = -&*c;
            }
        }
        let mut g = self.denom.clone();
        for c in &self.numer {
            if g.is_one() {
                return;
            }
            g = g.gcd(c);
        }
        if !g.is_one() && !g.is_zero() {
            self.denom /= &g;
            for c in &mut self.numer {
                *c /= &g;
            }
        }
    }

    /// Cauchy product truncated at `order`.
    pub fn multiply(&self, other: &Self, order: usize) -> Result<Self> {
        self.multiply_with(other, order, &ConvolutionConfig::default())
    }

    pub fn multiply_with(
        &self,
        other: &Self,
        order: usize,
        cfg: &ConvolutionConfig,
    ) -> Result<Self> {
        self.require(order)?;
        other.require(order)?;
        let numer = conv::convolve(&self.numer, &other.numer, order + 1, cfg);
        let mut s = TruncatedSeries {
            numer,
            denom: &self.denom * &other.denom,
        };
        s.normalize();
        Ok(s)
    }

    /// `S(z^i)` truncated at `order`.
    pub fn dilate(&self, i: usize, order: usize) -> Result<Self> {
        if i == 0 {
            return Err(Error::InvalidParameter("dilation factor must be >= 1".into()));
        }
        let needed = order / i;
        self.require(needed)?;
        let mut numer = vec![BigInt::zero(); order + 1];
        for (n, c) in self.numer.iter().take(needed + 1).enumerate() {
            numer[n * i] = c.clone();
        }
        Ok(TruncatedSeries {
            numer,
            denom: self.denom.clone(),
        })
    }

    /// `S + q·T` truncated at `order`.
    pub fn add_scaled(&self, q: &BigRational, other: &Self, order: usize) -> Result<Self> {
        self.require(order)?;
        other.require(order)?;
        if q.is_zero() {
            return self.truncate(order);
        }
        // S = s/ds, q·T = (qn·t)/(qd·dt); bring both over lcm(ds, qd·dt).
        let scaled_den = q.denom() * &other.denom;
        let common = self.denom.lcm(&scaled_den);
        let fs = &common / &self.denom;
        let ft = (&common / &scaled_den) * q.numer();
        let numer = self.numer[..=order]
            .iter()
            .zip(&other.numer[..=order])
            .map(|(s, t)| s * &fs + t * &ft)
            .collect();
        let mut s = TruncatedSeries {
            numer,
            denom: common,
        };
        s.normalize();
        Ok(s)
    }

    /// Exact `Σ c_n r^n` over the stored coefficients, for rational `r` in `(0, 1)`.
    pub fn eval_real(&self, r: &BigRational) -> Result<BigRational> {
        if !(r.is_positive() && *r < BigRational::one()) {
            return Err(Error::InvalidParameter(format!(
                "evaluation point {r} outside (0, 1)"
            )));
        }
        // Horner on integers: Σ c_n p^n q^{N-n}, then divide by q^N once.
        let (p, q) = (r.numer(), r.denom());
        let mut acc = BigInt::zero();
        let mut q_pow = BigInt::one();
        for c in self.numer.iter().rev() {
            acc = acc * p + c * &q_pow;
            q_pow *= q;
        }
        // q_pow = q^{N+1}; the loop used one factor too many.
        Ok(BigRational::new(acc * q, q_pow * &self.denom))
    }

    /// CSV dump with columns `n,numerator,denominator` (each coefficient reduced).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,numerator,denominator\n");
        for n in 0..self.numer.len() {
            let c = self.coeff(n);
            let _ = writeln!(out, "{},{},{}", n, c.numer(), c.denom());
        }
        out
    }
}
