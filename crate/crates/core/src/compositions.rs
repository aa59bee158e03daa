//! Index sets of compositions of `k` and the rational weights
//! `ε_≤(i) = 1 / (i_1 ⋯ i_m · m!)` and `ε_<(i) = (-1)^{m+k} ε_≤(i)`
//! that turn products of dilated set generating functions into the
//! generating functions of the ordered representation counts.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Which ordered count a weight family encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    /// `a_1 <= … <= a_k` (multiset construction).
    Le,
    /// `a_1 < … < a_k` (powerset construction).
    Lt,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::Le => "le",
            Order::Lt => "lt",
        })
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "le" | "<=" => Ok(Order::Le),
            "lt" | "<" => Ok(Order::Lt),
            other => Err(Error::InvalidParameter(format!("unknown order {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedComposition {
    pub parts: Vec<u32>,
    pub weight_le: BigRational,
    pub weight_lt: BigRational,
}

impl WeightedComposition {
    fn new(parts: Vec<u32>, k: u32) -> Self {
        let m = parts.len() as u32;
        let denom = parts
            .iter()
            .fold(factorial(m), |acc, &p| acc * BigInt::from(p));
        let weight_le = BigRational::new(BigInt::one(), denom);
        let weight_lt = if (m + k).is_multiple_of(2) {
            weight_le.clone()
        } else {
            -weight_le.clone()
        };
        WeightedComposition {
            parts,
            weight_le,
            weight_lt,
        }
    }

    pub fn m(&self) -> usize {
        self.parts.len()
    }

    pub fn weight(&self, order: Order) -> &BigRational {
        match order {
            Order::Le => &self.weight_le,
            Order::Lt => &self.weight_lt,
        }
    }
}

/// One partition of `k` with the summed weight of all its orderings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupedPartitionTerm {
    /// `(part, multiplicity)` pairs, parts ascending.
    pub parts: Vec<(u32, u32)>,
    pub weight: BigRational,
}

impl GroupedPartitionTerm {
    pub fn m(&self) -> u32 {
        self.parts.iter().map(|&(_, c)| c).sum()
    }

    /// Parts expanded with repetition, ascending.
    pub fn flat_parts(&self) -> Vec<u32> {
        self.parts
            .iter()
            .flat_map(|&(p, c)| std::iter::repeat_n(p, c as usize))
            .collect()
    }
}

pub(crate) fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// All ordered tuples of positive integers summing to `k`, ordered by part
/// count and then lexicographically.
pub fn enumerate_compositions(k: u32) -> Result<Vec<WeightedComposition>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let mut all: Vec<Vec<u32>> = Vec::with_capacity(1 << (k - 1).min(30));
    let mut current = Vec::new();
    compositions_rec(k, &mut current, &mut all);
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(all
        .into_iter()
        .map(|parts| WeightedComposition::new(parts, k))
        .collect())
}

fn compositions_rec(rest: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if rest == 0 {
        out.push(current.clone());
        return;
    }
    for first in 1..=rest {
        current.push(first);
        compositions_rec(rest - first, current, out);
        current.pop();
    }
}

/// `S(k)` without the all-ones tuple.
pub fn enumerate_s0(k: u32) -> Result<Vec<WeightedComposition>> {
    if k < 2 {
        return Err(Error::InvalidParameter("S0(k) needs k >= 2".into()));
    }
    Ok(enumerate_compositions(k)?
        .into_iter()
        .filter(|c| c.m() < k as usize)
        .collect())
}

/// Partitions of `k`, each with the combined weight of its orderings:
/// `±1 / (∏ parts · ∏ c_t!)`. Ordered like [`enumerate_compositions`]
/// (by part count, then lexicographically on the ascending parts).
pub fn group_by_partition(k: u32, order: Order) -> Result<Vec<GroupedPartitionTerm>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let mut partitions = Vec::new();
    partitions_rec(k, 1, &mut Vec::new(), &mut partitions);
    partitions.sort_by(|a: &Vec<u32>, b: &Vec<u32>| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    Ok(partitions
        .into_iter()
        .map(|flat| {
            let mut parts: Vec<(u32, u32)> = Vec::new();
            for p in flat {
                match parts.last_mut() {
                    Some((q, c)) if *q == p => *c += 1,
                    _ => parts.push((p, 1)),
                }
            }
            let m: u32 = parts.iter().map(|&(_, c)| c).sum();
            let denom = parts.iter().fold(BigInt::one(), |acc, &(p, c)| {
                acc * num_traits::pow(BigInt::from(p), c as usize) * factorial(c)
            });
            let mut weight = BigRational::new(BigInt::one(), denom);
            if order == Order::Lt && (m + k) % 2 == 1 {
                weight = -weight;
            }
            GroupedPartitionTerm { parts, weight }
        })
        .collect())
}

fn partitions_rec(rest: u32, min: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if rest == 0 {
        out.push(current.clone());
        return;
    }
    for p in min..=rest {
        current.push(p);
        partitions_rec(rest - p, p, current, out);
        current.pop();
    }
}

/// `Σ_{i ∈ S(k)} ε_⋆(i)`: 1 for `Le`, `[k = 1]` for `Lt`.
pub fn weight_sum(k: u32, order: Order) -> Result<BigRational> {
    Ok(enumerate_compositions(k)?
        .iter()
        .fold(BigRational::zero(), |acc, c| acc + c.weight(order)))
}
