//! Cycle types of random permutations.
//!
//! A [`CycleType`] stores the multiset of cycle lengths sparsely as
//! `(length, multiplicity)` pairs. A uniform permutation of size `n` has about
//! `ln n` cycles, so the sparse form stays small even at `n = 10^6`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Default largest `n` accepted by [`enumerate_cycle_types`]. `p(60)` is
/// roughly `9.7 * 10^5`.
pub const DEFAULT_ENUMERATION_CAP: usize = 60;

/// Above this size probabilities are only evaluated in log space.
const LINEAR_PROBABILITY_LIMIT: usize = 170;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleType {
    n: usize,
    /// Sorted by strictly increasing length; multiplicities are positive.
    parts: Vec<(usize, usize)>,
}

impl CycleType {
    /// Builds a cycle type from `(length, multiplicity)` pairs in any order.
    /// Repeated lengths are merged and zero multiplicities dropped.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut parts: Vec<(usize, usize)> =
            pairs.iter().copied().filter(|&(_, k)| k > 0).collect();
        if parts.iter().any(|&(j, _)| j == 0 || j > n) {
            return Err(Error::invalid("counts", "cycle lengths must lie in 1..=n"));
        }
        parts.sort_unstable();
        parts.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let size: usize = parts.iter().map(|&(j, k)| j * k).sum();
        if size != n {
            return Err(Error::invalid(
                "counts",
                format!("sum of j*k_j is {size}, expected {n}"),
            ));
        }
        Ok(CycleType { n, parts })
    }

    /// Builds from the dense vector `(k_1, ..., k_n)`.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = counts
            .iter()
            .enumerate()
            .map(|(i, &k)| (i + 1, k))
            .collect();
        CycleType::from_pairs(counts.len(), &pairs)
    }

    /// Builds from a list of cycle lengths.
    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        let n = lengths.iter().sum();
        let pairs: Vec<(usize, usize)> = lengths.iter().map(|&j| (j, 1)).collect();
        CycleType::from_pairs(n, &pairs)
    }

    /// The empty permutation, sole element of `S_0`.
    pub fn empty() -> Self {
        CycleType {
            n: 0,
            parts: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cycles `w`.
    pub fn cycle_count(&self) -> usize {
        self.parts.iter().map(|&(_, k)| k).sum()
    }

    /// `k_j`, the number of cycles of length `j`.
    pub fn count(&self, j: usize) -> usize {
        self.parts
            .binary_search_by_key(&j, |&(len, _)| len)
            .map(|i| self.parts[i].1)
            .unwrap_or(0)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.parts
    }

    /// Dense `(k_1, ..., k_n)`.
    pub fn dense_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for &(j, k) in &self.parts {
            out[j - 1] = k;
        }
        out
    }

    /// Every cycle length, repeated by multiplicity, in increasing order.
    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.parts
            .iter()
            .flat_map(|&(j, k)| std::iter::repeat_n(j, k))
    }
}

/// Samples the cycle type of a uniform permutation of size `n`.
///
/// The cycle containing the smallest unused label has length uniform on
/// `1..=m`, where `m` is the number of labels left; O(w) draws.
pub fn sample_uniform_cycle_type(n: usize, rng: &mut RngStream) -> Result<CycleType> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let mut lengths = Vec::new();
    let mut left = n as u64;
    while left > 0 {
        let len = rng.random_range(1..=left);
        lengths.push(len as usize);
        left -= len;
    }
    Ok(from_sampled_lengths(n, lengths))
}

/// Samples a cycle type from the Ewens measure with parameter `ewens`.
///
/// Uses the Feller coupling: independent indicators with success
/// probability `ewens / (ewens + i - 1)` for `i = 1..=n`; cycle lengths are
/// the gaps between successive successes (with a sentinel at `n + 1`).
pub fn sample_ewens_cycle_type(n: usize, ewens: f64, rng: &mut RngStream) -> Result<CycleType> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(ewens > 0.0 && ewens.is_finite()) {
        return Err(Error::invalid("ewens", "must be a positive finite number"));
    }
    let mut lengths = Vec::new();
    let mut last = 1usize;
    for i in 2..=n {
        let p = ewens / (ewens + (i - 1) as f64);
        if rng.random::<f64>() < p {
            lengths.push(i - last);
            last = i;
        }
    }
    lengths.push(n + 1 - last);
    Ok(from_sampled_lengths(n, lengths))
}

fn from_sampled_lengths(n: usize, mut lengths: Vec<usize>) -> CycleType {
    lengths.sort_unstable();
    let mut parts: Vec<(usize, usize)> = Vec::new();
    for j in lengths {
        match parts.last_mut() {
            Some(last) if last.0 == j => last.1 += 1,
            _ => parts.push((j, 1)),
        }
    }
    CycleType { n, parts }
}

/// `ln prod_j 1 / (j^{k_j} k_j!)`.
pub fn ln_cycle_type_probability(ct: &CycleType) -> f64 {
    ct.parts
        .iter()
        .map(|&(j, k)| -(k as f64) * (j as f64).ln() - ln_factorial(k))
        .sum()
}

/// Probability that a uniform permutation of size `n` has cycle type `ct`:
/// `prod_j 1 / (j^{k_j} k_j!)`.
pub fn cycle_type_probability(ct: &CycleType) -> f64 {
    if ct.n > LINEAR_PROBABILITY_LIMIT {
        return ln_cycle_type_probability(ct).exp();
    }
    let mut p = 1.0;
    for &(j, k) in &ct.parts {
        let jf = j as f64;
        for i in 1..=k {
            p /= jf * i as f64;
        }
    }
    p
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Iterator over all partitions of `n` as cycle types, parts in
/// reverse-lexicographic order: `[n]`, `[n-1, 1]`, `[n-2, 2]`, ...
#[derive(Clone, Debug)]
pub struct CycleTypeEnumerator {
    n: usize,
    /// Current partition, parts non-increasing. `None` once exhausted.
    parts: Option<Vec<usize>>,
}

impl Iterator for CycleTypeEnumerator {
    type Item = CycleType;

    fn next(&mut self) -> Option<CycleType> {
        let current = self.parts.as_ref()?;
        let mut item = current.clone();
        item.reverse();
        let out = from_sampled_lengths(self.n, item);
        self.parts = next_partition(current);
        Some(out)
    }
}

/// Next partition in reverse-lexicographic order, or `None` after `1^n`.
fn next_partition(parts: &[usize]) -> Option<Vec<usize>> {
    // Find the rightmost part greater than 1.
    let pos = parts.iter().rposition(|&p| p > 1)?;
    let mut next: Vec<usize> = parts[..pos].to_vec();
    let reduced = parts[pos] - 1;
    // trailing ones plus the unit taken from parts[pos]
    let mut remaining = parts.len() - pos;
    next.push(reduced);
    while remaining > 0 {
        let take = remaining.min(reduced);
        next.push(take);
        remaining -= take;
    }
    Some(next)
}

/// Enumerates every cycle type of `S_n` exactly once, with the default cap.
pub fn enumerate_cycle_types(n: usize) -> Result<CycleTypeEnumerator> {
    enumerate_cycle_types_with_cap(n, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_cycle_types_with_cap(n: usize, cap: usize) -> Result<CycleTypeEnumerator> {
    if n > cap {
        return Err(Error::Capacity {
            name: "n",
            value: n as u64,
            limit: cap as u64,
        });
    }
    let parts = if n == 0 { Vec::new() } else { vec![n] };
    Ok(CycleTypeEnumerator {
        n,
        parts: Some(parts),
    })
}

/// Exact mean and variance of `sum_{r < j <= n} k_j` under the uniform measure.
///
/// Uses `E k_j = 1/j`, `E k_i k_j = 1/(ij)` for `i != j`, `i + j <= n`,
/// and `E k_j (k_j - 1) = 1/j^2` for `2j <= n`; both vanish otherwise.
pub fn restricted_cycle_count_stats(n: usize, r: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if r >= n {
        return Err(Error::invalid("r", format!("must satisfy 0 <= r < n = {n}")));
    }
    let harmonic = harmonic_prefix(n);
    let mean = harmonic[n] - harmonic[r];
    // sum over ordered pairs i, j > r with i + j <= n of 1/(ij), diagonal included
    let mut pairs = 0.0;
    for i in (r + 1)..=n {
        let upper = n - i;
        if upper > r {
            pairs += (harmonic[upper] - harmonic[r]) / i as f64;
        }
    }
    let second = mean + pairs;
    Ok((mean, second - mean * mean))
}

/// `H_0, H_1, ..., H_n`.
pub(crate) fn harmonic_prefix(n: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    h.push(0.0);
    for j in 1..=n {
        acc += 1.0 / j as f64;
        h.push(acc);
    }
    h
}
