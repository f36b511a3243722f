//! Exact finite-`n` quantities: friable and free probabilities, harmonic
//! tails, the second-moment identity for the long-cycle count, exact moments
//! of `X_n` by partition enumeration, and the mean-value upper bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycletype::{
    cycle_type_probability, enumerate_cycle_types, harmonic_prefix, restricted_cycle_count_stats,
    CycleType,
};
use crate::divproc::{divisor_size_distribution, lattice_index, Weight};
use crate::error::{Error, Result};
use crate::EULER_GAMMA;

/// Largest `m` a recurrence table may reach.
pub const RECURRENCE_CAPACITY: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecurrenceKind {
    /// All cycles of length at most `r`.
    Friable,
    /// All cycles of length greater than `r`.
    Free,
}

/// `p(0), ..., p(M)` for one threshold `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTable {
    pub kind: RecurrenceKind,
    pub r: usize,
    values: Vec<f64>,
}

impl RecurrenceTable {
    /// Probabilities that a uniform permutation of size `m` is `r`-friable:
    /// `m p(m) = sum_{j=1}^{min(r, m)} p(m - j)`.
    pub fn friable(r: usize, max_m: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::invalid("r", "must be at least 1"));
        }
        check_capacity(max_m)?;
        let mut p = Vec::with_capacity(max_m + 1);
        p.push(1.0);
        // window = p(m - min(r, m)) + ... + p(m - 1)
        let mut window = 0.0;
        for m in 1..=max_m {
            window += p[m - 1];
            if m > r {
                window -= p[m - 1 - r];
            }
            // Rebuild the sliding sum once per window length so rounding
            // never accumulates across a decay of more than one block.
            if m % r == 0 {
                window = p[m.saturating_sub(r)..m].iter().rev().sum();
            }
            p.push((window / m as f64).max(0.0));
        }
        Ok(RecurrenceTable {
            kind: RecurrenceKind::Friable,
            r,
            values: p,
        })
    }

    /// Probabilities that a uniform permutation of size `m` is `r`-free:
    /// `m q(m) = sum_{j=r+1}^{m} q(m - j)`.
    pub fn free(r: usize, max_m: usize) -> Result<Self> {
        check_capacity(max_m)?;
        let mut q = Vec::with_capacity(max_m + 1);
        q.push(1.0);
        // prefix = q(0) + ... + q(m - r - 1)
        let mut prefix = 0.0;
        for m in 1..=max_m {
            if m > r {
                prefix += q[m - r - 1];
            }
            q.push(prefix / m as f64);
        }
        Ok(RecurrenceTable {
            kind: RecurrenceKind::Free,
            r,
            values: q,
        })
    }

    pub fn get(&self, m: usize) -> Result<f64> {
        self.values.get(m).copied().ok_or(Error::OutOfRange {
            index: m,
            len: self.values.len(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_capacity(m: usize) -> Result<()> {
    if m > RECURRENCE_CAPACITY {
        return Err(Error::Capacity {
            name: "m",
            value: m as u64,
            limit: RECURRENCE_CAPACITY as u64,
        });
    }
    Ok(())
}

pub fn friable_probability(m: usize, r: usize) -> Result<f64> {
    RecurrenceTable::friable(r, m)?.get(m)
}

pub fn free_probability(m: usize, r: usize) -> Result<f64> {
    RecurrenceTable::free(r, m)?.get(m)
}

/// `h(y, x) = sum_{y < j <= x} 1/j`.
pub fn harmonic_tail(y: usize, x: usize) -> Result<f64> {
    if x < y {
        return Err(Error::invalid("x", "must be at least y"));
    }
    // small terms first
    Ok(((y + 1)..=x).rev().map(|j| 1.0 / j as f64).sum())
}

/// Both sides of the second-moment identity for the number `W` of cycles
/// longer than `r`:
/// `E (W - h(r, n))^2 = h(r, n) - sum_{r < i, j <= n, i + j > n} 1/(ij)`.
///
/// The left side comes from the exact cycle-count moments, the right side
/// from the closed form.
pub fn second_moment_identity(n: usize, r: usize) -> Result<(f64, f64)> {
    // the mean is h(r, n), so the centred second moment is the variance
    let (_, lhs) = restricted_cycle_count_stats(n, r)?;
    let harmonic = harmonic_prefix(n);
    let h = harmonic[n] - harmonic[r];
    let mut tail = 0.0;
    for i in (r + 1)..=n {
        // j ranges over max(r, n - i) < j <= n
        let lo = r.max(n - i);
        tail += (harmonic[n] - harmonic[lo]) / i as f64;
    }
    Ok((lhs, h - tail))
}

fn exact_cap_check(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if n > crate::cycletype::DEFAULT_ENUMERATION_CAP {
        return Err(Error::Capacity {
            name: "n",
            value: n as u64,
            limit: crate::cycletype::DEFAULT_ENUMERATION_CAP as u64,
        });
    }
    Ok(())
}

/// Sums `f(ct)` weighted by cycle-type probability over all of `S_n`.
///
/// Partitions are processed in fixed-size batches in parallel and the batch
/// sums added in enumeration order, so the result is independent of the
/// thread count.
fn sum_over_cycle_types<T, F>(n: usize, zero: T, f: F) -> Result<T>
where
    T: Send + Sync + Clone + std::ops::AddAssign,
    F: Fn(&CycleType, f64) -> T + Sync,
{
    const BATCH: usize = 2048;
    let mut total = zero.clone();
    let mut iter = enumerate_cycle_types(n)?;
    loop {
        let batch: Vec<CycleType> = iter.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        let partial = batch
            .par_chunks(64)
            .map(|chunk| {
                let mut acc = zero.clone();
                for ct in chunk {
                    acc += f(ct, cycle_type_probability(ct));
                }
                acc
            })
            .collect::<Vec<T>>();
        for p in partial {
            total += p;
        }
    }
    Ok(total)
}

/// `E_n prod_i X_n(t_i)` exactly, by enumerating every cycle type of `S_n`.
pub fn exact_moments(n: usize, w: Weight, l: usize, tvec: &[f64]) -> Result<f64> {
    exact_cap_check(n)?;
    if l == 0 || tvec.len() != l {
        return Err(Error::invalid("tvec", format!("expected {l} times")));
    }
    if tvec.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::invalid("tvec", "times must lie in [0, 1]"));
    }
    let idx: Vec<usize> = tvec.iter().map(|&t| lattice_index(t, n)).collect();
    let total = sum_over_cycle_types(n, 0.0, |ct, p| {
        let d = divisor_size_distribution(ct, w).expect("n is below the dense cap");
        let cum = d.cumulative();
        p * idx.iter().map(|&k| cum[k]).product::<f64>()
    })?;
    Ok(total)
}

/// Per-thread accumulator for the exact mean curve.
#[derive(Clone)]
struct CurveSum(Vec<f64>);

impl std::ops::AddAssign for CurveSum {
    fn add_assign(&mut self, rhs: CurveSum) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

/// `E_n X_n(k/n)` for every `k = 0..=n`, in one enumeration pass.
pub fn exact_mean_lattice(n: usize, w: Weight) -> Result<Vec<f64>> {
    exact_cap_check(n)?;
    let total = sum_over_cycle_types(n, CurveSum(vec![0.0; n + 1]), |ct, p| {
        let d = divisor_size_distribution(ct, w).expect("n is below the dense cap");
        CurveSum(d.cumulative().into_iter().map(|x| p * x).collect())
    })?;
    Ok(total.0)
}

/// `sup_{t in [0, 1]} |S(t) - F(t)|` where `S` is the right-continuous step
/// function with value `steps[k]` on `[k/n, (k+1)/n)` and `F` is continuous
/// and nondecreasing. Both ends of every step are inspected.
pub fn sup_distance_to_cdf(steps: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = steps.len() - 1;
    let mut sup: f64 = (steps[n] - cdf(1.0)).abs();
    for k in 0..n {
        let left = cdf(k as f64 / n as f64);
        let right = cdf((k + 1) as f64 / n as f64);
        sup = sup.max((steps[k] - left).abs()).max((steps[k] - right).abs());
    }
    sup
}

/// Upper bound `(e^gamma + c/n) exp(sum_j (q_j - 1)/j)` for the mean of a
/// completely multiplicative function with `q_j(1) = qvals[j - 1]` in
/// `[0, 1]`. `c` stands in for the unquantified `O(1/n)` term.
pub fn mean_value_upper_bound(qvals: &[f64], c: f64) -> Result<f64> {
    if qvals.is_empty() {
        return Err(Error::invalid("qvals", "must not be empty"));
    }
    if qvals.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::invalid("qvals", "values must lie in [0, 1]"));
    }
    let n = qvals.len();
    let exponent: f64 = qvals
        .iter()
        .enumerate()
        .map(|(j, &q)| (q - 1.0) / (j + 1) as f64)
        .sum();
    Ok((EULER_GAMMA.exp() + c / n as f64) * exponent.exp())
}
