//! Divisor-size law and trajectories of the divisor process.
//!
//! For a permutation with cycle type `ct` and cycle weight `theta`, a divisor
//! (subset of cycles) `d` has weight `theta^{#cycles(d)}`; the total weight is
//! `(1 + theta)^w`. The normalised weight of divisors of each size is the
//! coefficient sequence of `prod_cycles (1 + theta z^j) / (1 + theta)`, and
//! `X_n(t)` is its distribution function evaluated at `floor(t n)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cycletype::CycleType;
use crate::error::{Error, Result};

/// Largest permutation size with dense coefficient storage.
pub const MAX_DENSE_SIZE: usize = 1_000_000;

/// Constant cycle weight `theta > 0` of a completely multiplicative `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    theta: f64,
}

impl Weight {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid("theta", "must be a positive finite number"));
        }
        Ok(Weight { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Beta-law parameter `theta / (1 + theta)`, in `(0, 1)`.
    pub fn limit_param(&self) -> f64 {
        self.theta / (1.0 + self.theta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorSizeDistribution {
    n: usize,
    c: Vec<f64>,
}

impl DivisorSizeDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `c_0, ..., c_n`.
    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// `X(k/n) = sum_{i <= k} c_i` for `k = 0..=n`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.c
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect()
    }

    /// `sum_k c_k e^{i v k}`.
    pub fn fourier(&self, v: f64) -> Complex64 {
        self.c
            .iter()
            .enumerate()
            .map(|(k, &ck)| Complex64::from_polar(ck, v * k as f64))
            .sum()
    }
}

/// Normalised weight of divisors of each size.
///
/// Multiplies in one factor `(1 + theta z^j) / (1 + theta)` per cycle, so
/// every intermediate coefficient stays in `[0, 1]`. O(n w) time.
pub fn divisor_size_distribution(ct: &CycleType, w: Weight) -> Result<DivisorSizeDistribution> {
    let n = ct.n();
    if n > MAX_DENSE_SIZE {
        return Err(Error::Capacity {
            name: "n",
            value: n as u64,
            limit: MAX_DENSE_SIZE as u64,
        });
    }
    let keep = 1.0 / (1.0 + w.theta);
    let take = w.theta / (1.0 + w.theta);
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    let mut top = 0usize;
    for j in ct.lengths() {
        for k in (j..=top + j).rev() {
            c[k] = keep * c[k] + take * c[k - j];
        }
        for x in &mut c[..j] {
            *x *= keep;
        }
        top += j;
    }
    Ok(DivisorSizeDistribution { n, c })
}

/// `f(sigma) = (1 + theta)^w`.
pub fn total_weight(ct: &CycleType, w: Weight) -> f64 {
    ln_total_weight(ct, w).exp()
}

pub fn ln_total_weight(ct: &CycleType, w: Weight) -> f64 {
    ct.cycle_count() as f64 * w.theta.ln_1p()
}

/// Binomial convolution `q(k) = sum_s C(k, s) g(s) h(k - s)`.
pub fn binomial_convolution(g_vals: &[f64], h_vals: &[f64], k: usize) -> Result<f64> {
    for vals in [g_vals, h_vals] {
        if k >= vals.len() {
            return Err(Error::OutOfRange {
                index: k,
                len: vals.len(),
            });
        }
    }
    let mut binom = 1.0;
    let mut total = 0.0;
    for s in 0..=k {
        total += binom * g_vals[s] * h_vals[k - s];
        binom = binom * (k - s) as f64 / (s + 1) as f64;
    }
    Ok(total)
}

/// `X_n` evaluated on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory {
    /// Trajectory at every jump point `k / n`, `k = 0..=n`.
    pub fn lattice(d: &DivisorSizeDistribution) -> Trajectory {
        let n = d.n.max(1) as f64;
        Trajectory {
            grid: (0..=d.n).map(|k| k as f64 / n).collect(),
            values: d.cumulative(),
        }
    }

    /// Differences between consecutive grid values.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|p| p[1] - p[0]).collect()
    }
}

/// `floor(t n)`, snapping products within rounding distance of an integer.
pub fn lattice_index(t: f64, n: usize) -> usize {
    let x = t * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.floor() };
    (k.max(0.0) as usize).min(n)
}

/// Evaluates `X_n(t) = sum_{k <= floor(t n)} c_k` on `grid` (right-continuous).
pub fn trajectory_eval(d: &DivisorSizeDistribution, grid: &[f64]) -> Result<Trajectory> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::invalid("grid", "times must lie in [0, 1]"));
    }
    if grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::invalid("grid", "times must be strictly increasing"));
    }
    let cum = d.cumulative();
    let values = grid.iter().map(|&t| cum[lattice_index(t, d.n)]).collect();
    Ok(Trajectory {
        grid: grid.to_vec(),
        values,
    })
}

/// Modulus of continuity `sup_{0 <= t <= 1-a} X(t + a) - X(t)`.
///
/// `tr` must be evaluated on the full lattice `k / n`. The increment over
/// `(t, t + a]` collects the atoms at `i/n..=j/n` with `i >= 1` and
/// `j - i < a n`; the best such block is found in one pass.
pub fn modulus_of_continuity(tr: &Trajectory, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid("a", "window length must lie in (0, 1)"));
    }
    let n = tr.values.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::invalid("tr", "needs at least two lattice points"));
    }
    let lattice_ok = tr
        .grid
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - k as f64 / n as f64).abs() <= 1e-12);
    if tr.grid.len() != tr.values.len() || !lattice_ok {
        return Err(Error::invalid("tr", "must be evaluated on the lattice k/n"));
    }
    Ok(window_mass(&tr.values, max_span(a, n)))
}

/// Largest integer span `s` with `s < a n`; `n - 1` once `a >= 1`.
pub(crate) fn max_span(a: f64, n: usize) -> usize {
    if a >= 1.0 {
        return n - 1;
    }
    let x = a * n as f64;
    let r = x.round();
    let s = if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r - 1.0
    } else {
        x.floor()
    };
    (s.max(0.0) as usize).min(n - 1)
}

/// Largest `cum[j] - cum[i - 1]` over `1 <= i <= j <= n` with `j - i <= span`.
pub(crate) fn window_mass(cum: &[f64], span: usize) -> f64 {
    let n = cum.len() - 1;
    let mut best: f64 = 0.0;
    for j in 1..=n {
        let i = j.saturating_sub(span).max(1);
        best = best.max(cum[j] - cum[i - 1]);
    }
    best
}

/// `G(v) = prod_cycles (1 + theta e^{i j v}) / (1 + theta)`, the characteristic
/// function of the divisor size.
pub fn divisor_char_fn(ct: &CycleType, w: Weight, v: f64) -> Complex64 {
    let norm = 1.0 + w.theta;
    ct.pairs()
        .iter()
        .map(|&(j, k)| {
            let factor = (Complex64::new(1.0, 0.0) + Complex64::from_polar(w.theta, v * j as f64)) / norm;
            factor.powu(k as u32)
        })
        .product()
}
