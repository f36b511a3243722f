//! Joint moments of the limit process.
//!
//! Expanding `prod_{i<=l} X(t_i)` over `l`-tuples of divisors assigns every
//! cycle an `l`-bit membership pattern `m`; pattern `m` carries weight
//! `e(m) = theta^{d(m)} (1 + theta)^{-l}` with `d(m)` the binary digit sum.
//! In the limit the total length fractions of cycles with each pattern are
//! Dirichlet(`e(0), ..., e(2^l - 1)`), and because the `e(m)` sum to one the
//! moment integral equals the probability that
//! `u_j = sum_m bit_{j-1}(m) v_m <= t_j` for every `j`. That probability is
//! estimated by sampling.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::GaussRule;
use super::special::{ln_gamma, regularized_incomplete_beta};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest number of time points accepted by [`dirichlet_moment_params`].
pub const MAX_LEVELS: usize = 10;

const CHUNK: usize = 4096;

/// Which power of `(1 + theta)` normalises the exponents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExponentBase {
    /// `(1 + theta)^{-l}`: the exponents sum to one.
    #[default]
    Levels,
    /// `(1 + theta)^{-(2^l - 1)}`, kept for side-by-side comparison only.
    LiteralR,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentParams {
    pub l: usize,
    pub theta: f64,
    pub base: ExponentBase,
    /// `e(0), ..., e(2^l - 1)`.
    pub e: Vec<f64>,
}

impl MomentParams {
    pub fn new(theta: f64, l: usize, base: ExponentBase) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid("theta", "must be a positive finite number"));
        }
        if l == 0 || l > MAX_LEVELS {
            return Err(Error::invalid("l", format!("must lie in 1..={MAX_LEVELS}")));
        }
        let r = (1usize << l) - 1;
        let power = match base {
            ExponentBase::Levels => l,
            ExponentBase::LiteralR => r,
        };
        let scale = -(power as f64) * theta.ln_1p();
        let e = (0..=r)
            .map(|m| (m.count_ones() as f64 * theta.ln() + scale).exp())
            .collect();
        Ok(MomentParams { l, theta, base, e })
    }

    /// `r = 2^l - 1`, the number of free simplex coordinates.
    pub fn r(&self) -> usize {
        self.e.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.e.iter().sum()
    }
}

/// Exponents `e(m) = theta^{d(m)} (1 + theta)^{-l}`, `m = 0..2^l`.
pub fn dirichlet_moment_params(theta: f64, l: usize) -> Result<MomentParams> {
    MomentParams::new(theta, l, ExponentBase::Levels)
}

/// Point `(v_1, ..., v_r)` of the simplex `sum v_m <= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    pub v: Vec<f64>,
}

impl SimplexPoint {
    pub fn sum(&self) -> f64 {
        self.v.iter().sum()
    }

    /// `u_j = sum_m bit_{j-1}(m) v_m` for `j = 1..=l`.
    pub fn level_sums(&self, l: usize) -> Vec<f64> {
        (0..l)
            .map(|bit| {
                self.v
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| ((i + 1) >> bit) & 1 == 1)
                    .map(|(_, &x)| x)
                    .sum()
            })
            .collect()
    }
}

/// Logarithm of a Gamma(`shape`, 1) variate. Small shapes use
/// `G(shape) = G(shape + 1) U^{1/shape}`, applied in log space so the tiny
/// values it produces never underflow.
fn ln_gamma_variate(shape: f64, base: &Gamma<f64>, rng: &mut RngStream) -> f64 {
    let g = base.sample(rng);
    if shape >= 1.0 {
        g.ln()
    } else {
        g.ln() + rng.open_unit().ln() / shape
    }
}

struct DirichletSampler {
    shapes: Vec<f64>,
    bases: Vec<Gamma<f64>>,
}

impl DirichletSampler {
    /// Shapes ordered `e(1), ..., e(r), e(0)`.
    fn new(params: &MomentParams) -> Result<Self> {
        if params.e.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::invalid("params", "all exponents must be positive"));
        }
        let mut shapes: Vec<f64> = params.e[1..].to_vec();
        shapes.push(params.e[0]);
        let bases = shapes
            .iter()
            .map(|&s| {
                let k = if s >= 1.0 { s } else { s + 1.0 };
                Gamma::new(k, 1.0).map_err(|e| Error::invalid("params", e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DirichletSampler { shapes, bases })
    }

    fn sample_into(&self, rng: &mut RngStream, logs: &mut [f64], out: &mut Vec<f64>) {
        for ((slot, &s), base) in logs.iter_mut().zip(&self.shapes).zip(&self.bases) {
            *slot = ln_gamma_variate(s, base, rng);
        }
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logs.iter().map(|&x| (x - max).exp()).sum();
        out.clear();
        let r = logs.len() - 1;
        out.extend(logs[..r].iter().map(|&x| (x - max).exp() / total));
    }
}

/// Draws `(v_1, ..., v_r)` from Dirichlet(`e(1), ..., e(r)`; `e(0)`), the
/// last shape belonging to the remainder `1 - sum v`.
pub fn sample_dirichlet(params: &MomentParams, rng: &mut RngStream) -> Result<SimplexPoint> {
    let sampler = DirichletSampler::new(params)?;
    let mut logs = vec![0.0; sampler.shapes.len()];
    let mut v = Vec::with_capacity(params.r());
    sampler.sample_into(rng, &mut logs, &mut v);
    Ok(SimplexPoint { v })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `E(l, t)`, the limit of `E prod_i X_n(t_i)`.
pub fn limit_joint_moment(
    theta: f64,
    l: usize,
    tvec: &[f64],
    samples: usize,
    rng: &RngStream,
) -> Result<MomentEstimate> {
    let params = dirichlet_moment_params(theta, l)?;
    limit_joint_moment_with(&params, tvec, samples, rng)
}

/// As [`limit_joint_moment`] for explicit exponents. With
/// [`ExponentBase::LiteralR`] the exponents do not sum to one and the
/// probability is rescaled by `1 / Gamma(sum e)` to match the literal
/// integral.
pub fn limit_joint_moment_with(
    params: &MomentParams,
    tvec: &[f64],
    samples: usize,
    rng: &RngStream,
) -> Result<MomentEstimate> {
    if samples < 1000 {
        return Err(Error::invalid("samples", "must be at least 1000"));
    }
    if tvec.len() != params.l {
        return Err(Error::invalid(
            "tvec",
            format!("expected {} times, got {}", params.l, tvec.len()),
        ));
    }
    if tvec.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::invalid("tvec", "times must lie in (0, 1]"));
    }
    let sampler = DirichletSampler::new(params)?;
    let l = params.l;
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng.fork(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut logs = vec![0.0; sampler.shapes.len()];
            let mut v = Vec::with_capacity(params.r());
            let mut hits = 0u64;
            for _ in 0..count {
                sampler.sample_into(&mut stream, &mut logs, &mut v);
                let inside = (0..l).all(|bit| {
                    if tvec[bit] >= 1.0 {
                        return true;
                    }
                    let u: f64 = v
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| ((i + 1) >> bit) & 1 == 1)
                        .map(|(_, &x)| x)
                        .sum();
                    u <= tvec[bit]
                });
                hits += inside as u64;
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    let scale = match params.base {
        ExponentBase::Levels => 1.0,
        ExponentBase::LiteralR => (-ln_gamma(params.total())).exp(),
    };
    Ok(MomentEstimate {
        estimate: p * scale,
        std_error: se * scale,
        samples,
    })
}

/// Gauss–Legendre points per dimension (two panels of this size each).
const DIAGONAL_POINTS: usize = 48;

/// `E(2, (t, t))`, the limit of `E X_n(t)^2`, by deterministic quadrature.
pub fn limit_second_moment_diagonal(theta: f64, t: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", "must be a positive finite number"));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid("t", "must lie in (0, 1)"));
    }
    let a = theta / (1.0 + theta);
    if t <= 0.5 {
        Ok(diagonal_integral(t, 1.0 - a, DIAGONAL_POINTS))
    } else {
        let beta = regularized_incomplete_beta(t, a, 1.0 - a)?;
        Ok(diagonal_integral(1.0 - t, a, DIAGONAL_POINTS) + 2.0 * beta - 1.0)
    }
}

/// `I(t, a)` for `0 < t <= 1/2`, `b = 1 - a`:
///
/// `2 / (G(a^2) G(b^2) G(ab)^2) int_0^t w^{ab-1} int_0^{t-w} v^{b^2-1}
///  int_0^w u^{ab-1} (1-w-v-u)^{a^2-1} du dv dw`.
///
/// Power substitutions `w = x^{1/ab}` (near 0), `t - w = s^{1/b^2}` (near t),
/// `v = y^{1/b^2}`, `u = z^{1/ab}` absorb every endpoint singularity.
pub(crate) fn diagonal_integral(t: f64, a: f64, points: usize) -> f64 {
    let b = 1.0 - a;
    let (ab, aa, bb) = (a * b, a * a, b * b);
    let rule = GaussRule::new(points);
    let panels = 2;

    // int_0^{t-w} v^{bb-1} int_0^w u^{ab-1} (1-w-v-u)^{aa-1} du dv
    let inner = |w: f64| -> f64 {
        let v_top = (t - w).max(0.0).powf(bb);
        let u_top = w.powf(ab);
        let value = rule.integrate_panels(0.0, v_top, panels, |y| {
            let v = y.powf(1.0 / bb);
            rule.integrate_panels(0.0, u_top, panels, |z| {
                let u = z.powf(1.0 / ab);
                (1.0 - w - v - u).max(f64::MIN_POSITIVE).powf(aa - 1.0)
            })
        });
        value / (bb * ab)
    };

    let half = 0.5 * t;
    let near_zero = rule.integrate_panels(0.0, half.powf(ab), panels, |x| inner(x.powf(1.0 / ab)) / ab);
    let near_t = rule.integrate_panels(0.0, half.powf(bb), panels, |s| {
        let w = t - s.powf(1.0 / bb);
        w.powf(ab - 1.0) * inner(w) * s.powf(1.0 / bb - 1.0) / bb
    });
    let ln_norm = (2.0f64).ln() - ln_gamma(aa) - ln_gamma(bb) - 2.0 * ln_gamma(ab);
    ln_norm.exp() * (near_zero + near_t)
}
