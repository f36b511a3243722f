//! Ensemble experiments: many independent trajectories summarised and
//! compared with the limit-law oracles.
//!
//! Sample `i` always draws from `RngStream::new(seed, i)`. Samples are
//! processed in fixed chunks whose partial sums are merged in index order,
//! so a report depends on `(config, seed)` only, never on the thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divproc::{
    divisor_size_distribution, lattice_index, max_span, window_mass, Weight, MAX_DENSE_SIZE,
};
use crate::error::{Error, Result};
use crate::oracles::{limit_joint_moment, regularized_incomplete_beta};
use crate::rng::{RngStream, DEFAULT_SEED};
use crate::sampler::{MeasureSpec, SamplerRegistry};

/// Upper limit on `n * samples` accepted by [`run_ensemble`].
pub const ENSEMBLE_BUDGET: u64 = 20_000_000_000;

/// Increments are rounded to multiples of `2^-INCREMENT_BITS`.
pub const INCREMENT_BITS: u32 = 12;

/// Number of largest atoms summarised by the increment study.
pub const TOP_ATOMS: usize = 20;

const CHUNK: usize = 64;
/// Stream id reserved for oracle sampling, disjoint from sample indices.
const ORACLE_STREAM: u64 = u64::MAX - 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub samples: usize,
    pub theta: f64,
    pub seed: u64,
    /// Mean curve is evaluated at `t = i / grid`, `i = 0..=grid`.
    pub grid: usize,
    pub measure: MeasureSpec,
    /// Time vectors whose product moments `E prod_i X(t_i)` are estimated.
    pub moments: Vec<Vec<f64>>,
    /// Window lengths for the modulus of continuity.
    pub windows: Vec<f64>,
    /// `(s, t)` for the increment histogram of `X(t) - X(s)`.
    pub increment: Option<(f64, f64)>,
    /// Dirichlet draws used by oracle estimates.
    pub oracle_samples: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n: 1000,
            samples: 10_000,
            theta: 1.0,
            seed: DEFAULT_SEED,
            grid: 200,
            measure: MeasureSpec::uniform(),
            moments: Vec::new(),
            windows: vec![0.2, 0.1, 0.05, 0.02],
            increment: Some((0.3, 0.7)),
            oracle_samples: 1_000_000,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if self.n > MAX_DENSE_SIZE {
            return Err(Error::Capacity {
                name: "n",
                value: self.n as u64,
                limit: MAX_DENSE_SIZE as u64,
            });
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples", "must be at least 1"));
        }
        let work = self.n as u64 * self.samples as u64;
        if work > ENSEMBLE_BUDGET {
            return Err(Error::Capacity {
                name: "n*samples",
                value: work,
                limit: ENSEMBLE_BUDGET,
            });
        }
        Weight::new(self.theta)?;
        if self.grid == 0 {
            return Err(Error::invalid("grid", "must be at least 1"));
        }
        for tv in &self.moments {
            if tv.is_empty() || tv.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(Error::invalid("tvec", "times must be nonempty and lie in [0, 1]"));
            }
        }
        if self.windows.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::invalid("a", "window lengths must lie in (0, 1]"));
        }
        if let Some((s, t)) = self.increment {
            if !(s > 0.0 && s <= t && t < 1.0) {
                return Err(Error::invalid("s", "increment times need 0 < s <= t < 1"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub theta: f64,
    pub n: usize,
    pub samples: usize,
    pub grid: usize,
    pub measure: String,
    pub version: String,
}

impl ReportMetadata {
    pub fn from_config(cfg: &EnsembleConfig) -> Self {
        ReportMetadata {
            seed: cfg.seed,
            theta: cfg.theta,
            n: cfg.n,
            samples: cfg.samples,
            grid: cfg.grid,
            measure: cfg.measure.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub l: usize,
    pub tvec: Vec<f64>,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub a: f64,
    pub mean_q: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Increment rounded to `numerator / 2^12`.
    pub value: f64,
    pub count: u64,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicCheck {
    /// Increments whose exactness could be verified (`w <= 52`).
    pub checked: u64,
    /// Checked increments that were not of the form `k / 2^w`.
    pub failures: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementHistogram {
    pub s: f64,
    pub t: f64,
    pub bins: Vec<HistogramBin>,
    /// Present only for `theta = 1`, where increments are dyadic.
    pub dyadic: Option<DyadicCheck>,
}

impl IncrementHistogram {
    /// Frequencies of the `k` most frequent rounded values, largest first.
    pub fn top_atoms(&self, k: usize) -> Vec<HistogramBin> {
        let mut bins = self.bins.clone();
        bins.sort_by(|a, b| b.count.cmp(&a.count).then(a.value.total_cmp(&b.value)));
        bins.truncate(k);
        bins
    }

    pub fn top_atom_mass(&self, k: usize) -> f64 {
        self.top_atoms(k).iter().map(|b| b.frequency).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedDistance {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub metadata: ReportMetadata,
    pub mean_curve: Vec<CurvePoint>,
    pub moment_estimates: Vec<MomentRow>,
    pub modulus_table: Vec<ModulusRow>,
    pub increment_histogram: Option<IncrementHistogram>,
    pub oracle_distances: Vec<NamedDistance>,
}

/// Sums over one chunk of samples.
#[derive(Clone, Debug)]
struct Partial {
    curve: Vec<f64>,
    curve_sq: Vec<f64>,
    moments: Vec<f64>,
    moments_sq: Vec<f64>,
    modulus: Vec<f64>,
    modulus_sq: Vec<f64>,
    histogram: BTreeMap<u64, u64>,
    dyadic_checked: u64,
    dyadic_failures: u64,
}

impl Partial {
    fn zeros(cfg: &EnsembleConfig) -> Self {
        Partial {
            curve: vec![0.0; cfg.grid + 1],
            curve_sq: vec![0.0; cfg.grid + 1],
            moments: vec![0.0; cfg.moments.len()],
            moments_sq: vec![0.0; cfg.moments.len()],
            modulus: vec![0.0; cfg.windows.len()],
            modulus_sq: vec![0.0; cfg.windows.len()],
            histogram: BTreeMap::new(),
            dyadic_checked: 0,
            dyadic_failures: 0,
        }
    }

    fn merge(&mut self, other: &Partial) {
        let pairs = [
            (&mut self.curve, &other.curve),
            (&mut self.curve_sq, &other.curve_sq),
            (&mut self.moments, &other.moments),
            (&mut self.moments_sq, &other.moments_sq),
            (&mut self.modulus, &other.modulus),
            (&mut self.modulus_sq, &other.modulus_sq),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (k, c) in &other.histogram {
            *self.histogram.entry(*k).or_insert(0) += c;
        }
        self.dyadic_checked += other.dyadic_checked;
        self.dyadic_failures += other.dyadic_failures;
    }
}

/// `(sum, sum of squares)` to `(mean, standard error of the mean)`.
fn mean_and_se(sum: f64, sq: f64, m: usize) -> (f64, f64) {
    let mf = m as f64;
    let mean = sum / mf;
    if m < 2 {
        return (mean, 0.0);
    }
    let var = ((sq - mf * mean * mean) / (mf - 1.0)).max(0.0);
    (mean, (var / mf).sqrt())
}

/// Simulates `cfg.samples` independent trajectories and summarises them.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleReport> {
    cfg.validate()?;
    let weight = Weight::new(cfg.theta)?;
    let sampler = SamplerRegistry::with_builtins().build(&cfg.measure)?;
    let n = cfg.n;
    let curve_idx: Vec<usize> = (0..=cfg.grid)
        .map(|i| ((i as u128 * n as u128) / cfg.grid as u128) as usize)
        .collect();
    let moment_idx: Vec<Vec<usize>> = cfg
        .moments
        .iter()
        .map(|tv| tv.iter().map(|&t| lattice_index(t, n)).collect())
        .collect();
    let spans: Vec<usize> = cfg.windows.iter().map(|&a| max_span(a, n)).collect();
    let increment_idx = cfg
        .increment
        .map(|(s, t)| (lattice_index(s, n), lattice_index(t, n)));
    let dyadic = cfg.theta == 1.0;
    let scale = (1u64 << INCREMENT_BITS) as f64;

    let chunks = cfg.samples.div_ceil(CHUNK);
    let partials: Vec<Result<Partial>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Partial::zeros(cfg);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.samples);
            for i in lo..hi {
                let mut rng = RngStream::new(cfg.seed, i as u64);
                let ct = sampler.sample(n, &mut rng)?;
                let cum = divisor_size_distribution(&ct, weight)?.cumulative();
                for (j, &k) in curve_idx.iter().enumerate() {
                    acc.curve[j] += cum[k];
                    acc.curve_sq[j] += cum[k] * cum[k];
                }
                for (j, idx) in moment_idx.iter().enumerate() {
                    let p: f64 = idx.iter().map(|&k| cum[k]).product();
                    acc.moments[j] += p;
                    acc.moments_sq[j] += p * p;
                }
                for (j, &span) in spans.iter().enumerate() {
                    let q = window_mass(&cum, span);
                    acc.modulus[j] += q;
                    acc.modulus_sq[j] += q * q;
                }
                if let Some((ks, kt)) = increment_idx {
                    let inc = cum[kt] - cum[ks];
                    let bin = (inc * scale).round().max(0.0) as u64;
                    *acc.histogram.entry(bin).or_insert(0) += 1;
                    let w = ct.cycle_count();
                    if dyadic && w <= 52 {
                        acc.dyadic_checked += 1;
                        let scaled = inc * (1u64 << w) as f64;
                        if scaled.fract() != 0.0 {
                            acc.dyadic_failures += 1;
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = Partial::zeros(cfg);
    for p in partials {
        total.merge(&p?);
    }

    let m = cfg.samples;
    let mean_curve = (0..=cfg.grid)
        .map(|i| {
            let (mean, se) = mean_and_se(total.curve[i], total.curve_sq[i], m);
            CurvePoint {
                t: i as f64 / cfg.grid as f64,
                mean,
                std_error: se,
            }
        })
        .collect();
    let moment_estimates = cfg
        .moments
        .iter()
        .enumerate()
        .map(|(j, tv)| {
            let (estimate, std_error) = mean_and_se(total.moments[j], total.moments_sq[j], m);
            MomentRow {
                l: tv.len(),
                tvec: tv.clone(),
                estimate,
                std_error,
            }
        })
        .collect();
    let modulus_table = cfg
        .windows
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let (mean_q, std_error) = mean_and_se(total.modulus[j], total.modulus_sq[j], m);
            ModulusRow {
                a,
                mean_q,
                std_error,
            }
        })
        .collect();
    let increment_histogram = cfg.increment.map(|(s, t)| IncrementHistogram {
        s,
        t,
        bins: total
            .histogram
            .iter()
            .map(|(&k, &count)| HistogramBin {
                value: k as f64 / scale,
                count,
                frequency: count as f64 / m as f64,
            })
            .collect(),
        dyadic: dyadic.then_some(DyadicCheck {
            checked: total.dyadic_checked,
            failures: total.dyadic_failures,
        }),
    });

    let mut report = EnsembleReport {
        metadata: ReportMetadata::from_config(cfg),
        mean_curve,
        moment_estimates,
        modulus_table,
        increment_histogram,
        oracle_distances: Vec::new(),
    };
    if sampler.is_uniform() {
        let d = compare_mean_curve(&report, cfg.theta)?;
        report.oracle_distances.push(NamedDistance {
            name: "mean_curve_vs_beta".into(),
            value: d,
        });
    }
    Ok(report)
}

/// `sup_grid |mean curve - B(t; theta', 1 - theta')|`, `theta' = theta / (1 + theta)`.
pub fn compare_mean_curve(report: &EnsembleReport, theta: f64) -> Result<f64> {
    let a = Weight::new(theta)?.limit_param();
    let mut sup: f64 = 0.0;
    for p in &report.mean_curve {
        let b = regularized_incomplete_beta(p.t, a, 1.0 - a)?;
        sup = sup.max((p.mean - b).abs());
    }
    Ok(sup)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointMomentCheck {
    pub l: usize,
    pub tvec: Vec<f64>,
    pub empirical: f64,
    pub empirical_se: f64,
    pub oracle: f64,
    pub oracle_se: f64,
    pub z_score: f64,
}

/// Ensemble mean of `prod_i X_n(t_i)` against the Dirichlet oracle.
pub fn verify_joint_moments(cfg: &EnsembleConfig, l: usize, tvec: &[f64]) -> Result<JointMomentCheck> {
    if l == 0 || l > 4 {
        return Err(Error::invalid("l", "must lie in 1..=4"));
    }
    if tvec.len() != l {
        return Err(Error::invalid("tvec", format!("expected {l} times")));
    }
    if cfg.measure.name != "uniform" {
        return Err(Error::invalid("measure", "oracle comparisons need the uniform measure"));
    }
    let run_cfg = EnsembleConfig {
        moments: vec![tvec.to_vec()],
        windows: Vec::new(),
        increment: None,
        ..cfg.clone()
    };
    let report = run_ensemble(&run_cfg)?;
    let row = &report.moment_estimates[0];
    let oracle = limit_joint_moment(
        cfg.theta,
        l,
        tvec,
        cfg.oracle_samples,
        &RngStream::new(cfg.seed, ORACLE_STREAM),
    )?;
    let diff = row.estimate - oracle.estimate;
    let se = (row.std_error.powi(2) + oracle.std_error.powi(2)).sqrt();
    let z_score = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    Ok(JointMomentCheck {
        l,
        tvec: tvec.to_vec(),
        empirical: row.estimate,
        empirical_se: row.std_error,
        oracle: oracle.estimate,
        oracle_se: oracle.std_error,
        z_score,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusScalingRow {
    pub a: f64,
    pub mean_q: f64,
    pub std_error: f64,
    /// `mean_q / a^{theta / (1 + theta)}`.
    pub ratio: f64,
}

/// Mean modulus of continuity for each window and its ratio to `a^{theta'}`.
/// `a = 1` is clamped to the widest window, giving `E(1 - c_0)`.
pub fn modulus_scaling_study(cfg: &EnsembleConfig, avec: &[f64]) -> Result<Vec<ModulusScalingRow>> {
    if avec.is_empty() {
        return Err(Error::invalid("a", "need at least one window length"));
    }
    let exponent = Weight::new(cfg.theta)?.limit_param();
    let run_cfg = EnsembleConfig {
        windows: avec.to_vec(),
        moments: Vec::new(),
        increment: None,
        ..cfg.clone()
    };
    let report = run_ensemble(&run_cfg)?;
    Ok(report
        .modulus_table
        .iter()
        .map(|row| ModulusScalingRow {
            a: row.a,
            mean_q: row.mean_q,
            std_error: row.std_error,
            ratio: row.mean_q / row.a.powf(exponent),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementStudy {
    pub histogram: IncrementHistogram,
    pub top_atoms: Vec<HistogramBin>,
    pub top_atom_mass: f64,
}

/// Distribution of `X_n(t) - X_n(s)` rounded to `2^-12`, with the exact
/// dyadic check when `theta = 1`.
pub fn increment_atom_study(cfg: &EnsembleConfig, s: f64, t: f64) -> Result<IncrementStudy> {
    let run_cfg = EnsembleConfig {
        increment: Some((s, t)),
        moments: Vec::new(),
        windows: Vec::new(),
        ..cfg.clone()
    };
    let report = run_ensemble(&run_cfg)?;
    let histogram = report
        .increment_histogram
        .expect("increment requested in config");
    let top_atoms = histogram.top_atoms(TOP_ATOMS);
    let top_atom_mass = top_atoms.iter().map(|b| b.frequency).sum();
    Ok(IncrementStudy {
        histogram,
        top_atoms,
        top_atom_mass,
    })
}

/// Total-variation distance between two rounded increment histograms.
pub fn total_variation(a: &IncrementHistogram, b: &IncrementHistogram) -> f64 {
    let mut diff: BTreeMap<u64, f64> = BTreeMap::new();
    let scale = (1u64 << INCREMENT_BITS) as f64;
    for bin in &a.bins {
        *diff.entry((bin.value * scale).round() as u64).or_insert(0.0) += bin.frequency;
    }
    for bin in &b.bins {
        *diff.entry((bin.value * scale).round() as u64).or_insert(0.0) -= bin.frequency;
    }
    0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
}
