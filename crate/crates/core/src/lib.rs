//! Divisor process of uniformly random permutations.
//!
//! A divisor of a permutation is any subset of its cycles. Weighting each
//! divisor by `theta^(number of cycles)` and normalising gives a random
//! distribution function `X_n(t)` on `[0, 1]`: the weighted share of
//! divisors covering at most `t * n` points. This crate samples the process,
//! computes its exact finite-`n` moments and the limiting oracles (beta law,
//! Dickman and Buchstab functions, Dirichlet moment integrals) and checks the
//! two against each other.
//!
//! Everything depends on a permutation only through its cycle type, so the
//! samplers produce [`CycleType`]s rather than labelled permutations.

// Negated comparisons such as `!(x > 0.0)` are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cycletype;
pub mod divproc;
pub mod enumexact;
pub mod error;
pub mod oracles;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use cycletype::CycleType;
pub use divproc::{DivisorSizeDistribution, Trajectory, Weight};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use sampler::{CycleSampler, MeasureSpec, SamplerRegistry};
pub use stats::{EnsembleConfig, EnsembleReport};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
