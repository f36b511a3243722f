//! Limit-law oracles: the beta law of the mean trajectory, the Dickman and
//! Buchstab functions governing friable and free permutations, and the joint
//! moments of the limit process.

pub mod delay;
pub mod moments;
pub mod quadrature;
pub mod special;

pub use delay::{buchstab_omega, dickman_rho, ln_dickman_rho};
pub use moments::{
    dirichlet_moment_params, limit_joint_moment, limit_second_moment_diagonal, sample_dirichlet,
    ExponentBase, MomentEstimate, MomentParams, SimplexPoint,
};
pub use special::{arcsine_cdf, ln_gamma, regularized_incomplete_beta};
