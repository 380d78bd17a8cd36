//! Simulation and analysis toolkit for swarm aggregation under pairwise
//! attraction/repulsion with a (possibly nonreciprocal) coupling matrix.
//!
//! Each agent i moves with velocity `sum_j w_ij * f(x_i - x_j)`, where `f` is
//! an attraction/repulsion kernel ([`kernel`]) and `W = [w_ij]` a nonnegative
//! coupling matrix with zero diagonal ([`coupling`]). When W is balanced
//! (out-weight equals in-weight per agent) and its symmetrized graph is
//! connected, the dispersion `sum_i ||x_i - mean||^2` is eventually trapped
//! below a spectral bound computed from the second Laplacian eigenvalue
//! ([`analysis`]). The [`integrator`] advances the dynamics deterministically
//! so that seeded experiments are reproducible bit for bit.

pub mod analysis;
pub mod coupling;
pub mod dynamics;
mod error;
pub mod integrator;
pub mod kernel;

pub use error::{Error, Result};
