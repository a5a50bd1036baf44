//! Analysis toolkit for step skew products over transitive subshifts of
//! finite type with interval fibers: trapping domains, stationary measures
//! of the associated random walk, Lyapunov exponents, genericity checks,
//! two-sided diagnostics, and multistep unrolling.

pub mod cli;
pub mod config;
pub mod error;
pub mod fibermaps;
pub mod genericity;
pub mod markov;
pub mod measures;
pub mod presets;
pub mod report;
pub mod skeleton;
pub mod system;
pub mod twosided;

pub use error::{Result, SkewError};
