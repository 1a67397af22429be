//! Rank-constrained factor analysis.
//!
//! Splits a covariance matrix into a low-rank PSD part plus a nonnegative diagonal,
//! minimizing the Schatten-q norm of the residual. Upper bounds come from two
//! conditional-gradient schemes; for `q = 1` a branch-and-bound driver built on
//! McCormick envelopes and Weyl bounds certifies the gap.
//!
//! The crate is `no_std` with `alloc` when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bench;
pub mod branch_bound;
pub mod cg;
pub mod error;
pub mod linalg;
pub mod model;
pub mod node_sdo;
pub mod phi_admm;
pub mod rng;
pub mod weyl;

pub use error::{CfaError, Result};
pub use linalg::{EigenPairs, SymMatrix};
pub use model::{PhiVec, ProblemSpec, Solution};
