//! Step hyperbolic cross approximation with de la Vallee Poussin blocks.
//!
//! The crate evaluates the trapezoid multipliers and their block kernels,
//! enumerates cross index sets, represents finite block sums exactly,
//! computes decomposition norms and `L_q` norms with certified error terms,
//! runs discrete multiplier projections on sampled grids, and measures the
//! decay of cross-truncation errors for the extremal functions of the
//! mixed-smoothness Besov classes.

// guards of the form `!(x > 0.0)` also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocksum;
pub mod cross;
pub mod error;
pub mod extremal;
pub mod gridpath;
pub mod kernels;
pub mod norms;
pub mod rates;
pub mod smoothness;

pub use blocksum::BlockSum;
pub use cross::CrossSpec;
pub use error::{Error, Result};
pub use kernels::MultiIndex;
pub use smoothness::SmoothnessProfile;
