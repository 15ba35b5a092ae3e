//! Two-sample distribution comparison with finite-sample strong control of
//! the familywise error rate.
//!
//! Each sample gets a uniform confidence band built from beta quantiles of
//! its order statistics. Equality of the CDFs at a value `r` is rejected
//! where the two bands do not overlap, with the pointwise band level
//! calibrated by simulation so that the probability of any false rejection
//! stays below the requested level.

pub mod bands;
pub mod calibration;
pub mod cli;
pub mod engine;
pub mod error;
pub mod input;
pub mod ks;
pub mod report;
pub mod samples;
pub mod simlab;
pub mod specfun;

pub use error::{Error, Result};
