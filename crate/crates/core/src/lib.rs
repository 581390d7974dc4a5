//! Dependency models: transport maps that sample constrained and
//! elliptical random vectors, and the sensitivity indices that compare them.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dm;
pub mod error;
pub mod gsi;
pub mod numerics;
pub mod oracles;
pub mod univariate;

pub use dm::{build_dm, DependencyModel, DmSpec, Family, SampleBatch};
pub use error::{Error, Result};
pub use gsi::{GsiReport, Method, SelectionResult};
pub use numerics::{CovarianceMatrix, RngStream};
pub use univariate::DistributionSpec;
