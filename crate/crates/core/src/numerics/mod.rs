//! Random streams, dense linear algebra, special functions and the numeric
//! primitives shared by every distribution and model.

pub mod invert;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use invert::{invert_cdf, INVERT_TOL};
pub use linalg::{cholesky, CovarianceMatrix};
pub use rng::RngStream;
pub use special::Special;

/// Sum that does not depend on the order of `values`.
///
/// Used for traces and Frobenius norms so that relabelling outputs cannot
/// change a single bit of a reported index.
pub fn order_free_sum(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    values.iter().sum()
}
