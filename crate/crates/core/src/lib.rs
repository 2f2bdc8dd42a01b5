//! Metric geometry of spaces of persistence diagrams over metric pairs.
//!
//! A metric pair `(X, A)` is a metric space together with a distinguished
//! non-empty closed subset. Finite multisets of points of `X` off `A` form the
//! diagrams; the `p`-Wasserstein distance between them is computed exactly
//! through an assignment reduction (`p < ∞`) or a bottleneck threshold search
//! (`p = ∞`). On top of the exact distance the crate provides convex-combination
//! geodesics, curvature comparison checks, empirical Fréchet means and
//! verification of Gromov–Hausdorff approximations between pairs.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod assignment;
pub mod curvature;
pub mod diagram;
pub mod error;
pub mod frechet;
pub mod geodesic;
pub mod gh;
pub mod matching;
pub mod math;
pub mod metric_pair;
pub mod probe;
pub mod random;

pub use diagram::{Diagram, RelativeMap};
pub use error::{Error, Result};
pub use matching::Matching;
pub use math::Exponent;
pub use metric_pair::{MetricPair, PairKind, Point};
