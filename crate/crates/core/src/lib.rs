//! Association measures and (conditional) independence tests for random
//! objects living in general metric spaces.
//!
//! Everything downstream of [`distance::DistanceMatrix`] depends on the data
//! only through pairwise distances, so objects can be supplied either as
//! [`objects::MetricObject`] values with a [`metrics::MetricId`], or as
//! precomputed distance matrices.
//!
//! The main entry points are:
//!
//! * [`assoc::profile_association`] and [`assoc::d_n_fast`] for the
//!   profile-association U-statistic,
//! * [`perm::independence_test`] for the half-permutation independence test,
//! * [`cond::cond_association`] and [`cond::cond_independence_test`] for the
//!   conditional versions given a scalar covariate,
//! * [`sim::power_curve`] for Monte-Carlo level/power studies.

pub mod assoc;
pub mod cond;
pub mod dataset;
pub mod distance;
mod error;
pub mod metrics;
pub mod objects;
pub mod perm;
pub mod profile;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
