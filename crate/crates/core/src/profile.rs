//! Empirical marginal and joint distance profiles.
//!
//! The anchor itself is counted: its zero self-distance lies inside every
//! ball, so profiles are at least `1/n`. Ties follow the `<=` convention.

use crate::distance::DistanceMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileQuery {
    pub anchor: usize,
    pub radius: f64,
}

impl ProfileQuery {
    pub fn new(anchor: usize, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be nonnegative, got {radius}")));
        }
        Ok(ProfileQuery { anchor, radius })
    }
}

fn check_anchor(d: &DistanceMatrix, anchor: usize) -> Result<()> {
    if anchor >= d.n() {
        return Err(Error::InvalidParameter(format!(
            "anchor index {anchor} out of range for n = {}",
            d.n()
        )));
    }
    Ok(())
}

/// `(1/n) #{k : D[anchor, k] <= radius}`.
pub fn marginal_profile(d: &DistanceMatrix, q: ProfileQuery) -> Result<f64> {
    check_anchor(d, q.anchor)?;
    let count = d.row(q.anchor).iter().filter(|&&v| v <= q.radius).count();
    Ok(count as f64 / d.n() as f64)
}

/// `(1/n) #{k : Dx[anchor, k] <= u and Dy[anchor, k] <= v}`.
pub fn joint_profile(dx: &DistanceMatrix, dy: &DistanceMatrix, anchor: usize, u: f64, v: f64) -> Result<f64> {
    if dx.n() != dy.n() {
        return Err(Error::SizeMismatch(dx.n(), dy.n()));
    }
    check_anchor(dx, anchor)?;
    if !(u >= 0.0 && v >= 0.0) {
        return Err(Error::InvalidParameter("radii must be nonnegative".into()));
    }
    let count = dx
        .row(anchor)
        .iter()
        .zip(dy.row(anchor))
        .filter(|(&a, &b)| a <= u && b <= v)
        .count();
    Ok(count as f64 / dx.n() as f64)
}
