//! Scalar distance functions for every supported metric space.

mod spd;

use std::fmt;
use std::str::FromStr;

pub use spd::{
    spd_airm, spd_bures_wasserstein, spd_exp, spd_frobenius, spd_geodesic_interp,
    spd_log_cholesky, spd_power, spd_power_matrix,
};

use crate::objects::{MetricObject, ObjectKind};
use crate::{Error, Result};

/// Unit-norm tolerance accepted by [`sphere_geodesic`].
pub const SPHERE_INPUT_TOL: f64 = 1e-6;

/// Default number of grid points for quantile-function encodings.
pub const DEFAULT_QUANTILE_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricId {
    Euclidean,
    SphereGeodesic,
    SpdFrobenius,
    SpdAirm,
    SpdLogCholesky,
    /// `|| A^alpha - B^alpha ||_F` with `alpha` in (0, 1].
    SpdPower { alpha: f64 },
    SpdBuresWasserstein,
    Wasserstein1d,
}

impl MetricId {
    pub const NAMES: [&'static str; 8] = [
        "euclidean",
        "sphere_geodesic",
        "spd_frobenius",
        "spd_airm",
        "spd_log_cholesky",
        "spd_power",
        "spd_bures_wasserstein",
        "wasserstein1d",
    ];

    pub fn spd_power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "spd_power exponent must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(MetricId::SpdPower { alpha })
    }

    /// Parses a metric name; `alpha` is required for `spd_power` and
    /// rejected for every other metric.
    pub fn parse(name: &str, alpha: Option<f64>) -> Result<Self> {
        let metric = match name {
            "euclidean" => MetricId::Euclidean,
            "sphere_geodesic" => MetricId::SphereGeodesic,
            "spd_frobenius" => MetricId::SpdFrobenius,
            "spd_airm" => MetricId::SpdAirm,
            "spd_log_cholesky" => MetricId::SpdLogCholesky,
            "spd_power" => {
                let alpha = alpha.ok_or_else(|| {
                    Error::InvalidParameter("spd_power requires an exponent alpha".into())
                })?;
                return MetricId::spd_power(alpha);
            }
            "spd_bures_wasserstein" => MetricId::SpdBuresWasserstein,
            "wasserstein1d" => MetricId::Wasserstein1d,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown metric '{other}'; valid metrics: {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        if alpha.is_some() {
            return Err(Error::InvalidParameter(format!(
                "an exponent alpha is only valid for spd_power, not {name}"
            )));
        }
        Ok(metric)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricId::Euclidean => "euclidean",
            MetricId::SphereGeodesic => "sphere_geodesic",
            MetricId::SpdFrobenius => "spd_frobenius",
            MetricId::SpdAirm => "spd_airm",
            MetricId::SpdLogCholesky => "spd_log_cholesky",
            MetricId::SpdPower { .. } => "spd_power",
            MetricId::SpdBuresWasserstein => "spd_bures_wasserstein",
            MetricId::Wasserstein1d => "wasserstein1d",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            MetricId::SpdPower { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Whether the metric is defined for objects of `kind`.
    pub fn accepts(&self, kind: ObjectKind) -> bool {
        match self {
            MetricId::Euclidean => matches!(kind, ObjectKind::Vector | ObjectKind::UnitVector),
            MetricId::SphereGeodesic => kind == ObjectKind::UnitVector,
            MetricId::SpdFrobenius
            | MetricId::SpdAirm
            | MetricId::SpdLogCholesky
            | MetricId::SpdPower { .. }
            | MetricId::SpdBuresWasserstein => kind == ObjectKind::SpdMatrix,
            MetricId::Wasserstein1d => kind == ObjectKind::QuantileGrid,
        }
    }

    /// Object kind this metric reads from input files.
    pub fn native_kind(&self) -> ObjectKind {
        match self {
            MetricId::Euclidean => ObjectKind::Vector,
            MetricId::SphereGeodesic => ObjectKind::UnitVector,
            MetricId::Wasserstein1d => ObjectKind::QuantileGrid,
            _ => ObjectKind::SpdMatrix,
        }
    }

    pub fn distance(&self, a: &MetricObject, b: &MetricObject) -> Result<f64> {
        use MetricObject as O;
        let incompatible = |kind| Error::IncompatibleMetric { metric: self.to_string(), kind };
        match (self, a, b) {
            (MetricId::Euclidean, O::Vector(u) | O::UnitVector(u), O::Vector(v) | O::UnitVector(v)) => {
                euclidean(u, v)
            }
            (MetricId::SphereGeodesic, O::UnitVector(u), O::UnitVector(v)) => sphere_geodesic(u, v),
            (MetricId::Wasserstein1d, O::QuantileGrid(u), O::QuantileGrid(v)) => wasserstein1d(u, v),
            (MetricId::SpdFrobenius, O::Spd(x), O::Spd(y)) => spd_frobenius(x, y),
            (MetricId::SpdAirm, O::Spd(x), O::Spd(y)) => spd_airm(x, y),
            (MetricId::SpdLogCholesky, O::Spd(x), O::Spd(y)) => spd_log_cholesky(x, y),
            (MetricId::SpdPower { alpha }, O::Spd(x), O::Spd(y)) => spd_power(x, y, *alpha),
            (MetricId::SpdBuresWasserstein, O::Spd(x), O::Spd(y)) => spd_bures_wasserstein(x, y),
            _ if a.kind() != b.kind() => {
                Err(Error::MixedTags { first: a.kind(), other: b.kind() })
            }
            _ => Err(incompatible(a.kind())),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricId::SpdPower { alpha } => write!(f, "spd_power(alpha={alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for MetricId {
    type Err = Error;

    /// Accepts the plain names, plus `spd_power:<alpha>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("spd_power", alpha)) => {
                let alpha: f64 = alpha.trim().parse().map_err(|_| {
                    Error::InvalidParameter(format!("invalid spd_power exponent '{alpha}'"))
                })?;
                MetricId::spd_power(alpha)
            }
            Some(_) => Err(Error::InvalidParameter(format!("invalid metric '{s}'"))),
            None => MetricId::parse(s, None),
        }
    }
}

fn same_len(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    Ok(())
}

pub fn euclidean(u: &[f64], v: &[f64]) -> Result<f64> {
    same_len(u, v)?;
    Ok(u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Great-circle distance `arccos <u, v>`, in `[0, pi]`.
pub fn sphere_geodesic(u: &[f64], v: &[f64]) -> Result<f64> {
    same_len(u, v)?;
    for w in [u, v] {
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > SPHERE_INPUT_TOL {
            return Err(Error::InvalidObject(format!(
                "sphere_geodesic needs unit vectors, got norm {norm}"
            )));
        }
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(dot.clamp(-1.0, 1.0).acos())
}

/// 2-Wasserstein distance between two 1-D distributions given by their
/// quantile functions on the shared grid [`quantile_levels`]`(m)`.
///
/// The integral over `[0, 1]` uses the trapezoid rule between the first and
/// last grid points, with the integrand held constant on the two end cells
/// `[0, u_1]` and `[u_m, 1]`. The resulting weights are all `1/m`, so a pure
/// shift by `c` has distance exactly `|c|`.
pub fn wasserstein1d(qx: &[f64], qy: &[f64]) -> Result<f64> {
    same_len(qx, qy)?;
    let m = qx.len();
    if m < 2 {
        return Err(Error::InvalidObject("quantile grids need at least 2 points".into()));
    }
    for q in [qx, qy] {
        if q.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidObject("quantile grid is decreasing".into()));
        }
    }
    let sq = |k: usize| (qx[k] - qy[k]) * (qx[k] - qy[k]);
    let integral = (0..m).map(sq).sum::<f64>() / m as f64;
    Ok(integral.sqrt())
}

/// Interior probability grid `u_k = (k - 1/2) / m`, `k = 1..=m`.
pub fn quantile_levels(m: usize) -> Vec<f64> {
    (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect()
}

/// Quantile grid of `N(mean, sd^2)` on [`quantile_levels`]`(m)`.
pub fn gaussian_quantile_grid(mean: f64, sd: f64, m: usize) -> Vec<f64> {
    standard_normal_quantiles(m).iter().map(|z| mean + sd * z).collect()
}

/// Standard normal quantiles on [`quantile_levels`]`(m)`.
pub fn standard_normal_quantiles(m: usize) -> Vec<f64> {
    use statrs::distribution::{ContinuousCDF, Normal};
    let std = Normal::standard();
    quantile_levels(m).into_iter().map(|u| std.inverse_cdf(u)).collect()
}
