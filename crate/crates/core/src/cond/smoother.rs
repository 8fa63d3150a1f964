use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Symmetric kernel densities supported on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    Epanechnikov,
    Triangular,
    Quartic,
}

impl Kernel {
    pub const NAMES: [&'static str; 3] = ["epanechnikov", "triangular", "quartic"];

    #[inline]
    pub fn eval(self, t: f64) -> f64 {
        if !(t.abs() < 1.0) {
            return 0.0;
        }
        match self {
            Kernel::Epanechnikov => 0.75 * (1.0 - t * t),
            Kernel::Triangular => 1.0 - t.abs(),
            Kernel::Quartic => {
                let s = 1.0 - t * t;
                15.0 / 16.0 * s * s
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Triangular => "triangular",
            Kernel::Quartic => "quartic",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            "triangular" => Ok(Kernel::Triangular),
            "quartic" => Ok(Kernel::Quartic),
            _ => Err(Error::InvalidParameter(format!(
                "unknown kernel '{s}'; expected one of {}",
                Kernel::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    Fixed(f64),
    /// `h = c (n / log n)^(-1/5)`; `c` defaults to the sample standard
    /// deviation of `Z`.
    RateDefault { scale: Option<f64> },
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::RateDefault { scale: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SmootherConfig {
    pub kernel: Kernel,
    pub rule: BandwidthRule,
}

impl SmootherConfig {
    pub fn fixed(kernel: Kernel, bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(SmootherConfig { kernel, rule: BandwidthRule::Fixed(bandwidth) })
    }

    /// The bandwidth this configuration gives for covariate sample `z`.
    pub fn bandwidth_for(&self, z: &[f64]) -> Result<f64> {
        let h = match self.rule {
            BandwidthRule::Fixed(h) => h,
            BandwidthRule::RateDefault { scale } => {
                let n = z.len();
                if n < 3 {
                    return Err(Error::TooFewSamples { required: 3, found: n });
                }
                let c = match scale {
                    Some(c) => c,
                    None => sample_sd(z),
                };
                if !(c > 0.0) {
                    return Err(Error::InvalidParameter(
                        "covariate has zero spread; cannot choose a bandwidth".into(),
                    ));
                }
                let nf = n as f64;
                c * (nf / nf.ln()).powf(-0.2)
            }
        };
        check_bandwidth(h)?;
        Ok(h)
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
    }
    Ok(())
}

pub(crate) fn sample_sd(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Effective weights of the local-linear estimator at `center`: the
/// intercept of the kernel-weighted least-squares line through
/// `(Z_i, r_i)` equals `sum_i weights[i] * r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLinearWeights {
    pub weights: Vec<f64>,
    pub center: f64,
    pub bandwidth: f64,
    support: Vec<usize>,
}

impl LocalLinearWeights {
    /// Indices with a nonzero kernel weight, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// The local-linear fit of `responses` at the center, evaluated as
    /// `r_ref + sum_i w_i (r_i - r_ref)` so that constant responses are
    /// reproduced exactly.
    pub fn fit(&self, responses: &[f64]) -> f64 {
        let r0 = responses[self.support[0]];
        r0 + self.support.iter().map(|&i| self.weights[i] * (responses[i] - r0)).sum::<f64>()
    }
}

/// Local-linear weights at `z`. Fails when fewer than two distinct covariate
/// values fall strictly inside the kernel window.
pub fn local_linear_weights(z_values: &[f64], z: f64, kernel: Kernel, bandwidth: f64) -> Result<LocalLinearWeights> {
    check_bandwidth(bandwidth)?;
    let n = z_values.len();
    let mut k = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut support = Vec::new();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let ti = (z_values[i] - z) / bandwidth;
        let ki = kernel.eval(ti);
        if ki > 0.0 {
            support.push(i);
            k[i] = ki;
            t[i] = ti;
            s0 += ki;
            s1 += ki * ti;
            s2 += ki * ti * ti;
        }
    }
    let distinct = support.iter().any(|&i| z_values[i] != z_values[support[0]]);
    let det = s0 * s2 - s1 * s1;
    if support.is_empty() || !distinct || !(det > 1e-12 * s0 * s2) {
        return Err(Error::EmptyWindow { z, bandwidth });
    }
    let mut weights = vec![0.0; n];
    for &i in &support {
        weights[i] = k[i] * (s2 - t[i] * s1) / det;
    }
    Ok(LocalLinearWeights { weights, center: z, bandwidth, support })
}
