//! Local-linear conditional distance profiles around one anchor.

use crate::cond::smoother::LocalLinearWeights;
use crate::distance::DistanceMatrix;
use crate::{Error, Result};

/// Raw fits outside this band suggest the bandwidth is too small.
pub const RAW_FIT_BAND: (f64, f64) = (-0.05, 1.05);

#[inline]
fn clip(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Running minimum and maximum of unclipped fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RawRange {
    pub min: f64,
    pub max: f64,
}

impl RawRange {
    pub const EMPTY: RawRange = RawRange { min: f64::INFINITY, max: f64::NEG_INFINITY };

    fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn merge(self, other: RawRange) -> RawRange {
        RawRange { min: self.min.min(other.min), max: self.max.max(other.max) }
    }

    pub fn out_of_band(&self) -> bool {
        self.min < RAW_FIT_BAND.0 || self.max > RAW_FIT_BAND.1
    }
}

/// The three fitted profiles of one anchor as step functions of `(u, v)`.
///
/// `ux` and `uy` are the sorted distinct anchor distances of the points with
/// nonzero weight. On the cell `[ux[a], ux[a+1]) x [uy[b], uy[b+1])` the
/// fits are the constants `fx[a]`, `fy[b]` and `fxy[a * q + b]` (clipped).
pub(crate) struct AnchorTable {
    ux: Vec<f64>,
    uy: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    fxy: Vec<f64>,
    /// `(support index, x rank, y rank)`.
    points: Vec<(usize, usize, usize)>,
    pub raw: RawRange,
}

fn unique_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn rank(sorted: &[f64], v: f64) -> usize {
    sorted.partition_point(|&s| s < v)
}

impl AnchorTable {
    pub fn build(rx: &[f64], ry: &[f64], w: &LocalLinearWeights) -> AnchorTable {
        let support = w.support();
        let ux = unique_sorted(support.iter().map(|&k| rx[k]).collect());
        let uy = unique_sorted(support.iter().map(|&k| ry[k]).collect());
        let (p, q) = (ux.len(), uy.len());
        let mut cells = vec![0.0; p * q];
        let points: Vec<(usize, usize, usize)> = support
            .iter()
            .map(|&k| (k, rank(&ux, rx[k]), rank(&uy, ry[k])))
            .collect();
        let mut fx = vec![0.0; p];
        let mut fy = vec![0.0; q];
        for &(k, a, b) in &points {
            cells[a * q + b] += w.weights[k];
            fx[a] += w.weights[k];
            fy[b] += w.weights[k];
        }
        // cumulative sums turn cell masses into fitted CDF values
        for a in 1..p {
            fx[a] += fx[a - 1];
        }
        for b in 1..q {
            fy[b] += fy[b - 1];
        }
        for a in 0..p {
            for b in 1..q {
                cells[a * q + b] += cells[a * q + b - 1];
            }
        }
        for a in 1..p {
            for b in 0..q {
                cells[a * q + b] += cells[(a - 1) * q + b];
            }
        }
        let mut raw = RawRange::EMPTY;
        for v in fx.iter().chain(&fy).chain(&cells) {
            raw.push(*v);
        }
        fx.iter_mut().for_each(|v| *v = clip(*v));
        fy.iter_mut().for_each(|v| *v = clip(*v));
        cells.iter_mut().for_each(|v| *v = clip(*v));
        AnchorTable { ux, uy, fx, fy, fxy: cells, points, raw }
    }

    #[inline]
    fn disc(&self, a: usize, b: usize) -> f64 {
        self.fxy[a * self.uy.len() + b] - self.fx[a] * self.fy[b]
    }

    /// `int int disc(u, v)^2 du dv` over `[0, x_max] x [0, y_max]`.
    pub fn squared_discrepancy_area(&self, x_max: f64, y_max: f64) -> f64 {
        let widths = |grid: &[f64], end: f64| -> Vec<f64> {
            (0..grid.len())
                .map(|a| grid.get(a + 1).copied().unwrap_or(end) - grid[a])
                .collect()
        };
        let du = widths(&self.ux, x_max);
        let dv = widths(&self.uy, y_max);
        let mut total = 0.0;
        for (a, &wa) in du.iter().enumerate() {
            let mut row = 0.0;
            for (b, &wb) in dv.iter().enumerate() {
                let d = self.disc(a, b);
                row += wb * d * d;
            }
            total += wa * row;
        }
        total
    }

    /// `sum_k w_k disc(Dx[i,k], Dy[i,k])^2`: the squared discrepancy
    /// integrated against the fitted joint profile's point masses.
    pub fn squared_discrepancy_mass(&self, w: &LocalLinearWeights) -> f64 {
        self.points
            .iter()
            .map(|&(k, a, b)| {
                let d = self.disc(a, b);
                w.weights[k] * d * d
            })
            .sum()
    }
}

/// Conditional profiles of `anchor` at covariate value `z`, evaluated at radii
/// `(u, v)`: the clipped fits `(F^X(u), F^Y(v), F^XY(u, v))`.
pub fn cond_profiles(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    w: &LocalLinearWeights,
    anchor: usize,
    u: f64,
    v: f64,
) -> Result<(f64, f64, f64)> {
    if dx.n() != dy.n() || w.weights.len() != dx.n() {
        return Err(Error::SizeMismatch(dx.n(), if dx.n() != dy.n() { dy.n() } else { w.weights.len() }));
    }
    if anchor >= dx.n() {
        return Err(Error::InvalidParameter(format!("anchor index {anchor} out of range")));
    }
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let (rx, ry) = (dx.row(anchor), dy.row(anchor));
    let ax: Vec<f64> = rx.iter().map(|&d| ind(d <= u)).collect();
    let ay: Vec<f64> = ry.iter().map(|&d| ind(d <= v)).collect();
    let axy: Vec<f64> = ax.iter().zip(&ay).map(|(a, b)| a * b).collect();
    let fits = [w.fit(&ax), w.fit(&ay), w.fit(&axy)];
    if fits.iter().any(|&f| f < RAW_FIT_BAND.0 || f > RAW_FIT_BAND.1) {
        log::warn!("conditional profile fit {fits:?} leaves [-0.05, 1.05]; consider a larger bandwidth");
    }
    Ok((clip(fits[0]), clip(fits[1]), clip(fits[2])))
}
