//! Conditional profile association given a scalar covariate `Z`.
//!
//! Conditional distance profiles are local-linear regressions of ball
//! indicators on `Z`. For anchor `j` the squared gap between the fitted joint
//! profile and the product of fitted marginals, integrated over radii, gives
//! `R_j`; smoothing `R_j` against `Z_j` yields the association curve. The
//! test statistic `T_n` integrates the same squared gap against the fitted
//! joint profile itself and is calibrated by half-permutations in which `Y`
//! and `Z` move together.

mod profiles;
mod smoother;

pub use profiles::{cond_profiles, RAW_FIT_BAND};
pub use smoother::{local_linear_weights, BandwidthRule, Kernel, LocalLinearWeights, SmootherConfig};

use rayon::prelude::*;

use crate::assoc::{association_from_matrices, AssociationReport, NORMALIZATION};
use crate::dataset::{require_samples, PairedDataset};
use crate::distance::DistanceMatrix;
use crate::metrics::MetricId;
use crate::perm::{check_test_args, run_replicates, TestResult, MIN_TEST_SAMPLES};
use crate::{Error, Result};
use profiles::{AnchorTable, RawRange};

/// Number of evaluation points in the default grid.
pub const DEFAULT_GRID_SIZE: usize = 50;

/// A covariate sample with the distance matrices of its two responses.
#[derive(Debug, Clone, Copy)]
pub struct CondData<'a> {
    pub dx: &'a DistanceMatrix,
    pub dy: &'a DistanceMatrix,
    pub z: &'a [f64],
}

impl<'a> CondData<'a> {
    pub fn new(dx: &'a DistanceMatrix, dy: &'a DistanceMatrix, z: &'a [f64]) -> Result<Self> {
        if dx.n() != dy.n() {
            return Err(Error::SizeMismatch(dx.n(), dy.n()));
        }
        if z.len() != dx.n() {
            return Err(Error::SizeMismatch(dx.n(), z.len()));
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("covariate value {i} is not finite")));
        }
        Ok(CondData { dx, dy, z })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    fn anchor_table(&self, i: usize, kernel: Kernel, h: f64) -> Result<(LocalLinearWeights, AnchorTable)> {
        let w = local_linear_weights(self.z, self.z[i], kernel, h)?;
        let table = AnchorTable::build(self.dx.row(i), self.dy.row(i), &w);
        Ok((w, table))
    }
}

fn row_max(row: &[f64]) -> f64 {
    row.iter().copied().fold(0.0, f64::max)
}

fn warn_raw(raw: RawRange) {
    if raw.out_of_band() {
        log::warn!(
            "unclipped conditional profile fits range over [{:.3}, {:.3}], outside [{}, {}]; \
             the bandwidth may be too small",
            raw.min,
            raw.max,
            RAW_FIT_BAND.0,
            RAW_FIT_BAND.1
        );
    }
}

/// `R_j`: the squared gap between the fitted joint profile of anchor `j` and
/// the product of its fitted marginals at `z = Z_j`, integrated over
/// `[0, max_k Dx[j,k]] x [0, max_k Dy[j,k]]`. Exact for the step-function
/// fits.
pub fn r_hat(data: &CondData<'_>, j: usize, kernel: Kernel, bandwidth: f64) -> Result<f64> {
    if j >= data.n() {
        return Err(Error::InvalidParameter(format!("anchor index {j} out of range")));
    }
    Ok(r_hat_inner(data, j, kernel, bandwidth)?.0)
}

fn r_hat_inner(data: &CondData<'_>, j: usize, kernel: Kernel, h: f64) -> Result<(f64, RawRange)> {
    let (_, table) = data.anchor_table(j, kernel, h)?;
    let value = table.squared_discrepancy_area(row_max(data.dx.row(j)), row_max(data.dy.row(j)));
    Ok((value, table.raw))
}

/// `R_j` for every anchor. Anchors whose kernel window is degenerate give
/// `None`.
pub fn r_hat_all(data: &CondData<'_>, kernel: Kernel, bandwidth: f64) -> Vec<Option<f64>> {
    let results: Vec<Option<(f64, RawRange)>> = (0..data.n())
        .into_par_iter()
        .map(|j| r_hat_inner(data, j, kernel, bandwidth).ok())
        .collect();
    warn_raw(results.iter().flatten().fold(RawRange::EMPTY, |acc, r| acc.merge(r.1)));
    results.into_iter().map(|r| r.map(|v| v.0)).collect()
}

/// Local-linear smooth of `(z_j, r_j)` at each grid point; grid points
/// without a usable window give `None`.
pub fn smooth_curve(z: &[f64], r: &[f64], grid: &[f64], kernel: Kernel, bandwidth: f64) -> Vec<Option<f64>> {
    grid.iter()
        .map(|&g| local_linear_weights(z, g, kernel, bandwidth).ok().map(|w| w.fit(r)))
        .collect()
}

/// Linear-interpolation sample quantile (the usual "type 7" definition).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `size` equispaced points from the 5th to the 95th percentile of `z`.
pub fn default_grid(z: &[f64], size: usize) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::TooFewSamples { required: 1, found: 0 });
    }
    if size == 0 {
        return Err(Error::InvalidParameter("grid size must be positive".into()));
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (quantile(&sorted, 0.05), quantile(&sorted, 0.95));
    if size == 1 {
        return Ok(vec![0.5 * (lo + hi)]);
    }
    if !(hi > lo) {
        return Err(Error::InvalidParameter("covariate has no spread between its 5th and 95th percentiles".into()));
    }
    let step = (hi - lo) / (size - 1) as f64;
    Ok((0..size).map(|k| if k + 1 == size { hi } else { lo + k as f64 * step }).collect())
}

fn check_grid(z: &[f64], grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("evaluation grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("evaluation grid must be strictly increasing".into()));
    }
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if grid[0] < lo || grid[grid.len() - 1] > hi {
        return Err(Error::InvalidParameter(format!(
            "evaluation grid must lie inside the observed covariate range [{lo}, {hi}]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalAssociationCurve {
    pub z_grid: Vec<f64>,
    /// Estimated conditional association; `None` where the smoothing window
    /// at the grid point is degenerate.
    pub values: Vec<Option<f64>>,
    /// `30 x values`.
    pub normalized_values: Vec<Option<f64>>,
    pub config: SmootherConfig,
    /// The bandwidth the configuration resolved to.
    pub bandwidth: f64,
    /// Anchors that contributed an `R_j`.
    pub anchors_used: usize,
}

/// The conditional association curve on precomputed distances.
pub fn cond_association_data(data: &CondData<'_>, grid: &[f64], cfg: &SmootherConfig) -> Result<ConditionalAssociationCurve> {
    check_grid(data.z, grid)?;
    let h = cfg.bandwidth_for(data.z)?;
    let r = r_hat_all(data, cfg.kernel, h);
    let (zs, rs): (Vec<f64>, Vec<f64>) = r
        .iter()
        .enumerate()
        .filter_map(|(j, v)| v.map(|v| (data.z[j], v)))
        .unzip();
    if zs.len() < data.n() {
        log::warn!("{} anchors had a degenerate kernel window and were skipped", data.n() - zs.len());
    }
    let values = if zs.is_empty() { vec![None; grid.len()] } else { smooth_curve(&zs, &rs, grid, cfg.kernel, h) };
    let unusable = values.iter().filter(|v| v.is_none()).count();
    if unusable > 0 {
        log::warn!("{unusable} grid points have a degenerate kernel window and are reported as missing");
    }
    let normalized_values = values.iter().map(|v| v.map(|v| NORMALIZATION * v)).collect();
    Ok(ConditionalAssociationCurve {
        z_grid: grid.to_vec(),
        values,
        normalized_values,
        config: *cfg,
        bandwidth: h,
        anchors_used: zs.len(),
    })
}

/// The conditional association curve. `grid = None` uses
/// [`default_grid`] with [`DEFAULT_GRID_SIZE`] points.
pub fn cond_association(
    ds: &PairedDataset,
    mx: &MetricId,
    my: &MetricId,
    grid: Option<&[f64]>,
    cfg: &SmootherConfig,
) -> Result<ConditionalAssociationCurve> {
    let z = ds.require_z()?;
    let (dx, dy) = ds.distance_matrices(mx, my)?;
    let data = CondData::new(&dx, &dy, z)?;
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(z, DEFAULT_GRID_SIZE)?,
    };
    cond_association_data(&data, &grid, cfg)
}

/// Unfloored `T_n`, the range of raw fits and the number of anchors used.
///
/// Anchors whose kernel window is degenerate are left out of the average.
fn t_n_raw(data: &CondData<'_>, kernel: Kernel, h: f64) -> Result<(f64, RawRange, usize)> {
    let terms: Vec<Option<(f64, RawRange)>> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let (w, table) = data.anchor_table(i, kernel, h).ok()?;
            Some((table.squared_discrepancy_mass(&w), table.raw))
        })
        .collect();
    let used: Vec<&(f64, RawRange)> = terms.iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::EmptyWindow { z: data.z[0], bandwidth: h });
    }
    // summed in anchor order so the value does not depend on threading
    let total: f64 = used.iter().map(|t| t.0).sum();
    let raw = used.iter().fold(RawRange::EMPTY, |acc, t| acc.merge(t.1));
    Ok((total / used.len() as f64, raw, used.len()))
}

/// `T_n` at a given bandwidth, floored at 0.
pub fn t_n_at_bandwidth(data: &CondData<'_>, kernel: Kernel, bandwidth: f64) -> Result<f64> {
    Ok(t_n_raw(data, kernel, bandwidth)?.0.max(0.0))
}

fn t_n_reported(data: &CondData<'_>, kernel: Kernel, h: f64) -> Result<f64> {
    require_samples(data.n(), MIN_TEST_SAMPLES)?;
    let (t, raw, used) = t_n_raw(data, kernel, h)?;
    warn_raw(raw);
    if used < data.n() {
        log::warn!("{} anchors had a degenerate kernel window and were left out of T_n", data.n() - used);
    }
    if t < 0.0 {
        log::warn!("T_n = {t:e} is negative through signed local-linear weights; reported as 0");
    }
    Ok(t.max(0.0))
}

/// The conditional independence statistic `T_n`.
pub fn t_n_statistic(ds: &PairedDataset, mx: &MetricId, my: &MetricId, cfg: &SmootherConfig) -> Result<f64> {
    let z = ds.require_z()?;
    require_samples(ds.n(), MIN_TEST_SAMPLES)?;
    let (dx, dy) = ds.distance_matrices(mx, my)?;
    let data = CondData::new(&dx, &dy, z)?;
    t_n_reported(&data, cfg.kernel, cfg.bandwidth_for(z)?)
}

/// Conditional permutation test on precomputed distances.
///
/// Replicate `b` pairs `X` at `pi` with `(Y, Z)` at `sigma_pi_c` and
/// evaluates `floor(n/2) T_{floor(n/2)}` with the bandwidth resolved on the
/// full sample.
pub fn cond_independence_test_data(
    data: &CondData<'_>,
    cfg: &SmootherConfig,
    n_permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    let n = data.n();
    require_samples(n, MIN_TEST_SAMPLES)?;
    check_test_args(n_permutations, alpha)?;
    let h = cfg.bandwidth_for(data.z)?;
    let statistic = n as f64 * t_n_reported(data, cfg.kernel, h)?;
    let half = (n / 2) as f64;
    let replicates = run_replicates(n, n_permutations, seed, |plan| {
        let dx = data.dx.submatrix(&plan.pi);
        let dy = data.dy.submatrix(&plan.sigma_pi_c);
        let z: Vec<f64> = plan.sigma_pi_c.iter().map(|&k| data.z[k]).collect();
        let sub = CondData { dx: &dx, dy: &dy, z: &z };
        Ok(half * t_n_at_bandwidth(&sub, cfg.kernel, h)?)
    })?;
    Ok(TestResult::from_replicates(statistic, replicates, alpha, seed))
}

/// Tests `X` independent of `Y` given `Z`.
pub fn cond_independence_test(
    ds: &PairedDataset,
    mx: &MetricId,
    my: &MetricId,
    cfg: &SmootherConfig,
    n_permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    let z = ds.require_z()?;
    require_samples(ds.n(), MIN_TEST_SAMPLES)?;
    check_test_args(n_permutations, alpha)?;
    let (dx, dy) = ds.distance_matrices(mx, my)?;
    let data = CondData::new(&dx, &dy, z)?;
    cond_independence_test_data(&data, cfg, n_permutations, alpha, seed)
}

/// Unconditional association within one level of a categorical covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub level: f64,
    pub n: usize,
    /// `None` when the stratum has fewer than six samples.
    pub report: Option<AssociationReport>,
}

/// Treats `Z` as categorical and computes the unconditional association
/// within each distinct value, in increasing order of the value.
pub fn stratified_association(ds: &PairedDataset, mx: &MetricId, my: &MetricId) -> Result<Vec<Stratum>> {
    let z = ds.require_z()?;
    let (dx, dy) = ds.distance_matrices(mx, my)?;
    let mut levels = z.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
        .into_iter()
        .map(|level| {
            let idx: Vec<usize> = (0..z.len()).filter(|&i| z[i] == level).collect();
            let report = if idx.len() >= 6 {
                Some(association_from_matrices(&dx.submatrix(&idx), &dy.submatrix(&idx))?)
            } else {
                None
            };
            Ok(Stratum { level, n: idx.len(), report })
        })
        .collect()
}
