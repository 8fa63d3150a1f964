//! The profile-association U-statistic `D_n`.
//!
//! `D_n` averages the kernel
//!
//! ```text
//! h = 1/4 psi(x1,x2,x3,x4) psi(x1,x2,x5,x6) psi(y1,y2,y3,y4) psi(y1,y2,y5,y6)
//! psi(x1,x2,x3,x4) = 1{d(x1,x3) <= d(x1,x2)} - 1{d(x1,x4) <= d(x1,x2)}
//! ```
//!
//! over all ordered 6-tuples of distinct sample indices, which is the same
//! number as the average of the symmetrized kernel over unordered 6-subsets.
//!
//! [`d_n_oracle`] enumerates the tuples directly (`O(n^6)`) and exists to
//! validate [`d_n_fast`], which reduces each anchor pair `(i, j)` to four
//! category counts and evaluates the remaining four-index sum in closed form
//! (`O(n^3)` overall). Both accumulate the same integer numerator, so they
//! agree to the last bit.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::dataset::{require_samples, PairedDataset};
use crate::distance::DistanceMatrix;
use crate::metrics::MetricId;
use crate::{Error, Result};

/// `D_n` of maximally associated continuous data; `30 * D_n` is the
/// normalized association.
pub const NORMALIZATION: f64 = 30.0;

/// Within-row tie fraction above which a warning is logged.
pub const TIE_WARNING_FRACTION: f64 = 0.1;

/// `1{d13 <= d12} - 1{d14 <= d12}`.
#[inline]
pub fn psi(d13: f64, d14: f64, d12: f64) -> i8 {
    (d13 <= d12) as i8 - (d14 <= d12) as i8
}

fn check_pair(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<usize> {
    if dx.n() != dy.n() {
        return Err(Error::SizeMismatch(dx.n(), dy.n()));
    }
    require_samples(dx.n(), 6)?;
    Ok(dx.n())
}

/// Product of the four `psi` factors for an ordered tuple, i.e. `4 h`.
#[inline]
fn kernel_product(dx: &DistanceMatrix, dy: &DistanceMatrix, t: [usize; 6]) -> i64 {
    let [a, b, c, d, e, f] = t;
    let px1 = psi(dx.get(a, c), dx.get(a, d), dx.get(a, b));
    let px2 = psi(dx.get(a, e), dx.get(a, f), dx.get(a, b));
    let py1 = psi(dy.get(a, c), dy.get(a, d), dy.get(a, b));
    let py2 = psi(dy.get(a, e), dy.get(a, f), dy.get(a, b));
    (px1 * px2 * py1 * py2) as i64
}

/// The kernel `h` on one ordered 6-tuple of distinct indices. The value is in
/// `{-1/4, 0, 1/4}`.
pub fn h_kernel(dx: &DistanceMatrix, dy: &DistanceMatrix, idx: [usize; 6]) -> Result<f64> {
    if dx.n() != dy.n() {
        return Err(Error::SizeMismatch(dx.n(), dy.n()));
    }
    for (p, &i) in idx.iter().enumerate() {
        if i >= dx.n() {
            return Err(Error::InvalidParameter(format!("index {i} out of range")));
        }
        if idx[..p].contains(&i) {
            return Err(Error::InvalidParameter(format!("repeated index {i} in kernel tuple")));
        }
    }
    Ok(kernel_product(dx, dy, idx) as f64 / 4.0)
}

/// `n (n-1) ... (n-k+1)` as a float.
fn falling_factorial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Brute-force `D_n`: the mean of `h` over every ordered 6-tuple of distinct
/// indices. `O(n^6)`; intended for `n <= 12`.
pub fn d_n_oracle(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<f64> {
    let n = check_pair(dx, dy)?;
    let mut total: i64 = 0;
    let mut t = [0usize; 6];
    fn recurse(
        depth: usize,
        n: usize,
        t: &mut [usize; 6],
        dx: &DistanceMatrix,
        dy: &DistanceMatrix,
        total: &mut i64,
    ) {
        if depth == 6 {
            *total += kernel_product(dx, dy, *t);
            return;
        }
        for i in 0..n {
            if t[..depth].contains(&i) {
                continue;
            }
            t[depth] = i;
            recurse(depth + 1, n, t, dx, dy, total);
        }
    }
    recurse(0, n, &mut t, dx, dy, &mut total);
    Ok(total as f64 / (4.0 * falling_factorial(n, 6)))
}

/// Sum over ordered distinct `(k, l, m, p)` of
/// `(a_k - a_l)(b_k - b_l)(a_m - a_p)(b_m - b_p)` for binary marks with
/// category counts `n11, n10, n01, n00`.
///
/// With `c_kl = (a_k - a_l)(b_k - b_l)`, the full double sum over ordered
/// pairs is `T^2` with `T = 2(n11 n00 - n10 n01)`. Removing the pairs of
/// pairs that share indices leaves `T^2 + 2Q - 4 sum_k r_k^2`, where
/// `Q = sum c_kl^2 = 2(n11 n00 + n10 n01)` and `r_k = sum_l c_kl` equals
/// `n00, n11, -n01, -n10` on the four categories.
#[inline]
pub(crate) fn four_index_sum(n11: i64, n10: i64, n01: i64, n00: i64) -> i64 {
    let p = n11 * n00;
    let r = n10 * n01;
    4 * ((p - r) * (p - r) + p * (1 - n11 - n00) + r * (1 - n10 - n01))
}

/// Contribution of all anchor pairs `(i, j)`, `j != i`, for one `i`.
fn anchor_contribution(rx: &[f64], ry: &[f64], i: usize) -> i64 {
    let m = (rx.len() - 2) as i64;
    let mut total = 0i64;
    for j in 0..rx.len() {
        if j == i {
            continue;
        }
        let (tx, ty) = (rx[j], ry[j]);
        let (mut na, mut nb, mut n11) = (0u32, 0u32, 0u32);
        for (&a, &b) in rx.iter().zip(ry) {
            let ia = (a <= tx) as u32;
            let ib = (b <= ty) as u32;
            na += ia;
            nb += ib;
            n11 += ia & ib;
        }
        // k = i (distance 0) and k = j (the threshold itself) are always
        // counted in both marks; they are not free indices.
        let (na, nb, n11) = (na as i64 - 2, nb as i64 - 2, n11 as i64 - 2);
        let n10 = na - n11;
        let n01 = nb - n11;
        let n00 = m - na - nb + n11;
        total += four_index_sum(n11, n10, n01, n00);
    }
    total
}

/// `D_n` in `O(n^3)` by counting. Exactly equal to [`d_n_oracle`].
///
/// Anchors are processed in parallel; the accumulation is in exact integer
/// arithmetic, so the result is independent of the reduction order.
pub fn d_n_fast(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<f64> {
    let n = check_pair(dx, dy)?;
    let total: i128 = (0..n)
        .into_par_iter()
        .map(|i| anchor_contribution(dx.row(i), dy.row(i), i) as i128)
        .sum();
    Ok(total as f64 / (4.0 * falling_factorial(n, 6)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationReport {
    /// The U-statistic `D_n`.
    pub d_n: f64,
    /// `30 * d_n`. Not clipped.
    pub normalized: f64,
    pub n: usize,
    pub elapsed: Duration,
    pub tie_fraction_x: f64,
    pub tie_fraction_y: f64,
}

impl AssociationReport {
    /// The normalized value clipped to `[0, 1]`, for display only.
    pub fn display_value(&self) -> f64 {
        self.normalized.clamp(0.0, 1.0)
    }
}

pub(crate) fn warn_on_ties(dx: &DistanceMatrix, dy: &DistanceMatrix) -> (f64, f64) {
    let (tx, ty) = (dx.row_tie_fraction(), dy.row_tie_fraction());
    if tx.max(ty) > TIE_WARNING_FRACTION {
        log::warn!(
            "{:.1}% / {:.1}% of within-row distances are tied in X / Y; the statistic is \
             well defined but continuity-based guarantees do not apply",
            100.0 * tx,
            100.0 * ty
        );
    }
    (tx, ty)
}

/// `D_n` from precomputed matrices, packaged as a report.
pub fn association_from_matrices(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<AssociationReport> {
    let start = Instant::now();
    let d_n = d_n_fast(dx, dy)?;
    let (tie_fraction_x, tie_fraction_y) = warn_on_ties(dx, dy);
    Ok(AssociationReport {
        d_n,
        normalized: NORMALIZATION * d_n,
        n: dx.n(),
        elapsed: start.elapsed(),
        tie_fraction_x,
        tie_fraction_y,
    })
}

/// Builds both distance matrices and evaluates `D_n`.
pub fn profile_association(ds: &PairedDataset, mx: &MetricId, my: &MetricId) -> Result<AssociationReport> {
    require_samples(ds.n(), 6)?;
    let start = Instant::now();
    let (dx, dy) = ds.distance_matrices(mx, my)?;
    let mut report = association_from_matrices(&dx, &dy)?;
    report.elapsed = start.elapsed();
    Ok(report)
}
