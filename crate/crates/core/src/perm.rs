//! Half-permutation calibration of the independence test.
//!
//! Each replicate draws a random half `pi` of the sample indices and a random
//! ordering of (half of) the complement, pairs `X[pi[t]]` with
//! `Y[sigma_pi_c[t]]`, and evaluates the statistic on the resulting broken
//! pairing at sample size `floor(n/2)`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::assoc::{d_n_fast, warn_on_ties};
use crate::dataset::{require_samples, PairedDataset};
use crate::distance::DistanceMatrix;
use crate::metrics::MetricId;
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Permutation count used when the caller has no preference.
pub const DEFAULT_PERMUTATIONS: usize = 500;

/// Smallest sample size for which both halves support `D_n` (six points).
pub const MIN_TEST_SAMPLES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationPlan {
    pub n: usize,
    pub half: usize,
    /// A half-size subset, ascending.
    pub pi: Vec<usize>,
    /// Permuted complement of `pi`, truncated to `half` entries.
    pub sigma_pi_c: Vec<usize>,
}

/// Draws a plan uniformly: `pi` is a uniform `floor(n/2)`-subset and
/// `sigma_pi_c` a uniform arrangement of the complement.
pub fn draw_plan<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PermutationPlan> {
    require_samples(n, MIN_TEST_SAMPLES)?;
    let half = n / 2;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut pi = perm[..half].to_vec();
    pi.sort_unstable();
    let sigma_pi_c = perm[half..2 * half].to_vec();
    Ok(PermutationPlan { n, half, pi, sigma_pi_c })
}

/// `D_half` on the pairing `(X[pi[t]], Y[sigma_pi_c[t]])`. Not yet scaled by
/// `half`.
pub fn permuted_statistic(dx: &DistanceMatrix, dy: &DistanceMatrix, plan: &PermutationPlan) -> Result<f64> {
    if dx.n() != plan.n || dy.n() != plan.n {
        return Err(Error::SizeMismatch(plan.n, if dx.n() != plan.n { dx.n() } else { dy.n() }));
    }
    d_n_fast(&dx.submatrix(&plan.pi), &dy.submatrix(&plan.sigma_pi_c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// `n * D_n` (or `n * T_n` for the conditional test).
    pub statistic: f64,
    /// Scaled permutation replicates, in replicate order.
    pub replicates: Vec<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub n_permutations: usize,
    pub seed: u64,
}

impl TestResult {
    /// Assembles a result. Replicates tied with the statistic count against
    /// rejection.
    pub fn from_replicates(statistic: f64, replicates: Vec<f64>, alpha: f64, seed: u64) -> Self {
        let n_permutations = replicates.len();
        let exceed = replicates.iter().filter(|&&r| r >= statistic).count();
        let p_value = (1 + exceed) as f64 / (1 + n_permutations) as f64;
        TestResult {
            statistic,
            replicates,
            p_value,
            alpha,
            reject: p_value <= alpha,
            n_permutations,
            seed,
        }
    }
}

pub(crate) fn check_test_args(n_permutations: usize, alpha: f64) -> Result<()> {
    if n_permutations < 1 {
        return Err(Error::InvalidParameter("number of permutations must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Runs `replicate(plan)` for `n_permutations` plans, each drawn from its own
/// generator stream of `seed`. The output order is the replicate index, so it
/// does not depend on the thread count.
pub(crate) fn run_replicates<F>(n: usize, n_permutations: usize, seed: u64, replicate: F) -> Result<Vec<f64>>
where
    F: Fn(&PermutationPlan) -> Result<f64> + Sync,
{
    (0..n_permutations as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let plan = draw_plan(n, &mut rng)?;
            replicate(&plan)
        })
        .collect()
}

/// The permutation test on precomputed distance matrices.
pub fn independence_test_matrices(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    n_permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    if dx.n() != dy.n() {
        return Err(Error::SizeMismatch(dx.n(), dy.n()));
    }
    let n = dx.n();
    require_samples(n, MIN_TEST_SAMPLES)?;
    check_test_args(n_permutations, alpha)?;
    let statistic = n as f64 * d_n_fast(dx, dy)?;
    let half = (n / 2) as f64;
    let replicates = run_replicates(n, n_permutations, seed, |plan| {
        Ok(half * permuted_statistic(dx, dy, plan)?)
    })?;
    Ok(TestResult::from_replicates(statistic, replicates, alpha, seed))
}

/// Tests independence of `X` and `Y` with `n_permutations` half-permutation
/// replicates.
pub fn independence_test(
    ds: &PairedDataset,
    mx: &MetricId,
    my: &MetricId,
    n_permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    require_samples(ds.n(), MIN_TEST_SAMPLES)?;
    check_test_args(n_permutations, alpha)?;
    let (dx, dy) = ds.distance_matrices(mx, my)?;
    warn_on_ties(&dx, &dy);
    independence_test_matrices(&dx, &dy, n_permutations, alpha, seed)
}

/// Empirical CDF of the replicates at `z`.
pub fn h_hat_cdf(replicates: &[f64], z: f64) -> Result<f64> {
    if replicates.is_empty() {
        return Err(Error::InvalidParameter("no replicates".into()));
    }
    Ok(replicates.iter().filter(|&&r| r <= z).count() as f64 / replicates.len() as f64)
}
