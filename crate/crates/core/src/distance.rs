//! Pairwise distance matrices, the interface between object spaces and the
//! statistics.

use rayon::prelude::*;

use crate::metrics::MetricId;
use crate::objects::MetricObject;
use crate::{Error, Result};

/// Tolerance for accepting an externally supplied matrix as symmetric.
pub const EXTERNAL_SYMMETRY_TOL: f64 = 1e-8;

/// An `n x n` symmetric matrix of nonnegative distances with zero diagonal,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates a row-major `n x n` matrix supplied from outside.
    ///
    /// Entries must be finite and nonnegative, the diagonal zero and the
    /// matrix symmetric within [`EXTERNAL_SYMMETRY_TOL`]. The stored matrix is
    /// exactly symmetric (upper triangle mirrored).
    pub fn from_row_major(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidDistanceMatrix(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        let mut entries = entries;
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::InvalidDistanceMatrix(format!("nonzero diagonal at row {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "entry ({i}, {j}) is negative or non-finite"
                    )));
                }
                if (a - b).abs() > EXTERNAL_SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                entries[j * n + i] = a;
            }
        }
        Ok(DistanceMatrix { n, entries })
    }

    /// Builds from the strict upper triangle, listed row by row.
    fn from_upper(n: usize, upper: &[f64]) -> Self {
        let mut entries = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                entries[i * n + j] = upper[k];
                entries[j * n + i] = upper[k];
                k += 1;
            }
        }
        DistanceMatrix { n, entries }
    }

    /// Absolute differences of scalars.
    pub fn from_scalars(values: &[f64]) -> Self {
        let n = values.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = (values[i] - values[j]).abs();
            }
        }
        DistanceMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// The matrix restricted to `indices`, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> DistanceMatrix {
        let m = indices.len();
        let mut entries = Vec::with_capacity(m * m);
        for &i in indices {
            let row = self.row(i);
            entries.extend(indices.iter().map(|&j| row[j]));
        }
        DistanceMatrix { n: m, entries }
    }

    /// Applies `f` to every entry. `f` is expected to satisfy `f(0) = 0` and
    /// to be nondecreasing.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DistanceMatrix {
        DistanceMatrix { n: self.n, entries: self.entries.iter().map(|&d| f(d)).collect() }
    }

    /// Fraction of off-diagonal row entries that equal another off-diagonal
    /// entry in the same row.
    pub fn row_tie_fraction(&self) -> f64 {
        if self.n < 3 {
            return 0.0;
        }
        let mut tied = 0usize;
        let mut buf = Vec::with_capacity(self.n - 1);
        for i in 0..self.n {
            buf.clear();
            buf.extend(self.row(i).iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &d)| d));
            buf.sort_by(f64::total_cmp);
            for k in 0..buf.len() {
                let left = k > 0 && buf[k - 1] == buf[k];
                let right = k + 1 < buf.len() && buf[k + 1] == buf[k];
                if left || right {
                    tied += 1;
                }
            }
        }
        tied as f64 / (self.n * (self.n - 1)) as f64
    }
}

/// Checks that all objects share one tag and one dimension, and that the
/// metric applies to that tag.
pub fn check_objects(objects: &[MetricObject], metric: &MetricId) -> Result<()> {
    let Some(first) = objects.first() else {
        return Ok(());
    };
    let kind = first.kind();
    let dim = first.dim();
    for obj in &objects[1..] {
        if obj.kind() != kind {
            return Err(Error::MixedTags { first: kind, other: obj.kind() });
        }
        if obj.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: obj.dim() });
        }
    }
    if !metric.accepts(kind) {
        return Err(Error::IncompatibleMetric { metric: metric.to_string(), kind });
    }
    Ok(())
}

/// Matrix of `metric(obj_i, obj_j)`; each unordered pair is evaluated once.
/// Pairs are evaluated in parallel, and every entry is an independent pure
/// function of its two objects, so the result does not depend on threading.
pub fn pairwise_matrix(objects: &[MetricObject], metric: &MetricId) -> Result<DistanceMatrix> {
    check_objects(objects, metric)?;
    let n = objects.len();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let upper = pairs
        .par_iter()
        .map(|&(i, j)| metric.distance(&objects[i], &objects[j]))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DistanceMatrix::from_upper(n, &upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::spd_airm;
    use crate::objects::SpdMatrix;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vectors(vs: &[&[f64]]) -> Vec<MetricObject> {
        vs.iter().map(|v| MetricObject::vector(v.to_vec()).unwrap()).collect()
    }

    #[test]
    fn euclidean_examples() {
        let d = pairwise_matrix(&vectors(&[&[1.0, 1.0], &[1.0, 1.0]]), &MetricId::Euclidean).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
        let d = pairwise_matrix(&vectors(&[&[0.0, 0.0], &[3.0, 4.0]]), &MetricId::Euclidean).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn airm_matrix_matches_scalar_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mats: Vec<SpdMatrix> = (0..8)
            .map(|_| {
                let g = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
                SpdMatrix::new(&g * g.transpose() + DMatrix::identity(2, 2) * 0.3).unwrap()
            })
            .collect();
        let objs: Vec<_> = mats.iter().cloned().map(MetricObject::Spd).collect();
        let d = pairwise_matrix(&objs, &MetricId::SpdAirm).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i == j { 0.0 } else { spd_airm(&mats[i.min(j)], &mats[i.max(j)]).unwrap() };
                assert_eq!(d.get(i, j), expected);
            }
        }
    }

    #[test]
    fn rejects_mixed_and_incompatible_inputs() {
        let mixed = vec![
            MetricObject::vector(vec![0.0, 1.0]).unwrap(),
            MetricObject::quantile_grid(vec![0.0, 1.0]).unwrap(),
        ];
        assert!(matches!(pairwise_matrix(&mixed, &MetricId::Euclidean), Err(Error::MixedTags { .. })));
        let dims = vectors(&[&[0.0, 1.0], &[0.0, 1.0, 2.0]]);
        assert!(matches!(
            pairwise_matrix(&dims, &MetricId::Euclidean),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            pairwise_matrix(&vectors(&[&[1.0]]), &MetricId::SpdAirm),
            Err(Error::IncompatibleMetric { .. })
        ));
    }

    #[test]
    fn external_matrix_validation() {
        assert!(DistanceMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(DistanceMatrix::from_row_major(2, vec![0.0, 1.0, 1.1, 0.0]).is_err());
        assert!(DistanceMatrix::from_row_major(2, vec![0.5, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_row_major(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_row_major(2, vec![0.0, 1.0, 1.0]).is_err());
        let d = DistanceMatrix::from_row_major(2, vec![0.0, 1.0, 1.0 + 1e-12, 0.0]).unwrap();
        assert_eq!(d.get(0, 1), d.get(1, 0));
    }

    #[test]
    fn triangle_inequality_on_small_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let objs: Vec<_> = (0..7)
            .map(|_| MetricObject::vector((0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        let d = pairwise_matrix(&objs, &MetricId::Euclidean).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                for k in 0..7 {
                    assert!(d.get(i, j) <= d.get(i, k) + d.get(k, j) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn tie_fraction() {
        let d = DistanceMatrix::from_scalars(&[0.0, 1.0, 2.0, 3.0]);
        // rows: [1,2,3], [1,1,2], [2,1,1], [3,2,1]
        assert!((d.row_tie_fraction() - 4.0 / 12.0).abs() < 1e-15);
        assert_eq!(DistanceMatrix::from_scalars(&[0.0, 1.0, 3.0, 7.0]).row_tie_fraction(), 0.0);
    }

    #[test]
    fn submatrix_reorders() {
        let d = DistanceMatrix::from_scalars(&[0.0, 1.0, 4.0]);
        let s = d.submatrix(&[2, 0]);
        assert_eq!(s.n(), 2);
        assert_eq!(s.get(0, 1), 4.0);
        assert_eq!(s.get(1, 1), 0.0);
    }
}
