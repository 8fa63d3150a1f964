//! Object types supported by the metric suite.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Tolerance on the Euclidean norm of a unit vector at construction.
pub const UNIT_NORM_TOL: f64 = 1e-9;
/// Tolerance on `|a_ij - a_ji|` (relative to the largest entry, floored at 1).
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Smallest eigenvalue must exceed this fraction of the largest.
pub const SPD_EIGEN_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Vector,
    UnitVector,
    SpdMatrix,
    QuantileGrid,
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectKind::Vector => "vector",
            ObjectKind::UnitVector => "unit_vector",
            ObjectKind::SpdMatrix => "spd_matrix",
            ObjectKind::QuantileGrid => "quantile_grid",
        })
    }
}

/// A validated symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Validates symmetry and positive definiteness of `m`.
    ///
    /// The stored matrix is the symmetrized `(m + m^T) / 2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidObject(format!(
                "SPD matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidObject("SPD matrix has non-finite entries".into()));
        }
        let scale = m.amax().max(1.0);
        let p = m.nrows();
        for i in 0..p {
            for j in (i + 1)..p {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidObject(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        let sym = symmetrize(&m);
        let eig = sym_eigen(&sym)?;
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || !(min > SPD_EIGEN_RATIO * max) {
            return Err(Error::InvalidObject(format!(
                "matrix is not positive definite (eigenvalues in [{min:e}, {max:e}])"
            )));
        }
        Ok(SpdMatrix(sym))
    }

    /// Builds from `p * p` row-major entries.
    pub fn from_row_major(p: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != p * p {
            return Err(Error::DimensionMismatch { expected: p * p, found: entries.len() });
        }
        SpdMatrix::new(DMatrix::from_row_slice(p, p, entries))
    }

    pub fn identity(p: usize) -> Self {
        SpdMatrix(DMatrix::identity(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let p = self.dim();
        let mut out = Vec::with_capacity(p * p);
        for i in 0..p {
            for j in 0..p {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }
}

/// `(m + m^T) / 2`.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let max_iter = 1000 * m.nrows().max(1);
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter)
        .ok_or_else(|| Error::Numerical("symmetric eigen-decomposition did not converge".into()))
}

/// A sample point in one of the supported metric spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricObject {
    /// A point in R^p.
    Vector(Vec<f64>),
    /// A point on the unit sphere in R^p.
    UnitVector(Vec<f64>),
    Spd(SpdMatrix),
    /// Quantile function of a 1-D distribution on the equispaced interior
    /// grid `u_k = (k - 1/2)/m`.
    QuantileGrid(Vec<f64>),
}

impl MetricObject {
    pub fn vector(v: Vec<f64>) -> Result<Self> {
        check_finite(&v)?;
        Ok(MetricObject::Vector(v))
    }

    pub fn unit_vector(v: Vec<f64>) -> Result<Self> {
        check_finite(&v)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidObject(format!("unit vector has norm {norm}")));
        }
        Ok(MetricObject::UnitVector(v))
    }

    /// Normalizes `v` onto the unit sphere.
    pub fn unit_vector_normalized(v: Vec<f64>) -> Result<Self> {
        check_finite(&v)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidObject("cannot normalize a zero vector".into()));
        }
        Ok(MetricObject::UnitVector(v.into_iter().map(|x| x / norm).collect()))
    }

    pub fn spd(m: SpdMatrix) -> Self {
        MetricObject::Spd(m)
    }

    pub fn quantile_grid(q: Vec<f64>) -> Result<Self> {
        check_finite(&q)?;
        if q.len() < 2 {
            return Err(Error::InvalidObject("quantile grid needs at least 2 points".into()));
        }
        if let Some(k) = q.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidObject(format!(
                "quantile grid decreases between points {} and {}",
                k + 1,
                k + 2
            )));
        }
        Ok(MetricObject::QuantileGrid(q))
    }

    pub fn kind(&self) -> ObjectKind {
        match self {
            MetricObject::Vector(_) => ObjectKind::Vector,
            MetricObject::UnitVector(_) => ObjectKind::UnitVector,
            MetricObject::Spd(_) => ObjectKind::SpdMatrix,
            MetricObject::QuantileGrid(_) => ObjectKind::QuantileGrid,
        }
    }

    /// Length of the vector or grid, or the side length `p` of a matrix.
    pub fn dim(&self) -> usize {
        match self {
            MetricObject::Vector(v) | MetricObject::UnitVector(v) | MetricObject::QuantileGrid(v) => {
                v.len()
            }
            MetricObject::Spd(m) => m.dim(),
        }
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidObject("empty payload".into()));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidObject(format!("non-finite value at position {i}")));
    }
    Ok(())
}
