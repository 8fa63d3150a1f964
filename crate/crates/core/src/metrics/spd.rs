use nalgebra::DMatrix;

use crate::objects::{sym_eigen, symmetrize, SpdMatrix};
use crate::{Error, Result};

fn same_dim(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// `U f(Lambda) U^T` for the spectral decomposition of `sym(m)`.
fn spectral_map(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(&symmetrize(m))?;
    let mapped = eig.eigenvalues.map(f);
    if mapped.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix function produced non-finite eigenvalues".into()));
    }
    let u = &eig.eigenvectors;
    Ok(symmetrize(&(u * DMatrix::from_diagonal(&mapped) * u.transpose())))
}

fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(sym_eigen(&symmetrize(m))?.eigenvalues.iter().copied().collect())
}

pub fn spd_frobenius(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    Ok((a.matrix() - b.matrix()).norm())
}

/// Affine-invariant Riemannian distance `|| log(A^{-1/2} B A^{-1/2}) ||_F`.
pub fn spd_airm(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let a_inv_sqrt = spectral_map(a.matrix(), |l| l.sqrt().recip())?;
    let whitened = &a_inv_sqrt * b.matrix() * &a_inv_sqrt;
    let lambdas = eigenvalues(&whitened)?;
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Numerical("whitened matrix lost positive definiteness".into()));
    }
    Ok(lambdas.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// Log-Cholesky distance: Frobenius distance of the strictly lower Cholesky
/// parts combined with the distance of the log-diagonals.
pub fn spd_log_cholesky(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let chol = |m: &SpdMatrix| {
        m.matrix()
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::Numerical("Cholesky factorization failed".into()))
    };
    let la = chol(a)?;
    let lb = chol(b)?;
    let p = a.dim();
    let mut acc = 0.0;
    for i in 0..p {
        for j in 0..i {
            acc += (la[(i, j)] - lb[(i, j)]).powi(2);
        }
        acc += (la[(i, i)].ln() - lb[(i, i)].ln()).powi(2);
    }
    Ok(acc.sqrt())
}

/// `A^alpha` from the spectral decomposition.
pub fn spd_power_matrix(a: &SpdMatrix, alpha: f64) -> Result<DMatrix<f64>> {
    spectral_map(a.matrix(), |l| l.powf(alpha))
}

pub fn spd_power(a: &SpdMatrix, b: &SpdMatrix, alpha: f64) -> Result<f64> {
    same_dim(a, b)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("power exponent must be positive, got {alpha}")));
    }
    if alpha == 1.0 {
        return spd_frobenius(a, b);
    }
    Ok((spd_power_matrix(a, alpha)? - spd_power_matrix(b, alpha)?).norm())
}

/// `sqrt(Tr(A + B - 2 (A^{1/2} B A^{1/2})^{1/2}))`, the trace term clamped
/// at zero.
pub fn spd_bures_wasserstein(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let a_sqrt = spectral_map(a.matrix(), f64::sqrt)?;
    let inner = &a_sqrt * b.matrix() * &a_sqrt;
    let cross: f64 = eigenvalues(&inner)?.iter().map(|l| l.max(0.0).sqrt()).sum();
    let d2 = a.matrix().trace() + b.matrix().trace() - 2.0 * cross;
    Ok(d2.max(0.0).sqrt())
}

/// Affine-invariant geodesic `A #_rho B = A^{1/2} (A^{-1/2} B A^{-1/2})^rho A^{1/2}`.
pub fn spd_geodesic_interp(a: &SpdMatrix, b: &SpdMatrix, rho: f64) -> Result<SpdMatrix> {
    same_dim(a, b)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("interpolation weight must lie in [0, 1], got {rho}")));
    }
    if rho == 0.0 {
        return Ok(a.clone());
    }
    let eig = sym_eigen(a.matrix())?;
    let u = &eig.eigenvectors;
    let sqrt = u * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * u.transpose();
    let inv_sqrt = u * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt().recip())) * u.transpose();
    let whitened = &inv_sqrt * b.matrix() * &inv_sqrt;
    let powered = spectral_map(&whitened, |l| l.powf(rho))?;
    SpdMatrix::new(symmetrize(&(&sqrt * powered * &sqrt)))
        .map_err(|e| Error::Numerical(format!("geodesic interpolation left the SPD cone: {e}")))
}

/// Matrix exponential of `sym(m)`.
pub fn spd_exp(m: &DMatrix<f64>) -> Result<SpdMatrix> {
    SpdMatrix::new(spectral_map(m, f64::exp)?)
}
