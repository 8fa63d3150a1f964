use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Normal, StandardNormal};
use std::f64::consts::PI;

use crate::metrics::{spd_exp, spd_geodesic_interp, spd_power_matrix, standard_normal_quantiles};
use crate::objects::{MetricObject, SpdMatrix};
use crate::Result;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn symmetric_part(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub(super) fn euclidean_pairs<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rho: f64,
    link: impl Fn(f64) -> f64,
    rng: &mut R,
) -> Result<(Vec<MetricObject>, Vec<MetricObject>)> {
    let coupled = (p / 10).max(1);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..p).map(|_| normal(rng)).collect();
        let y: Vec<f64> = (0..p)
            .map(|j| if j < coupled { rho * link(x[j]) + normal(rng) } else { normal(rng) })
            .collect();
        xs.push(MetricObject::vector(x)?);
        ys.push(MetricObject::vector(y)?);
    }
    Ok((xs, ys))
}

/// Uniform on `{|x|^q + |y|^q <= 1}` with `q = 2 / rho`, by rejection from
/// the square. `rho = 0` is the square itself.
pub(super) fn circle_pairs<R: Rng + ?Sized>(n: usize, rho: f64, rng: &mut R) -> Result<(Vec<MetricObject>, Vec<MetricObject>)> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    while xs.len() < n {
        let x: f64 = rng.random_range(-1.0..1.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        let accept = rho == 0.0 || {
            let q = 2.0 / rho;
            x.abs().powf(q) + y.abs().powf(q) <= 1.0
        };
        if accept {
            xs.push(MetricObject::vector(vec![x])?);
            ys.push(MetricObject::vector(vec![y])?);
        }
    }
    Ok((xs, ys))
}

/// `exp(sym(S))` with `S` entries `N(0, 0.6^2)`.
pub(super) fn random_spd<R: Rng + ?Sized>(rng: &mut R) -> Result<SpdMatrix> {
    let dist = Normal::new(0.0, 0.6).expect("valid normal");
    let s = DMatrix::from_fn(2, 2, |_, _| rng.sample(dist));
    spd_exp(&symmetric_part(s))
}

/// One `(X, Y)` draw of the SPD interpolation design.
pub(super) fn spd_interp_pair<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> Result<(SpdMatrix, SpdMatrix)> {
    let x = random_spd(rng)?;
    let y0 = random_spd(rng)?;
    let c = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[2.0, 0.5]));
    let p = SpdMatrix::new(&c * x.matrix() * c.transpose())?;
    let p_half = spd_power_matrix(&p, 0.5)?;
    let e = DMatrix::from_fn(2, 2, |_, _| normal(rng));
    let noise = spd_exp(&(symmetric_part(e) * 0.1))?;
    let y1 = SpdMatrix::new(&p_half * noise.matrix() * &p_half)?;
    let y = spd_geodesic_interp(&y0, &y1, rho / 5.0)?;
    Ok((x, y))
}

/// Quantile grid of `N(mean, sd^2)` from precomputed standard normal
/// quantiles.
fn gaussian_grid(mean: f64, sd: f64, z: &[f64]) -> Result<MetricObject> {
    MetricObject::quantile_grid(z.iter().map(|q| mean + sd * q).collect())
}

pub(super) fn w2_mean_pairs<R: Rng + ?Sized>(
    n: usize,
    rho: f64,
    m: usize,
    rng: &mut R,
) -> Result<(Vec<MetricObject>, Vec<MetricObject>)> {
    let z = standard_normal_quantiles(m);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let mu_x = normal(rng);
        let mu_y = 0.2 * normal(rng) * mu_x.abs().powf(rho);
        let sd_x: f64 = rng.random();
        let sd_y: f64 = rng.random_range(1.0..2.0);
        xs.push(gaussian_grid(mu_x, sd_x, &z)?);
        ys.push(gaussian_grid(mu_y, sd_y, &z)?);
    }
    Ok((xs, ys))
}

pub(super) fn cond_sphere_log<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rho: f64,
    rng: &mut R,
) -> Result<(Vec<MetricObject>, Vec<MetricObject>, Vec<f64>)> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.random();
        let eps: Vec<f64> = (0..2 * p + 2).map(|_| normal(rng)).collect();
        // eps[k] is the (k+1)-th standard normal of the construction
        let mut x = eps[..p + 1].to_vec();
        x[0] += z;
        let mut y = Vec::with_capacity(p + 1);
        y.push(z + rho * (4.0 * eps[0] * eps[0]).ln() + (1.0 - rho) * eps[p + 1]);
        y.extend_from_slice(&eps[p + 2..]);
        xs.push(MetricObject::unit_vector_normalized(x)?);
        ys.push(MetricObject::unit_vector_normalized(y)?);
        zs.push(z);
    }
    Ok((xs, ys, zs))
}

pub(super) fn cond_w2<R: Rng + ?Sized>(
    n: usize,
    rho: f64,
    m: usize,
    link: impl Fn(f64) -> f64,
    rng: &mut R,
) -> Result<(Vec<MetricObject>, Vec<MetricObject>, Vec<f64>)> {
    let q = standard_normal_quantiles(m);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.random();
        let mu_x = z + rng.random_range(-1.0..1.0);
        let mu_y = z + rho * link(mu_x) + rng.random_range(-1.0..1.0);
        xs.push(gaussian_grid(mu_x, 1.0, &q)?);
        ys.push(gaussian_grid(mu_y, 1.0, &q)?);
        zs.push(z);
    }
    Ok((xs, ys, zs))
}

pub(super) fn log_link(x: f64) -> f64 {
    (4.0 * x * x).ln()
}

pub(super) fn sin_link(x: f64) -> f64 {
    (PI * x).sin()
}
