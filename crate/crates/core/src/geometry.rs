//! Stereographic projection between `S^n` and `R^n` and the conformal factor
//! relating the round metric to the flat one.
//!
//! The projection is taken from the north pole `N = (0, ..., 0, 1)`. Pulling
//! the round metric back through the inverse projection gives
//! `(2 / (1 + |x|^2))^2 g_flat = U^{4/(n-2)} g_flat`, which is what lets a
//! positive solution of the conformal Laplace equation on the sphere be
//! traded for a positive harmonic function on the plane.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const ROUNDTRIP_TOL: f64 = 1e-12;
pub const POLE_EXCLUSION: f64 = 1e-9;

/// Ambient dimension `n` of the sphere `S^n`; always at least 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Exponent `2/(n-2)` of the length element `u^{2/(n-2)} |dx|`.
    pub fn length_exponent(self) -> f64 {
        2.0 / (self.0 as f64 - 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Wraps embedding coordinates, rejecting vectors off the unit sphere.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = norm(&coords);
        if (norm - 1.0).abs() > ROUNDTRIP_TOL {
            return Err(Error::DomainError(format!(
                "sphere point has norm {norm}, expected 1"
            )));
        }
        Ok(Self { coords })
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn from_direction(v: &[f64]) -> Result<Self> {
        let r = norm(v);
        if r == 0.0 || !r.is_finite() {
            return Err(Error::DomainError("zero direction".into()));
        }
        Ok(Self {
            coords: v.iter().map(|c| c / r).collect(),
        })
    }

    pub fn north(dim: Dimension) -> Self {
        let mut coords = vec![0.0; dim.get() + 1];
        coords[dim.get()] = 1.0;
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanePoint {
    pub coords: Vec<f64>,
}

impl PlanePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `sigma(p) = (p_1, ..., p_n) / (1 - p_{n+1})`.
pub fn stereo_project(p: &SpherePoint, dim: Dimension) -> Result<PlanePoint> {
    let n = dim.get();
    check_len(n + 1, p.coords.len())?;
    let north = SpherePoint::north(dim);
    let d = dist(&p.coords, &north.coords);
    if d <= POLE_EXCLUSION {
        return Err(Error::NorthPoleSingular(d));
    }
    let denom = 1.0 - p.coords[n];
    Ok(PlanePoint::new(
        p.coords[..n].iter().map(|c| c / denom).collect(),
    ))
}

/// Inverse projection `(2x, |x|^2 - 1) / (1 + |x|^2)`.
pub fn stereo_lift(x: &PlanePoint, dim: Dimension) -> Result<SpherePoint> {
    let n = dim.get();
    check_len(n, x.coords.len())?;
    let r2 = norm_sq(&x.coords);
    let denom = 1.0 + r2;
    let mut coords: Vec<f64> = x.coords.iter().map(|c| 2.0 * c / denom).collect();
    coords.push((r2 - 1.0) / denom);
    Ok(SpherePoint { coords })
}

/// `U(x) = (2 / (1 + |x|^2))^{(n-2)/2}`.
pub fn conformal_factor(x: &[f64], dim: Dimension) -> f64 {
    let n = dim.get() as f64;
    (2.0 / (1.0 + norm_sq(x))).powf(0.5 * (n - 2.0))
}

/// `u(x) = U(x) v(sigma^{-1}(x))` for a field `v` given on the sphere.
pub fn plane_solution_from_sphere<V>(v: V, dim: Dimension) -> impl Fn(&[f64]) -> f64
where
    V: Fn(&SpherePoint) -> f64,
{
    move |x: &[f64]| {
        let p = stereo_lift(&PlanePoint::new(x.to_vec()), dim).expect("matching dimension");
        conformal_factor(x, dim) * v(&p)
    }
}

/// Inverse of [`plane_solution_from_sphere`]: `v = (u / U) o sigma`.
pub fn sphere_field_from_plane<F>(u: F, dim: Dimension) -> impl Fn(&SpherePoint) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    move |p: &SpherePoint| {
        let x = stereo_project(p, dim).expect("point away from the north pole");
        u(&x.coords) / conformal_factor(&x.coords, dim)
    }
}

/// Stereographic chart centred at either pole. `North` is `sigma` itself;
/// `South` projects from the south pole and covers a neighbourhood of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    North,
    South,
}

impl Chart {
    /// Chart that places `p` within radius 2 of the chart origin.
    pub fn for_point(p: &SpherePoint) -> Chart {
        // |sigma_N(p)| <= 2  <=>  p_{n+1} <= 3/5
        if p.coords[p.dim()] <= 0.6 {
            Chart::North
        } else {
            Chart::South
        }
    }

    pub fn to_chart(self, p: &SpherePoint) -> Vec<f64> {
        let n = p.dim();
        let denom = match self {
            Chart::North => 1.0 - p.coords[n],
            Chart::South => 1.0 + p.coords[n],
        };
        p.coords[..n].iter().map(|c| c / denom).collect()
    }

    pub fn from_chart(self, y: &[f64]) -> SpherePoint {
        let r2 = norm_sq(y);
        let denom = 1.0 + r2;
        let mut coords: Vec<f64> = y.iter().map(|c| 2.0 * c / denom).collect();
        coords.push(match self {
            Chart::North => (r2 - 1.0) / denom,
            Chart::South => (1.0 - r2) / denom,
        });
        SpherePoint { coords }
    }
}

/// Finite-difference Laplace-Beltrami operator of the round metric in a
/// stereographic chart, where `g = phi^2 delta` with `phi = 2/(1+|y|^2)`:
/// `Delta_g f = phi^{-n} d_i(phi^{n-2} d_i f)`, discretized in conservative
/// centred form (second order).
pub fn sphere_laplacian_fd<F>(f: &F, chart: Chart, y: &[f64], h: f64) -> f64
where
    F: Fn(&SpherePoint) -> f64,
{
    let n = y.len();
    let phi = |z: &[f64]| 2.0 / (1.0 + norm_sq(z));
    let a = |z: &[f64]| phi(z).powi(n as i32 - 2);
    let eval = |z: &[f64]| f(&chart.from_chart(z));
    let f0 = eval(y);
    let mut z = y.to_vec();
    let mut acc = 0.0;
    for i in 0..n {
        z[i] = y[i] + h;
        let fp = eval(&z);
        z[i] = y[i] - h;
        let fm = eval(&z);
        z[i] = y[i] + 0.5 * h;
        let ap = a(&z);
        z[i] = y[i] - 0.5 * h;
        let am = a(&z);
        z[i] = y[i];
        acc += ap * (fp - f0) - am * (f0 - fm);
    }
    acc / (h * h) / phi(y).powi(n as i32)
}

/// Centred `2n+1`-point flat Laplacian.
pub fn flat_laplacian_fd<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> f64 {
    let f0 = f(x);
    let mut z = x.to_vec();
    let mut acc = 0.0;
    for i in 0..x.len() {
        z[i] = x[i] + h;
        acc += f(&z);
        z[i] = x[i] - h;
        acc += f(&z);
        z[i] = x[i];
        acc -= 2.0 * f0;
    }
    acc / (h * h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub steps: Vec<f64>,
    pub max_residuals: Vec<f64>,
    pub orders: Vec<f64>,
    pub min_order: f64,
}

fn convergence_orders(residuals: &[f64]) -> Vec<f64> {
    residuals
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

fn check_clearance(x: &[f64], singular: &[Vec<f64>], h: f64) -> Result<()> {
    for s in singular {
        let d = dist(x, s);
        if d < 10.0 * h {
            return Err(Error::SampleTooCloseToSingularity {
                distance: d,
                minimum: 10.0 * h,
            });
        }
    }
    Ok(())
}

/// Checks `(4(n-1)/(n-2)) Delta_{g0} v - n(n-1) v = 0` for `v = (u/U) o sigma`
/// at sphere samples, for steps `h, h/2, h/4`. A harmonic `u` gives a
/// residual that decays at second order.
pub fn verify_conformal_covariance<F>(
    u: F,
    singular: &[Vec<f64>],
    samples: &[SpherePoint],
    dim: Dimension,
    h: f64,
) -> Result<CovarianceReport>
where
    F: Fn(&[f64]) -> f64,
{
    let n = dim.get() as f64;
    for p in samples {
        check_len(dim.get() + 1, p.coords.len())?;
        let x = stereo_project(p, dim)?;
        check_clearance(&x.coords, singular, h)?;
    }
    let v = sphere_field_from_plane(&u, dim);
    let c = 4.0 * (n - 1.0) / (n - 2.0);
    let steps = vec![h, h / 2.0, h / 4.0];
    let mut max_residuals = Vec::with_capacity(3);
    for &step in &steps {
        let mut worst: f64 = 0.0;
        for p in samples {
            let chart = Chart::for_point(p);
            let y = chart.to_chart(p);
            let lap = sphere_laplacian_fd(&v, chart, &y, step);
            let r = c * lap - n * (n - 1.0) * v(p);
            worst = worst.max(r.abs());
        }
        max_residuals.push(worst);
    }
    let orders = convergence_orders(&max_residuals);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CovarianceReport {
        steps,
        max_residuals,
        orders,
        min_order,
    })
}

/// Mesh study of the flat FD Laplacian of `u` at `points`; for harmonic `u`
/// the residual is the truncation error and decays at second order.
pub fn flat_harmonicity_study<F>(
    u: F,
    singular: &[Vec<f64>],
    points: &[Vec<f64>],
    h: f64,
) -> Result<CovarianceReport>
where
    F: Fn(&[f64]) -> f64,
{
    for x in points {
        check_clearance(x, singular, h)?;
    }
    let steps = vec![h, h / 2.0, h / 4.0];
    let max_residuals: Vec<f64> = steps
        .iter()
        .map(|&s| {
            points
                .iter()
                .map(|x| flat_laplacian_fd(&u, x, s).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let orders = convergence_orders(&max_residuals);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CovarianceReport {
        steps,
        max_residuals,
        orders,
        min_order,
    })
}
