use super::ConformalMetric;
use crate::error::{Error, Result};
use crate::geometry::norm;
use crate::measure::Measure;
use crate::potential::wolff_specialized;
use crate::quadrature::{cubature, QuadOptions, QuadResult};
use serde::Serialize;
use std::f64::consts::PI;

/// `int_{S^{n-1}} f(omega) d omega`. For `n = 3` the chart is
/// `(z, phi)`, which is area preserving; higher `n` use hyperspherical
/// angles with their Jacobian.
pub fn sphere_integral<F: FnMut(&[f64]) -> f64>(n: usize, mut f: F, opts: QuadOptions) -> QuadResult {
    assert!(n >= 2);
    let mut w = vec![0.0; n];
    if n == 3 {
        return cubature(
            |p| {
                let (z, phi) = (p[0], p[1]);
                let r = (1.0 - z * z).max(0.0).sqrt();
                w[0] = r * phi.cos();
                w[1] = r * phi.sin();
                w[2] = z;
                f(&w)
            },
            &[-1.0, 0.0],
            &[1.0, 2.0 * PI],
            opts,
        );
    }
    let d = n - 1;
    let mut lo = vec![0.0; d];
    let mut hi = vec![PI; d];
    lo[d - 1] = 0.0;
    hi[d - 1] = 2.0 * PI;
    cubature(
        |a| {
            let mut jac = 1.0;
            let mut s = 1.0;
            for i in 0..d - 1 {
                w[i] = s * a[i].cos();
                jac *= a[i].sin().powi((d - 1 - i) as i32);
                s *= a[i].sin();
            }
            w[d - 1] = s * a[d - 1].cos();
            w[d] = s * a[d - 1].sin();
            jac * f(&w)
        },
        &lo,
        &hi,
        opts,
    )
}

/// Orthonormal `(e1, e2)` completing the unit vector `a` in `R^3`.
fn complete_frame(a: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let t = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = t[0] * a[0] + t[1] * a[1] + t[2] * a[2];
    let mut e1 = [t[0] - dot * a[0], t[1] - dot * a[1], t[2] - dot * a[2]];
    let r = norm(&e1);
    e1.iter_mut().for_each(|x| *x /= r);
    let e2 = [
        a[1] * e1[2] - a[2] * e1[1],
        a[2] * e1[0] - a[0] * e1[2],
        a[0] * e1[1] - a[1] * e1[0],
    ];
    (e1, e2)
}

fn unit3(axis: &[f64]) -> Result<[f64; 3]> {
    if axis.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: axis.len(),
        });
    }
    let r = norm(axis);
    if !(r > 0.0) {
        return Err(Error::InvalidParams("cone axis must be nonzero".into()));
    }
    Ok([axis[0] / r, axis[1] / r, axis[2] / r])
}

fn check_half_angle(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < PI / 2.0) {
        return Err(Error::InvalidParams(format!("cone half-angle {theta} not in (0, pi/2)")));
    }
    Ok(())
}

/// `int` of `f` over the spherical cap of directions within `half_angle`
/// of `axis` in `R^3`.
pub fn cap_integral<F: FnMut(&[f64]) -> f64>(
    axis: &[f64],
    half_angle: f64,
    mut f: F,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let a = unit3(axis)?;
    check_half_angle(half_angle)?;
    let (e1, e2) = complete_frame(&a);
    let mut w = [0.0; 3];
    Ok(cubature(
        |p| {
            let (z, phi) = (p[0], p[1]);
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (c, s) = (r * phi.cos(), r * phi.sin());
            for i in 0..3 {
                w[i] = c * e1[i] + s * e2[i] + z * a[i];
            }
            f(&w)
        },
        &[half_angle.cos(), 0.0],
        &[1.0, 2.0 * PI],
        opts,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UEstimateOptions {
    /// Relative tolerance of the angular cubature.
    pub outer_rel_tol: f64,
    /// Relative tolerance of each radial integral.
    pub inner_rel_tol: f64,
    pub max_regions: usize,
}

impl Default for UEstimateOptions {
    fn default() -> Self {
        Self {
            outer_rel_tol: 1e-3,
            inner_rel_tol: 1e-6,
            max_regions: 4000,
        }
    }
}

impl UEstimateOptions {
    /// One refinement level: both tolerances divided by 10, twice the regions.
    pub fn refined(&self) -> Self {
        Self {
            outer_rel_tol: self.outer_rel_tol / 10.0,
            inner_rel_tol: self.inner_rel_tol / 10.0,
            max_regions: self.max_regions * 2,
        }
    }
}

/// Both sides of `int_{B(0,1)} u^{2/(n-2)} |x|^{1-n} dx <= C W(0)` for the
/// Newtonian potential `u` of `mu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UEstimate {
    pub n: usize,
    pub lhs: f64,
    pub lhs_error: f64,
    /// The angular cubature met its tolerance and the error estimate is
    /// within 1% of the value.
    pub lhs_converged: bool,
    pub evaluations: usize,
    pub wolff_origin: f64,
    pub ratio: f64,
    pub options: UEstimateOptions,
}

/// Polar-coordinate evaluation of the left side against the exact Wolff
/// potential at the origin.
pub fn verify_u_estimate(mu: &Measure, opts: &UEstimateOptions) -> Result<UEstimate> {
    let n = mu.n();
    let radius = mu.support_radius();
    if radius > 0.5 + 1e-12 {
        return Err(Error::SupportOutsideHalfBall(radius));
    }
    let origin = vec![0.0; n];
    let d0 = mu.distance_to_support(&origin);
    if d0 == 0.0 {
        return Err(Error::WolffDivergentAtOrigin);
    }
    // The ball mass vanishes below d0, so any r_min < d0 gives the full
    // integral without truncation error.
    let r_min = if d0.is_finite() { (0.5 * d0).min(0.5) } else { 0.5 };
    let w = wolff_specialized(mu, &origin, r_min)?;
    if w.is_divergent() {
        return Err(Error::WolffDivergentAtOrigin);
    }
    let g = ConformalMetric::newtonian(mu.clone(), super::SingularSet::Empty { n })?;
    let inner = QuadOptions::rel(opts.inner_rel_tol);
    let outer = QuadOptions {
        rel_tol: opts.outer_rel_tol,
        abs_tol: 0.0,
        max_regions: opts.max_regions,
    };
    let res = sphere_integral(n, |omega| g.segment_length(&origin, omega, 0.0, 1.0, inner).value, outer);
    Ok(UEstimate {
        n,
        lhs: res.value,
        lhs_error: res.error,
        lhs_converged: res.converged && res.error <= 0.01 * res.value.abs(),
        evaluations: res.evaluations,
        wolff_origin: w.value,
        ratio: res.value / w.value,
        options: *opts,
    })
}

/// Ray-by-ray against solid evaluation of `int_cone u^{2/(n-2)} |x|^{1-n} dx`
/// over the cone of directions within `half_angle` of `axis`, cut at `|x| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FubiniReport {
    pub axis: Vec<f64>,
    pub half_angle: f64,
    pub solid_angle: f64,
    /// Cap integral of the ray lengths `int_0^1 u(s omega)^2 ds`.
    pub lhs: f64,
    /// Cylindrical-coordinate volume integral.
    pub rhs: f64,
    pub discrepancy: f64,
    pub converged: bool,
}

/// Only `n = 3`; the cone must keep away from every weighted atom.
pub fn fubini_identity_check(
    g: &ConformalMetric,
    axis: &[f64],
    half_angle: f64,
    opts: QuadOptions,
) -> Result<FubiniReport> {
    if g.n() != 3 {
        return Err(Error::InvalidDimension(g.n()));
    }
    let a = unit3(axis)?;
    check_half_angle(half_angle)?;
    if let Some(mu) = g.measure() {
        for (y, w) in mu.atoms() {
            let r = norm(y);
            if w == 0.0 || r > 1.0 {
                continue;
            }
            let cosang = if r == 0.0 { 1.0 } else { (y[0] * a[0] + y[1] * a[1] + y[2] * a[2]) / r };
            if cosang >= half_angle.cos() - 1e-12 {
                return Err(Error::InvalidParams(format!("atom {y:?} lies inside the cone")));
            }
        }
    }
    let origin = [0.0; 3];
    let inner = QuadOptions::rel((opts.rel_tol * 1e-3).max(1e-12));
    let lhs = cap_integral(
        &a,
        half_angle,
        |omega| g.segment_length(&origin, omega, 0.0, 1.0, inner).value,
        opts,
    )?;

    // x = t a + rho (cos phi e1 + sin phi e2), rho = rho_max(t) v, so
    // dx = rho_max(t)^2 v dv dt dphi.
    let (e1, e2) = complete_frame(&a);
    let tan = half_angle.tan();
    let tc = half_angle.cos();
    let mut x = [0.0; 3];
    let mut solid = |t0: f64, t1: f64, rmax: &dyn Fn(f64) -> f64| {
        cubature(
            |p| {
                let (t, v, phi) = (p[0], p[1], p[2]);
                let rm = rmax(t);
                let rho = rm * v;
                let (c, s) = (rho * phi.cos(), rho * phi.sin());
                for i in 0..3 {
                    x[i] = t * a[i] + c * e1[i] + s * e2[i];
                }
                let r2 = t * t + rho * rho;
                if r2 == 0.0 {
                    return 0.0;
                }
                g.density(&x) / r2 * rm * rm * v
            },
            &[t0, 0.0, 0.0],
            &[t1, 1.0, 2.0 * PI],
            opts,
        )
    };
    let near = solid(0.0, tc, &|t| t * tan);
    let far = solid(tc, 1.0, &|t| (1.0 - t * t).max(0.0).sqrt());
    let rhs = near.value + far.value;
    Ok(FubiniReport {
        axis: a.to_vec(),
        half_angle,
        solid_angle: 2.0 * PI * (1.0 - tc),
        lhs: lhs.value,
        rhs,
        discrepancy: (lhs.value - rhs).abs() / rhs.abs(),
        converged: lhs.converged && near.converged && far.converged,
    })
}
