use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use std::f64::consts::PI;

/// Log-integrand drop below its peak at which the subordination integral is
/// truncated; `e^{-50}` is far below the requested accuracy.
const LOG_DROP: f64 = 50.0;

/// `int_R exp(a tau - b e^{-tau} - e^{tau}/(4 pi)) d tau` as
/// `(log of the peak value, integral of exp(phi - peak))`.
fn log_time_integral(a: f64, b: f64) -> (f64, f64) {
    let c = 1.0 / (4.0 * PI);
    let phi = |t: f64| a * t - b * (-t).exp() - c * t.exp();
    let dphi = |t: f64| a + b * (-t).exp() - c * t.exp();
    // phi is strictly concave; bracket and bisect its critical point
    let (mut lo, mut hi) = (-1.0, 1.0);
    while dphi(lo) < 0.0 {
        lo = 2.0 * lo - 1.0;
    }
    while dphi(hi) > 0.0 {
        hi = 2.0 * hi + 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dphi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * (1.0 + mid.abs()) {
            break;
        }
    }
    let t0 = 0.5 * (lo + hi);
    let peak = phi(t0);
    let mut step = 1.0;
    while phi(t0 - step) > peak - LOG_DROP {
        step *= 2.0;
    }
    let left = t0 - step;
    step = 1.0;
    while phi(t0 + step) > peak - LOG_DROP {
        step *= 2.0;
    }
    let right = t0 + step;
    let r = integrate(
        |t| (phi(t) - peak).exp(),
        left,
        right,
        QuadOptions::rel(1e-11),
    );
    (peak, r.value)
}

/// Constant making the subordination kernel integrate to one:
/// `1 / int_0^inf t^{alpha/2} e^{-t/(4 pi)} dt/t`, by quadrature.
pub fn bessel_normalization(alpha: f64) -> f64 {
    let (peak, rest) = log_time_integral(0.5 * alpha, 0.0);
    (-peak).exp() / rest
}

fn check_alpha(alpha: f64, n: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::DomainError(format!("alpha = {alpha} not in (0, {n})")));
    }
    Ok(())
}

fn kernel_with_constant(alpha: f64, s: f64, n: usize, c: f64) -> f64 {
    let (peak, rest) = log_time_integral(0.5 * (alpha - n as f64), PI * s * s);
    c * peak.exp() * rest
}

/// Bessel kernel `G_alpha(s)` on `R^n`, the function with Fourier transform
/// `(1 + |xi|^2)^{-alpha/2}`, from the subordination integral
/// `c int_0^inf t^{(alpha-n)/2} e^{-pi s^2/t - t/(4 pi)} dt/t`.
pub fn bessel_kernel(alpha: f64, s: f64, n: usize) -> Result<f64> {
    check_alpha(alpha, n)?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::DomainError(format!("kernel argument s = {s} must be > 0")));
    }
    Ok(kernel_with_constant(alpha, s, n, bessel_normalization(alpha)))
}

/// Log-log interpolation table of `G_alpha` on `[s_min, s_max]`, with direct
/// evaluation outside that range.
#[derive(Debug, Clone)]
pub struct BesselTable {
    alpha: f64,
    n: usize,
    c: f64,
    log_s0: f64,
    dlog: f64,
    log_g: Vec<f64>,
}

impl BesselTable {
    pub fn new(alpha: f64, n: usize, s_min: f64, s_max: f64, points: usize) -> Result<Self> {
        check_alpha(alpha, n)?;
        if !(s_min > 0.0 && s_max > s_min) || points < 2 {
            return Err(Error::InvalidParams("bad Bessel table range".into()));
        }
        let c = bessel_normalization(alpha);
        let log_s0 = s_min.ln();
        let dlog = (s_max.ln() - log_s0) / (points - 1) as f64;
        let log_g = (0..points)
            .map(|i| kernel_with_constant(alpha, (log_s0 + i as f64 * dlog).exp(), n, c).ln())
            .collect();
        Ok(Self {
            alpha,
            n,
            c,
            log_s0,
            dlog,
            log_g,
        })
    }

    /// Table suited to grids with spacing around `h` inside a box of
    /// diameter `diameter`: relative interpolation error below `1e-6`.
    pub fn for_range(alpha: f64, n: usize, h: f64, diameter: f64) -> Result<Self> {
        let s_min = 0.05 * h;
        let s_max = 1.01 * diameter.max(2.0 * h);
        let points = ((s_max / s_min).ln() / 2e-3).ceil() as usize + 2;
        Self::new(alpha, n, s_min, s_max, points)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, s: f64) -> f64 {
        let x = (s.ln() - self.log_s0) / self.dlog;
        let last = self.log_g.len() - 1;
        if !(x >= 0.0) || x > last as f64 {
            return kernel_with_constant(self.alpha, s, self.n, self.c);
        }
        let i = (x as usize).min(last - 1);
        let f = x - i as f64;
        (self.log_g[i] * (1.0 - f) + self.log_g[i + 1] * f).exp()
    }

    /// Mean of `G_alpha` over the ball of radius `r` about the origin.
    pub fn ball_average(&self, r: f64) -> f64 {
        let n = self.n as i32;
        let q = integrate(
            |s| kernel_with_constant(self.alpha, s, self.n, self.c) * s.powi(n - 1),
            0.0,
            r,
            QuadOptions::rel(1e-9),
        );
        self.n as f64 * q.value / r.powi(n)
    }

    /// Cell self-interaction: mean over the ball with the volume of an
    /// `h`-cube, a stand-in for the mean over the cube itself.
    pub fn cell_average(&self, h: f64) -> f64 {
        let n = self.n as f64;
        let unit_ball = PI.powf(n / 2.0) / statrs::function::gamma::gamma(n / 2.0 + 1.0);
        self.ball_average(h / unit_ball.powf(1.0 / n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_with_breaks;
    use statrs::function::gamma::gamma;

    #[test]
    fn normalization_matches_gamma_function() {
        for alpha in [0.5, 1.0, 5.0 / 3.0, 1.5, 2.5] {
            let c = bessel_normalization(alpha);
            let exact = 1.0 / ((4.0 * PI).powf(alpha / 2.0) * gamma(alpha / 2.0));
            assert!((c / exact - 1.0).abs() < 1e-9, "alpha = {alpha}");
        }
    }

    #[test]
    fn kernel_integrates_to_one() {
        for (alpha, n) in [(5.0 / 3.0, 3usize), (1.5, 4)] {
            let area = 2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0);
            let q = integrate_with_breaks(
                |s| bessel_kernel(alpha, s, n).unwrap() * s.powi(n as i32 - 1),
                &[0.0, 0.1, 1.0, 10.0, 80.0],
                QuadOptions::rel(1e-8),
            );
            let total = area * q.value;
            assert!((total - 1.0).abs() < 1e-4, "({alpha}, {n}): {total}");
        }
    }

    #[test]
    fn small_argument_slope_and_positivity() {
        for (alpha, n) in [(5.0 / 3.0, 3usize), (1.5, 4)] {
            let xs: Vec<f64> = (0..=10).map(|i| (1e-3f64).ln() + i as f64 * 0.1 * 10f64.ln()).collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|x| bessel_kernel(alpha, x.exp(), n).unwrap().ln())
                .collect();
            let xb = xs.iter().sum::<f64>() / 11.0;
            let yb = ys.iter().sum::<f64>() / 11.0;
            let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xb) * (y - yb)).sum::<f64>()
                / xs.iter().map(|x| (x - xb) * (x - xb)).sum::<f64>();
            let target = alpha - n as f64;
            assert!((slope / target - 1.0).abs() < 0.05, "{slope} vs {target}");
            for s in [1e-6, 1e-2, 1.0, 10.0, 50.0] {
                assert!(bessel_kernel(alpha, s, n).unwrap() > 0.0);
            }
        }
        assert!(bessel_kernel(3.0, 1.0, 3).is_err());
        assert!(bessel_kernel(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn alpha_two_in_three_dimensions_is_yukawa() {
        // resolvent kernel of 1 - Laplacian on R^3
        for s in [0.01, 0.1, 0.5, 1.0, 4.0] {
            let g = bessel_kernel(2.0, s, 3).unwrap();
            let exact = (-s).exp() / (4.0 * PI * s);
            assert!((g / exact - 1.0).abs() < 1e-8, "s = {s}: {g} vs {exact}");
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let t = BesselTable::for_range(1.5, 4, 0.05, 3.0).unwrap();
        for s in [0.003, 0.0371, 0.2, 1.1, 2.9, 5.0] {
            let d = bessel_kernel(1.5, s, 4).unwrap();
            assert!((t.value(s) / d - 1.0).abs() < 2e-6, "s = {s}");
        }
        let avg = t.cell_average(0.05);
        assert!(avg > t.value(0.05) && avg.is_finite());
    }
}
