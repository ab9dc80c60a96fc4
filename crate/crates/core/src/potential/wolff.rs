use crate::error::{Error, Result};
use crate::measure::{Measure, RadialMass};
use serde::Serialize;

/// Number of trailing dyadic levels inspected by the growth classifier.
pub const GROWTH_WINDOW: usize = 8;

/// Log2-slope separating growing or decaying terms from flat ones.
const SLOPE_THRESHOLD: f64 = 0.15;
/// Flat terms must stay within this band around their mean.
const FLAT_BAND: (f64, f64) = (0.5, 1.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthClass {
    Bounded,
    Linear,
    Geometric,
    Inconclusive,
}

impl GrowthClass {
    pub fn is_divergent(self) -> bool {
        matches!(self, GrowthClass::Linear | GrowthClass::Geometric)
    }
}

/// Least-squares slope of `log2 t_k` against `k`; `None` if any term is not
/// strictly positive.
pub fn log2_slope(terms: &[f64]) -> Option<f64> {
    if terms.len() < 2 || terms.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return None;
    }
    let m = terms.len() as f64;
    let xbar = (m - 1.0) / 2.0;
    let ys: Vec<f64> = terms.iter().map(|t| t.log2()).collect();
    let ybar = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    Some(sxy / sxx)
}

/// Classifies the tail of a nonnegative term sequence over its last
/// `GROWTH_WINDOW` entries.
pub fn classify_growth(terms: &[f64]) -> GrowthClass {
    let window = &terms[terms.len().saturating_sub(GROWTH_WINDOW)..];
    if window.is_empty() || window.iter().all(|t| *t == 0.0) {
        return GrowthClass::Bounded;
    }
    if window.iter().any(|t| !t.is_finite()) {
        return GrowthClass::Geometric;
    }
    if *window.last().expect("nonempty") == 0.0 {
        return GrowthClass::Bounded;
    }
    let Some(beta) = log2_slope(window) else {
        return GrowthClass::Inconclusive;
    };
    if beta >= SLOPE_THRESHOLD {
        return GrowthClass::Geometric;
    }
    if beta <= -SLOPE_THRESHOLD {
        return GrowthClass::Bounded;
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    if window
        .iter()
        .all(|t| *t >= FLAT_BAND.0 * mean && *t <= FLAT_BAND.1 * mean)
    {
        GrowthClass::Linear
    } else {
        GrowthClass::Inconclusive
    }
}

/// Largest relative deviation of `sums` from their least-squares line over
/// the last `GROWTH_WINDOW` entries.
pub fn linear_fit_max_deviation(sums: &[f64]) -> f64 {
    let window = &sums[sums.len().saturating_sub(GROWTH_WINDOW)..];
    let m = window.len() as f64;
    if window.len() < 2 {
        return 0.0;
    }
    let xbar = (m - 1.0) / 2.0;
    let ybar = window.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in window.iter().enumerate() {
        let dx = i as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    window
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let fit = ybar + slope * (i as f64 - xbar);
            if *y == 0.0 {
                fit.abs()
            } else {
                ((y - fit) / y).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Dyadic terms and partial sums of the specialized Wolff potential at a
/// point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WolffProfile {
    pub center: Vec<f64>,
    pub rho: Vec<f64>,
    pub ball_mass: Vec<f64>,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub growth: GrowthClass,
    pub tail_slope: Option<f64>,
    pub linear_fit_deviation: f64,
}

impl WolffProfile {
    pub fn m_max(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn total(&self) -> f64 {
        *self.partial_sums.last().expect("profile has at least one level")
    }

    /// Tail-extrapolated sum for a convergent profile: the last four terms
    /// fix a geometric ratio, and the remaining tail is summed in closed form.
    pub fn extrapolated_total(&self) -> f64 {
        let t = &self.terms;
        let k = t.len();
        if k < 4 || t[k - 1] == 0.0 {
            return self.total();
        }
        let w = &t[k - 4..];
        if w.iter().any(|x| *x <= 0.0) {
            return self.total();
        }
        let r = (w[3] / w[0]).powf(1.0 / 3.0);
        if r >= 1.0 {
            return f64::INFINITY;
        }
        self.total() + t[k - 1] * r / (1.0 - r)
    }
}

fn term(m: f64, rho: f64, e: f64) -> f64 {
    if m == 0.0 {
        0.0
    } else {
        m.powf(e) / rho
    }
}

fn profile_from_radial(rm: &RadialMass, center: &[f64], n: usize, m_max: usize) -> WolffProfile {
    let e = 2.0 / (n as f64 - 2.0);
    let rho: Vec<f64> = (0..=m_max).map(|k| 0.5f64.powi(k as i32)).collect();
    let ball_mass: Vec<f64> = rho.iter().map(|&r| rm.mass_at(r)).collect();
    let terms: Vec<f64> = ball_mass
        .iter()
        .zip(&rho)
        .map(|(&m, &r)| term(m, r, e))
        .collect();
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let window = &terms[terms.len().saturating_sub(GROWTH_WINDOW)..];
    WolffProfile {
        center: center.to_vec(),
        growth: classify_growth(&terms),
        tail_slope: log2_slope(window),
        linear_fit_deviation: linear_fit_max_deviation(&partial_sums),
        rho,
        ball_mass,
        terms,
        partial_sums,
    }
}

/// `t_k = (mu(B(x, rho_k)) / rho_k^{n-2})^{2/(n-2)} rho_k` for
/// `rho_k = 2^{-k}`, `k = 0..=m_max`.
pub fn dyadic_wolff_profile(mu: &Measure, x: &[f64], m_max: usize) -> Result<WolffProfile> {
    if m_max < 4 {
        return Err(Error::InvalidParams(format!("m_max = {m_max} must be >= 4")));
    }
    check_point(mu, x)?;
    Ok(profile_from_radial(&mu.radial_mass(x), x, mu.n(), m_max))
}

/// Truncated specialized Wolff potential with its dyadic profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WolffValue {
    pub value: f64,
    pub r_min: f64,
    pub profile: WolffProfile,
}

impl WolffValue {
    pub fn is_divergent(&self) -> bool {
        self.profile.growth.is_divergent()
    }
}

fn check_point(mu: &Measure, x: &[f64]) -> Result<()> {
    if x.len() != mu.n() {
        return Err(Error::DimensionMismatch {
            expected: mu.n(),
            got: x.len(),
        });
    }
    Ok(())
}

fn check_rmin(r_min: f64) -> Result<()> {
    if !(r_min > 0.0 && r_min < 1.0) {
        return Err(Error::InvalidParams(format!("r_min = {r_min} not in (0, 1)")));
    }
    Ok(())
}

/// `int_{r_min}^1 m(r)^gamma r^{-e-1} dr` for the right-continuous step
/// function `m`, summed exactly between consecutive atom distances.
fn step_integral(rm: &RadialMass, r_min: f64, gamma: f64, e: f64) -> f64 {
    let anti = |r: f64| if e.abs() < 1e-12 { r.ln() } else { -r.powf(-e) / e };
    let start = rm.radii.partition_point(|&d| d <= r_min);
    let mut mass = if start == 0 { 0.0 } else { rm.cumulative[start - 1] };
    let mut lo = r_min;
    let mut total = 0.0;
    for (&d, &c) in rm.radii[start..].iter().zip(&rm.cumulative[start..]) {
        if d >= 1.0 {
            break;
        }
        if mass > 0.0 {
            total += mass.powf(gamma) * (anti(d) - anti(lo));
        }
        lo = d;
        mass = c;
    }
    if mass > 0.0 {
        total += mass.powf(gamma) * (anti(1.0) - anti(lo));
    }
    total
}

/// `int_{r_min}^1 mu(B(x, r))^{2/(n-2)} r^{-2} dr`, exact for atomic
/// measures, together with the profile down to `rho <= r_min`.
pub fn wolff_specialized(mu: &Measure, x: &[f64], r_min: f64) -> Result<WolffValue> {
    check_rmin(r_min)?;
    check_point(mu, x)?;
    let rm = mu.radial_mass(x);
    let gamma = 2.0 / (mu.n() as f64 - 2.0);
    let value = step_integral(&rm, r_min, gamma, 1.0);
    let m_max = ((1.0 / r_min).log2().ceil() as usize).max(4);
    Ok(WolffValue {
        value,
        r_min,
        profile: profile_from_radial(&rm, x, mu.n(), m_max),
    })
}

/// `int_{r_min}^1 (mu(B(x, d)) / d^{n - alpha q})^{1/(q-1)} dd/d`.
pub fn wolff_general(mu: &Measure, x: &[f64], alpha: f64, q: f64, r_min: f64) -> Result<f64> {
    let n = mu.n() as f64;
    if !(alpha > 0.0) || !(q > 1.0) || alpha * q > n {
        return Err(Error::InvalidParams(format!(
            "need alpha > 0 and 1 < q <= n/alpha (alpha = {alpha}, q = {q}, n = {n})"
        )));
    }
    check_rmin(r_min)?;
    check_point(mu, x)?;
    let gamma = 1.0 / (q - 1.0);
    let e = (n - alpha * q) * gamma;
    Ok(step_integral(&mu.radial_mass(x), r_min, gamma, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_kplane_measure, KPlanePatch};
    use proptest::prelude::*;

    fn dirac(n: usize) -> Measure {
        Measure::dirac(&vec![0.0; n], 1.0).unwrap()
    }

    #[test]
    fn dirac_closed_forms() {
        let mu = dirac(3);
        for a in [0.1, 0.25, 0.5, 0.9] {
            let x = [0.0, a, 0.0];
            for r_min in [1e-3, 0.05, 0.5 * a] {
                let w = wolff_specialized(&mu, &x, r_min).unwrap();
                assert!((w.value - (1.0 / a - 1.0)).abs() <= 1e-12 * (1.0 / a));
            }
        }
        let w = wolff_specialized(&mu, &[0.0; 3], 1e-3).unwrap();
        assert!((w.value - 999.0).abs() < 1e-9);
        assert!(w.is_divergent());
        let far = wolff_specialized(&mu, &[1.5, 0.0, 0.0], 1e-4).unwrap();
        assert_eq!(far.value, 0.0);
        assert_eq!(far.profile.growth, GrowthClass::Bounded);
        assert!(wolff_specialized(&mu, &[0.0; 3], 1.0).is_err());
    }

    #[test]
    fn general_form_examples() {
        let mu = dirac(5);
        let v = wolff_general(&mu, &[0.0; 5], 2.0, 2.0, 0.01).unwrap();
        assert!((v - 99.0).abs() < 1e-9);
        assert!(wolff_general(&mu, &[0.0; 5], 2.0, 1.0, 0.01).is_err());
        assert!(wolff_general(&mu, &[0.0; 5], 2.0, 3.0, 0.01).is_err());
        // q = n/alpha gives exponent zero and a logarithm
        let v = wolff_general(&mu, &[0.0; 5], 2.5, 2.0, 0.01).unwrap();
        assert!((v - 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dyadic_profile_examples() {
        let p = dyadic_wolff_profile(&dirac(3), &[0.0; 3], 20).unwrap();
        for k in 0..=20 {
            assert_eq!(p.terms[k], 2f64.powi(k as i32));
            assert_eq!(p.partial_sums[k], 2f64.powi(k as i32 + 1) - 1.0);
        }
        assert_eq!(p.growth, GrowthClass::Geometric);

        let seg = make_kplane_measure(1, 1.0, 1 << 16, 4).unwrap();
        let p = dyadic_wolff_profile(&seg, &[0.0; 4], 14).unwrap();
        for k in 1..=14 {
            assert!((p.terms[k] - 2.0).abs() < 1e-9, "{k}: {}", p.terms[k]);
        }
        assert_eq!(p.growth, GrowthClass::Linear);
        assert!(p.linear_fit_deviation < 0.1);

        let patch = KPlanePatch::coordinate(2, 1.0, 4).unwrap();
        let sq = crate::measure::make_kplane_graded(&patch, &[vec![0.0, 0.0]], 0.5, 1e-5)
            .unwrap();
        let p = dyadic_wolff_profile(&sq, &[0.0; 4], 14).unwrap();
        for k in 2..=14 {
            let r = p.rho[k];
            let rel = p.terms[k] / (std::f64::consts::PI * r) - 1.0;
            assert!(rel.abs() < 0.1, "k = {k}: {rel}");
        }
        assert_eq!(p.growth, GrowthClass::Bounded);
        assert!(dyadic_wolff_profile(&sq, &[0.0; 4], 3).is_err());
    }

    #[test]
    fn classifier_edges() {
        assert_eq!(classify_growth(&[0.0; 10]), GrowthClass::Bounded);
        assert_eq!(classify_growth(&[1.0, 1.0, 0.5, 0.0]), GrowthClass::Bounded);
        assert_eq!(classify_growth(&[1.0; 10]), GrowthClass::Linear);
        let zig: Vec<f64> = (0..10).map(|k| if k % 2 == 0 { 1.0 } else { 4.0 }).collect();
        assert_eq!(classify_growth(&zig), GrowthClass::Inconclusive);
        let decay: Vec<f64> = (0..10).map(|k| 0.8f64.powi(k)).collect();
        assert_eq!(classify_growth(&decay), GrowthClass::Bounded);
        let grow: Vec<f64> = (0..10).map(|k| 1.2f64.powi(k)).collect();
        assert_eq!(classify_growth(&grow), GrowthClass::Geometric);
    }

    #[test]
    fn extrapolated_total_of_geometric_tail() {
        let mu = Measure::dirac(&[0.3, 0.0, 0.0], 1.0).unwrap();
        let p = dyadic_wolff_profile(&mu, &[0.0; 3], 12).unwrap();
        // terms vanish below the atom distance, nothing to extrapolate
        assert_eq!(p.extrapolated_total(), p.total());
    }

    fn random_atomic(n: usize) -> impl Strategy<Value = (Measure, Vec<f64>)> {
        (
            proptest::collection::vec(
                (proptest::collection::vec(-0.6f64..0.6, n), 0.01f64..2.0),
                1..15,
            ),
            proptest::collection::vec(-0.6f64..0.6, n),
        )
            .prop_map(move |(atoms, x)| {
                let pts: Vec<Vec<f64>> = atoms.iter().map(|a| a.0.clone()).collect();
                let ws: Vec<f64> = atoms.iter().map(|a| a.1).collect();
                (Measure::atomic(n, &pts, &ws).unwrap(), x)
            })
    }

    proptest! {
        #[test]
        fn sandwich_and_consistency(
            (mu, x) in (3usize..6).prop_flat_map(random_atomic),
            m in 4usize..16,
        ) {
            let n = mu.n() as f64;
            let p = dyadic_wolff_profile(&mu, &x, m).unwrap();
            let rm = 0.5f64.powi(m as i32);
            let w = wolff_specialized(&mu, &x, rm).unwrap().value;
            let lower: f64 = 0.5 * p.terms[1..].iter().sum::<f64>();
            let upper: f64 = p.terms.iter().sum();
            let tol = 1e-8 * (1.0 + upper);
            prop_assert!(lower <= w + tol);
            prop_assert!(w <= upper + tol);
            prop_assert!(w <= 4.0 * upper + tol);
            let g = wolff_general(&mu, &x, 1.0 + 2.0 / n, n / 2.0, rm).unwrap();
            prop_assert!((g - w).abs() <= 1e-10 * w.abs().max(1e-300));
            for s in p.partial_sums.windows(2) {
                prop_assert!(s[0] <= s[1]);
            }
        }

        #[test]
        fn scaling_homogeneity(
            (mu, x) in (3usize..6).prop_flat_map(random_atomic),
            c in 0.1f64..10.0,
        ) {
            let e = 2.0 / (mu.n() as f64 - 2.0);
            let a = dyadic_wolff_profile(&mu, &x, 12).unwrap();
            let b = dyadic_wolff_profile(&mu.scaled(c).unwrap(), &x, 12).unwrap();
            for (ta, tb) in a.terms.iter().zip(&b.terms) {
                prop_assert!((tb - c.powf(e) * ta).abs() <= 1e-12 * tb.abs().max(1e-300));
            }
            prop_assert_eq!(a.growth, b.growth);
            let gq = 1.5;
            let ga = wolff_general(&mu, &x, 1.0, gq, 1e-3).unwrap();
            let gb = wolff_general(&mu.scaled(c).unwrap(), &x, 1.0, gq, 1e-3).unwrap();
            prop_assert!((gb - c.powf(1.0 / (gq - 1.0)) * ga).abs() <= 1e-12 * gb.abs().max(1e-300));
        }
    }
}
