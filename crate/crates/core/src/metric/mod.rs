//! The conformal metric `u^{4/(n-2)} |dx|^2`, curve lengths, dyadic probes
//! toward the singular set, finite-ray search and the completeness verdict.

mod directions;
mod estimate;
mod probe;
mod singular;

pub use directions::quasi_uniform_directions;
pub use estimate::{
    cap_integral, fubini_identity_check, sphere_integral, verify_u_estimate, FubiniReport,
    UEstimate, UEstimateOptions,
};
pub use probe::{
    admissible_directions, completeness_verdict, divergence_probe, probe_diverges, ray_finder,
    shell_infimum_bound, verify_shell_bound, CompletenessReport, ProbeProfile, RayWitness,
    ShellCheck, Verdict, VerdictOptions,
};
pub use singular::SingularSet;

use crate::error::{Error, Result};
use crate::geometry::dist;
use crate::measure::Measure;
use crate::potential::{classify_growth, newtonian_potential, GrowthClass};
use crate::quadrature::{integrate_with_breaks, QuadOptions, QuadResult};
use serde::Serialize;

/// Atoms closer than this to a curve make it inadmissible.
pub const ATOM_CLEARANCE: f64 = 1e-9;

/// Conformal factor of the metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Constant(f64),
    Newtonian(Measure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetric {
    n: usize,
    field: Field,
    singular: SingularSet,
}

impl ConformalMetric {
    pub fn newtonian(mu: Measure, singular: SingularSet) -> Result<Self> {
        if singular.n() != mu.n() && singular.n() != 0 {
            return Err(Error::DimensionMismatch {
                expected: mu.n(),
                got: singular.n(),
            });
        }
        crate::geometry::Dimension::new(mu.n())?;
        Ok(Self {
            n: mu.n(),
            field: Field::Newtonian(mu),
            singular,
        })
    }

    /// `u` identically equal to `c > 0`.
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        crate::geometry::Dimension::new(n)?;
        if !(c > 0.0) {
            return Err(Error::InvalidParams(format!("constant factor {c} must be > 0")));
        }
        Ok(Self {
            n,
            field: Field::Constant(c),
            singular: SingularSet::Empty { n },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn measure(&self) -> Option<&Measure> {
        match &self.field {
            Field::Newtonian(mu) => Some(mu),
            Field::Constant(_) => None,
        }
    }

    pub fn singular(&self) -> &SingularSet {
        &self.singular
    }

    /// Same metric with the measure (or constant) multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let field = match &self.field {
            Field::Constant(v) => Field::Constant(v * c),
            Field::Newtonian(mu) => Field::Newtonian(mu.scaled(c)?),
        };
        Ok(Self {
            n: self.n,
            field,
            singular: self.singular.clone(),
        })
    }

    pub fn u(&self, x: &[f64]) -> f64 {
        match &self.field {
            Field::Constant(c) => *c,
            Field::Newtonian(mu) => newtonian_potential(mu, x),
        }
    }

    /// Length element `u^{2/(n-2)}`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let u = self.u(x);
        match self.n {
            3 => u * u,
            4 => u,
            n => u.powf(2.0 / (n as f64 - 2.0)),
        }
    }

    fn point_on(base: &[f64], dir: &[f64], s: f64, out: &mut [f64]) {
        for ((o, b), d) in out.iter_mut().zip(base).zip(dir) {
            *o = b + s * d;
        }
    }

    /// Smallest distance from a weighted atom to `{base + s dir : s in [a, b]}`.
    pub fn atom_clearance(&self, base: &[f64], dir: &[f64], a: f64, b: f64) -> f64 {
        let Some(mu) = self.measure() else {
            return f64::INFINITY;
        };
        let mut best = f64::INFINITY;
        let mut x = vec![0.0; self.n];
        for (y, w) in mu.atoms() {
            if w == 0.0 {
                continue;
            }
            let t: f64 = y.iter().zip(base).zip(dir).map(|((yi, bi), di)| (yi - bi) * di).sum();
            Self::point_on(base, dir, t.clamp(a, b), &mut x);
            best = best.min(dist(y, &x));
        }
        best
    }

    /// Parameters in `(a, b)` where the line passes close to an atom,
    /// relative to `b - a`; at most `limit` of them, nearest first.
    fn breakpoints(&self, base: &[f64], dir: &[f64], a: f64, b: f64, limit: usize) -> Vec<f64> {
        let Some(mu) = self.measure() else {
            return Vec::new();
        };
        let reach = 0.5 * (b - a);
        let mut near: Vec<(f64, f64)> = Vec::new();
        for (y, w) in mu.atoms() {
            if w == 0.0 {
                continue;
            }
            let t: f64 = y.iter().zip(base).zip(dir).map(|((yi, bi), di)| (yi - bi) * di).sum();
            if t <= a || t >= b {
                continue;
            }
            let perp2: f64 = y
                .iter()
                .zip(base)
                .zip(dir)
                .map(|((yi, bi), di)| {
                    let e = yi - bi - t * di;
                    e * e
                })
                .sum();
            if perp2 < reach * reach {
                near.push((perp2, t));
            }
        }
        near.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
        let mut ts: Vec<f64> = near.into_iter().take(limit).map(|p| p.1).collect();
        ts.sort_by(f64::total_cmp);
        ts
    }

    /// `int_a^b u(base + s dir)^{2/(n-2)} ds` by adaptive quadrature, with
    /// breakpoints where the line passes near atoms.
    pub fn segment_length(&self, base: &[f64], dir: &[f64], a: f64, b: f64, opts: QuadOptions) -> QuadResult {
        let mut pts = vec![a];
        pts.extend(self.breakpoints(base, dir, a, b, 64));
        pts.push(b);
        let mut x = vec![0.0; self.n];
        integrate_with_breaks(
            |s| {
                Self::point_on(base, dir, s, &mut x);
                self.density(&x)
            },
            &pts,
            opts,
        )
    }

    /// Three-point Gauss estimate of the same integral, for screening.
    pub fn segment_length_coarse(&self, base: &[f64], dir: &[f64], a: f64, b: f64) -> f64 {
        const X: f64 = 0.774_596_669_241_483_4;
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut x = vec![0.0; self.n];
        let mut f = |s: f64| {
            Self::point_on(base, dir, s, &mut x);
            self.density(&x)
        };
        h * (5.0 / 9.0 * f(c - h * X) + 8.0 / 9.0 * f(c) + 5.0 / 9.0 * f(c + h * X))
    }
}

/// A piecewise smooth curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Curve {
    /// `base + s direction` for `s` running from `start` down to `end >= 0`;
    /// `end = 0` reaches the base point.
    RadialRay {
        base: Vec<f64>,
        direction: Vec<f64>,
        start: f64,
        end: f64,
    },
    /// Straight segments through the vertices, parameterized by arclength.
    Polyline { vertices: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthOptions {
    pub quad: QuadOptions,
    /// Dyadic shells examined when a curve runs into a singular point.
    pub max_shells: usize,
    /// Partial-sum multiple of the first shell that counts as divergence.
    pub divergence_budget: f64,
}

impl Default for LengthOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions::rel(1e-10),
            max_shells: 40,
            divergence_budget: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveLength {
    /// Computed length; for an infinite curve, the truncated partial sum.
    pub value: f64,
    pub infinite: bool,
    /// Lengths of dyadic shells when the curve ends on a singular point.
    pub shells: Vec<f64>,
    pub growth: Option<GrowthClass>,
    pub converged: bool,
}

/// Divergence rule for dyadic shell sequences: at least linear growth, or
/// nondecreasing recent terms with a partial sum far above the first term.
pub fn shells_diverge(lengths: &[f64], budget: f64) -> bool {
    if classify_growth(lengths).is_divergent() {
        return true;
    }
    let window = &lengths[lengths.len().saturating_sub(crate::potential::GROWTH_WINDOW)..];
    let nondecreasing = window.windows(2).all(|w| w[1] >= w[0]);
    let total: f64 = lengths.iter().sum();
    nondecreasing && lengths.first().is_some_and(|f| total > budget * f)
}

/// Sum of a convergent shell sequence plus a geometric tail fitted to its
/// last four terms.
pub fn extrapolated_sum(lengths: &[f64]) -> f64 {
    let total: f64 = lengths.iter().sum();
    let k = lengths.len();
    if k < 4 {
        return total;
    }
    let w = &lengths[k - 4..];
    if w.iter().any(|v| !(*v > 0.0)) {
        return total;
    }
    let r = (w[3] / w[0]).powf(1.0 / 3.0);
    if r >= 1.0 {
        return f64::INFINITY;
    }
    total + w[3] * r / (1.0 - r)
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let r = crate::geometry::norm(v);
    if !(r > 0.0) {
        return Err(Error::InvalidParams("direction must be nonzero".into()));
    }
    Ok(v.iter().map(|x| x / r).collect())
}

fn ray_to_point(g: &ConformalMetric, base: &[f64], dir: &[f64], start: f64, opts: &LengthOptions) -> Result<CurveLength> {
    let lo = start * 0.5f64.powi(opts.max_shells as i32);
    // the base itself may be an atom; only interior points must clear atoms
    let clearance = g.atom_clearance(base, dir, lo, start);
    if clearance < ATOM_CLEARANCE.min(0.5 * lo) {
        return Err(Error::CurveHitsAtom(clearance));
    }
    let mut shells = Vec::with_capacity(opts.max_shells);
    let mut converged = true;
    for k in 0..opts.max_shells {
        let b = start * 0.5f64.powi(k as i32);
        let r = g.segment_length(base, dir, 0.5 * b, b, opts.quad);
        converged &= r.converged;
        shells.push(r.value);
    }
    let growth = classify_growth(&shells);
    let infinite = shells_diverge(&shells, opts.divergence_budget);
    let value = if infinite {
        shells.iter().sum()
    } else {
        extrapolated_sum(&shells)
    };
    Ok(CurveLength {
        value,
        infinite: infinite || value.is_infinite(),
        shells,
        growth: Some(growth),
        converged,
    })
}

/// `L_g(c) = int u(c(t))^{2/(n-2)} |c'(t)| dt`.
pub fn curve_length(g: &ConformalMetric, c: &Curve, opts: &LengthOptions) -> Result<CurveLength> {
    match c {
        Curve::RadialRay {
            base,
            direction,
            start,
            end,
        } => {
            let dir = unit(direction)?;
            if !(*end >= 0.0 && start > end) {
                return Err(Error::InvalidParams(format!(
                    "ray needs 0 <= end < start (got {end}, {start})"
                )));
            }
            if *end == 0.0 {
                return ray_to_point(g, base, &dir, *start, opts);
            }
            let clearance = g.atom_clearance(base, &dir, *end, *start);
            if clearance < ATOM_CLEARANCE {
                return Err(Error::CurveHitsAtom(clearance));
            }
            // dyadic breakpoints keep the quadrature uniform in scale
            let mut pts = vec![*end];
            let mut s = *start;
            while s > 2.0 * end {
                s *= 0.5;
                pts.push(s);
            }
            pts.push(*start);
            pts.sort_by(f64::total_cmp);
            let mut value = 0.0;
            let mut converged = true;
            for w in pts.windows(2) {
                let r = g.segment_length(base, &dir, w[0], w[1], opts.quad);
                value += r.value;
                converged &= r.converged;
            }
            Ok(CurveLength {
                value,
                infinite: false,
                shells: Vec::new(),
                growth: None,
                converged,
            })
        }
        Curve::Polyline { vertices } => {
            if vertices.len() < 2 {
                return Ok(CurveLength {
                    value: 0.0,
                    infinite: false,
                    shells: Vec::new(),
                    growth: None,
                    converged: true,
                });
            }
            let last = vertices.len() - 1;
            let ends_on_atom = g
                .measure()
                .is_some_and(|mu| mu.distance_to_support(&vertices[last]) < ATOM_CLEARANCE);
            let mut value = 0.0;
            let mut converged = true;
            for (i, w) in vertices.windows(2).enumerate() {
                let diff: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
                let len = crate::geometry::norm(&diff);
                if len == 0.0 {
                    continue;
                }
                if i + 1 == last && ends_on_atom {
                    let back: Vec<f64> = diff.iter().map(|d| -d / len).collect();
                    let tail = ray_to_point(g, &w[1], &back, len, opts)?;
                    return Ok(CurveLength {
                        value: value + tail.value,
                        infinite: tail.infinite,
                        shells: tail.shells,
                        growth: tail.growth,
                        converged: converged && tail.converged,
                    });
                }
                let dir: Vec<f64> = diff.iter().map(|d| d / len).collect();
                let clearance = g.atom_clearance(&w[0], &dir, 0.0, len);
                if clearance < ATOM_CLEARANCE {
                    return Err(Error::CurveHitsAtom(clearance));
                }
                let r = g.segment_length(&w[0], &dir, 0.0, len, opts.quad);
                value += r.value;
                converged &= r.converged;
            }
            Ok(CurveLength {
                value,
                infinite: false,
                shells: Vec::new(),
                growth: None,
                converged,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac3() -> ConformalMetric {
        let mu = Measure::dirac(&[0.0; 3], 1.0).unwrap();
        ConformalMetric::newtonian(mu, SingularSet::Points { points: vec![vec![0.0; 3]] }).unwrap()
    }

    #[test]
    fn flat_segment_length() {
        let g = ConformalMetric::constant(3, 1.0).unwrap();
        let c = Curve::Polyline {
            vertices: vec![vec![0.0; 3], vec![3.0, 4.0, 0.0], vec![3.0, 4.0, 1.0]],
        };
        let l = curve_length(&g, &c, &LengthOptions::default()).unwrap();
        assert!((l.value - 6.0).abs() < 1e-12);
    }

    #[test]
    fn dirac_segment_and_truncated_ray() {
        let g = dirac3();
        let c = Curve::Polyline {
            vertices: vec![vec![2.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]],
        };
        let l = curve_length(&g, &c, &LengthOptions::default()).unwrap();
        assert!((l.value - 1.0 / 6.0).abs() < 1e-12);
        for eps in [0.1, 1e-3, 1e-6] {
            let ray = Curve::RadialRay {
                base: vec![0.0; 3],
                direction: vec![0.0, 0.0, 1.0],
                start: 1.0,
                end: eps,
            };
            let l = curve_length(&g, &ray, &LengthOptions::default()).unwrap();
            assert!((l.value / (1.0 / eps - 1.0) - 1.0).abs() < 1e-9, "eps = {eps}");
        }
        let full = Curve::RadialRay {
            base: vec![0.0; 3],
            direction: vec![1.0, 0.0, 0.0],
            start: 1.0,
            end: 0.0,
        };
        let l = curve_length(&g, &full, &LengthOptions::default()).unwrap();
        assert!(l.infinite);
        for (k, s) in l.shells.iter().enumerate() {
            assert!((s / 2f64.powi(k as i32) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn polyline_into_an_atom_diverges_and_through_an_atom_fails() {
        let g = dirac3();
        let into = Curve::Polyline {
            vertices: vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0; 3]],
        };
        assert!(curve_length(&g, &into, &LengthOptions::default()).unwrap().infinite);
        let through = Curve::Polyline {
            vertices: vec![vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        };
        assert!(matches!(
            curve_length(&g, &through, &LengthOptions::default()),
            Err(Error::CurveHitsAtom(_))
        ));
    }

    #[test]
    fn convergent_ray_to_a_plane() {
        // n = 3, u bounded near a flat disk piece: length to the centre is finite
        let mu = crate::measure::make_kplane_measure(2, 0.5, 200, 3).unwrap();
        let patch = crate::measure::KPlanePatch::coordinate(2, 0.5, 3).unwrap();
        let g = ConformalMetric::newtonian(mu, SingularSet::Patch { patch }).unwrap();
        let ray = Curve::RadialRay {
            base: vec![0.0; 3],
            direction: vec![0.0, 0.0, 1.0],
            start: 1.0,
            end: 0.0,
        };
        let l = curve_length(&g, &ray, &LengthOptions { max_shells: 12, ..Default::default() })
            .unwrap();
        assert!(!l.infinite && l.value.is_finite());
    }

    #[test]
    fn divergence_rule() {
        assert!(shells_diverge(&[1.0; 12], 1e3));
        let decay: Vec<f64> = (0..12).map(|k| 0.5f64.powi(k)).collect();
        assert!(!shells_diverge(&decay, 1e3));
        assert!((extrapolated_sum(&decay) - 2.0).abs() < 1e-12);
    }
}
