//! Finite Radon measures represented by weighted atoms.
//!
//! Continuous families (pieces of k-planes, self-similar Cantor products) are
//! discretized into atoms at cell centres, and every downstream quantity only
//! ever asks for closed-ball masses `mu(B(x, r))`. Each measure carries the
//! diameter of its finest cell so callers can bound the discretization error
//! of a ball mass by `total_mass * cell_diameter / r`.

use crate::error::{Error, Result};
use crate::geometry::{dist, norm};
use serde::Serialize;

/// How a measure was produced; informational, ball masses always come from
/// the atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MeasureKind {
    Atomic,
    KPlanePatch {
        k: usize,
        side: f64,
        resolution: usize,
        graded: bool,
    },
    CantorProduct {
        ratio: f64,
        depth: usize,
        k: usize,
    },
}

/// An axis-aligned k-cube `origin + sum t_i frame_i`, `|t_i| <= side/2`,
/// sitting inside `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPlanePatch {
    pub origin: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    pub side: f64,
}

impl KPlanePatch {
    /// Patch centred at the origin spanned by the first `k` coordinate axes.
    pub fn coordinate(k: usize, side: f64, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParams(format!(
                "k-plane dimension {k} must lie in 1..={n}"
            )));
        }
        if !(side > 0.0) {
            return Err(Error::InvalidParams("patch side must be positive".into()));
        }
        let frame = (0..k)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        Ok(Self {
            origin: vec![0.0; n],
            frame,
            side,
        })
    }

    pub fn k(&self) -> usize {
        self.frame.len()
    }

    pub fn n(&self) -> usize {
        self.origin.len()
    }

    pub fn embed(&self, t: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (ti, f) in t.iter().zip(&self.frame) {
            for (xj, fj) in x.iter_mut().zip(f) {
                *xj += ti * fj;
            }
        }
        x
    }

    /// In-plane coordinates of the orthogonal projection of `x`.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        self.frame
            .iter()
            .map(|f| {
                f.iter()
                    .zip(x.iter().zip(&self.origin))
                    .map(|(fj, (xj, oj))| fj * (xj - oj))
                    .sum()
            })
            .collect()
    }

    /// Euclidean distance from `x` to the closed patch.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let half = 0.5 * self.side;
        let t: Vec<f64> = self
            .coordinates(x)
            .into_iter()
            .map(|c| c.clamp(-half, half))
            .collect();
        dist(x, &self.embed(&t))
    }

    pub fn transformed(&self, shift: &[f64], scale: f64) -> Self {
        Self {
            origin: self
                .origin
                .iter()
                .zip(shift)
                .map(|(o, s)| (o + s) * scale)
                .collect(),
            frame: self.frame.clone(),
            side: self.side * scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    n: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    kind: MeasureKind,
    cell_diameter: f64,
    total_mass: f64,
    support_radius: f64,
}

impl Measure {
    /// Builds an atomic measure from points and nonnegative weights.
    pub fn atomic(n: usize, points: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidParams(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let mut flat = Vec::with_capacity(points.len() * n);
        for p in points {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(n, flat, weights.to_vec(), MeasureKind::Atomic, 0.0)
    }

    pub fn dirac(center: &[f64], weight: f64) -> Result<Self> {
        Self::atomic(center.len(), &[center.to_vec()], &[weight])
    }

    pub fn zero(n: usize) -> Self {
        Self::from_flat(n, Vec::new(), Vec::new(), MeasureKind::Atomic, 0.0)
            .expect("empty measure is valid")
    }

    fn from_flat(
        n: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
        kind: MeasureKind,
        cell_diameter: f64,
    ) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParams("weights must be finite and >= 0".into()));
        }
        if points.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("atom coordinates must be finite".into()));
        }
        let total_mass = weights.iter().sum();
        let support_radius = points
            .chunks(n.max(1))
            .zip(&weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, _)| norm(p))
            .fold(0.0, f64::max);
        Ok(Self {
            n,
            points,
            weights,
            kind,
            cell_diameter,
            total_mass,
            support_radius,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks(self.n).zip(self.weights.iter().copied())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Radius of the smallest origin-centred ball containing the support.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn cell_diameter(&self) -> f64 {
        self.cell_diameter
    }

    /// Discretization error bound for a ball mass at radius `r`.
    pub fn ball_mass_error_bound(&self, r: f64) -> f64 {
        if self.cell_diameter == 0.0 {
            0.0
        } else if r <= 0.0 {
            self.total_mass
        } else {
            (self.total_mass * self.cell_diameter / r).min(self.total_mass)
        }
    }

    /// `mu(B(x, r))` for the closed ball, exact at the atom level.
    pub fn ball_mass(&self, x: &[f64], r: f64) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        if r < 0.0 {
            return 0.0;
        }
        let r2 = r * r;
        let mut m = 0.0;
        for (p, w) in self.atoms() {
            let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= r2 {
                m += w;
            }
        }
        m
    }

    /// Sorted distances from `x`, for repeated ball-mass queries.
    pub fn radial_mass(&self, x: &[f64]) -> RadialMass {
        RadialMass::new(self, x)
    }

    /// Distance from `x` to the nearest atom with positive weight.
    pub fn distance_to_support(&self, x: &[f64]) -> f64 {
        self.atoms()
            .filter(|(_, w)| *w > 0.0)
            .map(|(p, _)| dist(p, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// `c * mu`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParams(format!("scale factor {c} must be >= 0")));
        }
        Self::from_flat(
            self.n,
            self.points.clone(),
            self.weights.iter().map(|w| w * c).collect(),
            self.kind.clone(),
            self.cell_diameter,
        )
    }

    /// Rescales to unit total mass.
    pub fn normalize(&self) -> Result<Self> {
        if self.total_mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        if self.total_mass == 1.0 {
            return Ok(self.clone());
        }
        self.scaled(1.0 / self.total_mass)
    }

    /// Pushforward under `x -> (x + shift) * scale`; masses are unchanged.
    pub fn transformed(&self, shift: &[f64], scale: f64) -> Self {
        let points = self
            .points
            .chunks(self.n)
            .flat_map(|p| p.iter().zip(shift).map(|(a, s)| (a + s) * scale).collect::<Vec<_>>())
            .collect();
        let kind = match &self.kind {
            MeasureKind::KPlanePatch {
                k,
                side,
                resolution,
                graded,
            } => MeasureKind::KPlanePatch {
                k: *k,
                side: side * scale,
                resolution: *resolution,
                graded: *graded,
            },
            other => other.clone(),
        };
        Self::from_flat(
            self.n,
            points,
            self.weights.clone(),
            kind,
            self.cell_diameter * scale,
        )
        .expect("transform keeps weights valid")
    }

    /// Sum of two measures on the same space.
    pub fn merged(&self, other: &Measure) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        Self::from_flat(
            self.n,
            points,
            weights,
            MeasureKind::Atomic,
            self.cell_diameter.max(other.cell_diameter),
        )
    }
}

/// Cumulative mass as a function of distance from a fixed centre.
#[derive(Debug, Clone)]
pub struct RadialMass {
    /// Distinct atom distances in increasing order.
    pub radii: Vec<f64>,
    /// `cumulative[i]` = mass within distance `radii[i]` (closed).
    pub cumulative: Vec<f64>,
}

impl RadialMass {
    fn new(mu: &Measure, x: &[f64]) -> Self {
        let mut pairs: Vec<(f64, f64)> = mu
            .atoms()
            .filter(|(_, w)| *w > 0.0)
            .map(|(p, w)| (dist(p, x), w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut radii: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut cumulative: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut acc = 0.0;
        for (d, w) in pairs {
            acc += w;
            if radii.last() == Some(&d) {
                *cumulative.last_mut().expect("paired with radii") = acc;
            } else {
                radii.push(d);
                cumulative.push(acc);
            }
        }
        Self { radii, cumulative }
    }

    pub fn mass_at(&self, r: f64) -> f64 {
        let idx = self.radii.partition_point(|&d| d <= r);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }
}

/// Uniform cell-centred discretization of a k-cube of side `side` centred at
/// the origin in the first `k` coordinates of `R^n`; each of the
/// `resolution^k` atoms carries the cell volume.
pub fn make_kplane_measure(k: usize, side: f64, resolution: usize, n: usize) -> Result<Measure> {
    if k > n {
        return Err(Error::InvalidDimension(k));
    }
    if k == 0 || resolution < 2 || !(side > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need k >= 1, resolution >= 2, side > 0 (got {k}, {resolution}, {side})"
        )));
    }
    let count = (resolution as f64).powi(k as i32);
    if count > 4.0e6 {
        return Err(Error::InvalidParams(format!(
            "{count} atoms exceed the uniform-grid budget"
        )));
    }
    let h = side / resolution as f64;
    let w = h.powi(k as i32);
    let total = count as usize;
    let mut points = Vec::with_capacity(total * n);
    let mut idx = vec![0usize; k];
    for _ in 0..total {
        for a in 0..n {
            points.push(if a < k {
                -0.5 * side + (idx[a] as f64 + 0.5) * h
            } else {
                0.0
            });
        }
        for a in 0..k {
            idx[a] += 1;
            if idx[a] < resolution {
                break;
            }
            idx[a] = 0;
        }
    }
    Measure::from_flat(
        n,
        points,
        vec![w; total],
        MeasureKind::KPlanePatch {
            k,
            side,
            resolution,
            graded: false,
        },
        h * (k as f64).sqrt(),
    )
}

/// k-volume measure on a patch, discretized by dyadic cells that shrink
/// towards the `foci` (given in patch coordinates): a cell of side `a` is
/// split while `a > min_side` and `a sqrt(k) > grading * dist(cell, focus)`.
/// Around each focus the mesh is self-similar under dyadic scaling, so
/// ball-mass profiles centred there are resolved uniformly across scales
/// down to `min_side`.
pub fn make_kplane_graded(
    patch: &KPlanePatch,
    foci: &[Vec<f64>],
    grading: f64,
    min_side: f64,
) -> Result<Measure> {
    let k = patch.k();
    let n = patch.n();
    if !(grading > 0.0) || !(min_side > 0.0) {
        return Err(Error::InvalidParams("grading and min_side must be positive".into()));
    }
    for f in foci {
        if f.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: f.len(),
            });
        }
    }
    let half = 0.5 * patch.side;
    let mut stack = vec![(vec![-half; k], patch.side)];
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut finest = patch.side;
    let sqrt_k = (k as f64).sqrt();
    while let Some((lo, a)) = stack.pop() {
        let d = foci
            .iter()
            .map(|f| {
                f.iter()
                    .zip(&lo)
                    .map(|(fi, li)| {
                        let e = (li - fi).max(fi - (li + a)).max(0.0);
                        e * e
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        if a > min_side && a * sqrt_k > grading * d {
            let h = 0.5 * a;
            for mask in 0..(1usize << k) {
                let child: Vec<f64> = (0..k)
                    .map(|i| lo[i] + if mask >> i & 1 == 1 { h } else { 0.0 })
                    .collect();
                stack.push((child, h));
            }
            if points.len() / n.max(1) + stack.len() > 3_000_000 {
                return Err(Error::InvalidParams("graded mesh exceeds atom budget".into()));
            }
        } else {
            let center: Vec<f64> = lo.iter().map(|l| l + 0.5 * a).collect();
            points.extend(patch.embed(&center));
            weights.push(a.powi(k as i32));
            finest = finest.min(a);
        }
    }
    // Deterministic atom order independent of the traversal.
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        points[i * n..(i + 1) * n]
            .iter()
            .zip(&points[j * n..(j + 1) * n])
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sorted_points = order
        .iter()
        .flat_map(|&i| points[i * n..(i + 1) * n].to_vec())
        .collect();
    let sorted_weights = order.iter().map(|&i| weights[i]).collect();
    Measure::from_flat(
        n,
        sorted_points,
        sorted_weights,
        MeasureKind::KPlanePatch {
            k,
            side: patch.side,
            resolution: (patch.side / finest).round() as usize,
            graded: true,
        },
        finest * sqrt_k,
    )
}

/// Left endpoints of the depth-`depth` intervals of the middle-gap Cantor
/// construction on [0, 1] with ratio `ratio`.
pub fn cantor_left_endpoints(ratio: f64, depth: usize) -> Vec<f64> {
    let mut lefts = vec![0.0];
    let mut len = 1.0;
    for _ in 0..depth {
        let child = ratio * len;
        lefts = lefts
            .iter()
            .flat_map(|&a| [a, a + len - child])
            .collect();
        len = child;
    }
    lefts
}

/// Self-similar equal-split measure on the k-fold product of the Cantor set
/// with ratio `ratio`, placed in `[0,1]^k` along the first `k` axes of
/// `R^n`. Atoms sit at the centres of the depth-`depth` cubes, each with
/// mass `2^{-depth k}`.
pub fn make_cantor_measure(ratio: f64, depth: usize, k: usize, n: usize) -> Result<Measure> {
    if !(ratio > 0.0 && ratio <= 0.5) {
        return Err(Error::InvalidParams(format!("Cantor ratio {ratio} not in (0, 1/2]")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidDimension(k));
    }
    if depth * k > 22 {
        return Err(Error::InvalidParams(format!(
            "2^{} atoms exceed the Cantor budget",
            depth * k
        )));
    }
    let len = ratio.powi(depth as i32);
    let centres: Vec<f64> = cantor_left_endpoints(ratio, depth)
        .into_iter()
        .map(|a| a + 0.5 * len)
        .collect();
    let per_axis = centres.len();
    let total = per_axis.pow(k as u32);
    let mut points = Vec::with_capacity(total * n);
    let mut idx = vec![0usize; k];
    for _ in 0..total {
        for a in 0..n {
            points.push(if a < k { centres[idx[a]] } else { 0.0 });
        }
        for a in 0..k {
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    let w = 0.5f64.powi((depth * k) as i32);
    Measure::from_flat(
        n,
        points,
        vec![w; total],
        MeasureKind::CantorProduct { ratio, depth, k },
        len * (k as f64).sqrt(),
    )
}

/// Mass-law exponent of the Cantor product: `k log 2 / log(1/ratio)`.
pub fn cantor_dimension(ratio: f64, k: usize) -> f64 {
    k as f64 * 2f64.ln() / (1.0 / ratio).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dirac_ball_mass_is_closed() {
        let mu = Measure::dirac(&[0.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(mu.ball_mass(&[0.0; 3], 0.3), 1.0);
        assert_eq!(mu.ball_mass(&[1.0, 0.0, 0.0], 1.0), 1.0);
        assert_eq!(mu.ball_mass(&[1.0, 0.0, 0.0], 0.999), 0.0);
    }

    #[test]
    fn cantor_mass_law_matches_interval_enumeration() {
        let mu = make_cantor_measure(1.0 / 3.0, 10, 1, 1).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        // oracle: count depth-10 intervals inside [0, 3^-j]
        let lefts = cantor_left_endpoints(1.0 / 3.0, 10);
        let len = 3f64.powi(-10);
        for j in 0..=10 {
            let r = 3f64.powi(-(j as i32));
            let inside = lefts.iter().filter(|&&a| a + len <= r + 1e-15).count();
            let oracle = inside as f64 / lefts.len() as f64;
            assert_eq!(oracle, 0.5f64.powi(j as i32));
            assert_eq!(mu.ball_mass(&[0.0], r), oracle, "j = {j}");
        }
    }

    #[test]
    fn kplane_segment_and_disk_masses() {
        let seg = make_kplane_measure(1, 1.0, 1000, 3).unwrap();
        assert!((seg.total_mass() - 1.0).abs() < 1e-12);
        // exact arclength of the segment inside the ball is 2r
        assert!((seg.ball_mass(&[0.0; 3], 0.25) - 0.5).abs() < 1e-9);
        let sq = make_kplane_measure(2, 1.0, 800, 3).unwrap();
        let m = sq.ball_mass(&[0.0; 3], 0.1);
        let disk = std::f64::consts::PI * 0.01;
        assert!((m - disk).abs() <= sq.ball_mass_error_bound(0.1), "{m} vs {disk}");
        assert!((m - disk).abs() / disk < 0.02);
        assert_eq!(sq.ball_mass(&[0.0; 3], 0.0), 0.0);
        assert!(matches!(
            make_kplane_measure(4, 1.0, 4, 3),
            Err(Error::InvalidDimension(4))
        ));
    }

    #[test]
    fn graded_patch_keeps_total_volume() {
        let patch = KPlanePatch::coordinate(2, 0.5, 4).unwrap();
        let mu = make_kplane_graded(&patch, &[vec![0.0, 0.0]], 1.0, 1.0 / 4096.0).unwrap();
        assert!((mu.total_mass() - 0.25).abs() < 1e-12);
        // mass law at the focus: ball of radius r ~ pi r^2
        for r in [0.1, 0.01, 0.001] {
            let m = mu.ball_mass(&[0.0; 4], r);
            let disk = std::f64::consts::PI * r * r;
            assert!((m / disk - 1.0).abs() < 0.35, "r={r}: {m} vs {disk}");
        }
        assert!(mu.len() < 5000, "{}", mu.len());
    }

    #[test]
    fn normalize_examples() {
        let mu = Measure::atomic(1, &[vec![0.0], vec![1.0]], &[2.0, 2.0]).unwrap();
        let nu = mu.normalize().unwrap();
        assert_eq!(nu.weights(), &[0.5, 0.5]);
        assert_eq!(nu.normalize().unwrap(), nu);
        assert_eq!(Measure::zero(3).normalize(), Err(Error::ZeroMass));

        let c = make_cantor_measure(0.25, 6, 1, 2).unwrap().scaled(3.0).unwrap();
        assert!((c.total_mass() - 3.0).abs() < 1e-12);
        let cn = c.normalize().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = [rng.gen_range(-0.2..1.2), rng.gen_range(-0.1..0.1)];
            let r = rng.gen_range(0.0..0.8);
            let a = cn.ball_mass(&x, r);
            let b = c.ball_mass(&x, r) / 3.0;
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_mass_agrees_with_direct_queries() {
        let mu = make_cantor_measure(1.0 / 3.0, 5, 2, 3).unwrap();
        let x = [0.4, 0.1, 0.05];
        let rm = mu.radial_mass(&x);
        for r in [0.0, 0.05, 0.1, 0.33, 0.7, 2.0] {
            assert!((rm.mass_at(r) - mu.ball_mass(&x, r)).abs() < 1e-12);
        }
    }

    #[test]
    fn kplane_distance() {
        let p = KPlanePatch::coordinate(2, 1.0, 3).unwrap();
        assert!((p.distance(&[0.2, 0.1, 0.3]) - 0.3).abs() < 1e-15);
        assert!((p.distance(&[1.5, 0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    fn atomic_strategy() -> impl Strategy<Value = Measure> {
        proptest::collection::vec(
            (proptest::collection::vec(-1.0f64..1.0, 3), 0.0f64..2.0),
            1..12,
        )
        .prop_map(|atoms| {
            let pts: Vec<Vec<f64>> = atoms.iter().map(|a| a.0.clone()).collect();
            let ws: Vec<f64> = atoms.iter().map(|a| a.1).collect();
            Measure::atomic(3, &pts, &ws).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ball_mass_monotone_bounded_and_saturating(
            mu in atomic_strategy(),
            x in proptest::collection::vec(-1.0f64..1.0, 3),
            r1 in 0.0f64..2.0,
            r2 in 0.0f64..2.0,
        ) {
            let (a, b) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(mu.ball_mass(&x, a) <= mu.ball_mass(&x, b));
            prop_assert!(mu.ball_mass(&x, b) <= mu.total_mass() + 1e-12);
            let full = norm(&x) + mu.support_radius();
            prop_assert!((mu.ball_mass(&x, full) - mu.total_mass()).abs() < 1e-12);
            let sum: f64 = mu.weights().iter().sum();
            prop_assert!((sum - mu.total_mass()).abs() < 1e-12);
        }

        #[test]
        fn merge_is_additive_and_scaling_linear(
            a in atomic_strategy(),
            b in atomic_strategy(),
            x in proptest::collection::vec(-1.0f64..1.0, 3),
            r in 0.0f64..2.0,
            c in 0.1f64..10.0,
        ) {
            let m = a.merged(&b).unwrap();
            let lhs = m.ball_mass(&x, r);
            let rhs = a.ball_mass(&x, r) + b.ball_mass(&x, r);
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let s = a.scaled(c).unwrap();
            prop_assert!((s.ball_mass(&x, r) - c * a.ball_mass(&x, r)).abs() < 1e-12 * (1.0 + c));
        }
    }
}
