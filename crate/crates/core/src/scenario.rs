//! Scenario files: a singular set, a candidate measure on it and the
//! resolution knobs, normalized so the set sits inside `B(0, 1/2)`.

use crate::capacity::{EvaluationSet, MAX_SPACING};
use crate::error::{Error, Result};
use crate::geometry::{dist, norm};
use crate::measure::{
    cantor_dimension, cantor_left_endpoints, make_cantor_measure, make_kplane_graded, KPlanePatch,
    Measure,
};
use crate::metric::SingularSet;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Largest Cantor depth times `k`; keeps atom counts near `4e6`.
const MAX_CANTOR_LEVELS: usize = 22;
/// Probed samples per scenario; the first designated samples are probed.
pub const PROBE_SAMPLES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SingularSpec {
    Point {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<Vec<f64>>,
    },
    FiniteSet {
        points: Vec<Vec<f64>>,
    },
    Kplane {
        k: usize,
        #[serde(default = "default_side")]
        side: f64,
    },
    Cantor {
        ratio: f64,
        /// Defaults to the deepest level still resolved by the dyadic profile.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<usize>,
        #[serde(default = "one")]
        k: usize,
    },
}

fn default_side() -> f64 {
    0.5
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Unit mass at the point, or equal masses on a finite set.
    Dirac,
    Arclength,
    Area,
    CantorNatural,
    /// Atoms given in the same coordinates as the singular set.
    Custom {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolution {
    pub m_max: usize,
    /// Defaults to `2^{-m_max}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    pub grid_h: f64,
    pub n_omega: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            m_max: 16,
            r_min: None,
            grid_h: 0.1,
            n_omega: 1000,
        }
    }
}

/// The scenario file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    pub singular: SingularSpec,
    /// Defaults to the natural measure of the set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub resolution: Resolution,
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub m_max: Option<usize>,
    pub r_min: Option<f64>,
    pub grid_h: Option<f64>,
    pub n_omega: Option<usize>,
    pub seed: Option<u64>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::ConfigInvalid(format!("{field}: {msg}"))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.n {
            self.n = n;
        }
        if let Some(m) = o.m_max {
            self.resolution.m_max = m;
        }
        if let Some(r) = o.r_min {
            self.resolution.r_min = Some(r);
        }
        if let Some(h) = o.grid_h {
            self.resolution.grid_h = h;
        }
        if let Some(c) = o.n_omega {
            self.resolution.n_omega = c;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
    }

    pub fn r_min(&self) -> f64 {
        self.resolution
            .r_min
            .unwrap_or_else(|| 0.5f64.powi(self.resolution.m_max as i32))
    }

    fn natural_measure(&self) -> MeasureSpec {
        match &self.singular {
            SingularSpec::Point { .. } | SingularSpec::FiniteSet { .. } => MeasureSpec::Dirac,
            SingularSpec::Kplane { k: 1, .. } => MeasureSpec::Arclength,
            SingularSpec::Kplane { .. } => MeasureSpec::Area,
            SingularSpec::Cantor { .. } => MeasureSpec::CantorNatural,
        }
    }

    pub fn measure_spec(&self) -> MeasureSpec {
        self.measure.clone().unwrap_or_else(|| self.natural_measure())
    }

    fn cantor_depth(&self, ratio: f64, depth: Option<usize>, k: usize) -> usize {
        depth.unwrap_or_else(|| {
            // deepest level whose cells are no smaller than 2^{-(m_max + 4)}
            let levels = (self.resolution.m_max + 4) as f64 * 2f64.ln() / (1.0 / ratio).ln();
            ((levels + 1e-9).floor() as usize).min(MAX_CANTOR_LEVELS / k).max(1)
        })
    }

    /// Field-level checks; every failure is `ConfigInvalid`.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if !(3..=12).contains(&n) {
            return Err(invalid("n", format!("{n} not in 3..=12")));
        }
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must be non-empty"));
        }
        let r = &self.resolution;
        if r.m_max < 4 {
            return Err(invalid("resolution.m_max", format!("{} must be >= 4", r.m_max)));
        }
        if r.m_max > 40 {
            return Err(invalid("resolution.m_max", format!("{} must be <= 40", r.m_max)));
        }
        let r_min = self.r_min();
        if !(r_min > 0.0 && r_min < 1.0) {
            return Err(invalid("resolution.r_min", format!("{r_min} not in (0, 1)")));
        }
        if !(r.grid_h > 0.0 && r.grid_h <= MAX_SPACING) {
            return Err(invalid("resolution.grid_h", format!("{} not in (0, {MAX_SPACING}]", r.grid_h)));
        }
        if r.n_omega == 0 {
            return Err(invalid("resolution.n_omega", "must be positive"));
        }
        let check_point = |field: &str, p: &[f64]| -> Result<()> {
            if p.len() != n {
                return Err(invalid(field, format!("has {} coordinates, expected {n}", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(invalid(field, "coordinates must be finite"));
            }
            Ok(())
        };
        match &self.singular {
            SingularSpec::Point { at } => {
                if let Some(p) = at {
                    check_point("singular.at", p)?;
                }
            }
            SingularSpec::FiniteSet { points } => {
                if points.is_empty() {
                    return Err(invalid("singular.points", "must be non-empty"));
                }
                for (i, p) in points.iter().enumerate() {
                    check_point(&format!("singular.points[{i}]"), p)?;
                }
                for i in 0..points.len() {
                    for j in 0..i {
                        if dist(&points[i], &points[j]) == 0.0 {
                            return Err(invalid("singular.points", format!("entries {j} and {i} coincide")));
                        }
                    }
                }
            }
            SingularSpec::Kplane { k, side } => {
                if *k == 0 || *k > n {
                    return Err(invalid("singular.k", format!("{k} not in 1..={n}")));
                }
                if *k == n {
                    return Err(invalid("singular.k", format!("{k} = n leaves no transverse directions")));
                }
                if !(*side > 0.0 && side.is_finite()) {
                    return Err(invalid("singular.side", format!("{side} must be positive")));
                }
            }
            SingularSpec::Cantor { ratio, depth, k } => {
                if !(*ratio > 0.0 && *ratio <= 0.5) {
                    return Err(invalid("singular.ratio", format!("{ratio} not in (0, 1/2]")));
                }
                if *k == 0 || *k >= n {
                    return Err(invalid("singular.k", format!("{k} not in 1..{n}")));
                }
                let d = self.cantor_depth(*ratio, *depth, *k);
                if d == 0 || d * k > MAX_CANTOR_LEVELS {
                    return Err(invalid(
                        "singular.depth",
                        format!("depth {d} with k = {k} exceeds {MAX_CANTOR_LEVELS} levels"),
                    ));
                }
            }
        }
        let measure = self.measure_spec();
        let pairing_ok = matches!(
            (&self.singular, &measure),
            (_, MeasureSpec::Custom { .. })
                | (SingularSpec::Point { .. } | SingularSpec::FiniteSet { .. }, MeasureSpec::Dirac)
                | (SingularSpec::Kplane { k: 1, .. }, MeasureSpec::Arclength)
                | (SingularSpec::Cantor { .. }, MeasureSpec::CantorNatural)
        ) || matches!((&self.singular, &measure), (SingularSpec::Kplane { k, .. }, MeasureSpec::Area) if *k >= 2);
        if !pairing_ok {
            return Err(invalid(
                "measure.kind",
                format!("{} is not supported on a {} set", measure_name(&measure), set_name(&self.singular)),
            ));
        }
        if let MeasureSpec::Custom { points, weights } = &measure {
            if points.len() != weights.len() {
                return Err(invalid(
                    "measure.weights",
                    format!("{} weights for {} points", weights.len(), points.len()),
                ));
            }
            for (i, p) in points.iter().enumerate() {
                check_point(&format!("measure.points[{i}]"), p)?;
            }
            if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
                return Err(invalid("measure.weights", format!("{w} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Validates, builds the set and the measure, and rescales into
    /// `B(0, 1/2)`.
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        Scenario::new(self.clone())
    }
}

fn measure_name(m: &MeasureSpec) -> &'static str {
    match m {
        MeasureSpec::Dirac => "dirac",
        MeasureSpec::Arclength => "arclength",
        MeasureSpec::Area => "area",
        MeasureSpec::CantorNatural => "cantor-natural",
        MeasureSpec::Custom { .. } => "custom",
    }
}

fn set_name(s: &SingularSpec) -> &'static str {
    match s {
        SingularSpec::Point { .. } => "point",
        SingularSpec::FiniteSet { .. } => "finite-set",
        SingularSpec::Kplane { .. } => "kplane",
        SingularSpec::Cantor { .. } => "cantor",
    }
}

/// A validated scenario in normalized coordinates.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub singular: SingularSet,
    /// Normalized to unit mass unless the scenario's measure is empty.
    pub measure: Measure,
    /// Designated samples of the set, probe samples first; `spacing` is
    /// their covering radius of the set.
    pub samples: EvaluationSet,
    /// Raw coordinates map to normalized ones by `x -> (x + shift) * scale`.
    pub shift: Vec<f64>,
    pub scale: f64,
    /// Hausdorff dimension of the set.
    pub dimension: f64,
    pub measure_id: String,
}

impl Scenario {
    fn new(config: ScenarioConfig) -> Result<Self> {
        let n = config.n;
        let m_max = config.resolution.m_max;
        let min_side = 0.5f64.powi(m_max as i32 + 4);
        // raw set, its centre and radius, and raw designated samples
        let (raw_set, center, radius, raw_samples, raw_spacing, dimension) = match &config.singular {
            SingularSpec::Point { at } => {
                let p = at.clone().unwrap_or_else(|| vec![0.0; n]);
                (
                    SingularSet::Points { points: vec![p.clone()] },
                    p.clone(),
                    0.0,
                    vec![p],
                    0.0,
                    0.0,
                )
            }
            SingularSpec::FiniteSet { points } => {
                let center = box_center(points);
                let radius = points.iter().map(|p| dist(p, &center)).fold(0.0, f64::max);
                (
                    SingularSet::Points { points: points.clone() },
                    center,
                    radius,
                    points.clone(),
                    0.0,
                    0.0,
                )
            }
            SingularSpec::Kplane { k, side } => {
                let patch = KPlanePatch::coordinate(*k, *side, n)?;
                let (coords, spacing) = kplane_samples(*k, *side);
                let samples = coords.iter().map(|t| patch.embed(t)).collect();
                (
                    SingularSet::Patch { patch },
                    vec![0.0; n],
                    0.5 * side * (*k as f64).sqrt(),
                    samples,
                    spacing,
                    *k as f64,
                )
            }
            SingularSpec::Cantor { ratio, depth, k } => {
                let d = config.cantor_depth(*ratio, *depth, *k);
                let set = SingularSet::cantor(n, *ratio, d, *k)?;
                let mut center = vec![0.0; n];
                center[..*k].iter_mut().for_each(|c| *c = 0.5);
                let (samples, spacing) = cantor_samples(*ratio, *k, n);
                (
                    set,
                    center,
                    0.5 * (*k as f64).sqrt(),
                    samples,
                    spacing,
                    cantor_dimension(*ratio, *k),
                )
            }
        };
        let shift: Vec<f64> = center.iter().map(|c| -c).collect();
        let scale = if radius > 0.5 { 0.5 / radius } else { 1.0 };
        let singular = raw_set.transformed(&shift, scale);
        let map = |p: &[f64]| -> Vec<f64> { p.iter().zip(&shift).map(|(a, s)| (a + s) * scale).collect() };
        let samples: Vec<Vec<f64>> = raw_samples.iter().map(|p| map(p)).collect();
        let samples = EvaluationSet::new(samples, raw_spacing * scale)?;

        let spec = config.measure_spec();
        let raw_measure = match (&spec, &config.singular) {
            (MeasureSpec::Custom { points, weights }, _) => {
                for (i, p) in points.iter().enumerate() {
                    let d = raw_set.distance(p);
                    if d > 1e-9 {
                        return Err(invalid(
                            &format!("measure.points[{i}]"),
                            format!("lies {d:e} away from the singular set"),
                        ));
                    }
                }
                if points.is_empty() {
                    Measure::zero(n)
                } else {
                    Measure::atomic(n, points, weights)?
                }
            }
            (MeasureSpec::Dirac, SingularSpec::Point { .. } | SingularSpec::FiniteSet { .. }) => {
                let pts = match &raw_set {
                    SingularSet::Points { points } => points.clone(),
                    _ => unreachable!("point-like sets hold points"),
                };
                let w = vec![1.0; pts.len()];
                Measure::atomic(n, &pts, &w)?
            }
            (_, SingularSpec::Kplane { k, side }) => {
                let patch = KPlanePatch::coordinate(*k, *side, n)?;
                let (coords, _) = kplane_samples(*k, *side);
                // every sample is a focus for k <= 2; higher k keep the atom
                // count bounded by grading only around the probed samples
                let foci: Vec<Vec<f64>> = if *k <= 2 {
                    coords
                } else {
                    coords.into_iter().take(PROBE_SAMPLES).collect()
                };
                make_kplane_graded(&patch, &foci, grading(*k), min_side)?
            }
            (_, SingularSpec::Cantor { ratio, depth, k }) => {
                make_cantor_measure(*ratio, config.cantor_depth(*ratio, *depth, *k), *k, n)?
            }
            _ => unreachable!("pairings are validated"),
        };
        let moved = raw_measure.transformed(&shift, scale);
        let measure = if moved.total_mass() > 0.0 { moved.normalize()? } else { moved };
        let measure_id = format!("{}:{}", measure_name(&spec), config.name);
        Ok(Self {
            config,
            singular,
            measure,
            samples,
            shift,
            scale,
            dimension,
            measure_id,
        })
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn probe_samples(&self) -> &[Vec<f64>] {
        let m = self.samples.len().min(PROBE_SAMPLES);
        &self.samples.samples[..m]
    }

    /// Samples for the capacity program on a grid of step `h`: sample
    /// spacing about `2h`, covering radius at most the solver's limit.
    pub fn capacity_samples(&self, h: f64) -> Result<EvaluationSet> {
        let n = self.n();
        let (raw, spacing): (Vec<Vec<f64>>, f64) = match &self.config.singular {
            SingularSpec::Point { .. } | SingularSpec::FiniteSet { .. } => {
                return Ok(self.samples.clone());
            }
            SingularSpec::Kplane { k, side } => {
                // boundary-inclusive lattice; dropping the boundary loses
                // a large share of the bound
                let limit = MAX_SPACING / self.scale;
                let sqrt_k = (*k as f64).sqrt();
                let mut m = (side / (2.0 * h / self.scale)).ceil() as usize + 1;
                while side / (m - 1) as f64 * sqrt_k / 2.0 > limit {
                    m += 1;
                }
                let stride = side / (m - 1) as f64;
                let axis: Vec<f64> = (0..m).map(|i| -0.5 * side + i as f64 * stride).collect();
                let patch = KPlanePatch::coordinate(*k, *side, n)?;
                let pts = lattice(&axis, *k).iter().map(|t| patch.embed(t)).collect();
                (pts, stride * sqrt_k / 2.0)
            }
            SingularSpec::Cantor { ratio, k, .. } => {
                // both ends of every level-j interval, with j the first
                // level fine enough for the solver
                let limit = MAX_SPACING / self.scale;
                let mut j = 0;
                while ratio.powi(j as i32) * (*k as f64).sqrt() / 2.0 > limit.min(h / self.scale) {
                    j += 1;
                }
                let len = ratio.powi(j as i32);
                let mut axis: Vec<f64> = cantor_left_endpoints(*ratio, j)
                    .into_iter()
                    .flat_map(|l| [l, l + len])
                    .collect();
                axis.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                let pts = lattice(&axis, *k)
                    .into_iter()
                    .map(|t| {
                        let mut x = vec![0.0; n];
                        x[..*k].copy_from_slice(&t);
                        x
                    })
                    .collect();
                (pts, len * (*k as f64).sqrt() / 2.0)
            }
        };
        let samples = raw
            .iter()
            .map(|p| p.iter().zip(&self.shift).map(|(a, s)| (a + s) * self.scale).collect())
            .collect();
        EvaluationSet::new(samples, spacing * self.scale)
    }

    /// Expected polarity of the set from its dimension.
    pub fn expected_polar(&self) -> bool {
        crate::capacity::selfsimilar_polarity(self.dimension, self.n())
    }

    pub fn max_radius(&self) -> f64 {
        self.samples.samples.iter().map(|p| norm(p)).fold(0.0, f64::max)
    }
}

fn box_center(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    (0..n)
        .map(|a| {
            let lo = points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
            0.5 * (lo + hi)
        })
        .collect()
}

/// All points of `axis^k`, first coordinate slowest.
fn lattice(axis: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

/// Grading factor of the patch mesh: cells near a focus have side about
/// `grading * dist / sqrt(k)`. Coarser for large `k` to bound atom counts.
fn grading(k: usize) -> f64 {
    match k {
        1 | 2 => 1.0,
        3 => 2.0,
        _ => 4.0,
    }
}

/// Patch coordinates of the designated samples (centre, then `+-side/4`
/// along each axis) and their covering radius of the patch.
fn kplane_samples(k: usize, side: f64) -> (Vec<Vec<f64>>, f64) {
    let mut out = vec![vec![0.0; k]];
    for i in 0..k {
        for sgn in [1.0, -1.0] {
            let mut t = vec![0.0; k];
            t[i] = sgn * side / 4.0;
            out.push(t);
        }
    }
    // farthest patch point is a corner; nearest sample to it is the one
    // a quarter side along the axis of the corner's first coordinate
    let q = side / 4.0;
    let corner = ((side / 2.0 - q).powi(2) + (k as f64 - 1.0) * (side / 2.0).powi(2)).sqrt();
    (out, corner)
}

/// Level-2 left endpoints of the Cantor construction as samples, with
/// their covering radius.
fn cantor_samples(ratio: f64, k: usize, n: usize) -> (Vec<Vec<f64>>, f64) {
    let lefts = cantor_left_endpoints(ratio, 2);
    let len = ratio * ratio;
    let pts = lattice(&lefts, k)
        .into_iter()
        .map(|t| {
            let mut x = vec![0.0; n];
            x[..k].copy_from_slice(&t);
            x
        })
        .collect();
    (pts, len * (k as f64).sqrt())
}

/// The analytic families: points, k-planes with `k = 1..n-1` of side 1/2,
/// and Cantor sets with ratios 1/3 and 1/4, for `n = 3..=6`.
pub fn corpus() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for n in 3..=6 {
        out.push(ScenarioConfig {
            name: format!("point-n{n}"),
            n,
            seed: 0,
            singular: SingularSpec::Point { at: None },
            measure: None,
            resolution: Resolution::default(),
        });
        for k in 1..n {
            out.push(ScenarioConfig {
                name: format!("kplane{k}-n{n}"),
                n,
                seed: 0,
                singular: SingularSpec::Kplane { k, side: 0.5 },
                measure: None,
                resolution: Resolution::default(),
            });
        }
        for (tag, ratio) in [("3", 1.0 / 3.0), ("4", 0.25)] {
            out.push(ScenarioConfig {
                name: format!("cantor{tag}-n{n}"),
                n,
                seed: 0,
                singular: SingularSpec::Cantor {
                    ratio,
                    depth: None,
                    k: 1,
                },
                measure: None,
                resolution: Resolution::default(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        ScenarioConfig::from_toml(text)?.build()
    }

    #[test]
    fn point_scenario_defaults() {
        let s = parse("name = \"p\"\nn = 3\n[singular]\nkind = \"point\"\nat = [1.0, 2.0, 3.0]\n").unwrap();
        assert_eq!(s.samples.samples, vec![vec![0.0; 3]]);
        assert_eq!(s.measure.total_mass(), 1.0);
        assert_eq!(s.measure.atom(0), &[0.0; 3]);
        assert_eq!(s.config.r_min(), 0.5f64.powi(16));
        assert!(s.expected_polar());
    }

    #[test]
    fn rejects_bad_fields() {
        let cases = [
            ("name = \"x\"\nn = 4\n[singular]\nkind = \"kplane\"\nk = 5\n", "singular.k"),
            ("name = \"x\"\nn = 3\n[singular]\nkind = \"cantor\"\nratio = 0.6\n", "singular.ratio"),
            (
                "name = \"x\"\nn = 3\n[singular]\nkind = \"point\"\n[resolution]\nm_max = 3\n",
                "resolution.m_max",
            ),
            (
                "name = \"x\"\nn = 3\n[singular]\nkind = \"point\"\n[measure]\nkind = \"area\"\n",
                "measure.kind",
            ),
            (
                "name = \"x\"\nn = 4\n[singular]\nkind = \"kplane\"\nk = 2\n[measure]\nkind = \"arclength\"\n",
                "measure.kind",
            ),
            (
                "name = \"x\"\nn = 3\n[singular]\nkind = \"point\"\n[measure]\nkind = \"custom\"\npoints = [[0.1, 0.0, 0.0]]\nweights = [1.0]\n",
                "measure.points[0]",
            ),
        ];
        for (text, field) in cases {
            match parse(text) {
                Err(Error::ConfigInvalid(msg)) => assert!(msg.starts_with(field), "{msg}"),
                other => panic!("expected ConfigInvalid for {field}, got {other:?}"),
            }
        }
        assert!(matches!(
            ScenarioConfig::from_toml("name = \"x\"\nn = 3\nbogus = 1\n[singular]\nkind = \"point\"\n"),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn normalization_puts_sets_in_the_half_ball() {
        for cfg in corpus() {
            let s = cfg.build().unwrap();
            let r = s.measure.support_radius();
            assert!(r <= 0.5 + 1e-12, "{} radius {r}", cfg.name);
            assert!((s.measure.total_mass() - 1.0).abs() < 1e-12);
            assert!(s.max_radius() <= 0.5 + 1e-12);
            for p in &s.samples.samples {
                assert!(s.singular.distance(p) < 1e-12, "{} sample off the set", cfg.name);
            }
            for (p, _) in s.measure.atoms().take(200) {
                assert!(s.samples.distance(p) <= s.samples.spacing * (1.0 + 1e-9) + 1e-12);
            }
        }
    }

    #[test]
    fn capacity_samples_cover_the_patch() {
        let cfg = ScenarioConfig::from_toml("name = \"x\"\nn = 4\n[singular]\nkind = \"kplane\"\nk = 2\n").unwrap();
        let s = cfg.build().unwrap();
        for h in [0.1, 0.0625, 0.05] {
            let e = s.capacity_samples(h).unwrap();
            assert!(e.spacing <= MAX_SPACING + 1e-12);
            assert!(e.samples.iter().any(|p| (p[0] - 0.25).abs() < 1e-12 && (p[1] + 0.25).abs() < 1e-12));
        }
        assert_eq!(s.capacity_samples(0.1).unwrap().len(), 25);
        assert_eq!(s.capacity_samples(0.05).unwrap().len(), 36);
    }

    #[test]
    fn toml_roundtrip_and_overrides() {
        let mut cfg = corpus().into_iter().find(|c| c.name == "cantor4-n3").unwrap();
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        cfg.apply(&Overrides {
            m_max: Some(12),
            seed: Some(9),
            ..Overrides::default()
        });
        assert_eq!(cfg.resolution.m_max, 12);
        assert_eq!(cfg.seed, 9);
        let s = cfg.build().unwrap();
        assert!((s.dimension - 0.5).abs() < 1e-12);
        assert!(s.expected_polar());
    }
}
