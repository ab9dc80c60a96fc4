use crate::error::{Error, Result};
use crate::geometry::dist;
use crate::measure::{cantor_left_endpoints, KPlanePatch};
use serde::Serialize;

/// Exact geometry of the singular set, used for ray admissibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SingularSet {
    /// No singular set (smooth conformal factor).
    Empty { n: usize },
    Points { points: Vec<Vec<f64>> },
    Patch { patch: KPlanePatch },
    /// Depth-`depth` cells of the Cantor product along the first `k` axes,
    /// mapped by `x -> (x + shift) * scale`.
    Cantor {
        n: usize,
        ratio: f64,
        depth: usize,
        k: usize,
        shift: Vec<f64>,
        scale: f64,
        #[serde(skip)]
        lefts: Vec<f64>,
    },
}

impl SingularSet {
    pub fn cantor(n: usize, ratio: f64, depth: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidDimension(k));
        }
        Ok(SingularSet::Cantor {
            n,
            ratio,
            depth,
            k,
            shift: vec![0.0; n],
            scale: 1.0,
            lefts: cantor_left_endpoints(ratio, depth),
        })
    }

    pub fn n(&self) -> usize {
        match self {
            SingularSet::Empty { n } | SingularSet::Cantor { n, .. } => *n,
            SingularSet::Points { points } => points.first().map_or(0, |p| p.len()),
            SingularSet::Patch { patch } => patch.n(),
        }
    }

    /// Pushforward under `x -> (x + shift) * scale`.
    pub fn transformed(&self, shift: &[f64], scale: f64) -> Self {
        match self {
            SingularSet::Empty { n } => SingularSet::Empty { n: *n },
            SingularSet::Points { points } => SingularSet::Points {
                points: points
                    .iter()
                    .map(|p| p.iter().zip(shift).map(|(a, s)| (a + s) * scale).collect())
                    .collect(),
            },
            SingularSet::Patch { patch } => SingularSet::Patch {
                patch: patch.transformed(shift, scale),
            },
            SingularSet::Cantor {
                n,
                ratio,
                depth,
                k,
                shift: s0,
                scale: c0,
                lefts,
            } => SingularSet::Cantor {
                n: *n,
                ratio: *ratio,
                depth: *depth,
                k: *k,
                // (x + s0) c0 then (. + shift) scale = (x + s0 + shift/c0) c0 scale
                shift: s0.iter().zip(shift).map(|(a, b)| a + b / c0).collect(),
                scale: c0 * scale,
                lefts: lefts.clone(),
            },
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            SingularSet::Empty { .. } => f64::INFINITY,
            SingularSet::Points { points } => points
                .iter()
                .map(|p| dist(p, x))
                .fold(f64::INFINITY, f64::min),
            SingularSet::Patch { patch } => patch.distance(x),
            SingularSet::Cantor {
                ratio,
                depth,
                k,
                shift,
                scale,
                lefts,
                ..
            } => {
                let len = ratio.powi(*depth as i32);
                let mut d2 = 0.0;
                for (a, xa) in x.iter().enumerate() {
                    // back to the unit construction
                    let y = xa / scale - shift[a];
                    let da = if a < *k {
                        interval_union_distance(lefts, len, y)
                    } else {
                        y.abs()
                    };
                    d2 += da * da;
                }
                d2.sqrt() * scale
            }
        }
    }
}

/// Distance from `y` to the union of `[l, l + len]` over sorted `lefts`.
fn interval_union_distance(lefts: &[f64], len: f64, y: f64) -> f64 {
    let i = lefts.partition_point(|&l| l <= y);
    let mut best = f64::INFINITY;
    for j in [i.wrapping_sub(1), i] {
        if let Some(&l) = lefts.get(j) {
            let d = if y < l {
                l - y
            } else if y > l + len {
                y - l - len
            } else {
                0.0
            };
            best = best.min(d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_distance_matches_brute_force() {
        let k = SingularSet::cantor(2, 1.0 / 3.0, 4, 1).unwrap();
        let t = k.transformed(&[-0.5, 0.0], 0.5);
        let lefts = cantor_left_endpoints(1.0 / 3.0, 4);
        let len = 3f64.powi(-4);
        for x in [[0.1, 0.2], [-0.3, 0.0], [0.0, -0.1], [0.26, 0.01]] {
            let brute = lefts
                .iter()
                .map(|l| {
                    let a = (l - 0.5) * 0.5;
                    let b = (l + len - 0.5) * 0.5;
                    let dx = (a - x[0]).max(x[0] - b).max(0.0);
                    (dx * dx + x[1] * x[1]).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((t.distance(&x) - brute).abs() < 1e-14, "{x:?}");
        }
    }

    #[test]
    fn point_and_patch_distances() {
        let p = SingularSet::Points {
            points: vec![vec![0.0, 0.0, 0.0]],
        };
        assert_eq!(p.distance(&[0.0, 3.0, 4.0]), 5.0);
        let q = SingularSet::Patch {
            patch: KPlanePatch::coordinate(1, 1.0, 3).unwrap(),
        };
        assert_eq!(q.distance(&[0.2, 0.0, 0.5]), 0.5);
        assert_eq!(SingularSet::Empty { n: 3 }.distance(&[0.0; 3]), f64::INFINITY);
    }
}
