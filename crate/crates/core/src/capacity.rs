//! Numerical evidence for the Bessel capacity `C_{alpha,q}` of a compact set:
//! feasible upper bounds from the discretized convex program, and polarity
//! certificates from the divergence of Wolff potentials.
//!
//! The discrete program is
//! `min sum_j w psi_j^q  s.t.  sum_j w G(e_i - x_j) psi_j >= 1` at every
//! sample `e_i`, with `psi` piecewise constant on the cells of a uniform grid
//! (`w = h^n`). It is solved through its smooth concave dual in the
//! multipliers `lambda >= 0` by a projected Newton method; the primal
//! `psi_j = (s_j/q)^{1/(q-1)}`, `s = G^T lambda`, is rescaled afterwards so
//! that every constraint holds, which makes the reported value a true upper
//! bound for the discrete problem whatever the solver accuracy.

use crate::error::{Error, Result};
use crate::geometry::dist;
use crate::grid::Grid;
use crate::measure::Measure;
use crate::potential::{dyadic_wolff_profile, BesselTable, CapacityParams, GrowthClass, WolffProfile};
use rayon::prelude::*;
use serde::Serialize;

/// Samples discretizing a compact set, with their covering radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationSet {
    pub samples: Vec<Vec<f64>>,
    pub spacing: f64,
}

impl EvaluationSet {
    pub fn new(samples: Vec<Vec<f64>>, spacing: f64) -> Result<Self> {
        if let Some(first) = samples.first() {
            let n = first.len();
            if let Some(bad) = samples.iter().find(|s| s.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: bad.len(),
                });
            }
        }
        if !(spacing >= 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParams(format!("spacing {spacing} must be >= 0")));
        }
        Ok(Self { samples, spacing })
    }

    pub fn empty() -> Self {
        Self {
            samples: Vec::new(),
            spacing: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let first = self.samples.first()?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for s in &self.samples {
            for (a, v) in s.iter().enumerate() {
                lo[a] = lo[a].min(*v);
                hi[a] = hi[a].max(*v);
            }
        }
        Some((lo, hi))
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.samples
            .iter()
            .map(|s| dist(s, x))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    /// Largest number of stored sample-node kernel entries.
    pub matrix_budget: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            kkt_tolerance: 1e-5,
            matrix_budget: 250_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityBound {
    /// Numeric lower bounds are never produced; see `PolarityCertificate`.
    pub lower: Option<f64>,
    pub upper: f64,
    pub method: String,
    pub grid_h: f64,
    pub grid_dims: Vec<usize>,
    pub samples: usize,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Smallest `G * psi` over the samples after the feasibility rescale.
    pub min_constraint: f64,
}

pub const PADDING: f64 = 1.0;
/// Fixed chunk length for parallel sums, so reductions do not depend on
/// the thread schedule.
const CHUNK: usize = 1 << 14;

fn det_sum<F: Fn(usize) -> f64 + Sync>(len: usize, f: F) -> f64 {
    let parts: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum::<f64>())
        .collect();
    parts.iter().sum()
}
pub const MAX_SPACING: f64 = 0.1;
const FEASIBILITY_SLACK: f64 = 1e-6;

struct Program<'a> {
    /// Row-major kernel values `G(e_i - x_j)`.
    g: Vec<f32>,
    m: usize,
    nodes: usize,
    w: f64,
    q: f64,
    opts: &'a SolverOptions,
}

impl Program<'_> {
    fn row(&self, i: usize) -> &[f32] {
        &self.g[i * self.nodes..(i + 1) * self.nodes]
    }

    fn s(&self, lambda: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.nodes];
        for (i, &l) in lambda.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            s.par_iter_mut()
                .zip(self.row(i).par_iter())
                .for_each(|(sj, gij)| *sj += l * *gij as f64);
        }
        s
    }

    fn psi(&self, s: &[f64]) -> Vec<f64> {
        let e = 1.0 / (self.q - 1.0);
        s.par_iter().map(|&sj| (sj / self.q).powf(e)).collect()
    }

    fn a_psi(&self, psi: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let row = self.row(i);
                self.w * det_sum(self.nodes, |j| row[j] as f64 * psi[j])
            })
            .collect()
    }

    fn dual(&self, lambda: &[f64], s: &[f64]) -> f64 {
        let qp = self.q / (self.q - 1.0);
        let tail = det_sum(self.nodes, |j| (s[j] / self.q).powf(qp));
        lambda.iter().sum::<f64>() - (self.q - 1.0) * self.w * tail
    }

    /// Negated dual Hessian `w/(q(q-1)) sum_j G_ij G_kj (s_j/q)^{(2-q)/(q-1)}`.
    fn neg_hessian(&self, s: &[f64]) -> Vec<f64> {
        let e = (2.0 - self.q) / (self.q - 1.0);
        let d: Vec<f64> = if e.abs() < 1e-14 {
            vec![1.0; self.nodes]
        } else {
            s.par_iter().map(|&sj| (sj / self.q).powf(e)).collect()
        };
        let c = self.w / (self.q * (self.q - 1.0));
        let mut h = vec![0.0; self.m * self.m];
        for i in 0..self.m {
            for k in i..self.m {
                let (a, b) = (self.row(i), self.row(k));
                let v = det_sum(self.nodes, |j| a[j] as f64 * b[j] as f64 * d[j]);
                h[i * self.m + k] = c * v;
                h[k * self.m + i] = c * v;
            }
        }
        h
    }

    fn kkt(lambda: &[f64], a_psi: &[f64]) -> f64 {
        let scale = lambda.iter().copied().fold(0.0, f64::max).max(1e-300);
        lambda
            .iter()
            .zip(a_psi)
            .map(|(l, c)| (l / scale).min(c - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves `H x = b` for symmetric positive definite `H` (Cholesky with a
/// tiny diagonal shift on breakdown).
fn solve_spd(h: &[f64], b: &[f64]) -> Vec<f64> {
    let m = b.len();
    let mut shift = 0.0;
    let diag_max = (0..m).map(|i| h[i * m + i]).fold(0.0, f64::max);
    loop {
        let mut l = vec![0.0; m * m];
        let mut ok = true;
        'outer: for i in 0..m {
            for j in 0..=i {
                let mut v = h[i * m + j] + if i == j { shift } else { 0.0 };
                for k in 0..j {
                    v -= l[i * m + k] * l[j * m + k];
                }
                if i == j {
                    if v <= 0.0 {
                        ok = false;
                        break 'outer;
                    }
                    l[i * m + i] = v.sqrt();
                } else {
                    l[i * m + j] = v / l[j * m + j];
                }
            }
        }
        if ok {
            let mut y = vec![0.0; m];
            for i in 0..m {
                let mut v = b[i];
                for k in 0..i {
                    v -= l[i * m + k] * y[k];
                }
                y[i] = v / l[i * m + i];
            }
            let mut x = vec![0.0; m];
            for i in (0..m).rev() {
                let mut v = y[i];
                for k in i + 1..m {
                    v -= l[k * m + i] * x[k];
                }
                x[i] = v / l[i * m + i];
            }
            return x;
        }
        shift = if shift == 0.0 { 1e-12 * diag_max.max(1e-300) } else { shift * 10.0 };
    }
}

/// Feasible upper bound for the discretized capacity of the samples of `e`.
pub fn capacity_upper(
    e: &EvaluationSet,
    grid: &Grid,
    params: &CapacityParams,
    opts: &SolverOptions,
) -> Result<CapacityBound> {
    let mut bound = CapacityBound {
        lower: None,
        upper: 0.0,
        method: "dual projected Newton, cell-constant psi, feasibility rescale".into(),
        grid_h: grid.h,
        grid_dims: grid.dims.clone(),
        samples: e.len(),
        iterations: 0,
        kkt_residual: 0.0,
        min_constraint: f64::INFINITY,
    };
    let Some((lo, hi)) = e.bounding_box() else {
        return Ok(bound);
    };
    let n = grid.n();
    if lo.len() != n || params.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lo.len(),
        });
    }
    if !grid.covers(&lo, &hi, PADDING) {
        return Err(Error::GridTooCoarse(format!(
            "grid must cover the samples padded by {PADDING}"
        )));
    }
    if e.spacing > MAX_SPACING {
        return Err(Error::GridTooCoarse(format!(
            "sample spacing {} exceeds {MAX_SPACING}",
            e.spacing
        )));
    }
    let nodes = grid.len();
    let m = e.len();
    if m.saturating_mul(nodes) > opts.matrix_budget {
        return Err(Error::GridTooLarge {
            nodes: m * nodes,
            budget: opts.matrix_budget,
        });
    }
    let h = grid.h;
    let diameter = grid
        .dims
        .iter()
        .map(|d| (*d as f64 * h).powi(2))
        .sum::<f64>()
        .sqrt();
    let table = BesselTable::for_range(params.alpha, n, h, diameter)?;
    let self_value = table.cell_average(h);
    let kernel = |s: f64| if s < 0.5 * h { self_value } else { table.value(s) };

    let mut g = vec![0f32; m * nodes];
    g.par_chunks_mut(nodes)
        .zip(e.samples.par_iter())
        .for_each(|(row, sample)| {
            let mut x = vec![0.0; n];
            for (j, gij) in row.iter_mut().enumerate() {
                grid.node_into(j, &mut x);
                *gij = kernel(dist(sample, &x)) as f32;
            }
        });
    let prog = Program {
        g,
        m,
        nodes,
        w: grid.cell_volume(),
        q: params.q,
        opts,
    };

    let (lambda, iterations, residual) = solve_dual(&prog)?;
    let s = prog.s(&lambda);
    let mut psi = prog.psi(&s);

    // Post-verification in f64 with fresh kernel evaluations.
    let verify = |psi: &[f64]| -> Vec<f64> {
        e.samples
            .iter()
            .map(|sample| {
                let mut x = vec![0.0; n];
                let mut acc = 0.0;
                for (j, p) in psi.iter().enumerate() {
                    if *p == 0.0 {
                        continue;
                    }
                    grid.node_into(j, &mut x);
                    acc += kernel(dist(sample, &x)) * p;
                }
                prog.w * acc
            })
            .collect()
    };
    let c = verify(&psi);
    let cmin = c.iter().copied().fold(f64::INFINITY, f64::min);
    if !(cmin > 0.0) {
        return Err(Error::SolverStalled {
            iterations,
            residual,
        });
    }
    let factor = (1.0 + FEASIBILITY_SLACK) / cmin;
    psi.iter_mut().for_each(|p| *p *= factor);
    let min_constraint = verify(&psi).into_iter().fold(f64::INFINITY, f64::min);
    if min_constraint < 1.0 {
        return Err(Error::SolverStalled {
            iterations,
            residual,
        });
    }
    bound.upper = prog.w * psi.iter().map(|p| p.powf(prog.q)).sum::<f64>();
    bound.iterations = iterations;
    bound.kkt_residual = residual;
    bound.min_constraint = min_constraint;
    Ok(bound)
}

fn solve_dual(prog: &Program) -> Result<(Vec<f64>, usize, f64)> {
    let m = prog.m;
    let q = prog.q;
    let qp = q / (q - 1.0);
    // Best multiple of the all-ones vector.
    let ones = vec![1.0; m];
    let s1 = prog.s(&ones);
    let k: f64 = (q - 1.0)
        * prog.w
        * s1.iter().map(|&sj| (sj / q).powf(qp)).sum::<f64>();
    let c = (m as f64 / (qp * k)).powf(1.0 / (qp - 1.0));
    let mut lambda = vec![c; m];
    let mut s = prog.s(&lambda);
    let mut value = prog.dual(&lambda, &s);
    let mut residual = f64::INFINITY;
    for it in 0..prog.opts.max_iterations {
        let psi = prog.psi(&s);
        let a_psi = prog.a_psi(&psi);
        residual = Program::kkt(&lambda, &a_psi);
        if residual <= prog.opts.kkt_tolerance {
            return Ok((lambda, it, residual));
        }
        let grad: Vec<f64> = a_psi.iter().map(|v| 1.0 - v).collect();
        let lmax = lambda.iter().copied().fold(0.0, f64::max);
        let eps = (1e-12 * lmax).max(1e-300);
        let free: Vec<usize> = (0..m)
            .filter(|&i| !(lambda[i] <= eps && grad[i] < 0.0))
            .collect();
        let mut dir = vec![0.0; m];
        if !free.is_empty() {
            let h = prog.neg_hessian(&s);
            let hf: Vec<f64> = free
                .iter()
                .flat_map(|&i| free.iter().map(move |&k| (i, k)))
                .map(|(i, k)| h[i * m + k])
                .collect();
            let gf: Vec<f64> = free.iter().map(|&i| grad[i]).collect();
            let d = solve_spd(&hf, &gf);
            for (&i, di) in free.iter().zip(d) {
                dir[i] = di;
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = lambda
                .iter()
                .zip(&dir)
                .map(|(l, d)| (l + t * d).max(0.0))
                .collect();
            let st = prog.s(&trial);
            let vt = prog.dual(&trial, &st);
            let gain: f64 = grad
                .iter()
                .zip(trial.iter().zip(&lambda))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            if vt >= value + 1e-4 * gain && vt.is_finite() {
                lambda = trial;
                s = st;
                value = vt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::SolverStalled {
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::SolverStalled {
        iterations: prog.opts.max_iterations,
        residual,
    })
}

/// Measure-based evidence that a compact set is polar: the dyadic Wolff
/// profile of a candidate measure at each sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarityCertificate {
    pub measure_id: String,
    pub m_max: usize,
    pub min_partial_sum: f64,
    pub classes: Vec<GrowthClass>,
    pub profiles: Vec<WolffProfile>,
    pub granted: bool,
    /// Divergence at a finite depth is evidence, not proof.
    pub heuristic: bool,
    /// The candidate measure comes from the scenario; existence of a
    /// suitable measure for a polar set is not constructive.
    pub measure_supplied_by_caller: bool,
}

/// Grants the certificate iff every sample's profile grows at least linearly
/// and the smallest partial sum keeps increasing over the growth window.
pub fn polarity_certificate(
    k: &EvaluationSet,
    mu: &Measure,
    measure_id: &str,
    m_max: usize,
) -> Result<PolarityCertificate> {
    if (mu.total_mass() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "candidate measure must be normalized (mass {})",
            mu.total_mass()
        )));
    }
    let slack = k.spacing * (1.0 + 1e-9) + 1e-12;
    for (p, w) in mu.atoms() {
        if w == 0.0 {
            continue;
        }
        let d = k.distance(p);
        if d > slack {
            return Err(Error::MeasureSupportMismatch {
                distance: d,
                spacing: k.spacing,
            });
        }
    }
    let profiles: Vec<WolffProfile> = k
        .samples
        .par_iter()
        .map(|x| dyadic_wolff_profile(mu, x, m_max))
        .collect::<Result<_>>()?;
    let classes: Vec<GrowthClass> = profiles.iter().map(|p| p.growth).collect();
    let min_sums: Vec<f64> = (0..=m_max)
        .map(|lvl| {
            profiles
                .iter()
                .map(|p| p.partial_sums[lvl])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let window = &min_sums[min_sums.len().saturating_sub(crate::potential::GROWTH_WINDOW)..];
    let increasing = window.windows(2).all(|w| w[1] > w[0]);
    let granted = !profiles.is_empty() && classes.iter().all(|c| c.is_divergent()) && increasing;
    Ok(PolarityCertificate {
        measure_id: measure_id.to_string(),
        m_max,
        min_partial_sum: *min_sums.last().unwrap_or(&0.0),
        classes,
        profiles,
        granted,
        heuristic: true,
        measure_supplied_by_caller: true,
    })
}

/// Analytic limit of the profile test for measures with `mu(B(x, r)) ~ r^s`:
/// the Wolff integral `int r^{2s/(n-2) - 2} dr` diverges at 0 iff
/// `s <= (n-2)/2`.
pub fn selfsimilar_polarity(s: f64, n: usize) -> bool {
    s <= (n as f64 - 2.0) / 2.0 + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dimension;
    use crate::measure::make_kplane_measure;

    fn params(n: usize) -> CapacityParams {
        CapacityParams::new(Dimension::new(n).unwrap())
    }

    #[test]
    fn empty_set_has_zero_capacity() {
        let g = Grid::covering(&[0.0; 3], &[0.0; 3], 1.0, 0.1).unwrap();
        let b = capacity_upper(&EvaluationSet::empty(), &g, &params(3), &SolverOptions::default())
            .unwrap();
        assert_eq!(b.upper, 0.0);
    }

    #[test]
    fn single_point_matches_closed_form() {
        let p = params(3);
        let g = Grid::covering(&[0.0; 3], &[0.0; 3], 1.0, 0.1).unwrap();
        let e = EvaluationSet::new(vec![vec![0.0; 3]], 0.0).unwrap();
        let b = capacity_upper(&e, &g, &p, &SolverOptions::default()).unwrap();
        assert!(b.min_constraint >= 1.0);
        // oracle: Hoelder equality, cap = (w sum G^{q'})^{1-q}
        let table = BesselTable::for_range(p.alpha, 3, 0.1, 4.0).unwrap();
        let qp = p.q / (p.q - 1.0);
        let w = g.cell_volume();
        let sum: f64 = (0..g.len())
            .map(|j| table.value(crate::geometry::norm(&g.node(j))).powf(qp))
            .sum();
        let exact = (w * sum).powf(1.0 - p.q);
        assert!((b.upper / exact - 1.0).abs() < 1e-4, "{} vs {exact}", b.upper);
    }

    #[test]
    fn monotone_in_the_sample_set() {
        let p = params(3);
        let g = Grid::covering(&[-0.2, 0.0, 0.0], &[0.2, 0.0, 0.0], 1.0, 0.1).unwrap();
        let small = EvaluationSet::new(vec![vec![0.0; 3]], 0.0).unwrap();
        let big = EvaluationSet::new(
            vec![vec![-0.2, 0.0, 0.0], vec![0.0; 3], vec![0.2, 0.0, 0.0]],
            0.1,
        )
        .unwrap();
        let opts = SolverOptions::default();
        let a = capacity_upper(&small, &g, &p, &opts).unwrap();
        let b = capacity_upper(&big, &g, &p, &opts).unwrap();
        assert!(a.upper <= b.upper * (1.0 + 1e-5), "{} > {}", a.upper, b.upper);
        assert!(b.min_constraint >= 1.0);
        assert!(b.kkt_residual <= 1e-5);
    }

    #[test]
    fn preconditions() {
        let p = params(3);
        let g = Grid::covering(&[0.0; 3], &[0.0; 3], 0.5, 0.1).unwrap();
        let e = EvaluationSet::new(vec![vec![0.0; 3]], 0.0).unwrap();
        assert!(matches!(
            capacity_upper(&e, &g, &p, &SolverOptions::default()),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn certificates_for_point_segment_and_patch() {
        let pt = EvaluationSet::new(vec![vec![0.0; 3]], 0.0).unwrap();
        let d = Measure::dirac(&[0.0; 3], 1.0).unwrap();
        let c = polarity_certificate(&pt, &d, "dirac", 12).unwrap();
        assert!(c.granted);
        assert_eq!(c.min_partial_sum, 2f64.powi(13) - 1.0);

        let seg = make_kplane_measure(1, 0.5, 1 << 15, 4).unwrap().normalize().unwrap();
        let samples: Vec<Vec<f64>> = (-2..=2).map(|i| vec![0.1 * i as f64, 0.0, 0.0, 0.0]).collect();
        let k = EvaluationSet::new(samples, 0.05).unwrap();
        let c = polarity_certificate(&k, &seg, "arclength", 14).unwrap();
        assert!(c.granted, "{:?}", c.classes);
        assert!(c.classes.iter().all(|g| *g == GrowthClass::Linear));

        let off = Measure::dirac(&[0.3, 0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            polarity_certificate(&pt, &off, "x", 8),
            Err(Error::MeasureSupportMismatch { .. })
        ));
        assert!(polarity_certificate(&pt, &d.scaled(2.0).unwrap(), "x", 8).is_err());
    }

    #[test]
    fn threshold_rule() {
        assert!(selfsimilar_polarity(1.0, 4));
        assert!(!selfsimilar_polarity(2.0, 4));
        for n in 3..8 {
            assert!(selfsimilar_polarity(0.0, n));
        }
        // oracle: truncated integral int_{2^-m}^1 r^{2s/(n-2)-2} dr
        let trunc = |s: f64, n: f64, m: i32| {
            let a = 2.0 * s / (n - 2.0) - 1.0;
            let lo = 2f64.powi(-m);
            if a.abs() < 1e-12 {
                -lo.ln()
            } else {
                (1.0 - lo.powf(a)) / a
            }
        };
        for (s, n) in [(1.0, 4.0), (2.0, 4.0), (0.5, 3.0), (0.63, 3.0), (1.5, 5.0), (2.5, 5.0)] {
            let growth = trunc(s, n, 20) - trunc(s, n, 10);
            let unbounded = growth > 1.0;
            assert_eq!(unbounded, selfsimilar_polarity(s, n as usize), "s = {s}, n = {n}");
        }
    }
}
