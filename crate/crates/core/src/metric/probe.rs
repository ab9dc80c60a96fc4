use super::directions::quasi_uniform_directions;
use super::{extrapolated_sum, shells_diverge, ConformalMetric, ATOM_CLEARANCE};
use crate::capacity::EvaluationSet;
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::potential::{classify_growth, newtonian_potential, GrowthClass};
use crate::quadrature::QuadOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

fn rho(k: usize) -> f64 {
    0.5f64.powi(k as i32)
}

/// Lower bound for `u` on the shell `rho_{k+1} < |x - x0| < rho_k`:
/// `5^{-(n-2)} mu(B(x0, rho_{k+2})) / rho_{k+2}^{n-2}`.
pub fn shell_infimum_bound(mu: &Measure, x0: &[f64], k: usize) -> f64 {
    let n = mu.n() as i32;
    let r = rho(k + 2);
    let m = mu.ball_mass(x0, r);
    5f64.powi(-(n - 2)) * m / r.powi(n - 2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellCheck {
    pub k: usize,
    pub bound: f64,
    pub sampled_min: f64,
    pub samples: usize,
    pub holds: bool,
}

/// Samples `count` points of the shell `D_k` and compares `u` with the bound.
pub fn verify_shell_bound(mu: &Measure, x0: &[f64], k: usize, count: usize, seed: u64) -> ShellCheck {
    let n = mu.n();
    let bound = shell_infimum_bound(mu, x0, k);
    let dirs = quasi_uniform_directions(n, count, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut sampled_min = f64::INFINITY;
    let mut x = vec![0.0; n];
    for d in &dirs {
        let r = rho(k + 1) * (1.0 + rng.gen::<f64>());
        for a in 0..n {
            x[a] = x0[a] + r * d[a];
        }
        sampled_min = sampled_min.min(newtonian_potential(mu, &x));
    }
    ShellCheck {
        k,
        bound,
        sampled_min,
        samples: dirs.len(),
        holds: sampled_min >= bound,
    }
}

/// Per-shell lengths of the ray `x0 + s omega`, `s` in `(0, 1]`, with the
/// dyadic lower bounds implied by the shell infimum bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeProfile {
    pub sample: Vec<f64>,
    pub direction: Vec<f64>,
    /// `L_k = int_{rho_{k+1}}^{rho_k} u^{2/(n-2)} ds`.
    pub lengths: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `(5^{-(n-2)} mu(B(x0, rho_{k+2})) / rho_{k+2}^{n-2})^{2/(n-2)} rho_{k+1}`.
    pub bounds: Vec<f64>,
    /// `(2 / 5^{n-2}) (mu(B(x0, rho_{k+2})) / rho_{k+2}^{n-2})^{2/(n-2)} rho_k`,
    /// the per-shell form with the larger constant; reported, not relied on.
    pub alternate_bounds: Vec<f64>,
    pub sound: bool,
    pub alternate_violations: usize,
    pub growth: GrowthClass,
    pub bound_growth: GrowthClass,
    pub wolff_growth: GrowthClass,
    pub diverges: bool,
    pub converged: bool,
}

/// Divergence rule for probes.
pub fn probe_diverges(lengths: &[f64], budget: f64) -> bool {
    shells_diverge(lengths, budget)
}

fn ray_blocked(g: &ConformalMetric, x0: &[f64], omega: &[f64], m_max: usize) -> Option<f64> {
    let c = g.atom_clearance(x0, omega, rho(m_max + 1), 1.0);
    (c < ATOM_CLEARANCE).then_some(c)
}

pub fn divergence_probe(
    g: &ConformalMetric,
    x0: &[f64],
    omega: &[f64],
    m_max: usize,
    quad: QuadOptions,
    budget: f64,
) -> Result<ProbeProfile> {
    let n = g.n();
    if x0.len() != n || omega.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len().min(omega.len()),
        });
    }
    if let Some(c) = ray_blocked(g, x0, omega, m_max) {
        return Err(Error::RayBlocked(c));
    }
    let mut lengths = Vec::with_capacity(m_max + 1);
    let mut converged = true;
    for k in 0..=m_max {
        let r = g.segment_length(x0, omega, rho(k + 1), rho(k), quad);
        converged &= r.converged;
        lengths.push(r.value);
    }
    let e = 2.0 / (n as f64 - 2.0);
    let (bounds, alternate_bounds, wolff_terms) = match g.measure() {
        Some(mu) => {
            let rm = mu.radial_mass(x0);
            let mut b = Vec::with_capacity(m_max + 1);
            let mut a = Vec::with_capacity(m_max + 1);
            let mut t = Vec::with_capacity(m_max + 3);
            for k in 0..=m_max + 2 {
                let m = rm.mass_at(rho(k));
                t.push(if m == 0.0 { 0.0 } else { m.powf(e) / rho(k) });
            }
            for k in 0..=m_max {
                let r2 = rho(k + 2);
                let m = rm.mass_at(r2);
                let scaled = m / r2.powi(n as i32 - 2);
                let q = if m == 0.0 { 0.0 } else { scaled.powf(e) };
                b.push(if m == 0.0 {
                    0.0
                } else {
                    (5f64.powi(-(n as i32 - 2)) * scaled).powf(e) * rho(k + 1)
                });
                a.push(2.0 * 5f64.powi(-(n as i32 - 2)) * q * rho(k));
            }
            (b, a, t)
        }
        None => (vec![0.0; m_max + 1], vec![0.0; m_max + 1], vec![0.0; m_max + 3]),
    };
    let sound = lengths
        .iter()
        .zip(&bounds)
        .all(|(l, b)| *l >= b * (1.0 - 1e-9));
    let alternate_violations = lengths
        .iter()
        .zip(&alternate_bounds)
        .filter(|(l, b)| **l < **b)
        .count();
    let mut acc = 0.0;
    let partial_sums = lengths
        .iter()
        .map(|l| {
            acc += l;
            acc
        })
        .collect();
    Ok(ProbeProfile {
        sample: x0.to_vec(),
        direction: omega.to_vec(),
        growth: classify_growth(&lengths),
        bound_growth: classify_growth(&bounds),
        wolff_growth: classify_growth(&wolff_terms),
        diverges: probe_diverges(&lengths, budget),
        partial_sums,
        lengths,
        bounds,
        alternate_bounds,
        sound,
        alternate_violations,
        converged,
    })
}

/// Directions whose ray from `x0` keeps a distance of at least
/// `min(clearance, s/2)` from the singular set at every sampled `s`, and
/// stays clear of atoms.
pub fn admissible_directions(
    g: &ConformalMetric,
    x0: &[f64],
    clearance: f64,
    m_max: usize,
    n_omega: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let n = g.n();
    let dirs = quasi_uniform_directions(n, n_omega, seed);
    let keep: Vec<bool> = dirs
        .par_iter()
        .map(|w| {
            let mut x = vec![0.0; n];
            for k in 0..=m_max {
                for j in 0..8 {
                    let s = rho(k + 1) * (1.0 + j as f64 / 8.0);
                    for a in 0..n {
                        x[a] = x0[a] + s * w[a];
                    }
                    let need = clearance.min(0.5 * s) * (1.0 - 1e-12);
                    if g.singular().distance(&x) < need {
                        return false;
                    }
                }
            }
            ray_blocked(g, x0, w, m_max).is_none()
        })
        .collect();
    dirs.into_iter()
        .zip(keep)
        .filter_map(|(d, k)| k.then_some(d))
        .collect()
}

/// A ray of finite length ending on the singular set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayWitness {
    pub sample: Vec<f64>,
    pub direction: Vec<f64>,
    /// Shell sum plus geometric tail.
    pub length: f64,
    /// Same quantity with every shell split in two and a tighter tolerance.
    pub refined_length: f64,
    pub refinement_change: f64,
    pub shell_lengths: Vec<f64>,
    pub tail_class: GrowthClass,
    pub admissible_directions: usize,
    pub screened_value: f64,
}

fn refined_value(g: &ConformalMetric, x0: &[f64], w: &[f64], m_max: usize, quad: QuadOptions) -> (Vec<f64>, f64) {
    let shells: Vec<f64> = (0..=m_max)
        .map(|k| g.segment_length(x0, w, rho(k + 1), rho(k), quad).value)
        .collect();
    let v = extrapolated_sum(&shells);
    (shells, v)
}

/// Searches quasi-uniform directions from `x0` for a ray whose length
/// `int_0^1 u(x0 + s omega)^{2/(n-2)} ds` is finite.
#[allow(clippy::too_many_arguments)]
pub fn ray_finder(
    g: &ConformalMetric,
    x0: &[f64],
    clearance: f64,
    n_omega: usize,
    seed: u64,
    m_max: usize,
    quad: QuadOptions,
    budget: f64,
) -> Result<Option<RayWitness>> {
    let dirs = admissible_directions(g, x0, clearance, m_max, n_omega, seed);
    if dirs.is_empty() {
        return Err(Error::NoAdmissibleDirections(n_omega));
    }
    let screened: Vec<f64> = dirs
        .par_iter()
        .map(|w| {
            let shells: Vec<f64> = (0..=m_max)
                .map(|k| g.segment_length_coarse(x0, w, rho(k + 1), rho(k)))
                .collect();
            if shells_diverge(&shells, budget) {
                f64::INFINITY
            } else {
                extrapolated_sum(&shells)
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..dirs.len()).collect();
    order.sort_by(|&a, &b| screened[a].total_cmp(&screened[b]).then(a.cmp(&b)));
    let mut best: Option<RayWitness> = None;
    for &i in order.iter().take(8) {
        if !screened[i].is_finite() {
            break;
        }
        let w = &dirs[i];
        let (shells, length) = refined_value(g, x0, w, m_max, quad);
        let class = classify_growth(&shells);
        if class != GrowthClass::Bounded || shells_diverge(&shells, budget) || !length.is_finite() {
            continue;
        }
        if best.as_ref().is_some_and(|b| b.length <= length) {
            continue;
        }
        // every shell split in two, tolerance tightened
        let fine = QuadOptions {
            rel_tol: quad.rel_tol * 0.01,
            ..quad
        };
        let halves: Vec<f64> = (0..=m_max)
            .map(|k| {
                let (a, b) = (rho(k + 1), rho(k));
                let m = 0.5 * (a + b);
                g.segment_length(x0, w, a, m, fine).value + g.segment_length(x0, w, m, b, fine).value
            })
            .collect();
        let refined_length = extrapolated_sum(&halves);
        best = Some(RayWitness {
            sample: x0.to_vec(),
            direction: w.clone(),
            length,
            refined_length,
            refinement_change: ((length - refined_length) / refined_length).abs(),
            shell_lengths: shells,
            tail_class: class,
            admissible_directions: dirs.len(),
            screened_value: screened[i],
        });
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CompleteEvidence,
    IncompleteWitness,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictOptions {
    pub m_max: usize,
    pub n_omega: usize,
    pub seed: u64,
    pub probes_per_sample: usize,
    pub max_probe_samples: usize,
    pub rel_tol: f64,
    pub divergence_budget: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            m_max: 16,
            n_omega: 1000,
            seed: 0,
            probes_per_sample: 3,
            max_probe_samples: 3,
            rel_tol: 1e-8,
            divergence_budget: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub verdict: Verdict,
    pub probes: Vec<ProbeProfile>,
    pub witness: Option<RayWitness>,
    pub options: VerdictOptions,
    /// Every probe respected its dyadic lower bounds.
    pub probes_sound: bool,
    pub alternate_bound_violations: usize,
}

/// `CompleteEvidence` when every probe from every probed sample diverges;
/// otherwise `IncompleteWitness` if some probed sample admits a finite ray,
/// else `Inconclusive`.
pub fn completeness_verdict(
    g: &ConformalMetric,
    k: &EvaluationSet,
    opts: &VerdictOptions,
) -> Result<CompletenessReport> {
    let quad = QuadOptions::rel(opts.rel_tol);
    let samples: Vec<&Vec<f64>> = k.samples.iter().take(opts.max_probe_samples).collect();
    let mut probes = Vec::new();
    for x0 in &samples {
        let dirs = admissible_directions(g, x0, k.spacing, opts.m_max, opts.n_omega, opts.seed);
        if dirs.is_empty() {
            return Err(Error::NoAdmissibleDirections(opts.n_omega));
        }
        let count = opts.probes_per_sample.min(dirs.len()).max(1);
        let picked: Vec<&Vec<f64>> = (0..count).map(|i| &dirs[i * dirs.len() / count]).collect();
        let found: Vec<ProbeProfile> = picked
            .par_iter()
            .map(|w| divergence_probe(g, x0, w, opts.m_max, quad, opts.divergence_budget))
            .collect::<Result<_>>()?;
        probes.extend(found);
    }
    let probes_sound = probes.iter().all(|p| p.sound);
    let alternate_bound_violations = probes.iter().map(|p| p.alternate_violations).sum();
    let mut report = CompletenessReport {
        verdict: Verdict::Inconclusive,
        probes,
        witness: None,
        options: *opts,
        probes_sound,
        alternate_bound_violations,
    };
    if !report.probes.is_empty() && report.probes.iter().all(|p| p.diverges) {
        report.verdict = Verdict::CompleteEvidence;
        return Ok(report);
    }
    for x0 in &samples {
        if let Some(w) = ray_finder(
            g,
            x0,
            k.spacing,
            opts.n_omega,
            opts.seed,
            opts.m_max,
            quad,
            opts.divergence_budget,
        )? {
            report.verdict = Verdict::IncompleteWitness;
            report.witness = Some(w);
            break;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::SingularSet;

    fn dirac_metric(n: usize) -> ConformalMetric {
        let mu = Measure::dirac(&vec![0.0; n], 1.0).unwrap();
        ConformalMetric::newtonian(mu, SingularSet::Points { points: vec![vec![0.0; n]] }).unwrap()
    }

    #[test]
    fn shell_bound_examples() {
        let mu = Measure::dirac(&[0.0; 3], 1.0).unwrap();
        for k in [0usize, 3, 10] {
            let b = shell_infimum_bound(&mu, &[0.0; 3], k);
            assert!((b - 0.2 * 2f64.powi(k as i32 + 2)).abs() < 1e-9);
            let c = verify_shell_bound(&mu, &[0.0; 3], k, 1000, 3);
            assert!(c.holds);
            assert!(c.sampled_min >= 2f64.powi(k as i32) * (1.0 - 1e-12));
        }
        let off = Measure::dirac(&[0.9, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(shell_infimum_bound(&off, &[0.0; 3], 2), 0.0);
    }

    #[test]
    fn dirac_probe_matches_closed_forms() {
        let g = dirac_metric(3);
        let p = divergence_probe(&g, &[0.0; 3], &[0.0, 0.6, 0.8], 20, QuadOptions::rel(1e-10), 1e3)
            .unwrap();
        for (k, l) in p.lengths.iter().enumerate() {
            assert!((l / 2f64.powi(k as i32) - 1.0).abs() < 1e-9);
            assert!(*l >= p.bounds[k]);
        }
        assert!(p.sound && p.diverges);
        assert_eq!(p.growth, GrowthClass::Geometric);
        assert_eq!(p.bound_growth, p.wolff_growth);
        // the larger constant fails in three dimensions
        assert_eq!(p.alternate_violations, 21);
    }

    #[test]
    fn flat_ray_finder_returns_unit_length() {
        let g = ConformalMetric::constant(3, 1.0).unwrap();
        let w = ray_finder(&g, &[0.0; 3], 0.1, 1000, 1, 16, QuadOptions::rel(1e-10), 1e3)
            .unwrap()
            .unwrap();
        assert!((w.length - 1.0).abs() < 1e-12);
        assert_eq!(w.admissible_directions, 1000);
    }

    #[test]
    fn point_singularity_has_no_finite_ray() {
        let g = dirac_metric(3);
        let k = EvaluationSet::new(vec![vec![0.0; 3]], 0.0).unwrap();
        assert!(ray_finder(&g, &[0.0; 3], 0.0, 1000, 1, 16, QuadOptions::rel(1e-8), 1e3)
            .unwrap()
            .is_none());
        let r = completeness_verdict(&g, &k, &VerdictOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::CompleteEvidence);
        assert!(r.probes_sound);
    }
}
