//! Subcommand orchestration and the property suites behind `verify`.

use crate::capacity::{capacity_upper, polarity_certificate, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{norm, verify_conformal_covariance, Dimension, SpherePoint};
use crate::grid::Grid;
use crate::measure::{make_kplane_measure, Measure};
use crate::metric::{
    completeness_verdict, fubini_identity_check, verify_u_estimate, ConformalMetric, SingularSet,
    UEstimateOptions, Verdict, VerdictOptions,
};
use crate::potential::{dyadic_wolff_profile, newtonian_potential, wolff_specialized, CapacityParams};
use crate::quadrature::QuadOptions;
use crate::report::{Command, NamedRatio, PropertyCheck, Report, WolffSample};
use crate::scenario::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::Instant;

/// Grid padding required by the capacity program.
const CAPACITY_PADDING: f64 = 1.0;
/// Tolerances of the property suites.
const SANDWICH_TOL: f64 = 1e-8;
const HOMOGENEITY_TOL: f64 = 1e-10;
const COVARIANCE_ORDER: f64 = 1.8;
const FUBINI_TOL: f64 = 0.02;
/// Cubature tolerance of both sides; the error estimates are pessimistic.
pub const FUBINI_QUAD_TOL: f64 = 1e-4;

pub fn run(command: Command, s: &Scenario) -> Result<Report> {
    let mut report = Report::new(command, s);
    match command {
        Command::Wolff => run_wolff(s, &mut report)?,
        Command::Capacity => run_capacity(s, &mut report)?,
        Command::Probe => run_probe(s, &mut report)?,
        Command::Verify => run_verify(s, &mut report)?,
        Command::Report => {
            run_wolff(s, &mut report)?;
            run_capacity(s, &mut report)?;
            run_probe(s, &mut report)?;
            run_verify(s, &mut report)?;
        }
    }
    Ok(report)
}

/// Process exit status for a finished report: an inconclusive verdict is a
/// budget outcome, a failed property an internal one.
pub fn report_exit_code(r: &Report) -> i32 {
    if r.verdict == Some(Verdict::Inconclusive) {
        3
    } else if !r.failed_properties().is_empty() {
        4
    } else {
        0
    }
}

fn timed<T>(report: &mut Report, phase: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f();
    report
        .provenance
        .timings
        .insert(phase.to_string(), t.elapsed().as_secs_f64());
    out
}

fn require_mass(s: &Scenario, what: &str) -> Result<()> {
    if s.measure.total_mass() > 0.0 {
        Ok(())
    } else {
        Err(Error::ConfigInvalid(format!("measure: {what} needs a measure with positive mass")))
    }
}

fn run_wolff(s: &Scenario, report: &mut Report) -> Result<()> {
    let m_max = s.config.resolution.m_max;
    let r_min = s.config.r_min();
    let (profiles, values) = timed(report, "wolff", || {
        let mut profiles = Vec::new();
        let mut values = Vec::new();
        for x in &s.samples.samples {
            let p = dyadic_wolff_profile(&s.measure, x, m_max)?;
            let w = wolff_specialized(&s.measure, x, r_min)?;
            values.push(WolffSample {
                sample: x.clone(),
                value: w.value,
                r_min,
                dyadic_sum: w.profile.total(),
            });
            profiles.push(p);
        }
        Ok((profiles, values))
    })?;
    for (i, v) in values.iter().enumerate() {
        if v.dyadic_sum > 0.0 {
            report.ratios.push(NamedRatio {
                name: format!("wolff/dyadic_sum[{i}]"),
                value: v.value / v.dyadic_sum,
            });
        }
    }
    report.profiles = profiles;
    report.wolff = values;
    Ok(())
}

fn run_capacity(s: &Scenario, report: &mut Report) -> Result<()> {
    require_mass(s, "capacity")?;
    let h = s.config.resolution.grid_h;
    let m_max = s.config.resolution.m_max;
    let bound = timed(report, "capacity", || {
        let e = s.capacity_samples(h)?;
        let (lo, hi) = e
            .bounding_box()
            .ok_or_else(|| Error::ConfigInvalid("singular: no samples".into()))?;
        let grid = Grid::covering(&lo, &hi, CAPACITY_PADDING, h)?;
        let params = CapacityParams::new(Dimension::new(s.n())?);
        capacity_upper(&e, &grid, &params, &SolverOptions::default())
    })?;
    let cert = timed(report, "certificate", || {
        polarity_certificate(&s.samples, &s.measure, &s.measure_id, m_max)
    })?;
    report.bounds = Some(bound);
    report.certificate = Some(cert);
    Ok(())
}

fn run_probe(s: &Scenario, report: &mut Report) -> Result<()> {
    require_mass(s, "probe")?;
    let r = &s.config.resolution;
    let opts = VerdictOptions {
        m_max: r.m_max,
        n_omega: r.n_omega,
        seed: s.config.seed,
        ..VerdictOptions::default()
    };
    let c = timed(report, "probe", || {
        let g = ConformalMetric::newtonian(s.measure.clone(), s.singular.clone())?;
        completeness_verdict(&g, &s.samples, &opts)
    })?;
    report.verdict = Some(c.verdict);
    if let Some(w) = &c.witness {
        report.ratios.push(NamedRatio {
            name: "witness/refinement_change".into(),
            value: w.refinement_change,
        });
    }
    report.completeness = Some(c);
    Ok(())
}

fn run_verify(s: &Scenario, report: &mut Report) -> Result<()> {
    let seed = s.config.seed;
    let n = s.n();
    let mut checks = Vec::new();
    checks.push(timed(report, "verify/sandwich", || sandwich_suite(n, 100, seed))?);
    checks.push(timed(report, "verify/scaling", || scaling_suite(s))?);
    checks.push(timed(report, "verify/covariance", || covariance_suite(s))?);
    let (u_check, ratios) = timed(report, "verify/u_estimate", || u_estimate_suite(20, seed))?;
    checks.push(u_check);
    report.ratios.extend(ratios);
    checks.push(timed(report, "verify/fubini", fubini_suite)?);
    report.properties = checks;
    Ok(())
}

/// Uniform point in the shell `r0 <= |y| <= r1` of `R^n`.
pub fn random_in_shell(rng: &mut ChaCha8Rng, n: usize, r0: f64, r1: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            // radius with density proportional to r^{n-1} on [r0, r1]
            let u: f64 = rng.gen();
            let e = n as i32;
            let rad = (r0.powi(e) + u * (r1.powi(e) - r0.powi(e))).powf(1.0 / n as f64);
            return v.iter().map(|x| x / r * rad).collect();
        }
    }
}

/// Atomic measure with `1..=max_atoms` atoms of weight in `(0.1, 1)`
/// placed in the shell `r0 <= |y| <= r1`.
pub fn random_atomic_measure(rng: &mut ChaCha8Rng, n: usize, max_atoms: usize, r0: f64, r1: f64) -> Measure {
    let m = rng.gen_range(1..=max_atoms);
    let pts: Vec<Vec<f64>> = (0..m).map(|_| random_in_shell(rng, n, r0, r1)).collect();
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
    Measure::atomic(n, &pts, &w).expect("valid random measure")
}

fn metrics(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Dyadic sandwich of the truncated Wolff potential on random measures:
/// `sum_{k=1}^m t_k / 2 <= W(r_min = 2^-m) <= sum_{k=0}^{m-1} t_k`.
pub fn sandwich_suite(n: usize, cases: usize, seed: u64) -> Result<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a4d);
    let mut violations = 0usize;
    let mut worst_lower: f64 = f64::INFINITY;
    let mut worst_upper: f64 = f64::INFINITY;
    for _ in 0..cases {
        let mu = random_atomic_measure(&mut rng, n, 12, 0.0, 0.5);
        let x = random_in_shell(&mut rng, n, 0.0, 0.5);
        let m = rng.gen_range(4..=20usize);
        let r_min = 0.5f64.powi(m as i32);
        let w = wolff_specialized(&mu, &x, r_min)?.value;
        let p = dyadic_wolff_profile(&mu, &x, m)?;
        let lower = 0.5 * p.terms[1..=m].iter().sum::<f64>();
        let upper: f64 = p.terms[..m].iter().sum();
        let slack = SANDWICH_TOL * upper.max(1.0);
        if w < lower - slack || w > upper + slack {
            violations += 1;
        }
        worst_lower = worst_lower.min(w - lower);
        worst_upper = worst_upper.min(upper - w);
    }
    Ok(PropertyCheck {
        name: "sandwich".into(),
        passed: violations == 0,
        metrics: metrics(&[
            ("cases", cases as f64),
            ("violations", violations as f64),
            ("min_margin_lower", worst_lower),
            ("min_margin_upper", worst_upper),
        ]),
        note: format!("n = {n}"),
    })
}

/// Scaling the measure by `c` scales Wolff terms by `c^{2/(n-2)}`.
pub fn scaling_suite(s: &Scenario) -> Result<PropertyCheck> {
    let n = s.n();
    let m_max = s.config.resolution.m_max;
    let e = 2.0 / (n as f64 - 2.0);
    let mut worst: f64 = 0.0;
    for c in [0.5, 2.0, 10.0] {
        let scaled = s.measure.scaled(c)?;
        let f = c.powf(e);
        for x in s.probe_samples() {
            let a = dyadic_wolff_profile(&s.measure, x, m_max)?;
            let b = dyadic_wolff_profile(&scaled, x, m_max)?;
            for (ta, tb) in a.terms.iter().zip(&b.terms) {
                if *ta > 0.0 {
                    worst = worst.max((tb / (f * ta) - 1.0).abs());
                } else if *tb != 0.0 {
                    worst = f64::INFINITY;
                }
            }
        }
    }
    Ok(PropertyCheck {
        name: "scaling".into(),
        passed: worst <= HOMOGENEITY_TOL,
        metrics: metrics(&[("max_rel_deviation", worst)]),
        note: "scale factors 0.5, 2, 10".into(),
    })
}

/// Finite-difference check that the Newtonian potential of the scenario
/// measure transplants to a solution of the conformal Laplacian on the
/// sphere, at points whose projections lie outside `B(0, 1)`.
pub fn covariance_suite(s: &Scenario) -> Result<PropertyCheck> {
    let n = s.n();
    let dim = Dimension::new(n)?;
    let mu = &s.measure;
    if mu.total_mass() == 0.0 {
        return Ok(PropertyCheck {
            name: "covariance".into(),
            passed: true,
            metrics: BTreeMap::new(),
            note: "empty measure: nothing to check".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.config.seed ^ 0xc0);
    let mut samples = Vec::new();
    while samples.len() < 4 {
        let mut v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r < 1e-3 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= r);
        // last coordinate in [0.2, 0.8]: the projection has norm in [1.2, 3]
        if (0.2..=0.8).contains(&v[n]) {
            samples.push(SpherePoint::new(v)?);
        }
    }
    let atoms: Vec<Vec<f64>> = mu.atoms().map(|(p, _)| p.to_vec()).collect();
    let rep = verify_conformal_covariance(|x| newtonian_potential(mu, x), &atoms, &samples, dim, 0.02)?;
    Ok(PropertyCheck {
        name: "covariance".into(),
        passed: rep.min_order >= COVARIANCE_ORDER,
        metrics: metrics(&[
            ("min_order", rep.min_order),
            ("residual_h", rep.max_residuals[0]),
            ("residual_h4", rep.max_residuals[2]),
        ]),
        note: format!("n = {n}, steps 0.02, 0.01, 0.005"),
    })
}

/// Ratio of the polar-coordinate integral to `W(0)` over random atomic
/// measures in the annulus `0.1 <= |y| <= 0.5` of `R^3`, at the default
/// tolerances and one refinement level.
pub fn u_estimate_suite(cases: usize, seed: u64) -> Result<(PropertyCheck, Vec<NamedRatio>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0e57);
    let base = UEstimateOptions::default();
    let fine = base.refined();
    let mut max_base: f64 = 0.0;
    let mut max_fine: f64 = 0.0;
    let mut all_finite = true;
    let mut ratios = Vec::new();
    for i in 0..cases {
        let mu = random_atomic_measure(&mut rng, 3, 5, 0.1, 0.5);
        let a = verify_u_estimate(&mu, &base)?;
        let b = verify_u_estimate(&mu, &fine)?;
        all_finite &= a.ratio.is_finite() && b.ratio.is_finite() && a.lhs_converged && b.lhs_converged;
        max_base = max_base.max(a.ratio);
        max_fine = max_fine.max(b.ratio);
        ratios.push(NamedRatio {
            name: format!("u_estimate[{i}]"),
            value: b.ratio,
        });
    }
    let change = (max_fine / max_base).max(max_base / max_fine);
    let check = PropertyCheck {
        name: "u_estimate".into(),
        passed: all_finite && change < 2.0,
        metrics: metrics(&[
            ("cases", cases as f64),
            ("max_ratio", max_base),
            ("max_ratio_refined", max_fine),
            ("refinement_change", change),
        ]),
        note: "n = 3".into(),
    };
    Ok((check, ratios))
}

/// The three cases of the polar-coordinate identity in `R^3`: constant `u`,
/// a Dirac off the cone, and a segment measure off the cone.
pub fn fubini_cases() -> Result<Vec<(&'static str, ConformalMetric)>> {
    let flat = ConformalMetric::constant(3, 1.0)?;
    let y = vec![0.35, 0.0, 0.1];
    let dirac = ConformalMetric::newtonian(
        Measure::dirac(&y, 1.0)?,
        SingularSet::Points { points: vec![y.clone()] },
    )?;
    // segment of length 1/2 along e_1, centred at (0, 0.3, 0)
    let seg = make_kplane_measure(1, 0.5, 400, 3)?
        .transformed(&[0.0, 0.3, 0.0], 1.0)
        .normalize()?;
    let patch = crate::measure::KPlanePatch::coordinate(1, 0.5, 3)?.transformed(&[0.0, 0.3, 0.0], 1.0);
    let segment = ConformalMetric::newtonian(seg, SingularSet::Patch { patch })?;
    Ok(vec![("flat", flat), ("dirac", dirac), ("segment", segment)])
}

/// Cone about `e_3` with half-angle 0.5, clear of every case's support.
pub const FUBINI_AXIS: [f64; 3] = [0.0, 0.0, 1.0];
pub const FUBINI_HALF_ANGLE: f64 = 0.5;

pub fn fubini_suite() -> Result<PropertyCheck> {
    let mut m = BTreeMap::new();
    let mut passed = true;
    for (name, g) in fubini_cases()? {
        let r = fubini_identity_check(&g, &FUBINI_AXIS, FUBINI_HALF_ANGLE, QuadOptions::rel(FUBINI_QUAD_TOL))?;
        passed &= r.converged && r.discrepancy <= FUBINI_TOL;
        m.insert(format!("{name}/discrepancy"), r.discrepancy);
        m.insert(format!("{name}/lhs"), r.lhs);
    }
    Ok(PropertyCheck {
        name: "fubini".into(),
        passed,
        metrics: m,
        note: format!("n = 3, cone half-angle {FUBINI_HALF_ANGLE} about e_3"),
    })
}
