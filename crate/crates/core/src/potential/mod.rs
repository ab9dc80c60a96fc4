//! Kernels and potentials of a measure: Newtonian, Wolff, Bessel and the
//! nonlinear potential `V = G_a * (G_a * mu)^{p-1}`.

mod bessel;
mod nonlinear;
mod wolff;

pub use bessel::{bessel_kernel, bessel_normalization, BesselTable};
pub use nonlinear::{nonlinear_potential_v, NonlinearPotential};
pub use wolff::{
    classify_growth, dyadic_wolff_profile, linear_fit_max_deviation, log2_slope, wolff_general,
    wolff_specialized, GrowthClass, WolffProfile, WolffValue, GROWTH_WINDOW,
};

use crate::error::{Error, Result};
use crate::geometry::Dimension;
use crate::measure::Measure;
use serde::Serialize;

/// Exponents of the capacity `C_{1+2/n, n/2}` attached to dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityParams {
    pub n: usize,
    pub alpha: f64,
    pub q: f64,
    pub p: f64,
}

impl CapacityParams {
    pub fn new(n: Dimension) -> Self {
        let nf = n.get() as f64;
        Self {
            n: n.get(),
            alpha: 1.0 + 2.0 / nf,
            q: nf / 2.0,
            p: nf / (nf - 2.0),
        }
    }

    /// Custom `(alpha, q)`; `p` is the conjugate exponent of `q`.
    pub fn custom(n: usize, alpha: f64, q: f64) -> Result<Self> {
        Dimension::new(n)?;
        if !(alpha > 0.0) || !(q > 1.0) || alpha * q > n as f64 + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "need alpha > 0 and 1 < q <= n/alpha (alpha = {alpha}, q = {q}, n = {n})"
            )));
        }
        Ok(Self {
            n,
            alpha,
            q,
            p: q / (q - 1.0),
        })
    }

    /// Conjugate exponent minus one, `1/(q-1)`.
    pub fn p_minus_one(&self) -> f64 {
        self.p - 1.0
    }
}

/// `u(x) = sum_i w_i |x - y_i|^{2-n}`; `+inf` when `x` sits on a weighted
/// atom.
pub fn newtonian_potential(mu: &Measure, x: &[f64]) -> f64 {
    let e = mu.n() as i32 - 2;
    let mut u = 0.0;
    for (p, w) in mu.atoms() {
        if w == 0.0 {
            continue;
        }
        let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 == 0.0 {
            return f64::INFINITY;
        }
        u += w * if e == 2 { 1.0 / d2 } else { d2.sqrt().powi(-e) };
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::flat_harmonicity_study;
    use crate::measure::make_kplane_measure;

    #[test]
    fn params_identities() {
        for n in 3..=8 {
            let c = CapacityParams::new(Dimension::new(n).unwrap());
            let nf = n as f64;
            assert!((c.p + c.q - c.p * c.q).abs() < 1e-12);
            assert!((c.p_minus_one() - 2.0 / (nf - 2.0)).abs() < 1e-12);
            assert!((nf - c.alpha * c.q - (nf - 2.0) / 2.0).abs() < 1e-12);
        }
        assert!(CapacityParams::custom(3, 2.0, 1.0).is_err());
        assert!(CapacityParams::custom(3, 2.0, 2.0).is_err());
    }

    #[test]
    fn newtonian_examples() {
        let d = Measure::dirac(&[0.0; 3], 1.0).unwrap();
        assert_eq!(newtonian_potential(&d, &[2.0, 0.0, 0.0]), 0.5);
        assert_eq!(newtonian_potential(&d, &[0.0; 3]), f64::INFINITY);
        let two = Measure::atomic(3, &[vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]], &[0.5, 0.5])
            .unwrap();
        assert_eq!(newtonian_potential(&two, &[0.0; 3]), 1.0);
        // segment [0,1] e1 at 2 e1: integral of dt/(2-t) = ln 2
        let seg = make_kplane_measure(1, 1.0, 20000, 3)
            .unwrap()
            .transformed(&[0.5, 0.0, 0.0], 1.0);
        let u = newtonian_potential(&seg, &[2.0, 0.0, 0.0]);
        assert!((u - 2f64.ln()).abs() < 1e-8, "{u}");
    }

    #[test]
    fn newtonian_superposition_and_harmonicity() {
        let a = Measure::atomic(4, &[vec![0.1, 0.0, 0.2, 0.0]], &[0.7]).unwrap();
        let b = Measure::atomic(4, &[vec![-0.3, 0.1, 0.0, 0.2], vec![0.0; 4]], &[0.2, 1.1])
            .unwrap();
        let ab = a.merged(&b).unwrap();
        let x = [0.5, -0.4, 0.3, 0.9];
        let s = newtonian_potential(&a, &x) + newtonian_potential(&b, &x);
        assert!((newtonian_potential(&ab, &x) - s).abs() <= 1e-15 * s);

        let mu = Measure::atomic(3, &[vec![0.0; 3], vec![0.2, 0.1, 0.0]], &[1.0, 0.5]).unwrap();
        let pts = vec![vec![1.0, 0.5, 0.2], vec![-0.8, 0.9, 0.4]];
        let sing: Vec<Vec<f64>> = mu.atoms().map(|(p, _)| p.to_vec()).collect();
        let study =
            flat_harmonicity_study(&|x: &[f64]| newtonian_potential(&mu, x), &sing, &pts, 0.02)
                .unwrap();
        assert!(study.min_order >= 1.8, "{study:?}");
    }
}
