use crate::geometry::norm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// `count` quasi-uniform unit vectors in `R^n`: a seed-rotated Halton
/// sequence pushed through the Gaussian quantile and normalized.
pub fn quasi_uniform_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n <= PRIMES.len(), "direction generator supports n <= {}", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let v: Vec<f64> = (0..n)
            .map(|a| {
                let u = (radical_inverse(i, PRIMES[a]) + shift[a]).fract();
                normal.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12))
            })
            .collect();
        i += 1;
        let r = norm(&v);
        if r > 1e-9 {
            out.push(v.into_iter().map(|x| x / r).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_balanced() {
        let d = quasi_uniform_directions(3, 2000, 7);
        assert_eq!(d, quasi_uniform_directions(3, 2000, 7));
        assert_ne!(d, quasi_uniform_directions(3, 2000, 8));
        let mut mean = [0.0; 3];
        for v in &d {
            assert!((norm(v) - 1.0).abs() < 1e-12);
            for a in 0..3 {
                mean[a] += v[a] / 2000.0;
            }
        }
        assert!(norm(&mean) < 0.03, "{mean:?}");
        // second moment of a uniform direction is I/n
        let zz: f64 = d.iter().map(|v| v[2] * v[2]).sum::<f64>() / 2000.0;
        assert!((zz - 1.0 / 3.0).abs() < 0.02);
    }
}
