use super::bessel::BesselTable;
use super::wolff::wolff_specialized;
use super::CapacityParams;
use crate::error::{Error, Result};
use crate::geometry::norm;
use crate::grid::Grid;
use crate::measure::Measure;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

/// Largest zero-padded FFT array, in complex entries.
pub const FFT_BUDGET: usize = 1 << 24;
/// Largest atom-node product for the direct first convolution.
pub const DIRECT_BUDGET: usize = 400_000_000;

const MIN_PAD: f64 = 2.0;
const MAX_H: f64 = 0.05;

/// `V = G_alpha * (G_alpha * mu)^{p-1}` sampled at grid nodes.
#[derive(Debug, Clone, Serialize)]
pub struct NonlinearPotential {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl NonlinearPotential {
    /// `max W_trunc(x) / V(x)` over nodes with `inner <= |x| <= outer`.
    pub fn wolff_ratio(&self, mu: &Measure, r_min: f64, inner: f64, outer: f64) -> Result<f64> {
        let mut x = vec![0.0; self.grid.n()];
        let mut worst: f64 = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            self.grid.node_into(i, &mut x);
            let r = norm(&x);
            if r < inner || r > outer {
                continue;
            }
            let w = wolff_specialized(mu, &x, r_min)?.value;
            worst = worst.max(w / v);
        }
        Ok(worst)
    }

    pub fn value_near(&self, x: &[f64]) -> f64 {
        let idx = x
            .iter()
            .zip(&self.grid.lo)
            .zip(&self.grid.dims)
            .rev()
            .fold(0usize, |acc, ((xi, lo), d)| {
                let j = (((xi - lo) / self.grid.h).floor().max(0.0) as usize).min(d - 1);
                acc * d + j
            });
        self.values[idx]
    }
}

fn support_box(mu: &Measure) -> (Vec<f64>, Vec<f64>) {
    let n = mu.n();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for (p, _) in mu.atoms() {
        for a in 0..n {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    if mu.is_empty() {
        (vec![0.0; n], vec![0.0; n])
    } else {
        (lo, hi)
    }
}

/// In-place n-dimensional FFT over a first-axis-fastest array.
fn fft_nd(data: &mut [Complex<f64>], dims: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1;
    for &len in dims {
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let mut line = vec![Complex::new(0.0, 0.0); len];
        let block = stride * len;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (k, l) in line.iter_mut().enumerate() {
                    *l = data[base + k * stride];
                }
                fft.process(&mut line);
                for (k, l) in line.iter().enumerate() {
                    data[base + k * stride] = *l;
                }
            }
        }
        stride = block;
    }
}

/// Discrete `V` on `grid`: the inner potential is a direct sum over atoms,
/// the outer convolution a zero-padded FFT. Cells at zero offset use the
/// kernel's mean over the cell.
pub fn nonlinear_potential_v(
    mu: &Measure,
    grid: &Grid,
    params: &CapacityParams,
) -> Result<NonlinearPotential> {
    let n = mu.n();
    if grid.n() != n || params.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: grid.n(),
        });
    }
    if grid.h > MAX_H {
        return Err(Error::GridTooCoarse(format!("h = {} exceeds {MAX_H}", grid.h)));
    }
    let (lo, hi) = support_box(mu);
    if !grid.covers(&lo, &hi, MIN_PAD) {
        return Err(Error::GridTooCoarse(format!(
            "grid does not cover the support padded by {MIN_PAD}"
        )));
    }
    let padded: Vec<usize> = grid.dims.iter().map(|d| 2 * d).collect();
    let total: usize = padded.iter().product();
    if total > FFT_BUDGET {
        return Err(Error::GridTooLarge {
            nodes: total,
            budget: FFT_BUDGET,
        });
    }
    let nodes = grid.len();
    if mu.len().saturating_mul(nodes) > DIRECT_BUDGET {
        return Err(Error::GridTooLarge {
            nodes: mu.len() * nodes,
            budget: DIRECT_BUDGET,
        });
    }
    if mu.total_mass() == 0.0 {
        return Ok(NonlinearPotential {
            grid: grid.clone(),
            values: vec![0.0; nodes],
        });
    }
    let h = grid.h;
    let diameter = grid.dims.iter().map(|d| (*d as f64 * h).powi(2)).sum::<f64>().sqrt();
    let table = BesselTable::for_range(params.alpha, n, h, diameter)?;
    let self_value = table.cell_average(h);
    let kernel = |s: f64| if s < 0.5 * h { self_value } else { table.value(s) };

    let e = params.p_minus_one();
    let mut x = vec![0.0; n];
    let inner: Vec<f64> = (0..nodes)
        .map(|i| {
            grid.node_into(i, &mut x);
            let g: f64 = mu
                .atoms()
                .map(|(y, w)| {
                    let s = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    w * kernel(s)
                })
                .sum();
            g.powf(e)
        })
        .collect();

    let mut f = vec![Complex::new(0.0, 0.0); total];
    let mut k = vec![Complex::new(0.0, 0.0); total];
    let place = |idx: &[usize]| {
        idx.iter()
            .zip(&padded)
            .rev()
            .fold(0usize, |acc, (i, d)| acc * d + i)
    };
    for (i, v) in inner.iter().enumerate() {
        f[place(&grid.unflatten(i))] = Complex::new(*v, 0.0);
    }
    let cell = grid.cell_volume();
    let mut idx = vec![0usize; n];
    for slot in 0..total {
        let mut r = slot;
        let mut s2 = 0.0;
        for (a, d) in padded.iter().enumerate() {
            idx[a] = r % d;
            r /= d;
            let off = if idx[a] < grid.dims[a] {
                idx[a] as f64
            } else {
                idx[a] as f64 - *d as f64
            };
            s2 += off * off;
        }
        k[slot] = Complex::new(cell * kernel(s2.sqrt() * h), 0.0);
    }
    fft_nd(&mut f, &padded, false);
    fft_nd(&mut k, &padded, false);
    for (a, b) in f.iter_mut().zip(&k) {
        *a *= *b;
    }
    fft_nd(&mut f, &padded, true);
    let scale = 1.0 / total as f64;
    let values = (0..nodes)
        .map(|i| f[place(&grid.unflatten(i))].re * scale)
        .collect();
    Ok(NonlinearPotential {
        grid: grid.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dimension;

    #[test]
    fn fft_convolution_matches_direct_sum() {
        let data: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let dims = [4usize, 3];
        let mut c: Vec<Complex<f64>> = data.iter().map(|v| Complex::new(*v, 0.0)).collect();
        fft_nd(&mut c, &dims, false);
        // oracle: naive 2-D DFT
        for k1 in 0..3 {
            for k0 in 0..4 {
                let mut acc = Complex::new(0.0, 0.0);
                for j1 in 0..3 {
                    for j0 in 0..4 {
                        let ph = -2.0
                            * std::f64::consts::PI
                            * (k0 as f64 * j0 as f64 / 4.0 + k1 as f64 * j1 as f64 / 3.0);
                        acc += Complex::new(ph.cos(), ph.sin()) * data[j0 + 4 * j1];
                    }
                }
                assert!((acc - c[k0 + 4 * k1]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_measure_and_preconditions() {
        let p = CapacityParams::new(Dimension::new(3).unwrap());
        let g = Grid::covering(&[0.0; 3], &[0.0; 3], 2.0, 0.1).unwrap();
        let mu = Measure::dirac(&[0.0; 3], 1.0).unwrap();
        assert!(matches!(
            nonlinear_potential_v(&mu, &g, &p),
            Err(Error::GridTooCoarse(_))
        ));
        let g = Grid::covering(&[0.0; 3], &[0.0; 3], 1.0, 0.05).unwrap();
        assert!(matches!(
            nonlinear_potential_v(&mu, &g, &p),
            Err(Error::GridTooCoarse(_))
        ));
        let g = Grid::covering(&[0.0; 3], &[0.0; 3], 2.0, 0.05).unwrap();
        let v = nonlinear_potential_v(&Measure::zero(3), &g, &p).unwrap();
        assert!(v.values.iter().all(|x| *x == 0.0));
    }
}
