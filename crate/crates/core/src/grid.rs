//! Uniform cell-centred grids in `R^n`.
//!
//! Cell corners sit on integer multiples of `h`, so nodes are at
//! `(i + 1/2) h`. Sample points placed on multiples of `h` therefore never
//! coincide with a node.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub h: f64,
    /// Lower corner of the first cell.
    pub lo: Vec<f64>,
    pub dims: Vec<usize>,
}

impl Grid {
    /// Smallest corner-aligned grid containing `[lo - pad, hi + pad]`.
    pub fn covering(lo: &[f64], hi: &[f64], pad: f64, h: f64) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if !(h > 0.0) || !(pad >= 0.0) {
            return Err(Error::InvalidParams(format!("grid h = {h}, pad = {pad}")));
        }
        let mut corner = Vec::with_capacity(lo.len());
        let mut dims = Vec::with_capacity(lo.len());
        for (a, b) in lo.iter().zip(hi) {
            let i0 = ((a - pad) / h + 1e-9).floor();
            let i1 = ((b + pad) / h - 1e-9).ceil();
            corner.push(i0 * h);
            dims.push(((i1 - i0) as usize).max(1));
        }
        Ok(Self { h, lo: corner, dims })
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n() as i32)
    }

    pub fn hi(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.dims)
            .map(|(l, d)| l + *d as f64 * self.h)
            .collect()
    }

    /// Multi-index of flat index `i`; the first axis varies fastest.
    pub fn unflatten(&self, mut i: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|d| {
                let r = i % d;
                i /= d;
                r
            })
            .collect()
    }

    pub fn node(&self, i: usize) -> Vec<f64> {
        self.unflatten(i)
            .iter()
            .zip(&self.lo)
            .map(|(&j, l)| l + (j as f64 + 0.5) * self.h)
            .collect()
    }

    /// Writes node `i` into `out` without allocating.
    pub fn node_into(&self, mut i: usize, out: &mut [f64]) {
        for ((o, d), l) in out.iter_mut().zip(&self.dims).zip(&self.lo) {
            let j = i % d;
            i /= d;
            *o = l + (j as f64 + 0.5) * self.h;
        }
    }

    /// True if `[lo - pad, hi + pad]` lies inside the grid's box.
    pub fn covers(&self, lo: &[f64], hi: &[f64], pad: f64) -> bool {
        let top = self.hi();
        let slack = 1e-9 * self.h;
        lo.iter()
            .zip(hi)
            .enumerate()
            .all(|(a, (l, u))| l - pad >= self.lo[a] - slack && u + pad <= top[a] + slack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_grid_is_corner_aligned() {
        let g = Grid::covering(&[-0.25, 0.0], &[0.25, 0.0], 1.0, 0.1).unwrap();
        assert_eq!(g.dims, vec![26, 20]);
        assert!((g.lo[0] + 1.3).abs() < 1e-12);
        assert!(g.covers(&[-0.25, 0.0], &[0.25, 0.0], 1.0));
        assert!(!g.covers(&[-0.25, 0.0], &[0.25, 0.0], 1.1));
        let x = g.node(27);
        assert!((x[0] - (g.lo[0] + 0.15)).abs() < 1e-12);
        assert!((x[1] - (g.lo[1] + 0.15)).abs() < 1e-12);
        let mut y = vec![0.0; 2];
        g.node_into(27, &mut y);
        assert_eq!(x, y);
        assert_eq!(g.len(), 520);
    }
}
