//! Adaptive Gauss-Kronrod quadrature in one dimension and tensor-product
//! cubature over boxes.
//!
//! Both drivers keep a max-heap of subregions keyed by their local error
//! estimate and bisect the worst region until the global estimate meets
//! `max(abs_tol, rel_tol * |value|)`. The subdivision order is deterministic,
//! so repeated runs produce bit-identical results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Kronrod 15-point abscissae on [-1, 1] (non-negative half, descending).
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss 7-point weights for the odd-indexed Kronrod nodes.
const WG7: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod 7-point extension of the 3-point Gauss rule.
const XGK7: [f64; 4] = [
    0.960_491_268_708_020_3,
    0.774_596_669_241_483_4,
    0.434_243_749_346_802_6,
    0.0,
];
const WGK7: [f64; 4] = [
    0.104_656_226_026_467_3,
    0.268_488_089_868_333_4,
    0.401_397_414_775_962_2,
    0.450_916_538_658_474_1,
];
const WG3: [f64; 2] = [5.0 / 9.0, 8.0 / 9.0];

/// A one-dimensional embedded rule expanded to full node/weight lists on
/// [-1, 1]. `gauss` holds the weights of the embedded Gauss rule on the same
/// nodes (zero where the node is Kronrod-only).
#[derive(Debug, Clone)]
pub struct EmbeddedRule {
    pub nodes: Vec<f64>,
    pub kronrod: Vec<f64>,
    pub gauss: Vec<f64>,
}

impl EmbeddedRule {
    pub fn gk15() -> Self {
        Self::expand(&XGK15, &WGK15, &WG7)
    }

    pub fn gk7() -> Self {
        Self::expand(&XGK7, &WGK7, &WG3)
    }

    fn expand(x: &[f64], wk: &[f64], wg: &[f64]) -> Self {
        let mut nodes = Vec::new();
        let mut kronrod = Vec::new();
        let mut gauss = Vec::new();
        let last = x.len() - 1;
        let g_of = |i: usize| if i % 2 == 1 { wg[i / 2] } else { 0.0 };
        for i in 0..last {
            nodes.push(-x[i]);
            kronrod.push(wk[i]);
            gauss.push(g_of(i));
        }
        nodes.push(0.0);
        kronrod.push(wk[last]);
        gauss.push(g_of(last));
        for i in (0..last).rev() {
            nodes.push(x[i]);
            kronrod.push(wk[i]);
            gauss.push(g_of(i));
        }
        Self {
            nodes,
            kronrod,
            gauss,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_regions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_regions: 2000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    error: f64,
    seq: usize,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn gk_interval<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, rule: &EmbeddedRule) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    for i in 0..rule.len() {
        let v = f(c + h * rule.nodes[i]);
        k += rule.kronrod[i] * v;
        g += rule.gauss[i] * v;
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive GK15 integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Adaptive GK15 integration over consecutive intervals of `points`
/// (sorted, duplicates dropped). Interior points are typically locations
/// where the integrand is nearly singular.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    opts: QuadOptions,
) -> QuadResult {
    let rule = EmbeddedRule::gk15();
    let mut pts: Vec<f64> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut evaluations = 0;
    for w in pts.windows(2) {
        let (v, e) = gk_interval(&mut f, w[0], w[1], &rule);
        evaluations += rule.len();
        heap.push(Region {
            lo: vec![w[0]],
            hi: vec![w[1]],
            value: v,
            error: e,
            seq,
        });
        seq += 1;
    }
    drive(&mut heap, &mut seq, &mut evaluations, opts, |lo, hi| {
        let (v, e) = gk_interval(&mut f, lo[0], hi[0], &rule);
        (v, e, rule.len())
    })
}

fn totals(heap: &BinaryHeap<Region>) -> (f64, f64) {
    // Summation in a fixed order independent of heap layout.
    let mut items: Vec<(usize, f64, f64)> = heap.iter().map(|r| (r.seq, r.value, r.error)).collect();
    items.sort_by_key(|t| t.0);
    items
        .iter()
        .fold((0.0, 0.0), |(v, e), &(_, rv, re)| (v + rv, e + re))
}

fn drive<G>(
    heap: &mut BinaryHeap<Region>,
    seq: &mut usize,
    evaluations: &mut usize,
    opts: QuadOptions,
    mut eval: G,
) -> QuadResult
where
    G: FnMut(&[f64], &[f64]) -> (f64, f64, usize),
{
    loop {
        let (value, error) = totals(heap);
        if !value.is_finite() {
            return QuadResult {
                value,
                error: f64::INFINITY,
                evaluations: *evaluations,
                converged: false,
            };
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return QuadResult {
                value,
                error,
                evaluations: *evaluations,
                converged: true,
            };
        }
        if heap.len() >= opts.max_regions {
            return QuadResult {
                value,
                error,
                evaluations: *evaluations,
                converged: false,
            };
        }
        let worst = heap.pop().expect("non-empty heap");
        // bisect along the widest side
        let dim = (0..worst.lo.len())
            .max_by(|&i, &j| {
                (worst.hi[i] - worst.lo[i]).total_cmp(&(worst.hi[j] - worst.lo[j]))
            })
            .unwrap_or(0);
        let mid = 0.5 * (worst.lo[dim] + worst.hi[dim]);
        if mid <= worst.lo[dim] || mid >= worst.hi[dim] {
            // cannot split further in floating point
            heap.push(Region {
                error: 0.0,
                ..worst
            });
            continue;
        }
        let mut left_hi = worst.hi.clone();
        left_hi[dim] = mid;
        let mut right_lo = worst.lo.clone();
        right_lo[dim] = mid;
        for (lo, hi) in [(worst.lo.clone(), left_hi), (right_lo, worst.hi.clone())] {
            let (v, e, count) = eval(&lo, &hi);
            *evaluations += count;
            heap.push(Region {
                lo,
                hi,
                value: v,
                error: e,
                seq: *seq,
            });
            *seq += 1;
        }
    }
}

fn tensor_cell<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    lo: &[f64],
    hi: &[f64],
    rule: &EmbeddedRule,
) -> (f64, f64, usize) {
    let d = lo.len();
    let m = rule.len();
    let total = m.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut k_sum = 0.0;
    let mut g_sum = 0.0;
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut wk = 1.0;
        let mut wg = 1.0;
        for a in 0..d {
            let c = 0.5 * (lo[a] + hi[a]);
            let h = 0.5 * (hi[a] - lo[a]);
            x[a] = c + h * rule.nodes[idx[a]];
            wk *= rule.kronrod[idx[a]] * h;
            wg *= rule.gauss[idx[a]] * h;
        }
        let v = f(&x);
        k_sum += wk * v;
        if wg != 0.0 {
            g_sum += wg * v;
        }
        for a in 0..d {
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
        }
    }
    (k_sum, (k_sum - g_sum).abs(), total)
}

/// Adaptive tensor-product cubature of `f` over the box `[lo, hi]`.
/// Uses the GK15 rule per axis for `d <= 2` and GK7 for higher dimensions.
pub fn cubature<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    opts: QuadOptions,
) -> QuadResult {
    assert_eq!(lo.len(), hi.len());
    let rule = if lo.len() <= 2 {
        EmbeddedRule::gk15()
    } else {
        EmbeddedRule::gk7()
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 1;
    let (v, e, count) = tensor_cell(&mut f, lo, hi, &rule);
    let mut evaluations = count;
    heap.push(Region {
        lo: lo.to_vec(),
        hi: hi.to_vec(),
        value: v,
        error: e,
        seq: 0,
    });
    drive(&mut heap, &mut seq, &mut evaluations, opts, |l, h| {
        tensor_cell(&mut f, l, h, &rule)
    })
}
